#pragma once

// Fixed patch-statistics extractor standing in for a pretrained backbone.
// Every patch maps to a K=24 vector; the trainable model owns all learning
// capacity downstream of this.
//
// Feature order (frozen; index -> statistic):
//    0..2  channel means (R,G,B)
//    3..5  channel standard deviations (R,G,B)
//    6     gradient-magnitude mean (luma, patch-local central differences)
//    7     gradient-magnitude std
//    8     Laplacian energy (mean squared 4-neighbour Laplacian of luma)
//    9     local contrast: luma std / (luma mean + 1e-6)
//   10     colorfulness: sqrt(std_rg^2 + std_yb^2) + 0.3*sqrt(mean_rg^2 + mean_yb^2)
//   11,12  saturation mean/std (per-pixel max-min channel)
//   13     high-frequency energy ratio: 4x4 block DCT, HF(u+v>=2) / (HF + LF(u+v==1) + 1e-12)
//   14     dynamic-range occupancy: max - min luma
//   15     luma mean
//   16     median residual: mean |luma - median3x3(luma)| (impulse/noise)
//   17     gradient anisotropy: (mean|gy| - mean|gx|) / (mean|gx| + mean|gy| + 1e-9)
//   18     half-resolution HF ratio (2x2-averaged luma; separates strong blurs)
//   19     blockiness: gradient share on image-aligned mod-8 rows/columns
//   20     chroma sharpness: stride-1 over stride-4 opponent-gradient ratio
//          (rg = r-g, yb = (r+g)/2 - b; collapses under chroma subsampling)
//   21     chroma magnitude std
//   22     flat fraction: |gx| + |gy| <= 1/255 (pixelation/quantization plateaus)
//   23     clipped fraction: luma <= 0.02 or >= 0.98

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hirqa/error.hpp"
#include "hirqa/image.hpp"

namespace hirqa {

constexpr int kFeatureDim = 24;

struct PatchFeatureGrid {
    int grid_rows = 0;
    int grid_cols = 0;
    int feature_dim = kFeatureDim;
    std::vector<double> data; // grid_rows*grid_cols vectors of feature_dim

    int patch_count() const { return grid_rows * grid_cols; }
    const double* patch(int i) const { return &data[static_cast<std::size_t>(i) * feature_dim]; }
    double* patch(int i) { return &data[static_cast<std::size_t>(i) * feature_dim]; }
};

namespace detail_feat {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / v.size();
}

inline double std_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return v.empty() ? 0.0 : std::sqrt(s / v.size());
}

inline void dct4(const double in[4], double out[4]) {
    constexpr double pi = 3.14159265358979323846;
    for (int u = 0; u < 4; ++u) {
        double cu = u == 0 ? std::sqrt(1.0 / 4.0) : std::sqrt(2.0 / 4.0);
        double acc = 0.0;
        for (int i = 0; i < 4; ++i) acc += in[i] * std::cos((2 * i + 1) * u * pi / 8.0);
        out[u] = cu * acc;
    }
}

} // namespace detail_feat

inline void patch_features(const Image& img, int y0, int y1, int x0, int x1, double* out) {
    using detail_feat::mean_of;
    using detail_feat::std_of;
    int ph = y1 - y0, pw = x1 - x0;
    std::size_t n = static_cast<std::size_t>(ph) * pw;

    std::vector<double> ch[3], lum, sat, chroma, rg, yb;
    for (int c = 0; c < 3; ++c) ch[c].reserve(n);
    lum.reserve(n);
    sat.reserve(n);
    chroma.reserve(n);
    rg.reserve(n);
    yb.reserve(n);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            double r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
            ch[0].push_back(r);
            ch[1].push_back(g);
            ch[2].push_back(b);
            lum.push_back(0.299 * r + 0.587 * g + 0.114 * b);
            sat.push_back(std::max({r, g, b}) - std::min({r, g, b}));
            double orange = r - g, oblue = 0.5 * (r + g) - b;
            rg.push_back(orange);
            yb.push_back(oblue);
            chroma.push_back(std::sqrt(orange * orange + oblue * oblue));
        }

    auto lum_at = [&](int y, int x) {
        y = std::clamp(y, y0, y1 - 1);
        x = std::clamp(x, x0, x1 - 1);
        return lum[static_cast<std::size_t>(y - y0) * pw + (x - x0)];
    };
    auto rg_at = [&](int y, int x) {
        y = std::clamp(y, y0, y1 - 1);
        x = std::clamp(x, x0, x1 - 1);
        return rg[static_cast<std::size_t>(y - y0) * pw + (x - x0)];
    };
    auto yb_at = [&](int y, int x) {
        y = std::clamp(y, y0, y1 - 1);
        x = std::clamp(x, x0, x1 - 1);
        return yb[static_cast<std::size_t>(y - y0) * pw + (x - x0)];
    };

    std::vector<double> gmag, gx_abs, gy_abs;
    gmag.reserve(n);
    double lap_energy = 0.0, grad_total = 0.0, grad_boundary = 0.0, median_residual = 0.0;
    double chroma_grad1 = 0.0, chroma_grad4 = 0.0;
    std::size_t flat_count = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            double gx = (lum_at(y, x + 1) - lum_at(y, x - 1)) / 2.0;
            double gy = (lum_at(y + 1, x) - lum_at(y - 1, x)) / 2.0;
            gmag.push_back(std::sqrt(gx * gx + gy * gy));
            gx_abs.push_back(std::abs(gx));
            gy_abs.push_back(std::abs(gy));
            double g1 = std::abs(gx) + std::abs(gy);
            grad_total += g1;
            if (x % 8 == 0 || y % 8 == 0) grad_boundary += g1;
            if (g1 <= 1.0 / 255.0) ++flat_count;
            // difference form: exactly zero on constant patches
            double c0 = lum_at(y, x);
            double lp = (c0 - lum_at(y - 1, x)) + (c0 - lum_at(y + 1, x)) + (c0 - lum_at(y, x - 1)) +
                        (c0 - lum_at(y, x + 1));
            lap_energy += lp * lp;
            // 3x3 clamped median
            double nb[9];
            int ni = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) nb[ni++] = lum_at(y + dy, x + dx);
            std::sort(nb, nb + 9);
            median_residual += std::abs(c0 - nb[4]);
            chroma_grad1 += (std::abs(rg_at(y, x + 1) - rg_at(y, x - 1)) + std::abs(rg_at(y + 1, x) - rg_at(y - 1, x)) +
                             std::abs(yb_at(y, x + 1) - yb_at(y, x - 1)) + std::abs(yb_at(y + 1, x) - yb_at(y - 1, x))) /
                            4.0;
            chroma_grad4 += (std::abs(rg_at(y, x + 4) - rg_at(y, x - 4)) + std::abs(rg_at(y + 4, x) - rg_at(y - 4, x)) +
                             std::abs(yb_at(y, x + 4) - yb_at(y, x - 4)) + std::abs(yb_at(y + 4, x) - yb_at(y - 4, x))) /
                            16.0;
        }
    median_residual /= static_cast<double>(n);
    chroma_grad1 /= static_cast<double>(n);
    chroma_grad4 /= static_cast<double>(n);
    lap_energy /= static_cast<double>(n);

    // 4x4 block DCT bands over luma, full and half resolution
    auto dct_bands = [](const std::vector<double>& plane, int pw, int ph, double& hf, double& band1) {
        for (int by = 0; by + 4 <= ph; by += 4)
            for (int bx = 0; bx + 4 <= pw; bx += 4) {
                double blk[4][4], tmp[4][4];
                for (int y = 0; y < 4; ++y) {
                    double row[4];
                    for (int x = 0; x < 4; ++x) row[x] = plane[static_cast<std::size_t>(by + y) * pw + bx + x];
                    detail_feat::dct4(row, blk[y]);
                }
                for (int x = 0; x < 4; ++x) {
                    double col[4], dc[4];
                    for (int y = 0; y < 4; ++y) col[y] = blk[y][x];
                    detail_feat::dct4(col, dc);
                    for (int y = 0; y < 4; ++y) tmp[y][x] = dc[y];
                }
                for (int u = 0; u < 4; ++u)
                    for (int v = 0; v < 4; ++v) {
                        double e = tmp[u][v] * tmp[u][v];
                        if (u + v >= 2) hf += e;
                        if (u + v == 1) band1 += e;
                    }
            }
    };
    double hf = 0.0, band1 = 0.0;
    dct_bands(lum, pw, ph, hf, band1);
    int hw = pw / 2, hh = ph / 2;
    std::vector<double> half(static_cast<std::size_t>(std::max(hw, 0)) * std::max(hh, 0), 0.0);
    for (int y = 0; y < hh; ++y)
        for (int x = 0; x < hw; ++x) {
            std::size_t base = static_cast<std::size_t>(2 * y) * pw + 2 * x;
            half[static_cast<std::size_t>(y) * hw + x] =
                0.25 * (lum[base] + lum[base + 1] + lum[base + pw] + lum[base + pw + 1]);
        }
    double hf_half = 0.0, band1_half = 0.0;
    dct_bands(half, hw, hh, hf_half, band1_half);

    double mean_l = mean_of(lum), std_l = std_of(lum, mean_l);
    double mean_rg = mean_of(rg), mean_yb = mean_of(yb);
    double std_rg = std_of(rg, mean_rg), std_yb = std_of(yb, mean_yb);
    double min_l = lum[0], max_l = lum[0];
    int clipped = 0;
    for (double v : lum) {
        min_l = std::min(min_l, v);
        max_l = std::max(max_l, v);
        if (v <= 0.02 || v >= 0.98) ++clipped;
    }

    int k = 0;
    for (int c = 0; c < 3; ++c) out[k++] = mean_of(ch[c]);
    for (int c = 0; c < 3; ++c) out[k++] = std_of(ch[c], mean_of(ch[c]));
    double gmean = mean_of(gmag);
    out[k++] = gmean;
    out[k++] = std_of(gmag, gmean);
    out[k++] = lap_energy;
    out[k++] = std_l / (mean_l + 1e-6);
    out[k++] = std::sqrt(std_rg * std_rg + std_yb * std_yb) + 0.3 * std::sqrt(mean_rg * mean_rg + mean_yb * mean_yb);
    double sat_mean = mean_of(sat);
    out[k++] = sat_mean;
    out[k++] = std_of(sat, sat_mean);
    out[k++] = hf / (hf + band1 + 1e-12);
    out[k++] = max_l - min_l;
    out[k++] = mean_l;
    out[k++] = median_residual;
    double gxm = mean_of(gx_abs), gym = mean_of(gy_abs);
    out[k++] = (gym - gxm) / (gxm + gym + 1e-9);
    out[k++] = hf_half / (hf_half + band1_half + 1e-12);
    out[k++] = grad_boundary / (grad_total + 1e-12);
    out[k++] = chroma_grad1 / (chroma_grad4 + 1e-9);
    out[k++] = std_of(chroma, mean_of(chroma));
    out[k++] = static_cast<double>(flat_count) / static_cast<double>(n);
    out[k++] = static_cast<double>(clipped) / static_cast<double>(n);
}

inline PatchFeatureGrid extract_patch_features(const Image& img, int grid_rows, int grid_cols) {
    if (grid_rows <= 0 || grid_cols <= 0) raise(Errc::invalid_argument, "grid dimensions must be positive");
    if (img.height < grid_rows || img.width < grid_cols)
        raise(Errc::invalid_argument, "image too small for feature grid");
    PatchFeatureGrid grid;
    grid.grid_rows = grid_rows;
    grid.grid_cols = grid_cols;
    grid.feature_dim = kFeatureDim;
    grid.data.assign(static_cast<std::size_t>(grid_rows) * grid_cols * kFeatureDim, 0.0);
    for (int gy = 0; gy < grid_rows; ++gy) {
        int y0 = static_cast<int>(static_cast<std::int64_t>(gy) * img.height / grid_rows);
        int y1 = static_cast<int>(static_cast<std::int64_t>(gy + 1) * img.height / grid_rows);
        for (int gx = 0; gx < grid_cols; ++gx) {
            int x0 = static_cast<int>(static_cast<std::int64_t>(gx) * img.width / grid_cols);
            int x1 = static_cast<int>(static_cast<std::int64_t>(gx + 1) * img.width / grid_cols);
            patch_features(img, y0, y1, x0, x1, grid.patch(gy * grid_cols + gx));
        }
    }
    return grid;
}

} // namespace hirqa
