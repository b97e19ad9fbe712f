#pragma once

// Synthetic degradation engine. A registry of distortion kinds (two per
// category across brightness-change, blur, spatial, color, compression,
// noise, sharpness-contrast), each with a 5-row parameter table ordered by
// increasing perceptual severity. Severity levels are continuous in [1,5]:
// fractional levels linearly interpolate the neighbouring rows, integer
// parameters round after interpolation.
//
// Recipe sampling (one Rng(seed), draws in this exact order):
//   n      = 1 + below(max_steps)
//   cats   = partial Fisher-Yates over the 7 category indices:
//            for i in 0..n-1: j = i + below(7 - i); swap(cats[i], cats[j])
//   per step s (category cats[s]):
//     kind  = below(#kinds in category)     (registry order)
//     base  = 1 + below(5)
//     z     = gaussian()                    (always drawn, even if sigma_off = 0)
//     level = clip(base + sigma_off * z, 1, 5)
// Step seeds during application: derive_seed(recipe.seed, step_index).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hirqa/error.hpp"
#include "hirqa/image.hpp"
#include "hirqa/rng.hpp"

namespace hirqa {

enum class DistortionCategory {
    brightness_change,
    blur,
    spatial,
    color,
    compression,
    noise,
    sharpness_contrast,
};

inline const char* category_name(DistortionCategory c) {
    switch (c) {
        case DistortionCategory::brightness_change:  return "brightness-change";
        case DistortionCategory::blur:               return "blur";
        case DistortionCategory::spatial:            return "spatial";
        case DistortionCategory::color:              return "color";
        case DistortionCategory::compression:        return "compression";
        case DistortionCategory::noise:              return "noise";
        case DistortionCategory::sharpness_contrast: return "sharpness-contrast";
    }
    return "?";
}

constexpr int kNumCategories = 7;
constexpr int kLevelsPerKind = 5;

// Statistic used by the per-kind severity-monotonicity property.
enum class SeverityStat { mse_vs_source, laplacian_energy, mean_abs_shift, luma_stddev, saturation_mean };

inline const char* severity_stat_name(SeverityStat s) {
    switch (s) {
        case SeverityStat::mse_vs_source:    return "mse-vs-source";
        case SeverityStat::laplacian_energy: return "laplacian-energy";
        case SeverityStat::mean_abs_shift:   return "mean-abs-shift";
        case SeverityStat::luma_stddev:      return "luma-stddev";
        case SeverityStat::saturation_mean:  return "saturation-mean";
    }
    return "?";
}

struct DistortionParam {
    std::string name;
    bool integer = false;
    std::array<double, kLevelsPerKind> rows{};
};

struct DistortionKind {
    std::string id;
    DistortionCategory category;
    bool stochastic = false;
    SeverityStat stat = SeverityStat::mse_vs_source;
    bool stat_increasing = true;
    std::vector<DistortionParam> params;
};

struct DistortionStep {
    std::string kind;
    double level = 1.0; // in [1,5]
};

struct Recipe {
    std::vector<DistortionStep> steps;
    std::uint64_t seed = 0;
    double severity = 0.0; // cached, recomputable from steps
};

using ParamSet = std::map<std::string, double>;

// ---------------------------------------------------------------------------

class DistortionRegistry {
  public:
    static const DistortionRegistry& instance() {
        static DistortionRegistry reg;
        return reg;
    }

    const std::vector<DistortionKind>& kinds() const { return kinds_; }

    const DistortionKind& kind(const std::string& id) const {
        for (const auto& k : kinds_)
            if (k.id == id) return k;
        raise(Errc::invalid_argument, "unknown distortion kind: " + id);
    }

    bool has_kind(const std::string& id) const {
        for (const auto& k : kinds_)
            if (k.id == id) return true;
        return false;
    }

    std::vector<const DistortionKind*> kinds_in_category(DistortionCategory c) const {
        std::vector<const DistortionKind*> out;
        for (const auto& k : kinds_)
            if (k.category == c) out.push_back(&k);
        return out;
    }

    // Human-readable committed table: one header line, then
    // id <TAB> category <TAB> stochastic <TAB> stat <TAB> param=r1,r2,r3,r4,r5[;...]
    std::string table_text() const {
        std::ostringstream os;
        os << "# hirqa distortion registry v1\n";
        for (const auto& k : kinds_) {
            os << k.id << "\t" << category_name(k.category) << "\t" << (k.stochastic ? "stochastic" : "deterministic")
               << "\t" << severity_stat_name(k.stat) << (k.stat_increasing ? "+" : "-") << "\t";
            for (std::size_t pi = 0; pi < k.params.size(); ++pi) {
                if (pi) os << ";";
                os << k.params[pi].name << (k.params[pi].integer ? "(int)" : "") << "=";
                for (int r = 0; r < kLevelsPerKind; ++r) {
                    if (r) os << ",";
                    std::ostringstream num;
                    num << k.params[pi].rows[r];
                    os << num.str();
                }
            }
            os << "\n";
        }
        return os.str();
    }

  private:
    std::vector<DistortionKind> kinds_;

    static DistortionParam p(std::string name, std::array<double, 5> rows, bool integer = false) {
        DistortionParam dp;
        dp.name = std::move(name);
        dp.integer = integer;
        dp.rows = rows;
        return dp;
    }

    DistortionRegistry() {
        using DC = DistortionCategory;
        using SS = SeverityStat;
        auto add = [&](std::string id, DC cat, bool stoch, SS stat, bool inc, std::vector<DistortionParam> params) {
            kinds_.push_back({std::move(id), cat, stoch, stat, inc, std::move(params)});
        };
        // Row values are calibrated on the fixture corpus so every kind's
        // levels trace the same fraction ladder of its own maximal
        // feature-space displacement ({15, 40, 65, 83, 100} percent), the
        // ladder the gaussian-blur table follows.
        // brightness-change (level-1 raise is the neutral zero offset)
        add("brightness-raise", DC::brightness_change, false, SS::mean_abs_shift, true,
            {p("offset", {0.0, 0.29, 0.38, 0.42, 0.45})});
        add("brightness-lower", DC::brightness_change, false, SS::mean_abs_shift, true,
            {p("offset", {0.18, 0.33, 0.40, 0.43, 0.45})});
        // blur
        add("gaussian-blur", DC::blur, false, SS::laplacian_energy, false,
            {p("sigma", {0.5, 0.8, 1.2, 2.4, 4.0})});
        add("motion-blur", DC::blur, false, SS::laplacian_energy, false,
            {p("length", {2.4, 4.3, 6.1, 8.1, 13.0})});
        // spatial
        add("pixelate", DC::spatial, false, SS::mse_vs_source, true,
            {p("block", {2, 4, 5, 9, 12}, true)});
        add("jitter-warp", DC::spatial, true, SS::mse_vs_source, true,
            {p("amplitude", {0.08, 0.24, 0.43, 0.61, 1.2})});
        // color
        add("saturation-shift", DC::color, false, SS::saturation_mean, false,
            {p("factor", {0.86, 0.63, 0.40, 0.24, 0.08})});
        add("color-quantize", DC::color, false, SS::mse_vs_source, true,
            {p("levels", {32, 16, 8, 5, 3}, true)});
        // compression
        add("jpeg-like", DC::compression, false, SS::mse_vs_source, true,
            {p("quality", {40, 23, 19, 15, 12}, true)});
        add("color-subsample", DC::compression, false, SS::mse_vs_source, true,
            {p("factor", {2, 3, 4, 6, 8}, true)});
        // noise
        add("gaussian-noise", DC::noise, true, SS::mse_vs_source, true,
            {p("sigma", {0.049, 0.104, 0.152, 0.186, 0.22})});
        add("impulse-noise", DC::noise, true, SS::mse_vs_source, true,
            {p("prob", {0.01, 0.03, 0.07, 0.12, 0.20})});
        // sharpness-contrast
        add("contrast-reduce", DC::sharpness_contrast, false, SS::luma_stddev, false,
            {p("factor", {0.87, 0.66, 0.45, 0.31, 0.20})});
        add("over-sharpen", DC::sharpness_contrast, false, SS::laplacian_energy, true,
            {p("amount", {0.81, 2.15, 3.47, 4.47, 5.5})});
    }
};

// ---------------------------------------------------------------------------

inline ParamSet level_params(const DistortionKind& kind, double level) {
    if (level < 1.0 || level > 5.0) raise(Errc::invalid_argument, "level outside [1,5]");
    int lo = static_cast<int>(std::floor(level));
    int hi = static_cast<int>(std::ceil(level));
    double t = level - lo;
    ParamSet out;
    for (const auto& par : kind.params) {
        double v = par.rows[lo - 1] + t * (par.rows[hi - 1] - par.rows[lo - 1]);
        if (par.integer) v = std::round(v);
        out[par.name] = v;
    }
    return out;
}

inline ParamSet level_params(const std::string& kind_id, double level) {
    return level_params(DistortionRegistry::instance().kind(kind_id), level);
}

inline double clip_level(double l) { return std::clamp(l, 1.0, 5.0); }

inline double recipe_severity_from_levels(const std::vector<DistortionStep>& steps) {
    if (steps.empty()) raise(Errc::invalid_argument, "recipe has no steps");
    double mx = 1.0;
    for (const auto& s : steps) mx = std::max(mx, s.level);
    return (mx - 1.0) / 4.0;
}

inline double severity(const Recipe& r) { return recipe_severity_from_levels(r.steps); }

inline Recipe sample_recipe(std::uint64_t rng_seed, int max_steps, double sigma_off) {
    if (max_steps < 1 || max_steps > kNumCategories)
        raise(Errc::invalid_argument, "max_steps must be in [1,7]");
    const auto& reg = DistortionRegistry::instance();
    Rng rng(rng_seed);
    int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_steps)));
    std::array<int, kNumCategories> cats{};
    for (int i = 0; i < kNumCategories; ++i) cats[i] = i;
    for (int i = 0; i < n; ++i) {
        int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(kNumCategories - i)));
        std::swap(cats[i], cats[j]);
    }
    Recipe recipe;
    recipe.seed = rng_seed;
    for (int s = 0; s < n; ++s) {
        auto kinds = reg.kinds_in_category(static_cast<DistortionCategory>(cats[s]));
        const DistortionKind* kind = kinds[rng.below(kinds.size())];
        int base = 1 + static_cast<int>(rng.below(5));
        double z = rng.gaussian();
        double level = clip_level(base + sigma_off * z);
        recipe.steps.push_back({kind->id, level});
    }
    recipe.severity = recipe_severity_from_levels(recipe.steps);
    return recipe;
}

// ---------------------------------------------------------------------------
// Kind implementations. All operate on float samples and clamp to [0,1].

namespace detail {

inline double luma(const Image& img, int y, int x) {
    return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

inline Image convolve_separable(const Image& img, const std::vector<double>& kx, const std::vector<double>& ky) {
    int rx = static_cast<int>(kx.size() / 2), ry = static_cast<int>(ky.size() / 2);
    Image tmp = make_image(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -rx; k <= rx; ++k) {
                    int xx = std::clamp(x + k, 0, img.width - 1);
                    acc += kx[k + rx] * img.at(y, xx, c);
                }
                tmp.at(y, x, c) = static_cast<float>(acc);
            }
    Image out = make_image(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -ry; k <= ry; ++k) {
                    int yy = std::clamp(y + k, 0, img.height - 1);
                    acc += ky[k + ry] * tmp.at(yy, x, c);
                }
                out.at(y, x, c) = clamp01(static_cast<float>(acc));
            }
    return out;
}

inline std::vector<double> gaussian_kernel(double sigma) {
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

inline Image gaussian_blur_2d(const Image& img, double sigma) {
    auto k = gaussian_kernel(sigma);
    return convolve_separable(img, k, k);
}

// Horizontal streak: tent kernel of continuous base length. Tap weights
// 1 - |t|/(length/2) enter smoothly as the length grows, so blur energy is
// continuous and monotone in the level.
inline Image motion_blur(const Image& img, double length) {
    double half = std::max(length, 1.0) / 2.0;
    int radius = std::max(1, static_cast<int>(std::ceil(half)) - 1);
    std::vector<double> k(2 * radius + 1, 0.0);
    double total = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        double w = std::max(0.0, 1.0 - std::abs(static_cast<double>(t)) / half);
        k[t + radius] = w;
        total += w;
    }
    for (double& v : k) v /= total;
    return convolve_separable(img, k, {1.0});
}

inline Image brightness_shift(const Image& img, double offset) {
    Image out = img;
    for (float& v : out.data) v = clamp01(static_cast<float>(v + offset));
    return out;
}

inline Image contrast_scale(const Image& img, double factor) {
    Image out = img;
    for (float& v : out.data) v = clamp01(static_cast<float>(0.5 + factor * (v - 0.5)));
    return out;
}

inline Image saturation_scale(const Image& img, double factor) {
    Image out = make_image(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double m = luma(img, y, x);
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = clamp01(static_cast<float>(m + factor * (img.at(y, x, c) - m)));
        }
    return out;
}

inline Image color_quantize(const Image& img, int levels) {
    levels = std::max(2, levels);
    Image out = img;
    double n = levels - 1;
    for (float& v : out.data) v = clamp01(static_cast<float>(std::round(v * n) / n));
    return out;
}

inline Image pixelate(const Image& img, int block) {
    block = std::max(1, block);
    Image out = make_image(img.width, img.height);
    for (int by = 0; by < img.height; by += block)
        for (int bx = 0; bx < img.width; bx += block) {
            int ey = std::min(by + block, img.height), ex = std::min(bx + block, img.width);
            double acc[3] = {0, 0, 0};
            int cnt = (ey - by) * (ex - bx);
            for (int y = by; y < ey; ++y)
                for (int x = bx; x < ex; ++x)
                    for (int c = 0; c < 3; ++c) acc[c] += img.at(y, x, c);
            for (int y = by; y < ey; ++y)
                for (int x = bx; x < ex; ++x)
                    for (int c = 0; c < 3; ++c) out.at(y, x, c) = clamp01(static_cast<float>(acc[c] / cnt));
        }
    return out;
}

inline float bilinear_sample(const Image& img, double fy, double fx, int c) {
    fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
    int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
    double wx = fx - x0, wy = fy - y0;
    double top = (1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
    double bot = (1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
    return static_cast<float>((1 - wy) * top + wy * bot);
}

// Random displacement field; per pixel (row-major): dx from u1, dy from u2.
inline Image jitter_warp(const Image& img, double amplitude, std::uint64_t seed) {
    Rng rng(seed);
    Image out = make_image(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double dx = amplitude * (2.0 * rng.uniform() - 1.0);
            double dy = amplitude * (2.0 * rng.uniform() - 1.0);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = clamp01(bilinear_sample(img, y + dy, x + dx, c));
        }
    return out;
}

// Per-sample gaussian noise in row-major channel-interleaved order.
inline Image gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
    Rng rng(seed);
    Image out = img;
    for (float& v : out.data) v = clamp01(static_cast<float>(v + sigma * rng.gaussian()));
    return out;
}

// Per pixel: u < prob selects the pixel, second draw picks salt vs pepper.
inline Image impulse_noise(const Image& img, double prob, std::uint64_t seed) {
    Rng rng(seed);
    Image out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (rng.uniform() < prob) {
                float v = rng.uniform() < 0.5 ? 1.0f : 0.0f;
                for (int c = 0; c < 3; ++c) out.at(y, x, c) = v;
            }
        }
    return out;
}

inline Image unsharp(const Image& img, double amount) {
    Image blurred = gaussian_blur_2d(img, 1.0);
    Image out = make_image(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = clamp01(static_cast<float>(img.data[i] + amount * (img.data[i] - blurred.data[i])));
    return out;
}

// 8x8 block-transform quantization, JPEG-style quality scaling, applied per
// channel. DCT-II orthonormal; quant step grows with spatial frequency.
inline void dct8(const double in[8], double out[8]) {
    for (int u = 0; u < 8; ++u) {
        double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
        double acc = 0.0;
        for (int i = 0; i < 8; ++i) acc += in[i] * std::cos((2 * i + 1) * u * 3.14159265358979323846 / 16.0);
        out[u] = cu * acc;
    }
}

inline void idct8(const double in[8], double out[8]) {
    for (int i = 0; i < 8; ++i) {
        double acc = 0.0;
        for (int u = 0; u < 8; ++u) {
            double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            acc += cu * in[u] * std::cos((2 * i + 1) * u * 3.14159265358979323846 / 16.0);
        }
        out[i] = acc;
    }
}

inline Image jpeg_like(const Image& img, int quality) {
    quality = std::clamp(quality, 1, 100);
    double s = quality >= 50 ? (100.0 - quality) / 50.0 : 50.0 / quality;
    Image out = img;
    double block[8][8], tmp[8][8];
    for (int c = 0; c < 3; ++c)
        for (int by = 0; by < img.height; by += 8)
            for (int bx = 0; bx < img.width; bx += 8) {
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) {
                        int yy = std::min(by + y, img.height - 1), xx = std::min(bx + x, img.width - 1);
                        block[y][x] = img.at(yy, xx, c);
                    }
                for (int y = 0; y < 8; ++y) dct8(block[y], tmp[y]);
                for (int x = 0; x < 8; ++x) {
                    double col[8], dc[8];
                    for (int y = 0; y < 8; ++y) col[y] = tmp[y][x];
                    dct8(col, dc);
                    for (int y = 0; y < 8; ++y) {
                        double step = (0.02 + 0.04 * (x + y)) * s;
                        tmp[y][x] = step > 1e-12 ? std::round(dc[y] / step) * step : dc[y];
                    }
                }
                for (int x = 0; x < 8; ++x) {
                    double col[8], ic[8];
                    for (int y = 0; y < 8; ++y) col[y] = tmp[y][x];
                    idct8(col, ic);
                    for (int y = 0; y < 8; ++y) block[y][x] = ic[y];
                }
                for (int y = 0; y < 8; ++y) {
                    double row[8];
                    idct8(block[y], row);
                    for (int x = 0; x < 8; ++x) {
                        if (by + y < img.height && bx + x < img.width)
                            out.at(by + y, bx + x, c) = clamp01(static_cast<float>(row[x]));
                    }
                }
            }
    return out;
}

// Chroma box-downsample/upsample in an opponent space: Y=(r+g+b)/3,
// C1=r-g, C2=b-(r+g)/2.
inline Image color_subsample(const Image& img, int factor) {
    factor = std::max(1, factor);
    int cw = (img.width + factor - 1) / factor, ch = (img.height + factor - 1) / factor;
    std::vector<double> c1(static_cast<std::size_t>(cw) * ch, 0.0), c2(c1), cnt(c1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
            std::size_t idx = static_cast<std::size_t>(y / factor) * cw + (x / factor);
            c1[idx] += r - g;
            c2[idx] += b - 0.5 * (r + g);
            cnt[idx] += 1.0;
        }
    for (std::size_t i = 0; i < c1.size(); ++i) {
        c1[i] /= cnt[i];
        c2[i] /= cnt[i];
    }
    Image out = make_image(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
            double yv = (r + g + b) / 3.0;
            std::size_t idx = static_cast<std::size_t>(y / factor) * cw + (x / factor);
            double rr = yv + c1[idx] / 2.0 - c2[idx] / 3.0;
            double gg = yv - c1[idx] / 2.0 - c2[idx] / 3.0;
            double bb = yv + 2.0 * c2[idx] / 3.0;
            out.at(y, x, 0) = clamp01(static_cast<float>(rr));
            out.at(y, x, 1) = clamp01(static_cast<float>(gg));
            out.at(y, x, 2) = clamp01(static_cast<float>(bb));
        }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------

inline Image apply_step(const Image& img, const DistortionStep& step, std::uint64_t step_seed) {
    if (img.empty()) raise(Errc::invalid_argument, "empty image");
    const DistortionKind& kind = DistortionRegistry::instance().kind(step.kind);
    ParamSet ps = level_params(kind, step.level);
    const std::string& id = kind.id;
    if (id == "brightness-raise") return detail::brightness_shift(img, ps.at("offset"));
    if (id == "brightness-lower") return detail::brightness_shift(img, -ps.at("offset"));
    if (id == "gaussian-blur") return detail::gaussian_blur_2d(img, ps.at("sigma"));
    if (id == "motion-blur") return detail::motion_blur(img, ps.at("length"));
    if (id == "pixelate") return detail::pixelate(img, static_cast<int>(ps.at("block")));
    if (id == "jitter-warp") return detail::jitter_warp(img, ps.at("amplitude"), step_seed);
    if (id == "saturation-shift") return detail::saturation_scale(img, ps.at("factor"));
    if (id == "color-quantize") return detail::color_quantize(img, static_cast<int>(ps.at("levels")));
    if (id == "jpeg-like") return detail::jpeg_like(img, static_cast<int>(ps.at("quality")));
    if (id == "color-subsample") return detail::color_subsample(img, static_cast<int>(ps.at("factor")));
    if (id == "gaussian-noise") return detail::gaussian_noise(img, ps.at("sigma"), step_seed);
    if (id == "impulse-noise") return detail::impulse_noise(img, ps.at("prob"), step_seed);
    if (id == "contrast-reduce") return detail::contrast_scale(img, ps.at("factor"));
    if (id == "over-sharpen") return detail::unsharp(img, ps.at("amount"));
    raise(Errc::invalid_argument, "unknown distortion kind: " + id);
}

inline Image degrade(const Image& img, const Recipe& recipe) {
    Image out = img;
    for (std::size_t i = 0; i < recipe.steps.size(); ++i)
        out = apply_step(out, recipe.steps[i], derive_seed(recipe.seed, i));
    return out;
}

// Severity statistics used by the monotonicity property and tests.
inline double stat_luma_laplacian_energy(const Image& img) {
    double acc = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            auto l = [&](int yy, int xx) {
                return detail::luma(img, std::clamp(yy, 0, img.height - 1), std::clamp(xx, 0, img.width - 1));
            };
            double v = 4.0 * l(y, x) - l(y - 1, x) - l(y + 1, x) - l(y, x - 1) - l(y, x + 1);
            acc += v * v;
        }
    return acc / (static_cast<double>(img.width) * img.height);
}

inline double stat_mse(const Image& a, const Image& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    return acc / a.data.size();
}

inline double severity_statistic(const DistortionKind& kind, const Image& source, const Image& distorted) {
    switch (kind.stat) {
        case SeverityStat::mse_vs_source: return stat_mse(source, distorted);
        case SeverityStat::laplacian_energy: return stat_luma_laplacian_energy(distorted);
        case SeverityStat::mean_abs_shift: {
            double ma = 0.0, mb = 0.0;
            for (float v : source.data) ma += v;
            for (float v : distorted.data) mb += v;
            return std::abs(mb - ma) / source.data.size();
        }
        case SeverityStat::luma_stddev: {
            double mean = 0.0;
            std::vector<double> lum;
            lum.reserve(static_cast<std::size_t>(distorted.width) * distorted.height);
            for (int y = 0; y < distorted.height; ++y)
                for (int x = 0; x < distorted.width; ++x) lum.push_back(detail::luma(distorted, y, x));
            for (double v : lum) mean += v;
            mean /= lum.size();
            double var = 0.0;
            for (double v : lum) var += (v - mean) * (v - mean);
            return std::sqrt(var / lum.size());
        }
        case SeverityStat::saturation_mean: {
            double acc = 0.0;
            for (int y = 0; y < distorted.height; ++y)
                for (int x = 0; x < distorted.width; ++x) {
                    float r = distorted.at(y, x, 0), g = distorted.at(y, x, 1), b = distorted.at(y, x, 2);
                    acc += std::max({r, g, b}) - std::min({r, g, b});
                }
            return acc / (static_cast<double>(distorted.width) * distorted.height);
        }
    }
    return 0.0;
}

} // namespace hirqa
