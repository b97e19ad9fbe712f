#pragma once

// Procedural pristine fixture corpus shared by the acceptance suite: smooth
// photo-like base (gradients, blobs, hard-edged rectangles) plus a
// guaranteed fine-detail layer with real chroma content and mild sensor
// noise, so every registry kind produces measurable feature changes.

#include <array>
#include <filesystem>

#include "hirqa/hirqa.hpp"

// Procedural pristine corpus: smooth photo-like base (gradients, blobs) plus
// a guaranteed fine-detail layer so every image carries measurable texture,
// and a touch of sensor noise.
inline hirqa::Image synth_corpus_image(int w, int h, std::uint64_t seed) {
    using namespace hirqa;
    Rng rng(seed);
    Image img = make_image(w, h);
    double base[3];
    for (double& b : base) b = 0.38 + 0.24 * rng.uniform();
    double gx = (rng.uniform() - 0.5) * 0.5 / w, gy = (rng.uniform() - 0.5) * 0.5 / h;
    double fx = 1.0 + 4.0 * rng.uniform(), fy = 1.0 + 4.0 * rng.uniform();
    double amp = 0.06 + 0.04 * rng.uniform();
    double theta = 2 * 3.14159265 * rng.uniform();
    double ct = std::cos(theta), st = std::sin(theta);
    // fine texture: two oriented gratings at 2.5-5 px period plus value noise
    double tf1 = 2.6 + 1.2 * rng.uniform(), tf2 = 3.4 + 1.6 * rng.uniform();
    double ta1 = 0.045 + 0.02 * rng.uniform(), ta2 = 0.03 + 0.015 * rng.uniform();
    double th1 = 2 * 3.14159265 * rng.uniform(), th2 = 2 * 3.14159265 * rng.uniform();
    double c1 = std::cos(th1), s1 = std::sin(th1), c2 = std::cos(th2), s2 = std::sin(th2);
    // per-channel texture gains give the detail layer real chroma content
    double gain1[3], gain2[3];
    for (int c = 0; c < 3; ++c) {
        gain1[c] = 0.7 + 0.6 * rng.uniform();
        gain2[c] = 0.7 + 0.6 * rng.uniform();
    }
    int nblobs = 2 + (int)rng.below(5);
    std::vector<std::array<double, 6>> blobs;
    for (int b = 0; b < nblobs; ++b)
        blobs.push_back({w * rng.uniform(), h * rng.uniform(), 8.0 + 12.0 * rng.uniform(),
                         0.4 * (rng.uniform() - 0.5), rng.uniform(), rng.uniform()});
    // hard-edged rectangles: structured detail that shifts under warps and
    // spreads under blur, like object boundaries in photographs
    int nrects = 3 + (int)rng.below(4);
    std::vector<std::array<double, 7>> rects;
    for (int r = 0; r < nrects; ++r)
        rects.push_back({w * rng.uniform(), h * rng.uniform(), 6.0 + 20.0 * rng.uniform(),
                         4.0 + 16.0 * rng.uniform(), 0.35 * (rng.uniform() - 0.5),
                         0.3 * (rng.uniform() - 0.5), 0.3 * (rng.uniform() - 0.5)});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double u = (ct * x + st * y) / w, v = (-st * x + ct * y) / h;
            double t = amp * std::sin(2 * 3.14159265 * fx * u) * std::cos(2 * 3.14159265 * fy * v);
            t += gx * (x - w / 2.0) + gy * (y - h / 2.0);
            double d1 = ta1 * std::sin(2 * 3.14159265 * (c1 * x + s1 * y) / tf1);
            double d2 = ta2 * std::sin(2 * 3.14159265 * (c2 * x + s2 * y) / tf2);
            double cshift[3] = {0, 0, 0};
            for (auto& bl : blobs) {
                double dx = x - bl[0], dy = y - bl[1];
                double g = bl[3] * std::exp(-(dx * dx + dy * dy) / (2 * bl[2] * bl[2]));
                t += g;
                cshift[0] += g * (bl[4] - 0.5);
                cshift[2] += g * (bl[5] - 0.5);
            }
            double rect_l = 0.0, rect_rg = 0.0, rect_yb = 0.0;
            for (auto& rc : rects) {
                if (x >= rc[0] && x < rc[0] + rc[2] && y >= rc[1] && y < rc[1] + rc[3]) {
                    rect_l += rc[4];
                    rect_rg += rc[5];
                    rect_yb += rc[6];
                }
            }
            double n = 0.006 * (2.0 * rng.uniform() - 1.0);
            double chan_rect[3] = {rect_l + 0.5 * rect_rg + 0.33 * rect_yb, rect_l - 0.5 * rect_rg + 0.33 * rect_yb,
                                   rect_l - 0.67 * rect_yb};
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = clamp01((float)(base[c] + t + gain1[c] * d1 + gain2[c] * d2 + cshift[c] + chan_rect[c] + n));
        }
    return img;
}

inline std::filesystem::path make_corpus(const std::string& name, int n, std::uint64_t seed0) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (int i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "src%03d.ppm", i);
        hirqa::save_ppm(synth_corpus_image(96, 96, seed0 + i), (dir / buf).string());
    }
    return dir;
}
