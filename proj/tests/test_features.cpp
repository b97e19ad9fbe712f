#include <catch2/catch.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hirqa/distort.hpp"
#include "hirqa/features.hpp"
#include "hirqa/image.hpp"
#include "hirqa/rng.hpp"

using namespace hirqa;

namespace {

const std::string kFixtures = HIRQA_FIXTURE_DIR;

Image textured(int w, int h, std::uint64_t seed) {
    Image img = make_image(w, h);
    Rng rng(seed);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 0.5 + 0.2 * std::sin(2.0 * 3.14159265 * (x + 3 * c) / 6.3) +
                           0.1 * std::sin(2.0 * 3.14159265 * (y + 2 * c) / 3.7) + 0.08 * (2.0 * rng.uniform() - 1.0);
                img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
    return img;
}

} // namespace

TEST_CASE("constant mid-gray zeroes every variation statistic") {
    Image img = make_image(16, 16, 0.5f);
    PatchFeatureGrid grid = extract_patch_features(img, 2, 2);
    REQUIRE(grid.patch_count() == 4);
    // indices with mean semantics stay at 0.5; every std/gradient/laplacian/
    // contrast/colorfulness/saturation/range entry must be exactly zero; the
    // DCT band ratios are only zero up to the transform's rounding residue
    const int zero_idx[] = {3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 17, 19, 20, 21, 23};
    for (int pi = 0; pi < 4; ++pi) {
        const double* f = grid.patch(pi);
        CHECK(f[0] == 0.5);
        CHECK(f[1] == 0.5);
        CHECK(f[2] == 0.5);
        CHECK(f[15] == Approx(0.5).margin(1e-12));
        for (int k : zero_idx) {
            INFO("patch " << pi << " feature " << k);
            CHECK(f[k] == 0.0);
        }
        CHECK(std::abs(f[13]) < 1e-15);
        CHECK(std::abs(f[18]) < 1e-15);
        CHECK(f[22] == 1.0); // every gradient is flat on a constant patch
    }
}

TEST_CASE("high-frequency ratio strictly decreases across blur levels") {
    Image noise = make_image(32, 32);
    Rng rng(3);
    for (float& v : noise.data) v = static_cast<float>(rng.uniform());
    double prev = 1e300;
    // unblurred fixture plus its five blur levels
    for (int level = 0; level <= 5; ++level) {
        Image img = level == 0 ? noise : apply_step(noise, {"gaussian-blur", static_cast<double>(level)}, 0);
        PatchFeatureGrid grid = extract_patch_features(img, 1, 1);
        double hf = grid.patch(0)[13];
        CHECK(hf < prev);
        prev = hf;
    }
}

TEST_CASE("2x2 grid over the 4x4 ramp matches hand-computed block statistics") {
    Image img = load_image(kFixtures + "/ramp4.ppm");
    PatchFeatureGrid grid = extract_patch_features(img, 2, 2);
    REQUIRE(grid.grid_rows == 2);
    REQUIRE(grid.grid_cols == 2);
    REQUIRE(grid.patch_count() == 4);

    // patch (0,0) covers gray values {0, 16, 64, 80}/255
    const double* f = grid.patch(0);
    const double mean = 40.0 / 255.0;
    const double stddev = std::sqrt(1088.0) / 255.0; // devs {-40,-24,24,40}
    CHECK(f[0] == Approx(mean).margin(1e-7));
    CHECK(f[1] == Approx(mean).margin(1e-7));
    CHECK(f[2] == Approx(mean).margin(1e-7));
    CHECK(f[3] == Approx(stddev).margin(1e-7));
    CHECK(f[15] == Approx(mean).margin(1e-7));
    // 3x3 clamped medians are {16,16,64,64}: residuals {16,0,0,16}, mean 8
    CHECK(f[16] == Approx(8.0 / 255.0).margin(1e-7));
    // clamped central differences give gx = 8/255, gy = 32/255 at every pixel
    CHECK(f[6] == Approx(std::sqrt(1088.0) / 255.0).margin(1e-7));
    CHECK(f[7] == Approx(0.0).margin(1e-7));
    CHECK(f[17] == Approx((32.0 - 8.0) / (32.0 + 8.0)).margin(1e-6)); // anisotropy
    CHECK(f[18] == Approx(0.0).margin(1e-12)); // no half-res 4x4 block in a 2x2 patch
    // laplacians {-80, -48, 48, 80} -> mean square 4352 (in /255^2 units)
    CHECK(f[8] == Approx(4352.0 / 65025.0).margin(1e-7));
    // gray block: saturation and chroma statistics vanish
    CHECK(f[10] == Approx(0.0).margin(1e-9));
    CHECK(f[11] == Approx(0.0).margin(1e-9));
    CHECK(f[14] == Approx(80.0 / 255.0).margin(1e-7));
    CHECK(f[22] == Approx(0.0).margin(1e-12)); // gradients well above the flat cutoff
    CHECK(f[23] == Approx(0.25).margin(1e-12)); // one luma value at 0
}

TEST_CASE("extraction is deterministic and rejects undersized images") {
    Image img = textured(24, 24, 4);
    PatchFeatureGrid a = extract_patch_features(img, 3, 3);
    PatchFeatureGrid b = extract_patch_features(img, 3, 3);
    CHECK(a.data == b.data);
    CHECK_THROWS_AS(extract_patch_features(make_image(2, 2, 0.5f), 4, 4), Error);
}

TEST_CASE("every category moves at least one feature monotonically") {
    Image img = textured(64, 64, 8);
    for (int cat = 0; cat < kNumCategories; ++cat) {
        auto kinds = DistortionRegistry::instance().kinds_in_category(static_cast<DistortionCategory>(cat));
        // heavy block quantization adds blocking energy non-monotonically, so
        // the compression category is exercised through chroma subsampling
        const std::string kind =
            kinds[0]->id == "jpeg-like" && kinds.size() > 1 ? kinds[1]->id : kinds[0]->id;
        std::vector<std::vector<double>> means;
        for (int level = 1; level <= 5; ++level) {
            Image out = apply_step(img, {kind, static_cast<double>(level)}, 77);
            PatchFeatureGrid grid = extract_patch_features(out, 4, 4);
            std::vector<double> m(kFeatureDim, 0.0);
            for (int pi = 0; pi < grid.patch_count(); ++pi)
                for (int k = 0; k < kFeatureDim; ++k) m[k] += grid.patch(pi)[k] / grid.patch_count();
            means.push_back(std::move(m));
        }
        bool any_monotone = false;
        for (int k = 0; k < kFeatureDim && !any_monotone; ++k) {
            bool inc = true, dec = true;
            for (int l = 0; l + 1 < 5; ++l) {
                if (means[l + 1][k] < means[l][k]) inc = false;
                if (means[l + 1][k] > means[l][k]) dec = false;
            }
            double span = std::abs(means[4][k] - means[0][k]);
            if ((inc || dec) && span > 1e-9) any_monotone = true;
        }
        INFO("category " << category_name(static_cast<DistortionCategory>(cat)) << " via " << kind);
        CHECK(any_monotone);
    }
}
