#include <catch2/catch.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "hirqa/image.hpp"
#include "hirqa/rng.hpp"

using namespace hirqa;

namespace {

const std::string kFixtures = HIRQA_FIXTURE_DIR;

double sample_sum(const Image& img) {
    double s = 0.0;
    for (float v : img.data) s += v;
    return s;
}

std::uint64_t replay_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Image random_image(int w, int h, std::uint64_t seed) {
    Image img = make_image(w, h);
    Rng rng(seed);
    for (float& v : img.data) v = static_cast<float>(rng.below(256)) / 255.0f;
    return img;
}

} // namespace

TEST_CASE("1x1 white PPM decodes to unit samples") {
    Image img = load_image(kFixtures + "/white1x1.ppm");
    REQUIRE(img.width == 1);
    REQUIRE(img.height == 1);
    REQUIRE(img.data.size() == 3);
    CHECK(img.data[0] == 1.0f);
    CHECK(img.data[1] == 1.0f);
    CHECK(img.data[2] == 1.0f);
}

TEST_CASE("P5 magic is rejected as unsupported") {
    try {
        load_image(kFixtures + "/bad_magic.pgm");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unsupported_format);
    }
}

TEST_CASE("missing file reports unreadable_file") {
    try {
        load_image(kFixtures + "/does_not_exist.ppm");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unreadable_file);
    }
}

// Oracle values recorded from an independent decoder (PIL) at
// fixture-creation time: sum of raw RGB bytes over all samples.
TEST_CASE("PNG fixtures match the independent decoder") {
    SECTION("8x8 checkerboard") {
        Image img = load_image(kFixtures + "/checker8.png");
        REQUIRE(img.width == 8);
        REQUIRE(img.height == 8);
        CHECK(sample_sum(img) == Approx(21984.0 / 255.0).epsilon(1e-6));
    }
    SECTION("RGBA gradient drops alpha") {
        Image img = load_image(kFixtures + "/gradient_rgba.png");
        REQUIRE(img.width == 6);
        REQUIRE(img.height == 4);
        REQUIRE(img.data.size() == 72);
        CHECK(sample_sum(img) == Approx(8880.0 / 255.0).epsilon(1e-6));
    }
    SECTION("16x16 noise") {
        Image img = load_image(kFixtures + "/noise16.png");
        REQUIRE(img.width == 16);
        CHECK(sample_sum(img) == Approx(97920.0 / 255.0).epsilon(1e-6));
    }
}

TEST_CASE("corrupt PNG payloads are rejected") {
    auto bytes = read_file_bytes(kFixtures + "/checker8.png");
    SECTION("truncated") {
        std::vector<unsigned char> cut(bytes.begin(), bytes.begin() + bytes.size() / 2);
        CHECK_THROWS_AS(decode_png(cut), Error);
    }
    SECTION("flipped byte breaks the chunk CRC") {
        auto bad = bytes;
        bad[bad.size() / 2] ^= 0xFF;
        try {
            decode_png(bad);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::corrupt_data);
        }
    }
}

TEST_CASE("canonical P6 round-trips byte-identically") {
    auto bytes = read_file_bytes(kFixtures + "/ramp4.ppm");
    Image img = decode_ppm(bytes);
    CHECK(encode_ppm(img) == bytes);
}

TEST_CASE("encode/decode/encode is stable for random images") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Image img = random_image(9, 5, seed);
        auto once = encode_ppm(img);
        auto twice = encode_ppm(decode_ppm(once));
        CHECK(once == twice);
    }
}

TEST_CASE("full-size crop is the identity") {
    Image img = random_image(5, 5, 11);
    Image c = random_crop(img, 5, 999);
    CHECK(c.data == img.data);
}

TEST_CASE("crop is deterministic in the seed") {
    Image img = load_image(kFixtures + "/ramp4.ppm");
    Image a = random_crop(img, 2, 7);
    Image b = random_crop(img, 2, 7);
    CHECK(a.data == b.data);
    CHECK_THROWS_AS(random_crop(img, 5, 7), Error);
}

TEST_CASE("crop offset replays the documented generator") {
    Image img = load_image(kFixtures + "/ramp4.ppm");
    Image c = random_crop(img, 2, 7);
    std::uint64_t state = 7;
    int ox = static_cast<int>(replay_next(state) % 3);
    int oy = static_cast<int>(replay_next(state) % 3);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x)
            for (int ch = 0; ch < 3; ++ch) CHECK(c.at(y, x, ch) == img.at(oy + y, ox + x, ch));
}

TEST_CASE("resize keeps images whose short side already matches") {
    Image img = random_image(50, 100, 3);
    Image out = resize_shortest_side(img, 50);
    CHECK(out.width == 50);
    CHECK(out.height == 100);
    CHECK(out.data == img.data);
}

TEST_CASE("constant images resize to the same constant") {
    Image img = make_image(100, 200, 0.25f);
    Image out = resize_shortest_side(img, 50);
    REQUIRE(out.width == 50);
    REQUIRE(out.height == 100);
    for (float v : out.data) CHECK(v == Approx(0.25f).margin(1e-6));
}

// Hand-evaluated bilinear: the 4x4 ramp (value 16*(4y+x)/255) halved maps
// each output pixel to the mean of its 2x2 source block, i.e.
// (16*(8y+2x) + 40)/255.
TEST_CASE("ramp resize matches the hand-evaluated bilinear weights") {
    Image img = load_image(kFixtures + "/ramp4.ppm");
    Image out = resize_bilinear(img, 2, 2);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            double expect = (16.0 * (8 * y + 2 * x) + 40.0) / 255.0;
            for (int ch = 0; ch < 3; ++ch) CHECK(out.at(y, x, ch) == Approx(expect).margin(1e-6));
        }
}

TEST_CASE("all decode paths clamp to the unit interval") {
    for (const char* name : {"/checker8.png", "/noise16.png", "/ramp4.ppm"}) {
        Image img = load_image(kFixtures + name);
        for (float v : img.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}
