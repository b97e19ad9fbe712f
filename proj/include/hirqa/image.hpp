#pragma once

// Raster substrate: 3-channel float images in [0,1], row-major, channel
// interleaved. Decoders cover binary PPM (P6, maxval 255) and an 8-bit
// RGB/RGBA PNG subset (no palette, no interlacing; alpha dropped). The
// encoder emits canonical P6 only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

#include "hirqa/binio.hpp"
#include "hirqa/error.hpp"
#include "hirqa/rng.hpp"

namespace hirqa {

struct Image {
    int width = 0;
    int height = 0;
    static constexpr int channels = 3;
    std::vector<float> data; // width*height*3 samples in [0,1]

    float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    std::size_t sample_count() const { return static_cast<std::size_t>(width) * height * 3; }
    bool empty() const { return width <= 0 || height <= 0; }
};

inline Image make_image(int w, int h, float fill = 0.0f) {
    Image img;
    img.width = w;
    img.height = h;
    img.data.assign(static_cast<std::size_t>(w) * h * 3, fill);
    return img;
}

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

inline void clamp_image(Image& img) {
    for (float& v : img.data) v = clamp01(v);
}

// ---------------------------------------------------------------------------
// PPM (P6, maxval 255)

namespace detail {

inline int ppm_token(ByteReader& r) {
    // skip whitespace and '#' comments, then parse a decimal token
    for (;;) {
        r.need(1);
        unsigned char c = r.p[r.pos];
        if (c == '#') {
            while (r.pos < r.n && r.p[r.pos] != '\n') ++r.pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++r.pos;
        } else {
            break;
        }
    }
    long v = 0;
    bool any = false;
    while (r.pos < r.n && r.p[r.pos] >= '0' && r.p[r.pos] <= '9') {
        v = v * 10 + (r.p[r.pos] - '0');
        if (v > 0x7FFFFFFF) raise(Errc::corrupt_data, "PPM header value out of range");
        ++r.pos;
        any = true;
    }
    if (!any) raise(Errc::corrupt_data, "malformed PPM header");
    return static_cast<int>(v);
}

} // namespace detail

inline Image decode_ppm(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') raise(Errc::unsupported_format, "not a PPM stream");
    if (bytes[1] != '6') raise(Errc::unsupported_format, std::string("unsupported PPM magic P") + static_cast<char>(bytes[1]));
    ByteReader r(bytes.data(), bytes.size());
    r.pos = 2;
    int w = detail::ppm_token(r);
    int h = detail::ppm_token(r);
    int maxval = detail::ppm_token(r);
    if (w <= 0 || h <= 0) raise(Errc::corrupt_data, "nonpositive PPM dimensions");
    if (maxval != 255) raise(Errc::unsupported_format, "PPM maxval must be 255");
    r.need(1);
    unsigned char sep = r.p[r.pos++];
    if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n') raise(Errc::corrupt_data, "missing PPM header separator");
    std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (r.n - r.pos < need) raise(Errc::corrupt_data, "truncated PPM pixel data");
    Image img = make_image(w, h);
    for (std::size_t i = 0; i < need; ++i) img.data[i] = static_cast<float>(r.p[r.pos + i]) / 255.0f;
    return img;
}

inline std::vector<unsigned char> encode_ppm(const Image& img) {
    if (img.empty()) raise(Errc::invalid_argument, "cannot encode empty image");
    std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.reserve(out.size() + img.sample_count());
    for (float v : img.data) {
        float c = clamp01(v) * 255.0f;
        out.push_back(static_cast<unsigned char>(std::lround(c)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// PNG subset: 8-bit truecolor (type 2) and truecolor+alpha (type 6),
// deflate method 0, filter method 0, no interlacing.

namespace detail {

inline std::vector<unsigned char> zlib_inflate(const unsigned char* src, std::size_t n, std::size_t expected) {
    std::vector<unsigned char> out(expected);
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit(&zs) != Z_OK) raise(Errc::io_error, "inflateInit failed");
    zs.next_in = const_cast<Bytef*>(src);
    zs.avail_in = static_cast<uInt>(n);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    bool ok = (rc == Z_STREAM_END) && zs.avail_out == 0;
    inflateEnd(&zs);
    if (!ok) raise(Errc::corrupt_data, "PNG IDAT stream does not decompress to the expected size");
    return out;
}

inline int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

} // namespace detail

inline Image decode_png(const std::vector<unsigned char>& bytes) {
    static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        raise(Errc::unsupported_format, "not a PNG stream");

    std::size_t pos = 8;
    auto rd_u32 = [&](std::size_t at) -> std::uint32_t {
        return (static_cast<std::uint32_t>(bytes[at]) << 24) | (static_cast<std::uint32_t>(bytes[at + 1]) << 16) |
               (static_cast<std::uint32_t>(bytes[at + 2]) << 8) | static_cast<std::uint32_t>(bytes[at + 3]);
    };

    int w = 0, h = 0, bitdepth = 0, colortype = 0;
    bool seen_ihdr = false, seen_iend = false;
    std::vector<unsigned char> idat;

    while (pos + 8 <= bytes.size()) {
        std::uint32_t len = rd_u32(pos);
        if (pos + 12 + len > bytes.size()) raise(Errc::corrupt_data, "truncated PNG chunk");
        const unsigned char* type = &bytes[pos + 4];
        const unsigned char* payload = &bytes[pos + 8];
        std::uint32_t stored_crc = rd_u32(pos + 8 + len);
        std::uint32_t crc = static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), type, len + 4));
        if (crc != stored_crc) raise(Errc::corrupt_data, "PNG chunk CRC mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) raise(Errc::corrupt_data, "bad IHDR length");
            w = static_cast<int>(rd_u32(pos + 8));
            h = static_cast<int>(rd_u32(pos + 12));
            bitdepth = payload[8];
            colortype = payload[9];
            int compression = payload[10], filter = payload[11], interlace = payload[12];
            if (w <= 0 || h <= 0) raise(Errc::corrupt_data, "nonpositive PNG dimensions");
            if (bitdepth != 8) raise(Errc::unsupported_format, "only 8-bit PNG supported");
            if (colortype != 2 && colortype != 6) raise(Errc::unsupported_format, "only RGB/RGBA PNG supported");
            if (compression != 0 || filter != 0) raise(Errc::corrupt_data, "bad PNG compression/filter method");
            if (interlace != 0) raise(Errc::unsupported_format, "interlaced PNG not supported");
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
            break;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr) raise(Errc::corrupt_data, "missing IHDR");
    if (!seen_iend) raise(Errc::corrupt_data, "missing IEND");
    if (idat.empty()) raise(Errc::corrupt_data, "missing IDAT");

    int bpp = colortype == 6 ? 4 : 3;
    std::size_t stride = static_cast<std::size_t>(w) * bpp;
    std::vector<unsigned char> raw = detail::zlib_inflate(idat.data(), idat.size(), (stride + 1) * h);

    // defilter in place, scanline by scanline
    std::vector<unsigned char> prev(stride, 0), cur(stride, 0);
    Image img = make_image(w, h);
    for (int y = 0; y < h; ++y) {
        const unsigned char* line = &raw[static_cast<std::size_t>(y) * (stride + 1)];
        unsigned char ftype = line[0];
        const unsigned char* src = line + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
            int b = prev[i];
            int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
            int x = src[i];
            int v;
            switch (ftype) {
                case 0: v = x; break;
                case 1: v = x + a; break;
                case 2: v = x + b; break;
                case 3: v = x + (a + b) / 2; break;
                case 4: v = x + detail::paeth(a, b, c); break;
                default: raise(Errc::corrupt_data, "unknown PNG filter type");
            }
            cur[i] = static_cast<unsigned char>(v & 0xFF);
        }
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                img.at(y, x, ch) = static_cast<float>(cur[static_cast<std::size_t>(x) * bpp + ch]) / 255.0f;
        std::swap(prev, cur);
    }
    return img;
}

// ---------------------------------------------------------------------------

inline Image decode_image_bytes(const std::vector<unsigned char>& bytes, const std::string& name = "") {
    if (bytes.size() >= 8 && bytes[0] == 137 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G')
        return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P') return decode_ppm(bytes);
    raise(Errc::unsupported_format, "unrecognized image format: " + name);
}

inline Image load_image(const std::string& path) {
    return decode_image_bytes(read_file_bytes(path), path);
}

inline void save_ppm(const Image& img, const std::string& path) {
    write_file_bytes(path, encode_ppm(img));
}

// ---------------------------------------------------------------------------
// Deterministic crop. Offsets come from one Rng(seed): x = below(w-size+1)
// then y = below(h-size+1).

inline Image random_crop(const Image& img, int size, std::uint64_t seed) {
    if (size <= 0) raise(Errc::invalid_argument, "crop size must be positive");
    if (size > img.width || size > img.height)
        raise(Errc::invalid_argument, "crop size exceeds image dimensions");
    Rng rng(seed);
    int ox = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width - size + 1)));
    int oy = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height - size + 1)));
    Image out = make_image(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(oy + y, ox + x, c);
    return out;
}

// Bilinear resize with pixel-center alignment so the downstream feature
// statistics see no half-pixel shift.
inline Image resize_bilinear(const Image& img, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) raise(Errc::invalid_argument, "target dimensions must be positive");
    if (out_w == img.width && out_h == img.height) return img;
    Image out = make_image(out_w, out_h);
    double sx = static_cast<double>(img.width) / out_w;
    double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double wy = fy - y0;
        int y0c = std::clamp(y0, 0, img.height - 1);
        int y1c = std::clamp(y0 + 1, 0, img.height - 1);
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double wx = fx - x0;
            int x0c = std::clamp(x0, 0, img.width - 1);
            int x1c = std::clamp(x0 + 1, 0, img.width - 1);
            for (int c = 0; c < 3; ++c) {
                double top = (1.0 - wx) * img.at(y0c, x0c, c) + wx * img.at(y0c, x1c, c);
                double bot = (1.0 - wx) * img.at(y1c, x0c, c) + wx * img.at(y1c, x1c, c);
                out.at(y, x, c) = clamp01(static_cast<float>((1.0 - wy) * top + wy * bot));
            }
        }
    }
    return out;
}

inline Image resize_shortest_side(const Image& img, int target) {
    if (target <= 0) raise(Errc::invalid_argument, "target must be positive");
    int short_side = std::min(img.width, img.height);
    if (short_side == target) return img;
    double scale = static_cast<double>(target) / short_side;
    int out_w, out_h;
    if (img.width <= img.height) {
        out_w = target;
        out_h = std::max(1, static_cast<int>(std::lround(img.height * scale)));
    } else {
        out_h = target;
        out_w = std::max(1, static_cast<int>(std::lround(img.width * scale)));
    }
    return resize_bilinear(img, out_w, out_h);
}

} // namespace hirqa
