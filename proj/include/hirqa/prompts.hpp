#pragma once

// Structured quality prompts and a deterministic text embedder, so the
// alignment loss runs without a pretrained language model. Externally
// precomputed embeddings can be imported through the HRQE file format.
//
// Template:
//   "This photo has {a distortion|multiple distortions} such as {names}.
//    The quality is {adjective}. This image shows {caption}."
//
// Embedder contract (stable across implementations):
//   tokens = lowercase alphanumeric runs of the rendered prompt
//   token vector = unit-normalized D_text gaussians from
//                  Rng(derive_seed(vocab_seed, fnv1a64(token)))
//   sentence = sum_t token_vec(t) / (1 + position(t)), plus the adjective
//              token vector with weight 2, then l2-normalized.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hirqa/binio.hpp"
#include "hirqa/distort.hpp"
#include "hirqa/error.hpp"
#include "hirqa/rng.hpp"

namespace hirqa {

constexpr int kDefaultTextDim = 64;

inline const std::vector<std::string>& quality_adjectives() {
    static const std::vector<std::string> adj = {"excellent", "good", "average", "poor", "bad"};
    return adj;
}

inline std::string severity_adjective(double d) {
    if (d < 0.0 || d > 1.0) raise(Errc::invalid_argument, "severity outside [0,1]");
    if (d < 0.2) return quality_adjectives()[0];
    if (d < 0.4) return quality_adjectives()[1];
    if (d < 0.6) return quality_adjectives()[2];
    if (d < 0.8) return quality_adjectives()[3];
    return quality_adjectives()[4];
}

struct Prompt {
    std::vector<std::string> distortion_names; // registry ids, application order
    std::string quality_adjective;
    std::string caption;
    std::string rendered;
};

inline std::string display_name(const std::string& kind_id) {
    std::string s = kind_id;
    std::replace(s.begin(), s.end(), '-', ' ');
    return s;
}

inline Prompt build_prompt(const Recipe& recipe, const std::string& caption) {
    if (recipe.steps.empty()) raise(Errc::invalid_argument, "recipe has no steps");
    Prompt p;
    for (const auto& s : recipe.steps) p.distortion_names.push_back(s.kind);
    p.quality_adjective = severity_adjective(severity(recipe));
    p.caption = caption;
    std::string clause = recipe.steps.size() == 1 ? "a distortion" : "multiple distortions";
    std::string names;
    for (std::size_t i = 0; i < p.distortion_names.size(); ++i) {
        if (i) names += ", ";
        names += display_name(p.distortion_names[i]);
    }
    p.rendered = "This photo has " + clause + " such as " + names + ". The quality is " + p.quality_adjective +
                 ". This image shows " + caption + ".";
    return p;
}

struct PromptEmbedding {
    std::vector<double> vector; // unit norm
};

inline std::vector<std::string> tokenize_prompt(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!cur.empty()) {
            tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(cur);
    return tokens;
}

inline std::vector<double> token_vector(const std::string& token, int d_text, std::uint64_t vocab_seed) {
    Rng rng(derive_seed(vocab_seed, fnv1a64(token.data(), token.size())));
    std::vector<double> v(d_text);
    double nn = 0.0;
    for (double& x : v) {
        x = rng.gaussian();
        nn += x * x;
    }
    nn = std::max(std::sqrt(nn), 1e-12);
    for (double& x : v) x /= nn;
    return v;
}

inline PromptEmbedding embed_prompt(const Prompt& prompt, int d_text, std::uint64_t vocab_seed) {
    if (d_text < 8) raise(Errc::invalid_argument, "text dimension must be >= 8");
    PromptEmbedding out;
    out.vector.assign(d_text, 0.0);
    auto tokens = tokenize_prompt(prompt.rendered);
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
        auto tv = token_vector(tokens[pos], d_text, vocab_seed);
        double w = 1.0 / (1.0 + static_cast<double>(pos));
        for (int k = 0; k < d_text; ++k) out.vector[k] += w * tv[k];
    }
    auto adj = token_vector(prompt.quality_adjective, d_text, vocab_seed);
    for (int k = 0; k < d_text; ++k) out.vector[k] += 2.0 * adj[k];
    double nn = 0.0;
    for (double x : out.vector) nn += x * x;
    nn = std::max(std::sqrt(nn), 1e-12);
    for (double& x : out.vector) x /= nn;
    return out;
}

// ---------------------------------------------------------------------------
// HRQE embedding table: magic "HRQE", version u32, count u32, width u32,
// then per row a u16 id length, the UTF-8 id, and width little-endian f32.

inline std::vector<unsigned char> encode_embeddings(const std::vector<std::pair<std::string, std::vector<float>>>& rows,
                                                    std::uint32_t width) {
    ByteWriter w;
    w.raw("HRQE", 4);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(rows.size()));
    w.u32(width);
    for (const auto& [id, vec] : rows) {
        if (vec.size() != width) raise(Errc::invalid_argument, "embedding row width mismatch: " + id);
        w.str16(id);
        for (float f : vec) w.f32(f);
    }
    return w.bytes;
}

struct EmbeddingTable {
    std::uint32_t width = 0;
    std::vector<std::pair<std::string, std::vector<float>>> rows; // raw rows, save/load stable
    std::map<std::string, PromptEmbedding> by_id;                 // renormalized views
};

inline EmbeddingTable decode_embeddings(const std::vector<unsigned char>& bytes, int expected_width = 0) {
    ByteReader r(bytes.data(), bytes.size());
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, "HRQE", 4) != 0) raise(Errc::corrupt_data, "bad embedding file magic");
    std::uint32_t version = r.u32();
    if (version != 1) raise(Errc::unsupported_format, "unsupported embedding file version");
    EmbeddingTable table;
    std::uint32_t count = r.u32();
    table.width = r.u32();
    if (expected_width > 0 && table.width != static_cast<std::uint32_t>(expected_width))
        raise(Errc::invalid_argument, "embedding width mismatch with configuration");
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string id = r.str16();
        std::vector<float> row(table.width);
        for (auto& f : row) f = r.f32();
        PromptEmbedding pe;
        pe.vector.assign(row.begin(), row.end());
        double nn = 0.0;
        for (double x : pe.vector) nn += x * x;
        nn = std::max(std::sqrt(nn), 1e-12);
        for (double& x : pe.vector) x /= nn;
        table.by_id[id] = std::move(pe);
        table.rows.emplace_back(std::move(id), std::move(row));
    }
    if (!r.at_end()) raise(Errc::corrupt_data, "trailing bytes after embedding payload");
    return table;
}

inline EmbeddingTable load_embeddings(const std::string& path, int expected_width = 0) {
    return decode_embeddings(read_file_bytes(path), expected_width);
}

inline void save_embeddings(const std::string& path, const EmbeddingTable& table) {
    write_file_bytes(path, encode_embeddings(table.rows, table.width));
}

} // namespace hirqa
