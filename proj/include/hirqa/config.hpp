#pragma once

// Flat key=value configuration with [section] headers; flags merge on top.
// Every key carries a provenance tag: "hirqa" for values taken from the
// original HiRQA training setup, "tool" for defaults chosen by this
// implementation. Unknown keys are rejected.

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hirqa/binio.hpp"
#include "hirqa/error.hpp"

namespace hirqa {

struct Config {
    // data
    int crop_size = 64;
    int grid_rows = 8;
    int grid_cols = 8;
    int variants = 5;          // distorted samples per pristine image
    int resize_shortest = 0;   // 0 disables pre-crop resizing
    std::string captions_file; // optional: lines of "path<TAB>caption"
    std::string embeddings_file; // optional HRQE table of precomputed prompt embeddings

    // distortion sampling
    int max_steps = 7; // L_dist
    double sigma_off = 0.3;

    // model
    std::string preset = "small";
    int text_dim = 64;

    // optimization
    int epochs = 3;
    int batch_size = 16;
    double lr0 = 3e-6;
    double lr_min = 8e-7;
    std::uint64_t total_steps = 7000; // 0: one cosine period over the actual run
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    // losses
    double lambda_rank = 1.0;
    double lambda_mreg = 0.1;
    double lambda_align = 0.3;
    double lambda_emb = 0.5;
    double lambda_cov = 0.01;
    double t_d = 0.1;
    double t_q = 0.05;
    std::uint64_t combo_cap = 512;
    double margin = 0.1;
    std::string ranking_variant = "pair-of-pairs";

    // seeds
    std::uint64_t master_seed = 1234;
    std::uint64_t vocab_seed = 99;
};

struct ConfigKey {
    std::string key;
    std::string provenance; // "hirqa" | "tool"
    std::string describe;
};

inline const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = {
        {"data.crop_size", "tool", "training crop side in pixels (original setup uses 384)"},
        {"data.grid_rows", "tool", "feature grid rows"},
        {"data.grid_cols", "tool", "feature grid columns"},
        {"data.variants", "hirqa", "distorted samples generated per pristine image"},
        {"data.resize_shortest", "tool", "resize shortest side before cropping; 0 disables"},
        {"data.captions_file", "tool", "optional per-image caption table (path<TAB>caption)"},
        {"data.embeddings_file", "tool", "optional HRQE table of precomputed prompt embeddings, keyed by record id"},
        {"distort.max_steps", "hirqa", "maximum distortion steps per recipe (L_dist)"},
        {"distort.sigma_off", "hirqa", "stddev of the continuous level offset"},
        {"model.preset", "tool", "scorer size: small (H=64, D=32) or base (H=256, D=128)"},
        {"model.text_dim", "tool", "prompt embedding width"},
        {"train.epochs", "hirqa", "training epochs"},
        {"train.batch_size", "tool", "records per step"},
        {"train.lr0", "hirqa", "initial learning rate"},
        {"train.lr_min", "hirqa", "cosine schedule floor"},
        {"train.total_steps", "hirqa", "cosine schedule horizon; 0 spans the actual run"},
        {"train.weight_decay", "hirqa", "AdamW decoupled weight decay"},
        {"train.beta1", "tool", "AdamW beta1"},
        {"train.beta2", "tool", "AdamW beta2"},
        {"train.epsilon", "tool", "AdamW epsilon"},
        {"loss.lambda_rank", "tool", "ranking objective weight"},
        {"loss.lambda_mreg", "tool", "monotonicity regularizer weight"},
        {"loss.lambda_align", "tool", "image-text alignment weight"},
        {"loss.lambda_emb", "tool", "embedding-distance weight after warm-up"},
        {"loss.lambda_cov", "tool", "covariance regularizer weight"},
        {"loss.t_d", "tool", "severity gap threshold"},
        {"loss.t_q", "tool", "score gap threshold"},
        {"loss.combo_cap", "tool", "pair-of-pairs cap per batch"},
        {"loss.margin", "tool", "margin for the margin-ranking baseline"},
        {"loss.ranking_variant", "tool", "pair-of-pairs | pairwise | margin"},
        {"seed.master", "tool", "master seed for dataset and training"},
        {"seed.vocab", "tool", "token-vector seed for prompt embeddings"},
    };
    return schema;
}

namespace detail_cfg {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) raise(Errc::invalid_argument, "bad numeric value for " + key + ": " + v);
        return d;
    } catch (const Error&) {
        throw;
    } catch (...) {
        raise(Errc::invalid_argument, "bad numeric value for " + key + ": " + v);
    }
}

inline std::int64_t to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long d = std::stoll(v, &pos);
        if (pos != v.size()) raise(Errc::invalid_argument, "bad integer value for " + key + ": " + v);
        return d;
    } catch (const Error&) {
        throw;
    } catch (...) {
        raise(Errc::invalid_argument, "bad integer value for " + key + ": " + v);
    }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) raise(Errc::invalid_argument, "bad seed value for " + key + ": " + v);
        return d;
    } catch (const Error&) {
        throw;
    } catch (...) {
        raise(Errc::invalid_argument, "bad seed value for " + key + ": " + v);
    }
}

} // namespace detail_cfg

inline void config_set(Config& c, const std::string& key, const std::string& value) {
    using detail_cfg::to_double;
    using detail_cfg::to_int;
    using detail_cfg::to_u64;
    if (key == "data.crop_size") c.crop_size = static_cast<int>(to_int(key, value));
    else if (key == "data.grid_rows") c.grid_rows = static_cast<int>(to_int(key, value));
    else if (key == "data.grid_cols") c.grid_cols = static_cast<int>(to_int(key, value));
    else if (key == "data.variants") c.variants = static_cast<int>(to_int(key, value));
    else if (key == "data.resize_shortest") c.resize_shortest = static_cast<int>(to_int(key, value));
    else if (key == "data.captions_file") c.captions_file = value;
    else if (key == "data.embeddings_file") c.embeddings_file = value;
    else if (key == "distort.max_steps") c.max_steps = static_cast<int>(to_int(key, value));
    else if (key == "distort.sigma_off") c.sigma_off = to_double(key, value);
    else if (key == "model.preset") c.preset = value;
    else if (key == "model.text_dim") c.text_dim = static_cast<int>(to_int(key, value));
    else if (key == "train.epochs") c.epochs = static_cast<int>(to_int(key, value));
    else if (key == "train.batch_size") c.batch_size = static_cast<int>(to_int(key, value));
    else if (key == "train.lr0") c.lr0 = to_double(key, value);
    else if (key == "train.lr_min") c.lr_min = to_double(key, value);
    else if (key == "train.total_steps") c.total_steps = to_u64(key, value);
    else if (key == "train.weight_decay") c.weight_decay = to_double(key, value);
    else if (key == "train.beta1") c.beta1 = to_double(key, value);
    else if (key == "train.beta2") c.beta2 = to_double(key, value);
    else if (key == "train.epsilon") c.epsilon = to_double(key, value);
    else if (key == "loss.lambda_rank") c.lambda_rank = to_double(key, value);
    else if (key == "loss.lambda_mreg") c.lambda_mreg = to_double(key, value);
    else if (key == "loss.lambda_align") c.lambda_align = to_double(key, value);
    else if (key == "loss.lambda_emb") c.lambda_emb = to_double(key, value);
    else if (key == "loss.lambda_cov") c.lambda_cov = to_double(key, value);
    else if (key == "loss.t_d") c.t_d = to_double(key, value);
    else if (key == "loss.t_q") c.t_q = to_double(key, value);
    else if (key == "loss.combo_cap") c.combo_cap = to_u64(key, value);
    else if (key == "loss.margin") c.margin = to_double(key, value);
    else if (key == "loss.ranking_variant") c.ranking_variant = value;
    else if (key == "seed.master") c.master_seed = to_u64(key, value);
    else if (key == "seed.vocab") c.vocab_seed = to_u64(key, value);
    else raise(Errc::invalid_argument, "unknown config key: " + key);
}

inline std::string config_get(const Config& c, const std::string& key) {
    std::ostringstream os;
    os.precision(15);
    if (key == "data.crop_size") os << c.crop_size;
    else if (key == "data.grid_rows") os << c.grid_rows;
    else if (key == "data.grid_cols") os << c.grid_cols;
    else if (key == "data.variants") os << c.variants;
    else if (key == "data.resize_shortest") os << c.resize_shortest;
    else if (key == "data.captions_file") os << c.captions_file;
    else if (key == "data.embeddings_file") os << c.embeddings_file;
    else if (key == "distort.max_steps") os << c.max_steps;
    else if (key == "distort.sigma_off") os << c.sigma_off;
    else if (key == "model.preset") os << c.preset;
    else if (key == "model.text_dim") os << c.text_dim;
    else if (key == "train.epochs") os << c.epochs;
    else if (key == "train.batch_size") os << c.batch_size;
    else if (key == "train.lr0") os << c.lr0;
    else if (key == "train.lr_min") os << c.lr_min;
    else if (key == "train.total_steps") os << c.total_steps;
    else if (key == "train.weight_decay") os << c.weight_decay;
    else if (key == "train.beta1") os << c.beta1;
    else if (key == "train.beta2") os << c.beta2;
    else if (key == "train.epsilon") os << c.epsilon;
    else if (key == "loss.lambda_rank") os << c.lambda_rank;
    else if (key == "loss.lambda_mreg") os << c.lambda_mreg;
    else if (key == "loss.lambda_align") os << c.lambda_align;
    else if (key == "loss.lambda_emb") os << c.lambda_emb;
    else if (key == "loss.lambda_cov") os << c.lambda_cov;
    else if (key == "loss.t_d") os << c.t_d;
    else if (key == "loss.t_q") os << c.t_q;
    else if (key == "loss.combo_cap") os << c.combo_cap;
    else if (key == "loss.margin") os << c.margin;
    else if (key == "loss.ranking_variant") os << c.ranking_variant;
    else if (key == "seed.master") os << c.master_seed;
    else if (key == "seed.vocab") os << c.vocab_seed;
    else raise(Errc::invalid_argument, "unknown config key: " + key);
    return os.str();
}

inline void validate_config(const Config& c) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) raise(Errc::invalid_argument, "config: " + msg);
    };
    require(c.crop_size >= 8, "crop_size must be >= 8");
    require(c.grid_rows >= 1 && c.grid_cols >= 1, "grid must be at least 1x1");
    require(c.crop_size >= c.grid_rows && c.crop_size >= c.grid_cols, "crop smaller than feature grid");
    require(c.variants >= 1, "variants must be >= 1");
    require(c.max_steps >= 1 && c.max_steps <= 7, "max_steps must be in [1,7]");
    require(c.sigma_off >= 0.0, "sigma_off must be >= 0");
    require(c.preset == "small" || c.preset == "base", "preset must be small or base");
    require(c.text_dim >= 8, "text_dim must be >= 8");
    require(c.epochs >= 1, "epochs must be >= 1");
    require(c.batch_size >= 2, "batch_size must be >= 2");
    require(c.lr0 > 0 && c.lr_min >= 0 && c.lr_min <= c.lr0, "need lr0 > 0 and lr_min in [0, lr0]");
    require(c.weight_decay >= 0, "weight_decay must be >= 0");
    require(c.beta1 > 0 && c.beta1 < 1 && c.beta2 > 0 && c.beta2 < 1, "betas must be in (0,1)");
    require(c.t_d >= 0 && c.t_q >= 0, "thresholds must be >= 0");
    require(c.ranking_variant == "pair-of-pairs" || c.ranking_variant == "pairwise" || c.ranking_variant == "margin",
            "ranking_variant must be pair-of-pairs, pairwise or margin");
}

// [section] headers prefix bare keys; "a.b = v" works anywhere. '#' and ';'
// start comments.
inline Config parse_config_text(const std::string& text, Config base = Config{}) {
    Config c = base;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail_cfg::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') raise(Errc::invalid_argument, "bad section header at line " + std::to_string(lineno));
            section = detail_cfg::trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) raise(Errc::invalid_argument, "expected key=value at line " + std::to_string(lineno));
        std::string key = detail_cfg::trim(line.substr(0, eq));
        std::string value = detail_cfg::trim(line.substr(eq + 1));
        if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;
        config_set(c, key, value);
    }
    return c;
}

inline Config load_config(const std::string& path, Config base = Config{}) {
    Config c = parse_config_text(read_file_text(path), base);
    validate_config(c);
    return c;
}

inline std::string config_show(const Config& c) {
    std::string out;
    for (const auto& k : config_schema())
        out += k.key + " = " + config_get(c, k.key) + "    # [" + k.provenance + "] " + k.describe + "\n";
    return out;
}

} // namespace hirqa
