#pragma once

// Corpus ingestion and batch streaming. A manifest is JSON-lines: a header
// line followed by one record per line (seeds serialized as decimal
// strings). Degraded images are realized on the fly from recipes; realized
// features are cached per record since the transform is fixed.
//
// Seed derivation: per source image i and variant v,
//   crop_seed   = derive(derive(derive(master, i), v), 0)
//   recipe_seed = derive(derive(derive(master, i), v), 1)
// Epoch ordering: records bucket into severity quartiles; each bucket is
// shuffled with derive(derive(master, 1000 + epoch), bucket) and buckets are
// drained round-robin, which keeps distinct severities inside every batch
// whenever the manifest has them.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <atomic>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hirqa/config.hpp"
#include "hirqa/distort.hpp"
#include "hirqa/error.hpp"
#include "hirqa/features.hpp"
#include "hirqa/image.hpp"
#include "hirqa/model.hpp"
#include "hirqa/prompts.hpp"
#include "hirqa/rng.hpp"

namespace hirqa {

struct ManifestRecord {
    std::string id;
    std::string source_path;
    std::uint64_t crop_seed = 0;
    Recipe recipe;
    double severity = 0.0;
    std::string caption;
    std::string prompt; // rendered
    int variant_index = 0;
};

struct Manifest {
    std::uint64_t master_seed = 0;
    int crop_size = 0;
    int variants = 0;
    std::vector<ManifestRecord> records;
};

// ---------------------------------------------------------------------------
// JSON-lines serialization

inline nlohmann::json recipe_json(const Recipe& r) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : r.steps) steps.push_back({{"kind", s.kind}, {"level", s.level}});
    return {{"seed", std::to_string(r.seed)}, {"steps", steps}};
}

inline Recipe recipe_from_json(const nlohmann::json& j) {
    Recipe r;
    r.seed = std::stoull(j.at("seed").get<std::string>());
    for (const auto& s : j.at("steps")) {
        DistortionStep step;
        step.kind = s.at("kind").get<std::string>();
        step.level = s.at("level").get<double>();
        if (!DistortionRegistry::instance().has_kind(step.kind))
            raise(Errc::corrupt_data, "manifest references unknown kind: " + step.kind);
        if (step.level < 1.0 || step.level > 5.0) raise(Errc::corrupt_data, "manifest level outside [1,5]");
        r.steps.push_back(step);
    }
    r.severity = recipe_severity_from_levels(r.steps);
    return r;
}

inline std::string encode_manifest(const Manifest& m) {
    std::string out;
    nlohmann::json header = {{"schema", "hirqa-manifest"},
                             {"version", 1},
                             {"master_seed", std::to_string(m.master_seed)},
                             {"crop_size", m.crop_size},
                             {"variants", m.variants}};
    out += header.dump() + "\n";
    for (const auto& rec : m.records) {
        nlohmann::json j = {{"id", rec.id},
                            {"source_path", rec.source_path},
                            {"crop_seed", std::to_string(rec.crop_seed)},
                            {"recipe", recipe_json(rec.recipe)},
                            {"severity", rec.severity},
                            {"caption", rec.caption},
                            {"prompt", rec.prompt},
                            {"variant_index", rec.variant_index}};
        out += j.dump() + "\n";
    }
    return out;
}

inline Manifest decode_manifest(const std::string& text) {
    Manifest m;
    std::istringstream is(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            raise(Errc::corrupt_data, std::string("manifest JSON: ") + e.what());
        }
        if (!header_seen) {
            if (j.value("schema", "") != "hirqa-manifest") raise(Errc::corrupt_data, "missing manifest header line");
            if (j.value("version", 0) != 1) raise(Errc::unsupported_format, "unsupported manifest version");
            m.master_seed = std::stoull(j.at("master_seed").get<std::string>());
            m.crop_size = j.at("crop_size").get<int>();
            m.variants = j.at("variants").get<int>();
            header_seen = true;
            continue;
        }
        ManifestRecord rec;
        rec.id = j.at("id").get<std::string>();
        rec.source_path = j.at("source_path").get<std::string>();
        rec.crop_seed = std::stoull(j.at("crop_seed").get<std::string>());
        rec.recipe = recipe_from_json(j.at("recipe"));
        rec.severity = j.at("severity").get<double>();
        rec.caption = j.at("caption").get<std::string>();
        rec.prompt = j.at("prompt").get<std::string>();
        rec.variant_index = j.at("variant_index").get<int>();
        m.records.push_back(std::move(rec));
    }
    if (!header_seen) raise(Errc::corrupt_data, "empty manifest");
    return m;
}

inline void save_manifest(const std::string& path, const Manifest& m) { write_file_text(path, encode_manifest(m)); }

inline Manifest load_manifest(const std::string& path) { return decode_manifest(read_file_text(path)); }

// ---------------------------------------------------------------------------
// Manifest construction

struct BuildSummary {
    int images_used = 0;
    int images_skipped = 0;
    int records = 0;
};

inline std::map<std::string, std::string> load_captions(const std::string& path) {
    std::map<std::string, std::string> caps;
    if (path.empty()) return caps;
    std::istringstream is(read_file_text(path));
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) raise(Errc::invalid_argument, "captions file expects path<TAB>caption lines");
        caps[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return caps;
}

inline std::vector<std::string> list_corpus_images(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) raise(Errc::invalid_argument, "corpus directory not found: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".ppm") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

// Per-image validation runs on `jobs` workers; the manifest itself is
// assembled serially in corpus order, so the output is independent of the
// worker count.
inline Manifest build_manifest(const std::string& corpus_dir, const Config& cfg, BuildSummary* summary = nullptr,
                               int jobs = 1) {
    auto paths = list_corpus_images(corpus_dir);
    auto captions = load_captions(cfg.captions_file);

    std::vector<char> usable(paths.size(), 0);
    auto validate = [&](std::size_t i) {
        try {
            Image img = load_image(paths[i]);
            if (cfg.resize_shortest > 0) img = resize_shortest_side(img, cfg.resize_shortest);
            if (img.width < cfg.crop_size || img.height < cfg.crop_size)
                raise(Errc::invalid_argument, "image smaller than crop");
            usable[i] = 1;
        } catch (const Error&) {
        }
    };
    if (jobs <= 1 || paths.size() < 2) {
        for (std::size_t i = 0; i < paths.size(); ++i) validate(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        int workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), paths.size());
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= paths.size()) return;
                    validate(i);
                }
            });
        for (auto& t : pool) t.join();
    }

    Manifest m;
    m.master_seed = cfg.master_seed;
    m.crop_size = cfg.crop_size;
    m.variants = cfg.variants;
    BuildSummary sum;
    for (std::size_t image_index = 0; image_index < paths.size(); ++image_index) {
        if (!usable[image_index]) {
            ++sum.images_skipped;
            continue;
        }
        const std::string& path = paths[image_index];
        std::string caption = "an image";
        if (auto it = captions.find(path); it != captions.end()) caption = it->second;
        std::string stem = std::filesystem::path(path).stem().string();
        std::uint64_t img_seed = derive_seed(cfg.master_seed, image_index);
        for (int v = 0; v < cfg.variants; ++v) {
            std::uint64_t var_seed = derive_seed(img_seed, static_cast<std::uint64_t>(v));
            ManifestRecord rec;
            rec.id = stem + "#" + std::to_string(v);
            rec.source_path = path;
            rec.crop_seed = derive_seed(var_seed, 0);
            rec.recipe = sample_recipe(derive_seed(var_seed, 1), cfg.max_steps, cfg.sigma_off);
            rec.severity = rec.recipe.severity;
            rec.caption = caption;
            rec.prompt = build_prompt(rec.recipe, caption).rendered;
            rec.variant_index = v;
            m.records.push_back(std::move(rec));
        }
        ++sum.images_used;
    }
    if (sum.images_used == 0) raise(Errc::invalid_argument, "no decodable images in corpus: " + corpus_dir);
    sum.records = static_cast<int>(m.records.size());
    if (summary) *summary = sum;
    return m;
}

// ---------------------------------------------------------------------------
// Record realization and batch streaming

struct RecordRealizer {
    const Manifest* manifest = nullptr;
    Config cfg;
    std::map<std::string, Image> image_cache;
    std::vector<BatchRecord> record_cache;
    std::vector<char> cached;
    EmbeddingTable imported_embeddings; // used instead of the synthesizer when configured

    RecordRealizer(const Manifest& m, const Config& c) : manifest(&m), cfg(c) {
        record_cache.resize(m.records.size());
        cached.assign(m.records.size(), 0);
        if (!cfg.embeddings_file.empty()) imported_embeddings = load_embeddings(cfg.embeddings_file, cfg.text_dim);
    }

    const Image& source_image(const std::string& path) {
        auto it = image_cache.find(path);
        if (it != image_cache.end()) return it->second;
        Image img = load_image(path);
        if (cfg.resize_shortest > 0) img = resize_shortest_side(img, cfg.resize_shortest);
        return image_cache.emplace(path, std::move(img)).first->second;
    }

    Image realize_image(const ManifestRecord& rec) {
        const Image& src = source_image(rec.source_path);
        Image crop = random_crop(src, cfg.crop_size, rec.crop_seed);
        return degrade(crop, rec.recipe);
    }

    const BatchRecord& realize(std::size_t index) {
        if (cached[index]) return record_cache[index];
        const ManifestRecord& rec = manifest->records[index];
        BatchRecord br;
        try {
            Image degraded = realize_image(rec);
            br.features = extract_patch_features(degraded, cfg.grid_rows, cfg.grid_cols);
        } catch (const Error& e) {
            raise(e.code(), "record " + rec.id + ": " + e.what());
        }
        br.severity = rec.severity;
        if (!cfg.embeddings_file.empty()) {
            auto it = imported_embeddings.by_id.find(rec.id);
            if (it == imported_embeddings.by_id.end())
                raise(Errc::invalid_argument, "no imported embedding for record " + rec.id);
            br.prompt_emb = it->second.vector;
        } else {
            Prompt prompt = build_prompt(rec.recipe, rec.caption);
            br.prompt_emb = embed_prompt(prompt, cfg.text_dim, cfg.vocab_seed).vector;
        }
        record_cache[index] = std::move(br);
        cached[index] = 1;
        return record_cache[index];
    }
};

inline int severity_quartile(double d) { return std::min(3, static_cast<int>(d * 4.0)); }

// Deterministic severity-stratified epoch order; every record exactly once.
inline std::vector<std::size_t> epoch_order(const Manifest& m, std::uint64_t master_seed, int epoch) {
    std::vector<std::vector<std::size_t>> buckets(4);
    for (std::size_t i = 0; i < m.records.size(); ++i) buckets[severity_quartile(m.records[i].severity)].push_back(i);
    std::uint64_t epoch_seed = derive_seed(master_seed, 1000 + static_cast<std::uint64_t>(epoch));
    for (int b = 0; b < 4; ++b) {
        auto& bucket = buckets[b];
        Rng rng(derive_seed(epoch_seed, static_cast<std::uint64_t>(b)));
        for (std::size_t i = 0; i + 1 < bucket.size(); ++i) {
            std::size_t j = i + rng.below(bucket.size() - i);
            std::swap(bucket[i], bucket[j]);
        }
    }
    std::vector<std::size_t> order;
    order.reserve(m.records.size());
    std::array<std::size_t, 4> cursor{0, 0, 0, 0};
    while (order.size() < m.records.size()) {
        for (int b = 0; b < 4; ++b) {
            if (cursor[b] < buckets[b].size()) order.push_back(buckets[b][cursor[b]++]);
        }
    }
    return order;
}

inline std::size_t batches_per_epoch(std::size_t records, std::size_t batch_size) {
    return (records + batch_size - 1) / batch_size;
}

// Batch `step` of `epoch` (both 0-based). batch_size >= manifest size yields
// one batch holding every record.
inline std::vector<BatchRecord> next_batch(RecordRealizer& realizer, int epoch, std::size_t step,
                                           std::size_t batch_size) {
    const Manifest& m = *realizer.manifest;
    if (m.records.empty()) raise(Errc::invalid_argument, "empty manifest");
    auto order = epoch_order(m, m.master_seed, epoch);
    std::size_t begin = step * batch_size;
    if (begin >= order.size()) raise(Errc::invalid_argument, "step beyond epoch");
    std::size_t end = std::min(begin + batch_size, order.size());
    std::vector<BatchRecord> batch;
    batch.reserve(end - begin);
    for (std::size_t k = begin; k < end; ++k) batch.push_back(realizer.realize(order[k]));
    return batch;
}

} // namespace hirqa
