#include <catch2/catch.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hirqa/dataset.hpp"
#include "hirqa/trainer.hpp"

using namespace hirqa;
namespace fs = std::filesystem;

namespace {

Image synth_source(int w, int h, std::uint64_t seed) {
    Image img = make_image(w, h);
    Rng rng(seed);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = 0.5 + 0.25 * std::sin(2.0 * 3.14159265 * (x + 4 * c) / (9.0 + c)) +
                           0.15 * std::sin(2.0 * 3.14159265 * y / 6.1) + 0.06 * (2.0 * rng.uniform() - 1.0);
                img.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
    return img;
}

Config tiny_config() {
    Config cfg;
    cfg.crop_size = 32;
    cfg.grid_rows = 4;
    cfg.grid_cols = 4;
    cfg.variants = 2;
    cfg.max_steps = 3;
    cfg.batch_size = 4;
    cfg.epochs = 3;
    cfg.lr0 = 1e-2;
    cfg.lr_min = 1e-3;
    cfg.total_steps = 0; // cosine over the actual run
    cfg.master_seed = 31;
    return cfg;
}

Manifest tiny_manifest(const std::string& name, const Config& cfg, int images = 6) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (int i = 0; i < images; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "img%03d.ppm", i);
        save_ppm(synth_source(48, 48, 500 + i), (dir / buf).string());
    }
    return build_manifest(dir.string(), cfg);
}

} // namespace

TEST_CASE("lambda_emb is zero through epoch one then strictly climbs to its final value") {
    // 4 steps per epoch, 3 epochs
    for (std::uint64_t s = 1; s <= 4; ++s) CHECK(lambda_emb_at(s, 4, 12, 0.5) == 0.0);
    double prev = 0.0;
    for (std::uint64_t s = 5; s <= 12; ++s) {
        double lam = lambda_emb_at(s, 4, 12, 0.5);
        CHECK(lam > prev);
        prev = lam;
    }
    CHECK(prev == Approx(0.5).margin(1e-12));
}

TEST_CASE("training is deterministic end to end") {
    Config cfg = tiny_config();
    Manifest m = tiny_manifest("hirqa_tr_a", cfg);
    TrainResult a = train(m, cfg);
    TrainResult b = train(m, cfg);
    CheckpointMeta meta{cfg.grid_rows, cfg.grid_cols, cfg.crop_size};
    CHECK(encode_checkpoint(a.params, meta) == encode_checkpoint(b.params, meta));
    CHECK(encode_training_log(a.log) == encode_training_log(b.log));
    CHECK(a.steps == 3 * batches_per_epoch(m.records.size(), 4));
}

TEST_CASE("the training log carries the documented schedule") {
    Config cfg = tiny_config();
    Manifest m = tiny_manifest("hirqa_tr_b", cfg);
    TrainResult r = train(m, cfg);
    std::size_t spe = batches_per_epoch(m.records.size(), 4);
    REQUIRE(r.log.size() == 3 * spe);
    double prev_lambda = -1.0;
    for (std::size_t i = 0; i < r.log.size(); ++i) {
        const TrainLogRow& row = r.log[i];
        CHECK(row.step == i + 1);
        CHECK(row.epoch == static_cast<int>(i / spe) + 1);
        CHECK(row.lr == Approx(cosine_lr(i, r.log.size(), cfg.lr0, cfg.lr_min)).margin(1e-15));
        if (row.epoch == 1) {
            CHECK(row.lambda_emb == 0.0);
        } else {
            CHECK(row.lambda_emb > prev_lambda);
            prev_lambda = row.lambda_emb;
        }
        CHECK(std::isfinite(row.loss.total));
        // breakdown recomposes: total = rank*ranking + align*align + emb*embdist
        double recomposed = row.loss.lambda_rank * row.loss.ranking + row.loss.lambda_align * row.loss.align +
                            row.lambda_emb * row.loss.embdist;
        CHECK(row.loss.total == Approx(recomposed).margin(1e-12));
    }
    CHECK(r.log.back().lambda_emb == Approx(cfg.lambda_emb).margin(1e-12));

    std::string text = encode_training_log(r.log);
    CHECK(text.rfind("step,epoch,lr,", 0) == 0);
}

TEST_CASE("feature normalization is stored in the checkpoint and scoring works") {
    Config cfg = tiny_config();
    Manifest m = tiny_manifest("hirqa_tr_c", cfg);
    TrainResult r = train(m, cfg);
    bool nontrivial = false;
    for (std::size_t k = 0; k < r.params.feat_scale.size(); ++k)
        if (r.params.feat_scale[k] != 1.0) nontrivial = true;
    CHECK(nontrivial);

    Image img = synth_source(40, 40, 9);
    double q1 = score_image(r.params, img, cfg.grid_rows, cfg.grid_cols);
    double q2 = score_image(r.params, img, cfg.grid_rows, cfg.grid_cols);
    CHECK(q1 == q2);
    CHECK(q1 > 0.0);
    CHECK(q1 < 1.0);

    ManifestEval ev = score_manifest(r.params, m, cfg);
    CHECK(ev.rows.size() == m.records.size());
    CHECK(ev.embeddings.size() == m.records.size());
}

TEST_CASE("ranking variants train without blowing up") {
    Config cfg = tiny_config();
    cfg.epochs = 1;
    Manifest m = tiny_manifest("hirqa_tr_d", cfg, 4);
    for (const char* variant : {"pairwise", "margin"}) {
        cfg.ranking_variant = variant;
        TrainResult r = train(m, cfg);
        for (const auto& row : r.log) CHECK(std::isfinite(row.loss.total));
    }
}
