// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Thresholds are pinned here, not tuned at runtime.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "hirqa/hirqa.hpp"
#include "oracles.hpp"
#include "synthetic_corpus.hpp"

namespace fs = std::filesystem;
using namespace hirqa;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double now_seconds() {
    static auto t0 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Toy-run protocol (frozen): 50 pristine fixture sources x 5 variants,
// preset small, 3 epochs with the lambda_emb warm-up. Held-out set: 100
// degraded images from unseen sources, registry kinds cycling over the
// integer severity ladder 1..5.

Config toy_config() {
    Config cfg;
    cfg.crop_size = 64;
    cfg.grid_rows = 4;
    cfg.grid_cols = 4;
    cfg.variants = 5;
    cfg.max_steps = 1;
    cfg.sigma_off = 0.3;
    cfg.preset = "small";
    cfg.text_dim = 64;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.lr0 = 0.01;
    cfg.lr_min = 5e-4;
    cfg.total_steps = 0;
    cfg.weight_decay = 1e-5;
    cfg.lambda_rank = 1.0;
    cfg.lambda_mreg = 0.4;
    cfg.lambda_align = 0.2;
    cfg.lambda_emb = 0.1;
    cfg.lambda_cov = 0.01;
    cfg.t_d = 0.1;
    cfg.t_q = 0.05;
    cfg.combo_cap = 512;
    cfg.master_seed = 22;
    cfg.vocab_seed = 99;
    return cfg;
}

struct Holdout {
    std::vector<Image> images;
    std::vector<double> severity;
};

Holdout integer_ladder_holdout(int count, std::uint64_t source_seed0, int crop) {
    Holdout h;
    const auto& kinds = DistortionRegistry::instance().kinds();
    for (int i = 0; i < count; ++i) {
        Image src = synth_corpus_image(96, 96, source_seed0 + i);
        Image cropped = random_crop(src, crop, 9000 + i);
        const auto& kind = kinds[i % kinds.size()];
        double level = 1.0 + static_cast<double>((i / kinds.size()) % 5);
        h.images.push_back(apply_step(cropped, {kind.id, level}, 7000 + i));
        h.severity.push_back((level - 1.0) / 4.0);
    }
    return h;
}

double holdout_srocc(const ScorerParams& params, const Config& cfg, const Holdout& h, double* plcc_out = nullptr) {
    std::vector<double> pred, ref;
    for (std::size_t i = 0; i < h.images.size(); ++i) {
        pred.push_back(score_image(params, h.images[i], cfg.grid_rows, cfg.grid_cols));
        ref.push_back(1.0 - h.severity[i]);
    }
    if (plcc_out) *plcc_out = plcc(pred, ref);
    return srocc(pred, ref);
}

// ---------------------------------------------------------------------------

void criterion_gradient_correctness() {
    auto start = now_seconds();
    double worst = 0.0;
    std::string worst_where;

    // full objective through the scorer, 20 seeds
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        GradCheckReport rep = grad_check_seeded(seed, 1e-4);
        if (rep.max_rel_error > worst) {
            worst = rep.max_rel_error;
            worst_where = "L_final/" + rep.worst_param + " seed " + std::to_string(seed);
        }
    }

    // each loss against its own inputs, 20 seeds
    const double eps = 1e-4;
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        GradCheckSetup s = make_gradcheck_setup(seed);
        std::vector<double> q, d;
        std::vector<std::vector<double>> fhat, text;
        for (const auto& r : s.batch) {
            q.push_back(r.score);
            d.push_back(r.severity);
            fhat.push_back(r.embedding_hat);
            text.push_back(r.prompt_emb);
        }
        double tau = s.params.tau_emb();
        LossResult rk = ranknet_loss(q, d, 0.1, 0, 1);
        LossResult mg = mreg_loss(q, d);
        LossResult ed = edist_loss(fhat, q, 0.05, tau, 0, 1);
        LossResult cv = cov_loss(fhat);
        AlignResult al = align_loss(fhat, text, s.params.t.proj_w, s.params.t.proj_b, s.params.t.tau_align_log[0]);
        auto probe = [&](const char* name, double analytic, auto eval) {
            double up = eval(eps), down = eval(-eps);
            double err = gradcheck_rel_error(analytic, (up - down) / (2 * eps));
            if (err > worst) {
                worst = err;
                worst_where = std::string(name) + " seed " + std::to_string(seed);
            }
        };
        for (std::size_t i = 0; i < q.size(); ++i) {
            probe("L_ranknet/q", rk.grad_q[i], [&](double dd) {
                auto qq = q;
                qq[i] += dd;
                return ranknet_loss(qq, d, 0.1, 0, 1).value;
            });
            probe("L_mreg/q", mg.grad_q[i], [&](double dd) {
                auto qq = q;
                qq[i] += dd;
                return mreg_loss(qq, d).value;
            });
            for (std::size_t k = 0; k < fhat[i].size(); k += 7) {
                probe("L_edist/fhat", ed.grad_fhat[i][k], [&](double dd) {
                    auto ff = fhat;
                    ff[i][k] += dd;
                    return edist_loss(ff, q, 0.05, tau, 0, 1).value;
                });
                probe("L_cov/fhat", cv.grad_fhat[i][k], [&](double dd) {
                    auto ff = fhat;
                    ff[i][k] += dd;
                    return cov_loss(ff).value;
                });
                probe("L_align/fhat", al.grad_fhat[i][k], [&](double dd) {
                    auto ff = fhat;
                    ff[i][k] += dd;
                    return align_loss(ff, text, s.params.t.proj_w, s.params.t.proj_b, s.params.t.tau_align_log[0])
                        .value;
                });
            }
        }
        probe("L_edist/tau_emb", ed.grad_tau_emb,
              [&](double dd) { return edist_loss(fhat, q, 0.05, tau + dd, 0, 1).value; });
        probe("L_align/tau_align_log", al.grad_tau_align_log, [&](double dd) {
            return align_loss(fhat, text, s.params.t.proj_w, s.params.t.proj_b, s.params.t.tau_align_log[0] + dd)
                .value;
        });
    }

    double elapsed = now_seconds() - start;
    bool pass = worst < 1e-4 && elapsed < 60.0;
    report("gradient-correctness", pass,
           "max rel error " + fmt(worst) + " (worst " + worst_where + "), " + fmt(elapsed) + " s");
}

void criterion_brute_force_oracles() {
    double worst = 0.0;
    Rng rng(7777);
    int batches = 0;
    while (batches < 200) {
        int n = 3 + static_cast<int>(rng.below(4)); // 3..6
        std::vector<double> q(n), d(n);
        for (int i = 0; i < n; ++i) {
            q[i] = rng.uniform();
            d[i] = rng.uniform();
        }
        std::vector<std::vector<double>> fhat(n, std::vector<double>(5));
        for (auto& row : fhat) {
            double nn = 0.0;
            for (double& v : row) {
                v = rng.gaussian();
                nn += v * v;
            }
            nn = std::max(std::sqrt(nn), 1e-12);
            for (double& v : row) v /= nn;
        }
        ++batches;
        worst = std::max(worst, std::abs(ranknet_loss(q, d, 0.1, 0, 1).value - oracle::ranknet(q, d, 0.1)));
        worst = std::max(worst, std::abs(mreg_loss(q, d).value - oracle::mreg(q, d)));
        worst = std::max(worst, std::abs(ranking_loss(q, d, 0.1, 0.3, 0, 1).value - oracle::ranking(q, d, 0.1, 0.3)));
        worst = std::max(worst, std::abs(edist_loss(fhat, q, 0.05, 0.9, 0, 1).value - oracle::edist(fhat, q, 0.05, 0.9)));
        worst = std::max(
            worst, std::abs(embdist_loss(fhat, q, 0.05, 0.9, 0.01, 0, 1).value - oracle::embdist(fhat, q, 0.05, 0.9, 0.01)));
    }
    report("brute-force-loss-oracles", worst <= 1e-10, "200 batches, max |diff| " + fmt(worst));
}

void criterion_analytic_loss_values() {
    double worst = 0.0;
    auto check = [&](double got, double expect) { worst = std::max(worst, std::abs(got - expect)); };

    // equal score gaps on a y=1 combo cost ln 2
    check(ranknet_loss({0.5, 0.5, 0.5}, {0.0, 0.05, 1.0}, 0.1, 0, 1).value, std::log(2.0));
    // mreg with flat scores
    check(mreg_loss({0.3, 0.3, 0.3}, {0.1, 0.5, 0.9}).value, std::log(2.0));
    // mreg two-sample closed forms
    check(mreg_loss({0.0, 1.0}, {1.0, 0.0}).value, std::log(1.0 + std::exp(-1.0)));
    check(mreg_loss({0.0, 1.0}, {0.0, 1.0}).value, std::log(1.0 + std::exp(1.0)));
    // edist with identical embeddings: delta_f = e on both pairs
    {
        std::vector<std::vector<double>> fhat(3, std::vector<double>{1.0, 0.0});
        double e = std::exp(1.0);
        double expect = 0.5 * (std::log1p(std::exp(-e)) + (std::log1p(std::exp(-e)) + e));
        check(edist_loss(fhat, {0.0, 0.05, 1.0}, 0.1, 1.0, 0, 1).value, expect);
    }
    // align: single pair is zero; identical batch costs log N
    {
        Tensor w = Tensor::zeros({4, 4});
        for (int i = 0; i < 4; ++i) w.v[i * 4 + i] = 1.0;
        Tensor b = Tensor::zeros({4});
        std::vector<std::vector<double>> one{{1, 0, 0, 0}};
        check(align_loss(one, one, w, b, 1.0).value, 0.0);
        std::vector<std::vector<double>> same(5, one[0]);
        check(align_loss(same, same, w, b, 1.0).value, std::log(5.0));
    }
    // identical sets overlap fully
    check(overlap({0.2, 0.5, 0.9}, {0.2, 0.5, 0.9}, 10), 1.0);
    report("analytic-loss-values", worst <= 1e-9, "max |diff| " + fmt(worst));
}

void criterion_metric_identities() {
    double worst = 0.0;
    auto check = [&](double got, double expect) { worst = std::max(worst, std::abs(got - expect)); };
    std::vector<double> up{0.1, 0.25, 0.5, 0.7, 0.95};
    std::vector<double> monotone{1, 3, 10, 11, 30};
    check(srocc(up, monotone), 1.0);
    std::vector<double> down(up.rbegin(), up.rend());
    check(srocc(up, down), -1.0);
    check(plcc(up, up), 1.0);
    std::vector<double> neg;
    for (double v : up) neg.push_back(3.0 - 2.0 * v);
    check(plcc(up, neg), -1.0);
    check(srocc({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8);

    bool invariance = true;
    Rng rng(555);
    for (int t = 0; t < 1000; ++t) {
        int n = 5 + static_cast<int>(rng.below(6));
        std::vector<double> pred(n), ref(n), warped(n), affine(n);
        for (int i = 0; i < n; ++i) {
            pred[i] = rng.uniform();
            ref[i] = rng.uniform();
            warped[i] = std::exp(2.0 * pred[i]) + pred[i] * pred[i];
            affine[i] = 2.5 * pred[i] + 0.3;
        }
        if (std::abs(srocc(warped, ref) - srocc(pred, ref)) > 1e-10) invariance = false;
        if (std::abs(plcc(affine, ref) - plcc(pred, ref)) > 1e-9) invariance = false;
    }
    report("metric-identities", worst <= 1e-12 && invariance,
           "identity diffs " + fmt(worst) + std::string(", monotone-invariance ") + (invariance ? "ok" : "violated"));
}

void criterion_degradation_determinism() {
    Image img = synth_corpus_image(96, 96, 42);
    Recipe recipe = sample_recipe(404, 7, 0.3);
    Image a = degrade(img, recipe);
    Image b = degrade(img, recipe);
    bool identical = a.data == b.data;

    // manifest generation must not depend on the worker count
    {
        fs::path dir = make_corpus("hirqa_acc_jobs", 6, 91000);
        Config cfg = toy_config();
        identical = identical && encode_manifest(build_manifest(dir.string(), cfg, nullptr, 1)) ==
                                     encode_manifest(build_manifest(dir.string(), cfg, nullptr, 4));
    }

    bool rows_exact = true;
    for (const auto& kind : DistortionRegistry::instance().kinds())
        for (int level = 1; level <= 5; ++level) {
            auto ps = level_params(kind, static_cast<double>(level));
            for (const auto& par : kind.params)
                if (ps.at(par.name) != par.rows[level - 1]) rows_exact = false;
        }

    // continuous sweep on a broadband fixture
    Image noise = make_image(48, 48);
    Rng rng(7);
    for (float& v : noise.data) v = static_cast<float>(0.3 + 0.4 * rng.uniform());
    bool monotone = true;
    double prev = 1e300;
    for (double level : {4.0, 4.25, 4.5, 4.75, 5.0}) {
        double energy = stat_luma_laplacian_energy(apply_step(noise, {"motion-blur", level}, 0));
        if (energy > prev + 1e-12) monotone = false;
        prev = energy;
    }
    report("degradation-determinism-continuity", identical && rows_exact && monotone,
           std::string("bit-identical ") + (identical ? "yes" : "NO") + ", integer rows exact " +
               (rows_exact ? "yes" : "NO") + ", sweep monotone " + (monotone ? "yes" : "NO"));
}

// shared toy-run state across the training criteria
struct ToyRuns {
    Config cfg;
    Manifest manifest;
    TrainResult full;
    double srocc_full = 0.0, plcc_full = 0.0;
    Holdout holdout;
    double train_seconds = 0.0;
};

ToyRuns run_toy_training() {
    ToyRuns t;
    t.cfg = toy_config();
    fs::path dir = make_corpus("hirqa_acc_train", 50, 10000);
    t.manifest = build_manifest(dir.string(), t.cfg);
    auto t0 = std::chrono::steady_clock::now();
    t.full = train(t.manifest, t.cfg);
    t.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    t.holdout = integer_ladder_holdout(100, 50000, t.cfg.crop_size);
    t.srocc_full = holdout_srocc(t.full.params, t.cfg, t.holdout, &t.plcc_full);
    return t;
}

void criterion_toy_training(const ToyRuns& t) {
    bool pass = t.train_seconds < 600.0 && t.srocc_full >= 0.80 && t.plcc_full >= 0.75;
    report("toy-training-run", pass,
           "SROCC " + fmt(t.srocc_full) + " (>= 0.8), PLCC " + fmt(t.plcc_full) + " (>= 0.75), train " +
               fmt(t.train_seconds) + " s (< 600)");
}

void criterion_ablation_direction(const ToyRuns& t) {
    auto run_leg = [&](double lambda_align, double lambda_emb) {
        Config cfg = t.cfg;
        cfg.lambda_align = lambda_align;
        cfg.lambda_emb = lambda_emb;
        TrainResult r = train(t.manifest, cfg);
        return holdout_srocc(r.params, cfg, t.holdout);
    };
    double cfg1 = run_leg(0.0, 0.0);
    double cfg2 = run_leg(0.0, t.cfg.lambda_emb);
    double cfg3 = run_leg(t.cfg.lambda_align, 0.0);
    double cfg4 = t.srocc_full;
    bool pass = cfg4 >= cfg3 && cfg3 >= cfg1 && cfg4 >= cfg2 && cfg2 >= cfg1;
    report("ablation-direction", pass,
           "cfg1 " + fmt(cfg1) + ", cfg2 " + fmt(cfg2) + ", cfg3 " + fmt(cfg3) + ", cfg4 " + fmt(cfg4));
}

void criterion_ranking_variants(const ToyRuns& t) {
    auto run_variant = [&](const std::string& variant) {
        Config cfg = t.cfg;
        cfg.ranking_variant = variant;
        TrainResult r = train(t.manifest, cfg);
        return holdout_srocc(r.params, cfg, t.holdout);
    };
    double pop = t.srocc_full;
    double margin = run_variant("margin");
    double pairwise = run_variant("pairwise");
    bool pass = pop >= margin && margin >= pairwise;
    report("ranking-variant-direction", pass,
           "pair-of-pairs " + fmt(pop) + ", margin " + fmt(margin) + ", pairwise " + fmt(pairwise));
}

void criterion_separation(const ToyRuns& t) {
    std::vector<double> clean, degraded;
    Rng rng(31);
    const auto& kinds = DistortionRegistry::instance().kinds();
    for (int i = 0; i < 25; ++i) {
        Image src = synth_corpus_image(96, 96, 80000 + i);
        Image crop = random_crop(src, t.cfg.crop_size, 123 + i);
        clean.push_back(score_image(t.full.params, crop, t.cfg.grid_rows, t.cfg.grid_cols));
        for (int k = 0; k < 2; ++k) {
            const auto& kind = kinds[rng.below(kinds.size())];
            Image deg = apply_step(crop, {kind.id, 5.0}, 999 + 31 * i + k);
            degraded.push_back(score_image(t.full.params, deg, t.cfg.grid_rows, t.cfg.grid_cols));
        }
    }
    double ov = overlap(clean, degraded, 50);
    report("density-separation", ov < 0.20, "overlap " + fmt(ov) + " (< 0.2, 50 bins)");
}

void criterion_monotone_sweep(const ToyRuns& t) {
    const char* sweep_kinds[4] = {"gaussian-blur", "gaussian-noise", "jpeg-like", "contrast-reduce"};
    int pairs = 0, nonincreasing = 0;
    for (int i = 0; i < 10; ++i) {
        Image src = synth_corpus_image(96, 96, 70000 + i);
        Image crop = random_crop(src, t.cfg.crop_size, 55 + i);
        for (const char* kid : sweep_kinds) {
            double prev_q = 1e300;
            for (int level = 1; level <= 5; ++level) {
                Image deg = apply_step(crop, {kid, static_cast<double>(level)}, 1000 + level);
                double q = score_image(t.full.params, deg, t.cfg.grid_rows, t.cfg.grid_cols);
                if (level > 1) {
                    ++pairs;
                    if (q <= prev_q + 1e-12) ++nonincreasing;
                }
                prev_q = q;
            }
        }
    }
    double frac = static_cast<double>(nonincreasing) / pairs;
    report("monotone-score-sweep", frac >= 0.90, fmt(frac) + " of adjacent pairs nonincreasing (>= 0.9)");
}

void criterion_lambda_schedule(const ToyRuns& t) {
    std::size_t spe = batches_per_epoch(t.manifest.records.size(), static_cast<std::size_t>(t.cfg.batch_size));
    bool epoch1_zero = true, strictly_increasing = true;
    double prev = -1.0;
    for (const auto& row : t.full.log) {
        if (row.epoch == 1) {
            if (row.lambda_emb != 0.0) epoch1_zero = false;
        } else {
            if (row.lambda_emb <= prev) strictly_increasing = false;
            prev = row.lambda_emb;
        }
    }
    bool pass = epoch1_zero && strictly_increasing && t.full.log.size() == spe * 3;
    report("lambda-emb-schedule", pass,
           std::string("epoch-1 zero ") + (epoch1_zero ? "yes" : "NO") + ", strictly increasing after " +
               (strictly_increasing ? "yes" : "NO"));
}

void criterion_round_trips(const ToyRuns& t) {
    bool ok = true;
    std::string what = "all formats byte-identical";

    // HRQE
    EmbeddingTable table;
    table.width = 64;
    Rng rng(12);
    for (int i = 0; i < 4; ++i) {
        std::vector<float> row(64);
        for (auto& v : row) v = static_cast<float>(rng.gaussian());
        table.rows.emplace_back("row-" + std::to_string(i), std::move(row));
    }
    auto hrqe1 = encode_embeddings(table.rows, table.width);
    EmbeddingTable loaded = decode_embeddings(hrqe1);
    if (encode_embeddings(loaded.rows, loaded.width) != hrqe1) {
        ok = false;
        what = "HRQE differs";
    }

    // HRQM (with optimizer state from the real run)
    CheckpointMeta meta{t.cfg.grid_rows, t.cfg.grid_cols, t.cfg.crop_size};
    auto ck1 = encode_checkpoint(t.full.params, meta, &t.full.opt);
    CheckpointMeta meta2;
    OptimizerState opt2;
    bool has = false;
    ScorerParams p2 = decode_checkpoint(ck1, &meta2, &opt2, &has);
    if (!has || encode_checkpoint(p2, meta2, &opt2) != ck1) {
        ok = false;
        what = "HRQM differs";
    }

    // manifest
    std::string m1 = encode_manifest(t.manifest);
    if (encode_manifest(decode_manifest(m1)) != m1) {
        ok = false;
        what = "manifest differs";
    }

    // score CSV
    std::vector<ScoreRow> rows{{"a#0", 0.125, 0.6180339887498949}, {"b,quoted", 1.0 / 3.0, 1e-16}};
    std::string csv1 = encode_scores_csv(rows);
    if (encode_scores_csv(decode_scores_csv(csv1)) != csv1) {
        ok = false;
        what = "score CSV differs";
    }
    report("file-format-round-trips", ok, what);
}

} // namespace

int main() {
    now_seconds(); // pin the clock
    std::printf("hirqa acceptance suite\n");

    criterion_gradient_correctness();
    criterion_brute_force_oracles();
    criterion_analytic_loss_values();
    criterion_metric_identities();
    criterion_degradation_determinism();

    ToyRuns toy = run_toy_training();
    criterion_toy_training(toy);
    criterion_ablation_direction(toy);
    criterion_ranking_variants(toy);
    criterion_separation(toy);
    criterion_monotone_sweep(toy);
    criterion_lambda_schedule(toy);
    criterion_round_trips(toy);

    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
