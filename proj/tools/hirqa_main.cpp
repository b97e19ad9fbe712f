// hirqa command-line tool: dataset generation, training, scoring,
// evaluation, density-separation analysis and gradient checking.
//
// Exit codes: 0 success, 2 validation error, 3 runtime error,
// 4 threshold failure (gradcheck/eval/separate in CI mode).

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hirqa/hirqa.hpp"

namespace fs = std::filesystem;
using namespace hirqa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitThreshold = 4;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides; // key=value
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "configuration file (default: $HIRQA_CONFIG)");
    cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set train.lr0=0.01")->take_all();
    cmd->add_option("--seed", opts.seed, "master seed")->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--jobs", opts.jobs, "worker threads for per-item work")->check(CLI::Range(1, 64));
}

Config resolve_config(const CommonOpts& opts) {
    Config cfg;
    std::string path = opts.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("HIRQA_CONFIG")) path = env;
    }
    if (!path.empty()) cfg = parse_config_text(read_file_text(path));
    for (const auto& kv : opts.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) raise(Errc::invalid_argument, "--set expects key=value, got: " + kv);
        config_set(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.seed_set) cfg.master_seed = opts.seed;
    validate_config(cfg);
    return cfg;
}

void print_seed(const Config& cfg) { std::cout << "seed: " << cfg.master_seed << "\n"; }

Recipe parse_steps_flag(const std::string& text) {
    Recipe r;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        std::size_t colon = item.rfind(':');
        if (colon == std::string::npos) raise(Errc::invalid_argument, "--steps expects kind:level[,kind:level...]");
        DistortionStep step;
        step.kind = item.substr(0, colon);
        step.level = std::stod(item.substr(colon + 1));
        if (!DistortionRegistry::instance().has_kind(step.kind))
            raise(Errc::invalid_argument, "unknown distortion kind: " + step.kind);
        if (step.level < 1.0 || step.level > 5.0) raise(Errc::invalid_argument, "level outside [1,5]");
        r.steps.push_back(step);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (r.steps.empty()) raise(Errc::invalid_argument, "--steps parsed no steps");
    r.severity = recipe_severity_from_levels(r.steps);
    return r;
}

std::vector<std::string> collect_images(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".ppm") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) raise(Errc::invalid_argument, "no images in directory: " + dir);
    return paths;
}

// Parallel map over items; results land at their own index, so the output
// order is independent of the worker count.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < jobs; ++w)
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

std::vector<double> score_paths(const ScorerParams& params, const CheckpointMeta& meta,
                                const std::vector<std::string>& paths, int resize_shortest, int jobs) {
    std::vector<double> scores(paths.size(), 0.0);
    std::vector<std::string> errors(paths.size());
    parallel_for(paths.size(), jobs, [&](std::size_t i) {
        try {
            Image img = load_image(paths[i]);
            if (resize_shortest > 0) img = resize_shortest_side(img, resize_shortest);
            scores[i] = score_image(params, img, meta.grid_rows, meta.grid_cols);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < paths.size(); ++i)
        if (!errors[i].empty()) raise(Errc::io_error, paths[i] + ": " + errors[i]);
    return scores;
}

// ---------------------------------------------------------------------------

int cmd_config_show(const CommonOpts& common) {
    Config cfg = resolve_config(common);
    std::cout << config_show(cfg);
    return kExitOk;
}

int cmd_degrade(const CommonOpts& common, const std::string& image_path, const std::string& out_path,
                const std::string& steps_flag) {
    Config cfg = resolve_config(common);
    Image img = load_image(image_path);
    Recipe recipe;
    if (!steps_flag.empty()) {
        recipe = parse_steps_flag(steps_flag);
        recipe.seed = cfg.master_seed;
    } else {
        recipe = sample_recipe(cfg.master_seed, cfg.max_steps, cfg.sigma_off);
        print_seed(cfg);
    }
    Image out = degrade(img, recipe);
    if (!out_path.empty()) {
        if (fs::path(out_path).extension() != ".ppm")
            raise(Errc::invalid_argument, "degrade writes P6 output; use a .ppm path");
        save_ppm(out, out_path);
    }
    nlohmann::json j = recipe_json(recipe);
    j["severity"] = recipe.severity;
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int cmd_dataset(const CommonOpts& common, const std::string& corpus, const std::string& out_path) {
    Config cfg = resolve_config(common);
    print_seed(cfg);
    BuildSummary sum;
    Manifest m = build_manifest(corpus, cfg, &sum, common.jobs);
    save_manifest(out_path, m);
    std::cout << "records: " << sum.records << "\nimages: " << sum.images_used << "\nskipped: " << sum.images_skipped
              << "\n";
    if (sum.images_skipped > 0) std::cerr << "warning: skipped " << sum.images_skipped << " undecodable file(s)\n";
    return kExitOk;
}

int cmd_train(const CommonOpts& common, const std::string& manifest_path, const std::string& out_checkpoint,
              const std::string& out_log) {
    Config cfg = resolve_config(common);
    print_seed(cfg);
    Manifest m = load_manifest(manifest_path);
    TrainResult r = train(m, cfg);
    CheckpointMeta meta{cfg.grid_rows, cfg.grid_cols, m.crop_size};
    save_checkpoint(out_checkpoint, r.params, meta, &r.opt);
    if (!out_log.empty()) write_file_text(out_log, encode_training_log(r.log));
    std::cout << "steps: " << r.steps << "\ncheckpoint: " << out_checkpoint << "\n";
    if (!r.log.empty()) std::cout << "final_total: " << r.log.back().loss.total << "\n";
    return kExitOk;
}

int cmd_score(const CommonOpts& common, const std::string& checkpoint, std::vector<std::string> images,
              const std::string& out_path, int resize_shortest) {
    CheckpointMeta meta;
    ScorerParams params = load_checkpoint(checkpoint, &meta);
    CommonOpts opts = common;
    auto scores = score_paths(params, meta, images, resize_shortest, opts.jobs);
    std::vector<ScoreRow> rows;
    for (std::size_t i = 0; i < images.size(); ++i) rows.push_back({images[i], 0.0, scores[i]});
    std::string csv = "path,q\n";
    for (const auto& r : rows) csv += csv_escape(r.id) + "," + format_double(r.score) + "\n";
    if (out_path.empty())
        std::cout << csv;
    else
        write_file_text(out_path, csv);
    return kExitOk;
}

int cmd_eval(const CommonOpts& common, const std::string& checkpoint, const std::string& manifest_path,
             const std::string& out_dir, double min_srocc) {
    Config cfg = resolve_config(common);
    CheckpointMeta meta;
    ScorerParams params = load_checkpoint(checkpoint, &meta);
    cfg.grid_rows = meta.grid_rows;
    cfg.grid_cols = meta.grid_cols;
    Manifest m = load_manifest(manifest_path);
    ManifestEval ev = score_manifest(params, m, cfg);

    EvalReport rep;
    rep.n = ev.pred.size();
    rep.srocc = srocc(ev.pred, ev.ref);
    rep.plcc = plcc(ev.pred, ev.ref);
    rep.pred_summary = summarize_scores(ev.pred);
    rep.ref_summary = summarize_scores(ev.ref);
    std::cout << report_json(rep).dump(2) << "\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        export_report(rep, ev.rows, ev.embeddings, {}, {}, out_dir);
    }
    if (min_srocc > -1.0 && rep.srocc < min_srocc) {
        std::cerr << "srocc " << rep.srocc << " below threshold " << min_srocc << "\n";
        return kExitThreshold;
    }
    return kExitOk;
}

int cmd_separate(const CommonOpts& common, const std::string& checkpoint, const std::string& dir_high,
                 const std::string& dir_low, int bins, const std::string& out_dir, double max_overlap) {
    CommonOpts opts = common;
    CheckpointMeta meta;
    ScorerParams params = load_checkpoint(checkpoint, &meta);
    auto high_paths = collect_images(dir_high);
    auto low_paths = collect_images(dir_low);
    auto high = score_paths(params, meta, high_paths, 0, opts.jobs);
    auto low = score_paths(params, meta, low_paths, 0, opts.jobs);

    EvalReport rep;
    rep.n = high.size() + low.size();
    rep.has_overlap = true;
    rep.histogram_bins = bins;
    rep.overlap_fraction = overlap(high, low, bins);
    rep.high_summary = summarize_scores(high);
    rep.low_summary = summarize_scores(low);

    nlohmann::json j;
    j["overlap_fraction"] = rep.overlap_fraction;
    j["bins"] = bins;
    j["n_high"] = high.size();
    j["n_low"] = low.size();
    std::cout << j.dump(2) << "\n";

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::vector<ScoreRow> rows;
        for (std::size_t i = 0; i < high_paths.size(); ++i) rows.push_back({high_paths[i], 0.0, high[i]});
        for (std::size_t i = 0; i < low_paths.size(); ++i) rows.push_back({low_paths[i], 1.0, low[i]});
        export_report(rep, rows, {}, high, low, out_dir);
    }
    if (max_overlap >= 0.0 && rep.overlap_fraction > max_overlap) {
        std::cerr << "overlap " << rep.overlap_fraction << " above threshold " << max_overlap << "\n";
        return kExitThreshold;
    }
    return kExitOk;
}

int cmd_gradcheck(const CommonOpts& common, int seeds, double epsilon, double max_error, bool inject_error) {
    Config cfg = resolve_config(common);
    double worst = 0.0;
    std::string worst_param;
    for (int s = 0; s < seeds; ++s) {
        GradCheckSetup setup = make_gradcheck_setup(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(s)));
        if (inject_error) {
            // corrupt one decision-layer weight after the setup is built; the
            // check must flag it
            GradCheckReport rep = grad_check(setup, epsilon);
            forward(setup.params, setup.batch);
            TotalLossGrads lg;
            total_loss(setup.params, setup.batch, setup.weights, setup.lambda_emb_eff, setup.combo_seed, lg);
            ScorerTensors analytic = ScorerTensors::shaped(setup.params.feat_dim, setup.params.hidden,
                                                           setup.params.embed_dim, setup.params.text_dim);
            backward(setup.params, setup.batch, lg.dq, lg.dfhat, analytic);
            double eps = epsilon;
            double saved = setup.params.t.dec_w[0];
            setup.params.t.dec_w[0] = saved + eps;
            double up = gradcheck_eval(setup);
            setup.params.t.dec_w[0] = saved - eps;
            double down = gradcheck_eval(setup);
            setup.params.t.dec_w[0] = saved;
            double numeric = (up - down) / (2.0 * eps);
            double err = gradcheck_rel_error(analytic.dec_w[0] * 2.0 + 0.05, numeric);
            worst = std::max({worst, rep.max_rel_error, err});
            worst_param = "dec_w[0] (corrupted)";
            continue;
        }
        GradCheckReport rep = grad_check(setup, epsilon);
        if (rep.max_rel_error > worst) {
            worst = rep.max_rel_error;
            worst_param = rep.worst_param;
        }
    }
    std::cout << "max_rel_error: " << format_double(worst) << "\nworst_param: " << worst_param << "\nseeds: " << seeds
              << "\n";
    if (worst > max_error) {
        std::cerr << "gradient check failed: " << worst << " > " << max_error << "\n";
        return kExitThreshold;
    }
    return kExitOk;
}

int cmd_features(const std::string& image_path, int grid_rows, int grid_cols, const std::string& out_path) {
    Image img = load_image(image_path);
    PatchFeatureGrid grid = extract_patch_features(img, grid_rows, grid_cols);
    std::string csv = "patch";
    for (int k = 0; k < grid.feature_dim; ++k) csv += ",f" + std::to_string(k);
    csv += "\n";
    for (int p = 0; p < grid.patch_count(); ++p) {
        csv += std::to_string(p);
        for (int k = 0; k < grid.feature_dim; ++k) csv += "," + format_double(grid.patch(p)[k]);
        csv += "\n";
    }
    if (out_path.empty())
        std::cout << csv;
    else
        write_file_text(out_path, csv);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hirqa: opinion-unaware image quality training and evaluation"};
    app.require_subcommand(1);

    // config show
    auto* config_cmd = app.add_subcommand("config", "configuration inspection");
    CommonOpts config_opts;
    auto* show_cmd = config_cmd->add_subcommand("show", "print every key with value and provenance");
    add_common(show_cmd, config_opts);

    // degrade
    CommonOpts degrade_opts;
    std::string degrade_image, degrade_out, degrade_steps;
    auto* degrade_cmd = app.add_subcommand("degrade", "apply a distortion recipe to an image");
    degrade_cmd->add_option("--image", degrade_image, "input image (PNG or PPM)")->required();
    degrade_cmd->add_option("--out", degrade_out, "output path (.ppm)");
    degrade_cmd->add_option("--steps", degrade_steps, "explicit recipe, e.g. gaussian-blur:3.0,jpeg-like:2.5");
    int degrade_max_steps = -1;
    double degrade_sigma_off = -1.0;
    degrade_cmd->add_option("--max-steps", degrade_max_steps, "recipe step cap when sampling");
    degrade_cmd->add_option("--sigma-off", degrade_sigma_off, "stddev of the continuous level offset");
    add_common(degrade_cmd, degrade_opts);

    // dataset
    CommonOpts dataset_opts;
    std::string dataset_corpus, dataset_out;
    auto* dataset_cmd = app.add_subcommand("dataset", "build a training manifest from a pristine corpus");
    dataset_cmd->add_option("--corpus", dataset_corpus, "directory of pristine images")->required();
    dataset_cmd->add_option("--out", dataset_out, "manifest output path")->required();
    add_common(dataset_cmd, dataset_opts);

    // train
    CommonOpts train_opts;
    std::string train_manifest, train_out, train_log;
    auto* train_cmd = app.add_subcommand("train", "train a scorer from a manifest");
    train_cmd->add_option("--manifest", train_manifest, "training manifest")->required();
    train_cmd->add_option("--out", train_out, "checkpoint output path")->required();
    train_cmd->add_option("--log", train_log, "training log CSV path");
    bool no_align = false, no_embdist = false;
    train_cmd->add_flag("--no-align", no_align, "disable the image-text alignment loss");
    train_cmd->add_flag("--no-embdist", no_embdist, "disable the embedding-distance loss");
    add_common(train_cmd, train_opts);

    // score
    CommonOpts score_opts;
    std::string score_checkpoint, score_out;
    std::vector<std::string> score_images;
    int score_resize = 0;
    auto* score_cmd = app.add_subcommand("score", "predict quality for images");
    score_cmd->add_option("--checkpoint", score_checkpoint, "trained checkpoint")->required();
    score_cmd->add_option("--out", score_out, "write CSV here instead of stdout");
    score_cmd->add_option("--resize-shortest", score_resize, "resize shortest side before scoring");
    score_cmd->add_option("images", score_images, "image files")->required();
    add_common(score_cmd, score_opts);

    // eval
    CommonOpts eval_opts;
    std::string eval_checkpoint, eval_manifest, eval_out_dir;
    double eval_min_srocc = -2.0;
    auto* eval_cmd = app.add_subcommand("eval", "rank-correlation report against manifest severities");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "trained checkpoint")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "manifest with reference severities")->required();
    eval_cmd->add_option("--out-dir", eval_out_dir, "export scores/embeddings/report here");
    eval_cmd->add_option("--min-srocc", eval_min_srocc, "exit 4 when SROCC falls below this");
    add_common(eval_cmd, eval_opts);

    // separate
    CommonOpts sep_opts;
    std::string sep_checkpoint, sep_high, sep_low, sep_out_dir;
    int sep_bins = 50;
    double sep_max_overlap = -1.0;
    auto* sep_cmd = app.add_subcommand("separate", "score-density overlap between two image sets");
    sep_cmd->add_option("--checkpoint", sep_checkpoint, "trained checkpoint")->required();
    sep_cmd->add_option("--high", sep_high, "directory of high-quality images")->required();
    sep_cmd->add_option("--low", sep_low, "directory of low-quality images")->required();
    sep_cmd->add_option("--bins", sep_bins, "histogram bins")->check(CLI::Range(2, 4096));
    sep_cmd->add_option("--out-dir", sep_out_dir, "export report and SVG here");
    sep_cmd->add_option("--max-overlap", sep_max_overlap, "exit 4 when overlap exceeds this");
    add_common(sep_cmd, sep_opts);

    // gradcheck
    CommonOpts gc_opts;
    int gc_seeds = 20;
    double gc_epsilon = 1e-4, gc_max_error = 1e-4;
    bool gc_inject = false;
    auto* gc_cmd = app.add_subcommand("gradcheck", "verify analytic gradients against finite differences");
    gc_cmd->add_option("--seeds", gc_seeds, "number of random setups")->check(CLI::Range(1, 1000));
    gc_cmd->add_option("--epsilon", gc_epsilon, "finite-difference step");
    gc_cmd->add_option("--max-error", gc_max_error, "exit 4 when the max relative error exceeds this");
    gc_cmd->add_flag("--inject-error", gc_inject, "corrupt a gradient to verify the check trips");
    add_common(gc_cmd, gc_opts);

    // features
    std::string feat_image, feat_out;
    int feat_rows = 8, feat_cols = 8;
    auto* feat_cmd = app.add_subcommand("features", "dump the patch feature grid as CSV");
    feat_cmd->add_option("--image", feat_image, "input image")->required();
    feat_cmd->add_option("--grid-rows", feat_rows, "grid rows");
    feat_cmd->add_option("--grid-cols", feat_cols, "grid columns");
    feat_cmd->add_option("--out", feat_out, "write CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (show_cmd->parsed()) return cmd_config_show(config_opts);
        if (degrade_cmd->parsed()) {
            if (degrade_max_steps >= 0)
                degrade_opts.overrides.push_back("distort.max_steps=" + std::to_string(degrade_max_steps));
            if (degrade_sigma_off >= 0.0)
                degrade_opts.overrides.push_back("distort.sigma_off=" + std::to_string(degrade_sigma_off));
            return cmd_degrade(degrade_opts, degrade_image, degrade_out, degrade_steps);
        }
        if (dataset_cmd->parsed()) return cmd_dataset(dataset_opts, dataset_corpus, dataset_out);
        if (train_cmd->parsed()) {
            if (no_align) train_opts.overrides.push_back("loss.lambda_align=0");
            if (no_embdist) train_opts.overrides.push_back("loss.lambda_emb=0");
            return cmd_train(train_opts, train_manifest, train_out, train_log);
        }
        if (score_cmd->parsed()) return cmd_score(score_opts, score_checkpoint, score_images, score_out, score_resize);
        if (eval_cmd->parsed())
            return cmd_eval(eval_opts, eval_checkpoint, eval_manifest, eval_out_dir, eval_min_srocc);
        if (sep_cmd->parsed())
            return cmd_separate(sep_opts, sep_checkpoint, sep_high, sep_low, sep_bins, sep_out_dir, sep_max_overlap);
        if (gc_cmd->parsed()) return cmd_gradcheck(gc_opts, gc_seeds, gc_epsilon, gc_max_error, gc_inject);
        if (feat_cmd->parsed()) return cmd_features(feat_image, feat_rows, feat_cols, feat_out);
        std::cerr << "no subcommand\n";
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.code()) {
            case Errc::invalid_argument:
            case Errc::unsupported_format:
                return kExitValidation;
            default:
                return kExitRuntime;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
