#pragma once

// Training loop: severity-stratified batches, cosine LR, AdamW, and the
// embdist warm-up. lambda_emb is 0 for every epoch-1 step and then ramps
// linearly per step, reaching the configured final value at the last step of
// the run. The per-step loss breakdown goes to a CSV log.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "hirqa/config.hpp"
#include "hirqa/dataset.hpp"
#include "hirqa/losses.hpp"
#include "hirqa/metrics.hpp"
#include "hirqa/model.hpp"

namespace hirqa {

struct TrainLogRow {
    std::uint64_t step = 0; // 1-based global step
    int epoch = 0;          // 1-based
    double lr = 0.0;
    double lambda_emb = 0.0;
    LossBreakdown loss;
};

inline std::string training_log_header() {
    return "step,epoch,lr,lambda_rank,lambda_mreg,lambda_align,lambda_emb,lambda_cov,"
           "ranknet,mreg,ranking,edist,cov,embdist,align,total\n";
}

inline std::string training_log_row(const TrainLogRow& r) {
    std::ostringstream os;
    os.precision(12);
    os << r.step << "," << r.epoch << "," << r.lr << "," << r.loss.lambda_rank << "," << r.loss.lambda_mreg << ","
       << r.loss.lambda_align << "," << r.lambda_emb << "," << r.loss.lambda_cov << "," << r.loss.ranknet << ","
       << r.loss.mreg << "," << r.loss.ranking << "," << r.loss.edist << "," << r.loss.cov << "," << r.loss.embdist
       << "," << r.loss.align << "," << r.loss.total << "\n";
    return os.str();
}

inline double lambda_emb_at(std::uint64_t global_step_1b, std::uint64_t steps_per_epoch, std::uint64_t total_steps,
                            double lambda_final) {
    if (global_step_1b <= steps_per_epoch) return 0.0;
    std::uint64_t ramp_total = total_steps - steps_per_epoch;
    if (ramp_total == 0) return lambda_final;
    std::uint64_t k = global_step_1b - steps_per_epoch;
    return lambda_final * static_cast<double>(k) / static_cast<double>(ramp_total);
}

// Feature standardization computed once over every patch of every record.
inline void fit_feature_normalizer(ScorerParams& params, RecordRealizer& realizer) {
    const int K = params.feat_dim;
    std::vector<double> sum(K, 0.0), sumsq(K, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < realizer.manifest->records.size(); ++i) {
        const BatchRecord& rec = realizer.realize(i);
        for (int pidx = 0; pidx < rec.features.patch_count(); ++pidx) {
            const double* f = rec.features.patch(pidx);
            for (int k = 0; k < K; ++k) {
                sum[k] += f[k];
                sumsq[k] += f[k] * f[k];
            }
            ++count;
        }
    }
    for (int k = 0; k < K; ++k) {
        double mean = sum[k] / static_cast<double>(count);
        double var = sumsq[k] / static_cast<double>(count) - mean * mean;
        params.feat_shift[k] = mean;
        params.feat_scale[k] = std::max(std::sqrt(std::max(var, 0.0)), 1e-6);
    }
}

struct TrainResult {
    ScorerParams params;
    OptimizerState opt;
    std::vector<TrainLogRow> log;
    std::uint64_t steps = 0;
};

inline TrainResult train(const Manifest& manifest, const Config& cfg) {
    validate_config(cfg);
    if (manifest.records.empty()) raise(Errc::invalid_argument, "empty manifest");

    Config rcfg = cfg;
    rcfg.crop_size = manifest.crop_size; // realization follows the manifest geometry
    RecordRealizer realizer(manifest, rcfg);

    TrainResult out;
    out.params = init_params(cfg.preset, kFeatureDim, cfg.text_dim, derive_seed(cfg.master_seed, 7));
    fit_feature_normalizer(out.params, realizer);

    out.opt = OptimizerState::for_params(out.params);
    out.opt.lr0 = cfg.lr0;
    out.opt.lr_min = cfg.lr_min;
    out.opt.weight_decay = cfg.weight_decay;
    out.opt.beta1 = cfg.beta1;
    out.opt.beta2 = cfg.beta2;
    out.opt.epsilon = cfg.epsilon;

    const std::size_t spe = batches_per_epoch(manifest.records.size(), static_cast<std::size_t>(cfg.batch_size));
    const std::uint64_t total_steps = static_cast<std::uint64_t>(spe) * cfg.epochs;
    const std::uint64_t lr_horizon = cfg.total_steps > 0 ? cfg.total_steps : total_steps;
    out.opt.total_steps = lr_horizon;

    LossWeights w;
    w.lambda_rank = cfg.lambda_rank;
    w.lambda_mreg = cfg.lambda_mreg;
    w.lambda_align = cfg.lambda_align;
    w.lambda_emb = cfg.lambda_emb;
    w.lambda_cov = cfg.lambda_cov;
    w.t_d = cfg.t_d;
    w.t_q = cfg.t_q;
    w.combo_cap = cfg.combo_cap;
    w.margin = cfg.margin;
    w.ranking_variant = cfg.ranking_variant;

    std::uint64_t global_step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t step = 0; step < spe; ++step) {
            std::vector<BatchRecord> batch = next_batch(realizer, epoch, step, static_cast<std::size_t>(cfg.batch_size));
            forward(out.params, batch);

            ++global_step;
            double lam_emb = lambda_emb_at(global_step, spe, total_steps, cfg.lambda_emb);
            std::uint64_t combo_seed = derive_seed(cfg.master_seed, 5000 + global_step);

            TotalLossGrads lg;
            LossBreakdown bd = total_loss(out.params, batch, w, lam_emb, combo_seed, lg);

            ScorerTensors grads = ScorerTensors::shaped(out.params.feat_dim, out.params.hidden, out.params.embed_dim,
                                                        out.params.text_dim);
            backward(out.params, batch, lg.dq, lg.dfhat, grads);
            grads.log_tau_emb[0] += lg.dtau_emb_log;
            grads.tau_align_log[0] += lg.dtau_align_log;
            for (std::size_t i = 0; i < grads.proj_w.size(); ++i) grads.proj_w.v[i] += lg.dproj_w.v[i];
            for (std::size_t i = 0; i < grads.proj_b.size(); ++i) grads.proj_b.v[i] += lg.dproj_b.v[i];

            double lr = cosine_lr(global_step - 1, lr_horizon, cfg.lr0, cfg.lr_min);
            adamw_step(out.params, grads, out.opt, lr);

            TrainLogRow row;
            row.step = global_step;
            row.epoch = epoch + 1;
            row.lr = lr;
            row.lambda_emb = lam_emb;
            row.loss = bd;
            out.log.push_back(row);
        }
    }
    out.steps = global_step;
    return out;
}

inline std::string encode_training_log(const std::vector<TrainLogRow>& log) {
    std::string out = training_log_header();
    for (const auto& row : log) out += training_log_row(row);
    return out;
}

// ---------------------------------------------------------------------------
// Scoring helpers shared by the CLI and the evaluation harness.

inline double score_image(const ScorerParams& params, const Image& img, int grid_rows, int grid_cols) {
    std::vector<BatchRecord> one(1);
    one[0].features = extract_patch_features(img, grid_rows, grid_cols);
    forward(params, one);
    return one[0].score;
}

struct ManifestEval {
    std::vector<ScoreRow> rows;       // id, severity, q
    std::vector<double> pred, ref;    // q and 1 - severity
    std::vector<std::pair<std::string, std::vector<double>>> embeddings;
};

inline ManifestEval score_manifest(const ScorerParams& params, const Manifest& manifest, const Config& cfg) {
    Config rcfg = cfg;
    rcfg.crop_size = manifest.crop_size;
    RecordRealizer realizer(manifest, rcfg);
    ManifestEval ev;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        std::vector<BatchRecord> one(1);
        one[0] = realizer.realize(i);
        forward(params, one);
        const ManifestRecord& rec = manifest.records[i];
        ev.rows.push_back({rec.id, rec.severity, one[0].score});
        ev.pred.push_back(one[0].score);
        ev.ref.push_back(1.0 - rec.severity);
        ev.embeddings.emplace_back(rec.id, one[0].embedding_hat);
    }
    return ev;
}

} // namespace hirqa
