#pragma once

// Training objective. Three components:
//   ranking  = ranknet (pair-of-pairs over severity gaps) + lambda_mreg * mreg
//   embdist  = edist (pair-of-pairs over score gaps, embedding similarity
//              logits) + lambda_cov * cov
//   align    = symmetric InfoNCE over projected image embeddings vs prompt
//              embeddings
// total      = lambda_rank * ranking + lambda_align * align + lambda_emb * embdist
//
// Pair-of-pairs bookkeeping: pairs (i,j), i<j, kept when the gap exceeds the
// threshold; combos are unordered pairs of distinct pairs in lexicographic
// order; gap ties are skipped; above combo_cap a seeded uniform subsample is
// drawn. BCE is evaluated in softplus form on raw logits:
//   BCE(x,t) = softplus(x) - t*x,  dBCE/dx = sigmoid(x) - t.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hirqa/error.hpp"
#include "hirqa/model.hpp"
#include "hirqa/rng.hpp"

namespace hirqa {

inline double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }
inline double bce_logit(double x, double t) { return softplus(x) - t * x; }
inline double bce_logit_grad(double x, double t) { return sigmoid(x) - t; }

inline double sign_or_zero(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// ---------------------------------------------------------------------------

struct GapPair {
    int i = 0, j = 0; // i < j
    double gap = 0.0; // |v_i - v_j|, strictly above the build threshold
};

struct PairSet {
    std::vector<GapPair> pairs;
    double source_threshold = 0.0;
};

inline PairSet build_pairs(const std::vector<double>& values, double threshold) {
    if (values.size() < 2) raise(Errc::invalid_argument, "need at least two values");
    PairSet out;
    out.source_threshold = threshold;
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i + 1; j < values.size(); ++j) {
            double gap = std::abs(values[i] - values[j]);
            if (gap > threshold) out.pairs.push_back({static_cast<int>(i), static_cast<int>(j), gap});
        }
    return out;
}

struct PairOfPairs {
    int a = 0, b = 0; // indices into PairSet.pairs, a < b
    int label = 0;    // 1 iff gap(a) > gap(b) under the caller's ordering rule
};

struct PairOfPairsSet {
    std::vector<PairOfPairs> combos;
    std::size_t available = 0; // combos before capping (ties already skipped)
    std::uint64_t sample_seed = 0;
};

// Enumerates combos with a strict-inequality label; exact gap ties are
// skipped. label_greater=true labels y=1 when gap_a > gap_b (ranknet rule),
// false when gap_a < gap_b (embedding rule).
inline PairOfPairsSet build_pair_of_pairs(const PairSet& ps, bool label_greater, std::size_t combo_cap,
                                          std::uint64_t seed) {
    PairOfPairsSet out;
    out.sample_seed = seed;
    const auto& pr = ps.pairs;
    for (std::size_t a = 0; a < pr.size(); ++a)
        for (std::size_t b = a + 1; b < pr.size(); ++b) {
            if (pr[a].gap == pr[b].gap) continue;
            bool greater = pr[a].gap > pr[b].gap;
            int y = (greater == label_greater) ? 1 : 0;
            out.combos.push_back({static_cast<int>(a), static_cast<int>(b), y});
        }
    out.available = out.combos.size();
    if (combo_cap > 0 && out.combos.size() > combo_cap) {
        // seeded partial Fisher-Yates, keep the first combo_cap entries
        Rng rng(seed);
        for (std::size_t i = 0; i < combo_cap; ++i) {
            std::size_t j = i + rng.below(out.combos.size() - i);
            std::swap(out.combos[i], out.combos[j]);
        }
        out.combos.resize(combo_cap);
    }
    return out;
}

// ---------------------------------------------------------------------------

struct LossResult {
    double value = 0.0;
    std::vector<double> grad_q;                 // per score, when applicable
    std::vector<std::vector<double>> grad_fhat; // per record embedding, when applicable
    double grad_tau_emb = 0.0;
    std::size_t combos_used = 0;
    std::size_t pairs_used = 0;
    bool empty_pair_set = false;
};

// Higher-order pair-of-pairs RankNet on severity gaps. Score gaps act as BCE
// logits; |.| uses the zero subgradient at ties.
inline LossResult ranknet_loss(const std::vector<double>& q, const std::vector<double>& d, double t_d,
                               std::size_t combo_cap, std::uint64_t seed) {
    if (q.size() != d.size() || q.size() < 2) raise(Errc::invalid_argument, "ranknet needs matched q/d, n >= 2");
    LossResult res;
    res.grad_q.assign(q.size(), 0.0);
    PairSet ps = build_pairs(d, t_d);
    res.pairs_used = ps.pairs.size();
    PairOfPairsSet combos = build_pair_of_pairs(ps, /*label_greater=*/true, combo_cap, seed);
    res.combos_used = combos.combos.size();
    if (combos.combos.empty()) {
        res.empty_pair_set = true;
        return res;
    }
    double inv = 1.0 / (2.0 * static_cast<double>(combos.combos.size()));
    for (const auto& c : combos.combos) {
        const GapPair& pa = ps.pairs[c.a];
        const GapPair& pb = ps.pairs[c.b];
        double dq_a = std::abs(q[pa.i] - q[pa.j]);
        double dq_b = std::abs(q[pb.i] - q[pb.j]);
        double ta = static_cast<double>(c.label);
        res.value += (bce_logit(dq_a, ta) + bce_logit(dq_b, 1.0 - ta)) * inv;
        double ga = bce_logit_grad(dq_a, ta) * inv;
        double gb = bce_logit_grad(dq_b, 1.0 - ta) * inv;
        double sa = sign_or_zero(q[pa.i] - q[pa.j]);
        double sb = sign_or_zero(q[pb.i] - q[pb.j]);
        res.grad_q[pa.i] += ga * sa;
        res.grad_q[pa.j] -= ga * sa;
        res.grad_q[pb.i] += gb * sb;
        res.grad_q[pb.j] -= gb * sb;
    }
    return res;
}

// Monotonicity regularizer: penalizes signed score/severity gap alignment.
// Normalized by the number of ordered pairs so the value is batch-size
// invariant.
inline LossResult mreg_loss(const std::vector<double>& q, const std::vector<double>& d) {
    if (q.size() != d.size() || q.size() < 2) raise(Errc::invalid_argument, "mreg needs matched q/d, n >= 2");
    LossResult res;
    res.grad_q.assign(q.size(), 0.0);
    const std::size_t n = q.size();
    double inv = 1.0 / static_cast<double>(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double u = (q[i] - q[j]) * (d[i] - d[j]);
            res.value += softplus(u) * inv;
            double g = sigmoid(u) * inv * (d[i] - d[j]);
            res.grad_q[i] += g;
            res.grad_q[j] -= g;
        }
    return res;
}

inline LossResult ranking_loss(const std::vector<double>& q, const std::vector<double>& d, double t_d,
                               double lambda_mreg, std::size_t combo_cap, std::uint64_t seed) {
    LossResult rank = ranknet_loss(q, d, t_d, combo_cap, seed);
    LossResult mreg = mreg_loss(q, d);
    LossResult res = rank;
    res.value += lambda_mreg * mreg.value;
    for (std::size_t i = 0; i < res.grad_q.size(); ++i) res.grad_q[i] += lambda_mreg * mreg.grad_q[i];
    return res;
}

// ---------------------------------------------------------------------------
// Ranking-variant baselines (ablation flags). Both use the severity pair set
// and supervise the signed score difference of each pair directly.

// Plain pairwise RankNet: target 1 when the less-distorted element should
// score higher.
inline LossResult pairwise_ranknet_loss(const std::vector<double>& q, const std::vector<double>& d, double t_d) {
    if (q.size() != d.size() || q.size() < 2) raise(Errc::invalid_argument, "pairwise ranknet needs n >= 2");
    LossResult res;
    res.grad_q.assign(q.size(), 0.0);
    PairSet ps = build_pairs(d, t_d);
    res.pairs_used = ps.pairs.size();
    if (ps.pairs.empty()) {
        res.empty_pair_set = true;
        return res;
    }
    double inv = 1.0 / static_cast<double>(ps.pairs.size());
    for (const auto& pr : ps.pairs) {
        int hi = d[pr.i] < d[pr.j] ? pr.i : pr.j; // less distorted
        int lo = hi == pr.i ? pr.j : pr.i;
        double x = q[hi] - q[lo];
        res.value += bce_logit(x, 1.0) * inv;
        double g = bce_logit_grad(x, 1.0) * inv;
        res.grad_q[hi] += g;
        res.grad_q[lo] -= g;
    }
    return res;
}

// Margin ranking: hinge on a minimum score separation.
inline LossResult margin_ranking_loss(const std::vector<double>& q, const std::vector<double>& d, double t_d,
                                      double margin) {
    if (q.size() != d.size() || q.size() < 2) raise(Errc::invalid_argument, "margin ranking needs n >= 2");
    LossResult res;
    res.grad_q.assign(q.size(), 0.0);
    PairSet ps = build_pairs(d, t_d);
    res.pairs_used = ps.pairs.size();
    if (ps.pairs.empty()) {
        res.empty_pair_set = true;
        return res;
    }
    double inv = 1.0 / static_cast<double>(ps.pairs.size());
    for (const auto& pr : ps.pairs) {
        int hi = d[pr.i] < d[pr.j] ? pr.i : pr.j;
        int lo = hi == pr.i ? pr.j : pr.i;
        double x = margin - (q[hi] - q[lo]);
        if (x > 0) {
            res.value += x * inv;
            res.grad_q[hi] -= inv;
            res.grad_q[lo] += inv;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------

// Embedding-distance consistency: similarity logits delta_f = exp(dot/tau)
// compared across score-gap pairs; y=1 when the first pair has the SMALLER
// score gap (closer quality => more similar embeddings expected).
inline LossResult edist_loss(const std::vector<std::vector<double>>& fhat, const std::vector<double>& q, double t_q,
                             double tau_emb, std::size_t combo_cap, std::uint64_t seed) {
    if (fhat.size() != q.size() || q.size() < 2) raise(Errc::invalid_argument, "edist needs matched fhat/q, n >= 2");
    const std::size_t dim = fhat[0].size();
    LossResult res;
    res.grad_q.assign(q.size(), 0.0); // zero a.e.: q enters only through pair selection/labels
    res.grad_fhat.assign(q.size(), std::vector<double>(dim, 0.0));
    PairSet ps = build_pairs(q, t_q);
    res.pairs_used = ps.pairs.size();
    PairOfPairsSet combos = build_pair_of_pairs(ps, /*label_greater=*/false, combo_cap, seed);
    res.combos_used = combos.combos.size();
    if (combos.combos.empty()) {
        res.empty_pair_set = true;
        return res;
    }

    auto dot_of = [&](const GapPair& pr) {
        double acc = 0.0;
        for (std::size_t k = 0; k < dim; ++k) acc += fhat[pr.i][k] * fhat[pr.j][k];
        return acc;
    };

    double inv = 1.0 / (2.0 * static_cast<double>(combos.combos.size()));
    for (const auto& c : combos.combos) {
        const GapPair& pa = ps.pairs[c.a];
        const GapPair& pb = ps.pairs[c.b];
        double dot_a = dot_of(pa), dot_b = dot_of(pb);
        double fa = std::exp(dot_a / tau_emb), fb = std::exp(dot_b / tau_emb);
        double ta = static_cast<double>(c.label);
        res.value += (bce_logit(fa, ta) + bce_logit(fb, 1.0 - ta)) * inv;
        double ga = bce_logit_grad(fa, ta) * inv; // dL/d(delta_f_a)
        double gb = bce_logit_grad(fb, 1.0 - ta) * inv;
        double gda = ga * fa / tau_emb; // dL/d(dot_a)
        double gdb = gb * fb / tau_emb;
        for (std::size_t k = 0; k < dim; ++k) {
            res.grad_fhat[pa.i][k] += gda * fhat[pa.j][k];
            res.grad_fhat[pa.j][k] += gda * fhat[pa.i][k];
            res.grad_fhat[pb.i][k] += gdb * fhat[pb.j][k];
            res.grad_fhat[pb.j][k] += gdb * fhat[pb.i][k];
        }
        res.grad_tau_emb += -(ga * fa * dot_a + gb * fb * dot_b) / (tau_emb * tau_emb);
    }
    return res;
}

// Covariance regularizer: squared off-diagonal Frobenius norm of the sample
// covariance of the normalized embeddings, scaled by 1/D^2.
inline LossResult cov_loss(const std::vector<std::vector<double>>& fhat) {
    if (fhat.size() < 2) raise(Errc::invalid_argument, "cov_loss needs n >= 2");
    const std::size_t n = fhat.size(), dim = fhat[0].size();
    LossResult res;
    res.grad_fhat.assign(n, std::vector<double>(dim, 0.0));
    if (dim < 2) return res; // no off-diagonal entries

    std::vector<double> mean(dim, 0.0);
    for (const auto& f : fhat)
        for (std::size_t k = 0; k < dim; ++k) mean[k] += f[k];
    for (double& m : mean) m /= static_cast<double>(n);

    std::vector<std::vector<double>> centered(n, std::vector<double>(dim));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < dim; ++k) centered[r][k] = fhat[r][k] - mean[k];

    std::vector<std::vector<double>> cov(dim, std::vector<double>(dim, 0.0));
    double inv_nm1 = 1.0 / static_cast<double>(n - 1);
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) acc += centered[r][a] * centered[r][b];
            cov[a][b] = acc * inv_nm1;
        }

    double inv_d2 = 1.0 / (static_cast<double>(dim) * dim);
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b)
            if (a != b) res.value += cov[a][b] * cov[a][b] * inv_d2;

    // dL/dC_{r,a} = (2/D^2) * (2/(N-1)) * sum_{b != a} cov[a][b] * centered[r][b],
    // then project out the mean (centering jacobian).
    std::vector<std::vector<double>> gc(n, std::vector<double>(dim, 0.0));
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t a = 0; a < dim; ++a) {
            double acc = 0.0;
            for (std::size_t b = 0; b < dim; ++b)
                if (b != a) acc += cov[a][b] * centered[r][b];
            gc[r][a] = 4.0 * inv_d2 * inv_nm1 * acc;
        }
    for (std::size_t a = 0; a < dim; ++a) {
        double colmean = 0.0;
        for (std::size_t r = 0; r < n; ++r) colmean += gc[r][a];
        colmean /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) res.grad_fhat[r][a] = gc[r][a] - colmean;
    }
    return res;
}

inline LossResult embdist_loss(const std::vector<std::vector<double>>& fhat, const std::vector<double>& q, double t_q,
                               double tau_emb, double lambda_cov, std::size_t combo_cap, std::uint64_t seed) {
    LossResult ed = edist_loss(fhat, q, t_q, tau_emb, combo_cap, seed);
    LossResult cv = cov_loss(fhat);
    LossResult res = ed;
    res.value += lambda_cov * cv.value;
    for (std::size_t r = 0; r < res.grad_fhat.size(); ++r)
        for (std::size_t k = 0; k < res.grad_fhat[r].size(); ++k)
            res.grad_fhat[r][k] += lambda_cov * cv.grad_fhat[r][k];
    return res;
}

// ---------------------------------------------------------------------------
// Symmetric InfoNCE alignment between projected+renormalized image
// embeddings and unit prompt embeddings.

struct AlignResult {
    double value = 0.0;
    std::vector<std::vector<double>> grad_fhat; // wrt the D-dim normalized image embeddings
    Tensor grad_proj_w, grad_proj_b;
    double grad_tau_align_log = 0.0;
};

inline AlignResult align_loss(const std::vector<std::vector<double>>& fhat,
                              const std::vector<std::vector<double>>& ftext, const Tensor& proj_w,
                              const Tensor& proj_b, double tau_align_log) {
    const std::size_t n = fhat.size();
    if (n == 0 || ftext.size() != n) raise(Errc::invalid_argument, "align needs matched image/text batches, n >= 1");
    const std::size_t d_in = fhat[0].size();
    const std::size_t d_txt = proj_b.size();
    if (proj_w.size() != d_txt * d_in) raise(Errc::invalid_argument, "projection shape mismatch");
    for (const auto& t : ftext)
        if (t.size() != d_txt) raise(Errc::invalid_argument, "text embedding width mismatch");

    AlignResult res;
    res.grad_fhat.assign(n, std::vector<double>(d_in, 0.0));
    res.grad_proj_w = Tensor::zeros({d_txt, d_in});
    res.grad_proj_b = Tensor::zeros({d_txt});

    double tl = std::clamp(tau_align_log, kTauAlignLogMin, kTauAlignLogMax);
    double scale = std::exp(tl);
    bool clamped = tau_align_log < kTauAlignLogMin || tau_align_log > kTauAlignLogMax;

    // project and renormalize
    std::vector<std::vector<double>> v(n, std::vector<double>(d_txt)), vhat(n, std::vector<double>(d_txt));
    std::vector<double> vnorm(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t a = 0; a < d_txt; ++a) {
            double acc = proj_b[a];
            const double* wrow = &proj_w.v[a * d_in];
            for (std::size_t k = 0; k < d_in; ++k) acc += wrow[k] * fhat[r][k];
            v[r][a] = acc;
        }
        double nn = 0.0;
        for (double x : v[r]) nn += x * x;
        vnorm[r] = std::max(std::sqrt(nn), 1e-12);
        for (std::size_t a = 0; a < d_txt; ++a) vhat[r][a] = v[r][a] / vnorm[r];
    }

    // similarity logits and both softmax directions
    std::vector<std::vector<double>> s(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t a = 0; a < d_txt; ++a) acc += vhat[i][a] * ftext[j][a];
            s[i][j] = scale * acc;
        }

    std::vector<std::vector<double>> ds(n, std::vector<double>(n, 0.0));
    double inv2n = 1.0 / (2.0 * static_cast<double>(n));
    // rows: image -> text
    for (std::size_t i = 0; i < n; ++i) {
        double mx = s[i][0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, s[i][j]);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(s[i][j] - mx);
        res.value += -(s[i][i] - mx - std::log(z)) * inv2n;
        for (std::size_t j = 0; j < n; ++j) ds[i][j] += (std::exp(s[i][j] - mx) / z - (i == j ? 1.0 : 0.0)) * inv2n;
    }
    // columns: text -> image
    for (std::size_t j = 0; j < n; ++j) {
        double mx = s[0][j];
        for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, s[i][j]);
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) z += std::exp(s[i][j] - mx);
        res.value += -(s[j][j] - mx - std::log(z)) * inv2n;
        for (std::size_t i = 0; i < n; ++i) ds[i][j] += (std::exp(s[i][j] - mx) / z - (i == j ? 1.0 : 0.0)) * inv2n;
    }

    // backprop: s = scale * vhat . ftext
    std::vector<double> dvhat(d_txt), dv(d_txt);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(dvhat.begin(), dvhat.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (ds[i][j] == 0.0) continue;
            double g = ds[i][j] * scale;
            for (std::size_t a = 0; a < d_txt; ++a) dvhat[a] += g * ftext[j][a];
            if (!clamped) res.grad_tau_align_log += ds[i][j] * s[i][j];
        }
        double dot = 0.0;
        for (std::size_t a = 0; a < d_txt; ++a) dot += vhat[i][a] * dvhat[a];
        for (std::size_t a = 0; a < d_txt; ++a) dv[a] = (dvhat[a] - vhat[i][a] * dot) / vnorm[i];
        for (std::size_t a = 0; a < d_txt; ++a) {
            res.grad_proj_b[a] += dv[a];
            double* wrow = &res.grad_proj_w.v[a * d_in];
            for (std::size_t k = 0; k < d_in; ++k) {
                wrow[k] += dv[a] * fhat[i][k];
                res.grad_fhat[i][k] += dv[a] * proj_w.v[a * d_in + k];
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------

struct LossWeights {
    double lambda_rank = 1.0;
    double lambda_mreg = 0.1;
    double lambda_align = 0.3;
    double lambda_emb = 0.5; // final value; the schedule scales it per step
    double lambda_cov = 0.01;
    double t_d = 0.1;
    double t_q = 0.05;
    std::size_t combo_cap = 512;
    double margin = 0.1;
    std::string ranking_variant = "pair-of-pairs"; // | "pairwise" | "margin"
};

struct LossBreakdown {
    double ranknet = 0.0, mreg = 0.0, ranking = 0.0;
    double edist = 0.0, cov = 0.0, embdist = 0.0;
    double align = 0.0;
    double total = 0.0;
    double lambda_rank = 0.0, lambda_mreg = 0.0, lambda_align = 0.0, lambda_emb = 0.0, lambda_cov = 0.0;
    bool rank_pairs_empty = false;
    bool edist_pairs_empty = false;
    std::size_t rank_combos = 0, edist_combos = 0;
};

struct TotalLossGrads {
    std::vector<double> dq;
    std::vector<std::vector<double>> dfhat;
    double dtau_emb_log = 0.0;
    double dtau_align_log = 0.0;
    Tensor dproj_w, dproj_b;
};

// Full objective on a batch after forward(). lambda_emb_eff is the scheduled
// embdist weight for this step.
inline LossBreakdown total_loss(const ScorerParams& params, const std::vector<BatchRecord>& batch,
                                const LossWeights& w, double lambda_emb_eff, std::uint64_t combo_seed,
                                TotalLossGrads& grads) {
    const std::size_t n = batch.size();
    const std::size_t dim = params.embed_dim;
    std::vector<double> q(n), d(n);
    std::vector<std::vector<double>> fhat(n), ftext(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!batch[i].fwd.valid) raise(Errc::invalid_argument, "total_loss requires forward pass");
        q[i] = batch[i].score;
        d[i] = batch[i].severity;
        fhat[i] = batch[i].embedding_hat;
        ftext[i] = batch[i].prompt_emb;
    }

    grads.dq.assign(n, 0.0);
    grads.dfhat.assign(n, std::vector<double>(dim, 0.0));
    grads.dtau_emb_log = 0.0;
    grads.dtau_align_log = 0.0;
    grads.dproj_w = Tensor::zeros({static_cast<std::size_t>(params.text_dim), dim});
    grads.dproj_b = Tensor::zeros({static_cast<std::size_t>(params.text_dim)});

    LossBreakdown bd;
    bd.lambda_rank = w.lambda_rank;
    bd.lambda_mreg = w.lambda_mreg;
    bd.lambda_align = w.lambda_align;
    bd.lambda_emb = lambda_emb_eff;
    bd.lambda_cov = w.lambda_cov;

    // ranking component
    LossResult rank;
    if (n >= 2) {
        if (w.ranking_variant == "pairwise")
            rank = pairwise_ranknet_loss(q, d, w.t_d);
        else if (w.ranking_variant == "margin")
            rank = margin_ranking_loss(q, d, w.t_d, w.margin);
        else
            rank = ranknet_loss(q, d, w.t_d, w.combo_cap, derive_seed(combo_seed, 1));
        LossResult mreg = mreg_loss(q, d);
        bd.ranknet = rank.value;
        bd.mreg = mreg.value;
        bd.ranking = rank.value + w.lambda_mreg * mreg.value;
        bd.rank_pairs_empty = rank.empty_pair_set;
        bd.rank_combos = rank.combos_used;
        for (std::size_t i = 0; i < n; ++i)
            grads.dq[i] += w.lambda_rank * (rank.grad_q[i] + w.lambda_mreg * mreg.grad_q[i]);
    }

    // alignment component
    if (w.lambda_align != 0.0 && n >= 1 && !ftext[0].empty()) {
        AlignResult al = align_loss(fhat, ftext, params.t.proj_w, params.t.proj_b, params.t.tau_align_log[0]);
        bd.align = al.value;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < dim; ++k) grads.dfhat[i][k] += w.lambda_align * al.grad_fhat[i][k];
        for (std::size_t i = 0; i < grads.dproj_w.size(); ++i) grads.dproj_w.v[i] += w.lambda_align * al.grad_proj_w.v[i];
        for (std::size_t i = 0; i < grads.dproj_b.size(); ++i) grads.dproj_b.v[i] += w.lambda_align * al.grad_proj_b.v[i];
        grads.dtau_align_log += w.lambda_align * al.grad_tau_align_log;
    }

    // embedding-distance component
    if (n >= 2) {
        double tau = params.tau_emb();
        LossResult ed = edist_loss(fhat, q, w.t_q, tau, w.combo_cap, derive_seed(combo_seed, 2));
        LossResult cv = cov_loss(fhat);
        bd.edist = ed.value;
        bd.cov = cv.value;
        bd.embdist = ed.value + w.lambda_cov * cv.value;
        bd.edist_pairs_empty = ed.empty_pair_set;
        bd.edist_combos = ed.combos_used;
        if (lambda_emb_eff != 0.0) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < dim; ++k)
                    grads.dfhat[i][k] += lambda_emb_eff * (ed.grad_fhat[i][k] + w.lambda_cov * cv.grad_fhat[i][k]);
            // chain through tau = exp(log_tau)
            grads.dtau_emb_log += lambda_emb_eff * ed.grad_tau_emb * tau;
        }
    }

    bd.total = w.lambda_rank * bd.ranking + w.lambda_align * bd.align + lambda_emb_eff * bd.embdist;
    return bd;
}

} // namespace hirqa
