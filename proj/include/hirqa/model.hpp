#pragma once

// Trainable quality scorer: per-patch encoder (K -> H -> D, smooth-ramp
// nonlinearity after the first affine), single-query attention pooling into
// a global embedding, sigmoid decision layer producing q in (0,1), plus a
// text projection head and two learnable temperatures used only by the
// losses. All math in double; checkpoints store float32.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "hirqa/binio.hpp"
#include "hirqa/error.hpp"
#include "hirqa/features.hpp"
#include "hirqa/rng.hpp"

namespace hirqa {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> v;

    static Tensor zeros(std::vector<std::size_t> shape) {
        Tensor t;
        std::size_t n = 1;
        for (auto s : shape) n *= s;
        t.shape = std::move(shape);
        t.v.assign(n, 0.0);
        return t;
    }
    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
};

// Smooth ramp nonlinearity; analytic everywhere so finite-difference checks
// stay clean.
inline double smooth_ramp(double x) { return 0.5 * (x + std::sqrt(x * x + 1.0)); }
inline double smooth_ramp_grad(double x) { return 0.5 * (1.0 + x / std::sqrt(x * x + 1.0)); }

inline double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

constexpr double kTauAlignLogMin = 0.0;               // ln 1
constexpr double kTauAlignLogMax = 4.605170185988091; // ln 100

struct ScorerTensors {
    Tensor enc_w1, enc_b1; // H x K, H
    Tensor enc_w2, enc_b2; // D x H, D
    Tensor attn_query;     // D
    Tensor dec_w, dec_b;   // D, 1
    Tensor proj_w, proj_b; // Dt x D, Dt
    Tensor log_tau_emb;    // 1
    Tensor tau_align_log;  // 1

    template <typename F>
    void for_each(F&& f) {
        f("enc_w1", enc_w1);
        f("enc_b1", enc_b1);
        f("enc_w2", enc_w2);
        f("enc_b2", enc_b2);
        f("attn_query", attn_query);
        f("dec_w", dec_w);
        f("dec_b", dec_b);
        f("proj_w", proj_w);
        f("proj_b", proj_b);
        f("log_tau_emb", log_tau_emb);
        f("tau_align_log", tau_align_log);
    }
    template <typename F>
    void for_each(F&& f) const {
        const_cast<ScorerTensors*>(this)->for_each([&](const char* n, Tensor& t) { f(n, const_cast<const Tensor&>(t)); });
    }

    void zero() {
        for_each([](const char*, Tensor& t) { std::fill(t.v.begin(), t.v.end(), 0.0); });
    }

    static ScorerTensors shaped(int K, int H, int D, int Dt) {
        ScorerTensors t;
        t.enc_w1 = Tensor::zeros({static_cast<std::size_t>(H), static_cast<std::size_t>(K)});
        t.enc_b1 = Tensor::zeros({static_cast<std::size_t>(H)});
        t.enc_w2 = Tensor::zeros({static_cast<std::size_t>(D), static_cast<std::size_t>(H)});
        t.enc_b2 = Tensor::zeros({static_cast<std::size_t>(D)});
        t.attn_query = Tensor::zeros({static_cast<std::size_t>(D)});
        t.dec_w = Tensor::zeros({static_cast<std::size_t>(D)});
        t.dec_b = Tensor::zeros({1});
        t.proj_w = Tensor::zeros({static_cast<std::size_t>(Dt), static_cast<std::size_t>(D)});
        t.proj_b = Tensor::zeros({static_cast<std::size_t>(Dt)});
        t.log_tau_emb = Tensor::zeros({1});
        t.tau_align_log = Tensor::zeros({1});
        return t;
    }
};

struct ScorerParams {
    std::string preset = "small";
    int feat_dim = kFeatureDim; // K
    int hidden = 64;            // H
    int embed_dim = 32;         // D
    int text_dim = 64;          // D_text
    ScorerTensors t;
    // fixed feature standardization, not trained
    Tensor feat_shift, feat_scale;

    double tau_emb() const { return std::exp(t.log_tau_emb[0]); }
    double tau_align_log_clamped() const { return std::clamp(t.tau_align_log[0], kTauAlignLogMin, kTauAlignLogMax); }
};

inline void preset_dims(const std::string& preset, int& hidden, int& embed_dim) {
    if (preset == "base") {
        hidden = 256;
        embed_dim = 128;
    } else if (preset == "small") {
        hidden = 64;
        embed_dim = 32;
    } else {
        raise(Errc::invalid_argument, "unknown preset: " + preset);
    }
}

inline ScorerParams init_params(const std::string& preset, int feat_dim, int text_dim, std::uint64_t seed) {
    ScorerParams p;
    p.preset = preset;
    p.feat_dim = feat_dim;
    p.text_dim = text_dim;
    preset_dims(preset, p.hidden, p.embed_dim);
    p.t = ScorerTensors::shaped(p.feat_dim, p.hidden, p.embed_dim, p.text_dim);
    Rng rng(seed);
    auto fan_in_init = [&](Tensor& w, int fan_in) {
        double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& x : w.v) x = a * (2.0 * rng.uniform() - 1.0);
    };
    fan_in_init(p.t.enc_w1, p.feat_dim);
    fan_in_init(p.t.enc_b1, p.feat_dim);
    fan_in_init(p.t.enc_w2, p.hidden);
    fan_in_init(p.t.enc_b2, p.hidden);
    // attn_query and decision layer start at zero: uniform attention, q = 0.5
    fan_in_init(p.t.proj_w, p.embed_dim);
    fan_in_init(p.t.proj_b, p.embed_dim);
    p.t.log_tau_emb[0] = 0.0;                 // tau_emb = 1
    p.t.tau_align_log[0] = 2.302585092994046; // ln 10
    p.feat_shift = Tensor::zeros({static_cast<std::size_t>(feat_dim)});
    p.feat_scale = Tensor::zeros({static_cast<std::size_t>(feat_dim)});
    std::fill(p.feat_scale.v.begin(), p.feat_scale.v.end(), 1.0);
    return p;
}

// ---------------------------------------------------------------------------

struct ForwardCache {
    bool valid = false;
    int patches = 0;
    std::vector<double> xn;     // P x K normalized features
    std::vector<double> a1;     // P x H pre-activation
    std::vector<double> hidden; // P x H
    std::vector<double> enc;    // P x D encoded patches
    std::vector<double> attn_w; // P
    std::vector<double> femb;   // D (pre-normalization)
    double norm = 0.0;
    double dec_logit = 0.0;
};

struct BatchRecord {
    PatchFeatureGrid features;
    double severity = 0.0;
    std::vector<double> prompt_emb;   // D_text, unit norm (may be empty if alignment unused)
    std::vector<double> embedding;    // D, filled by forward
    std::vector<double> embedding_hat; // D, l2-normalized
    double score = 0.5;
    ForwardCache fwd;
};

inline void forward(const ScorerParams& p, std::vector<BatchRecord>& batch) {
    const int K = p.feat_dim, H = p.hidden, D = p.embed_dim;
    for (auto& rec : batch) {
        if (rec.features.feature_dim != K) raise(Errc::invalid_argument, "feature width mismatch");
        const int P = rec.features.patch_count();
        ForwardCache& c = rec.fwd;
        c.patches = P;
        c.xn.assign(static_cast<std::size_t>(P) * K, 0.0);
        c.a1.assign(static_cast<std::size_t>(P) * H, 0.0);
        c.hidden.assign(static_cast<std::size_t>(P) * H, 0.0);
        c.enc.assign(static_cast<std::size_t>(P) * D, 0.0);
        c.attn_w.assign(P, 0.0);
        c.femb.assign(D, 0.0);

        for (int i = 0; i < P; ++i) {
            const double* f = rec.features.patch(i);
            double* xn = &c.xn[static_cast<std::size_t>(i) * K];
            for (int k = 0; k < K; ++k) xn[k] = (f[k] - p.feat_shift[k]) / p.feat_scale[k];
            double* a1 = &c.a1[static_cast<std::size_t>(i) * H];
            double* h = &c.hidden[static_cast<std::size_t>(i) * H];
            for (int j = 0; j < H; ++j) {
                double acc = p.t.enc_b1[j];
                const double* wrow = &p.t.enc_w1.v[static_cast<std::size_t>(j) * K];
                for (int k = 0; k < K; ++k) acc += wrow[k] * xn[k];
                a1[j] = acc;
                h[j] = smooth_ramp(acc);
            }
            double* e = &c.enc[static_cast<std::size_t>(i) * D];
            for (int d = 0; d < D; ++d) {
                double acc = p.t.enc_b2[d];
                const double* wrow = &p.t.enc_w2.v[static_cast<std::size_t>(d) * H];
                for (int j = 0; j < H; ++j) acc += wrow[j] * h[j];
                e[d] = acc;
            }
        }

        // attention pooling over patches
        double max_logit = -1e300;
        std::vector<double> logits(P);
        for (int i = 0; i < P; ++i) {
            const double* e = &c.enc[static_cast<std::size_t>(i) * D];
            double acc = 0.0;
            for (int d = 0; d < D; ++d) acc += e[d] * p.t.attn_query[d];
            logits[i] = acc;
            max_logit = std::max(max_logit, acc);
        }
        double denom = 0.0;
        for (int i = 0; i < P; ++i) {
            c.attn_w[i] = std::exp(logits[i] - max_logit);
            denom += c.attn_w[i];
        }
        for (int i = 0; i < P; ++i) c.attn_w[i] /= denom;

        for (int i = 0; i < P; ++i) {
            const double* e = &c.enc[static_cast<std::size_t>(i) * D];
            for (int d = 0; d < D; ++d) c.femb[d] += c.attn_w[i] * e[d];
        }

        double norm2 = 0.0;
        for (int d = 0; d < D; ++d) norm2 += c.femb[d] * c.femb[d];
        c.norm = std::max(std::sqrt(norm2), 1e-12);

        rec.embedding.assign(c.femb.begin(), c.femb.end());
        rec.embedding_hat.assign(D, 0.0);
        for (int d = 0; d < D; ++d) rec.embedding_hat[d] = c.femb[d] / c.norm;

        double z = p.t.dec_b[0];
        for (int d = 0; d < D; ++d) z += p.t.dec_w[d] * c.femb[d];
        c.dec_logit = z;
        rec.score = sigmoid(z);
        c.valid = true;
    }
}

// Maps upstream gradients (dL/dq per record, dL/dF_hat per record) back to
// encoder, attention and decision parameters. Temperature and projection
// gradients are owned by the losses and accumulated by the caller.
inline void backward(const ScorerParams& p, const std::vector<BatchRecord>& batch,
                     const std::vector<double>& dL_dq, const std::vector<std::vector<double>>& dL_dfhat,
                     ScorerTensors& grads) {
    const int K = p.feat_dim, H = p.hidden, D = p.embed_dim;
    if (dL_dq.size() != batch.size() || dL_dfhat.size() != batch.size())
        raise(Errc::invalid_argument, "upstream gradient count mismatch");

    std::vector<double> dF(D), de(D), dh(H), da1(H);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const BatchRecord& rec = batch[r];
        const ForwardCache& c = rec.fwd;
        if (!c.valid) raise(Errc::invalid_argument, "backward called before forward");
        const int P = c.patches;

        // decision layer
        double q = rec.score;
        double dz = dL_dq[r] * q * (1.0 - q);
        grads.dec_b[0] += dz;
        for (int d = 0; d < D; ++d) {
            grads.dec_w[d] += dz * c.femb[d];
            dF[d] = dz * p.t.dec_w[d];
        }

        // normalization jacobian: dF += (g - fhat (fhat . g)) / norm
        const std::vector<double>& g = dL_dfhat[r];
        if (!g.empty()) {
            double dot = 0.0;
            for (int d = 0; d < D; ++d) dot += rec.embedding_hat[d] * g[d];
            for (int d = 0; d < D; ++d) dF[d] += (g[d] - rec.embedding_hat[d] * dot) / c.norm;
        }

        // attention pooling: femb = sum_i w_i e_i, logits_i = e_i . attn_q
        double wsum = 0.0;
        std::vector<double> s(P); // e_i . dF
        for (int i = 0; i < P; ++i) {
            const double* e = &c.enc[static_cast<std::size_t>(i) * D];
            double acc = 0.0;
            for (int d = 0; d < D; ++d) acc += e[d] * dF[d];
            s[i] = acc;
            wsum += c.attn_w[i] * acc;
        }
        for (int i = 0; i < P; ++i) {
            const double* e = &c.enc[static_cast<std::size_t>(i) * D];
            const double* xn = &c.xn[static_cast<std::size_t>(i) * K];
            const double* a1 = &c.a1[static_cast<std::size_t>(i) * H];
            const double* h = &c.hidden[static_cast<std::size_t>(i) * H];
            double dlogit = c.attn_w[i] * (s[i] - wsum);
            for (int d = 0; d < D; ++d) {
                de[d] = c.attn_w[i] * dF[d] + dlogit * p.t.attn_query[d];
                grads.attn_query[d] += dlogit * e[d];
            }
            for (int j = 0; j < H; ++j) {
                double acc = 0.0;
                for (int d = 0; d < D; ++d) acc += p.t.enc_w2.v[static_cast<std::size_t>(d) * H + j] * de[d];
                dh[j] = acc;
                da1[j] = acc * smooth_ramp_grad(a1[j]);
            }
            for (int d = 0; d < D; ++d) {
                grads.enc_b2[d] += de[d];
                double* wrow = &grads.enc_w2.v[static_cast<std::size_t>(d) * H];
                for (int j = 0; j < H; ++j) wrow[j] += de[d] * h[j];
            }
            for (int j = 0; j < H; ++j) {
                grads.enc_b1[j] += da1[j];
                double* wrow = &grads.enc_w1.v[static_cast<std::size_t>(j) * K];
                for (int k = 0; k < K; ++k) wrow[k] += da1[j] * xn[k];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// AdamW with decoupled weight decay and bias-corrected moments.

struct OptimizerState {
    ScorerTensors m, v;
    std::uint64_t step = 0;
    double lr0 = 3e-6;
    double lr_min = 8e-7;
    std::uint64_t total_steps = 7000;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState for_params(const ScorerParams& p) {
        OptimizerState s;
        s.m = ScorerTensors::shaped(p.feat_dim, p.hidden, p.embed_dim, p.text_dim);
        s.v = ScorerTensors::shaped(p.feat_dim, p.hidden, p.embed_dim, p.text_dim);
        return s;
    }
};

inline double cosine_lr(std::uint64_t step, std::uint64_t total, double lr0, double lr_min) {
    if (total == 0) raise(Errc::invalid_argument, "total steps must be positive");
    double t = static_cast<double>(std::min(step, total)) / static_cast<double>(total);
    return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(3.14159265358979323846 * t));
}

inline void adamw_step(ScorerParams& params, const ScorerTensors& grads, OptimizerState& state, double lr) {
    state.step += 1;
    double b1 = state.beta1, b2 = state.beta2;
    double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    auto update = [&](Tensor& p, const Tensor& g, Tensor& m, Tensor& v) {
        if (p.size() != g.size()) raise(Errc::invalid_argument, "gradient shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m.v[i] = b1 * m.v[i] + (1.0 - b1) * g.v[i];
            v.v[i] = b2 * v.v[i] + (1.0 - b2) * g.v[i] * g.v[i];
            double mhat = m.v[i] / bc1;
            double vhat = v.v[i] / bc2;
            p.v[i] -= lr * (mhat / (std::sqrt(vhat) + state.epsilon) + state.weight_decay * p.v[i]);
        }
    };
    update(params.t.enc_w1, grads.enc_w1, state.m.enc_w1, state.v.enc_w1);
    update(params.t.enc_b1, grads.enc_b1, state.m.enc_b1, state.v.enc_b1);
    update(params.t.enc_w2, grads.enc_w2, state.m.enc_w2, state.v.enc_w2);
    update(params.t.enc_b2, grads.enc_b2, state.m.enc_b2, state.v.enc_b2);
    update(params.t.attn_query, grads.attn_query, state.m.attn_query, state.v.attn_query);
    update(params.t.dec_w, grads.dec_w, state.m.dec_w, state.v.dec_w);
    update(params.t.dec_b, grads.dec_b, state.m.dec_b, state.v.dec_b);
    update(params.t.proj_w, grads.proj_w, state.m.proj_w, state.v.proj_w);
    update(params.t.proj_b, grads.proj_b, state.m.proj_b, state.v.proj_b);
    update(params.t.log_tau_emb, grads.log_tau_emb, state.m.log_tau_emb, state.v.log_tau_emb);
    update(params.t.tau_align_log, grads.tau_align_log, state.m.tau_align_log, state.v.tau_align_log);
    // keep tau_align inside its declared range
    params.t.tau_align_log[0] = std::clamp(params.t.tau_align_log[0], kTauAlignLogMin, kTauAlignLogMax);
}

// ---------------------------------------------------------------------------
// HRQM checkpoint: magic, version, preset, dims, named tensors (f32), and an
// optional optimizer block. Field order is the format.

struct CheckpointMeta {
    int grid_rows = 8;
    int grid_cols = 8;
    int crop_size = 64;
};

namespace detail_model {

inline void write_tensor(ByteWriter& w, const std::string& name, const Tensor& t) {
    w.str16(name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto s : t.shape) w.u32(static_cast<std::uint32_t>(s));
    for (double d : t.v) w.f32(static_cast<float>(d));
}

inline Tensor read_tensor(ByteReader& r, const std::string& expect_name) {
    std::string name = r.str16();
    if (name != expect_name) raise(Errc::corrupt_data, "checkpoint tensor order: expected " + expect_name + ", got " + name);
    std::uint32_t ndim = r.u32();
    if (ndim > 4) raise(Errc::corrupt_data, "implausible tensor rank");
    Tensor t;
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        std::uint32_t s = r.u32();
        t.shape.push_back(s);
        n *= s;
    }
    t.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.v[i] = static_cast<double>(r.f32());
    return t;
}

} // namespace detail_model

inline std::vector<unsigned char> encode_checkpoint(const ScorerParams& p, const CheckpointMeta& meta,
                                                    const OptimizerState* opt = nullptr) {
    ByteWriter w;
    w.raw("HRQM", 4);
    w.u32(1);
    w.str16(p.preset);
    w.u32(static_cast<std::uint32_t>(p.feat_dim));
    w.u32(static_cast<std::uint32_t>(p.hidden));
    w.u32(static_cast<std::uint32_t>(p.embed_dim));
    w.u32(static_cast<std::uint32_t>(p.text_dim));
    w.u32(static_cast<std::uint32_t>(meta.grid_rows));
    w.u32(static_cast<std::uint32_t>(meta.grid_cols));
    w.u32(static_cast<std::uint32_t>(meta.crop_size));
    std::uint32_t count = 13;
    w.u32(count);
    const_cast<ScorerParams&>(p).t.for_each([&](const char* name, Tensor& t) { detail_model::write_tensor(w, name, t); });
    detail_model::write_tensor(w, "feat_shift", p.feat_shift);
    detail_model::write_tensor(w, "feat_scale", p.feat_scale);
    w.u8(opt ? 1 : 0);
    if (opt) {
        w.u64(opt->step);
        w.f32(static_cast<float>(opt->lr0));
        w.f32(static_cast<float>(opt->lr_min));
        w.u64(opt->total_steps);
        w.f32(static_cast<float>(opt->weight_decay));
        const_cast<OptimizerState*>(opt)->m.for_each([&](const char* name, Tensor& t) {
            detail_model::write_tensor(w, std::string("m.") + name, t);
        });
        const_cast<OptimizerState*>(opt)->v.for_each([&](const char* name, Tensor& t) {
            detail_model::write_tensor(w, std::string("v.") + name, t);
        });
    }
    return w.bytes;
}

inline ScorerParams decode_checkpoint(const std::vector<unsigned char>& bytes, CheckpointMeta* meta_out = nullptr,
                                      OptimizerState* opt_out = nullptr, bool* has_opt = nullptr) {
    ByteReader r(bytes.data(), bytes.size());
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, "HRQM", 4) != 0) raise(Errc::corrupt_data, "bad checkpoint magic");
    std::uint32_t version = r.u32();
    if (version != 1) raise(Errc::unsupported_format, "unsupported checkpoint version");
    ScorerParams p;
    p.preset = r.str16();
    p.feat_dim = static_cast<int>(r.u32());
    p.hidden = static_cast<int>(r.u32());
    p.embed_dim = static_cast<int>(r.u32());
    p.text_dim = static_cast<int>(r.u32());
    CheckpointMeta meta;
    meta.grid_rows = static_cast<int>(r.u32());
    meta.grid_cols = static_cast<int>(r.u32());
    meta.crop_size = static_cast<int>(r.u32());
    if (meta_out) *meta_out = meta;
    std::uint32_t count = r.u32();
    if (count != 13) raise(Errc::corrupt_data, "unexpected checkpoint tensor count");
    p.t = ScorerTensors::shaped(p.feat_dim, p.hidden, p.embed_dim, p.text_dim);
    p.t.for_each([&](const char* name, Tensor& t) {
        Tensor loaded = detail_model::read_tensor(r, name);
        if (loaded.size() != t.size()) raise(Errc::corrupt_data, std::string("tensor size mismatch: ") + name);
        t = std::move(loaded);
    });
    p.feat_shift = detail_model::read_tensor(r, "feat_shift");
    p.feat_scale = detail_model::read_tensor(r, "feat_scale");
    if (p.feat_shift.size() != static_cast<std::size_t>(p.feat_dim) ||
        p.feat_scale.size() != static_cast<std::size_t>(p.feat_dim))
        raise(Errc::corrupt_data, "feature normalizer size mismatch");
    std::uint8_t has = r.u8();
    if (has_opt) *has_opt = has != 0;
    if (has) {
        OptimizerState opt;
        opt.step = r.u64();
        opt.lr0 = static_cast<double>(r.f32());
        opt.lr_min = static_cast<double>(r.f32());
        opt.total_steps = r.u64();
        opt.weight_decay = static_cast<double>(r.f32());
        opt.m = ScorerTensors::shaped(p.feat_dim, p.hidden, p.embed_dim, p.text_dim);
        opt.v = ScorerTensors::shaped(p.feat_dim, p.hidden, p.embed_dim, p.text_dim);
        opt.m.for_each([&](const char* name, Tensor& t) { t = detail_model::read_tensor(r, std::string("m.") + name); });
        opt.v.for_each([&](const char* name, Tensor& t) { t = detail_model::read_tensor(r, std::string("v.") + name); });
        if (opt_out) *opt_out = std::move(opt);
    }
    if (!r.at_end()) raise(Errc::corrupt_data, "trailing bytes after checkpoint payload");
    return p;
}

inline void save_checkpoint(const std::string& path, const ScorerParams& p, const CheckpointMeta& meta,
                            const OptimizerState* opt = nullptr) {
    write_file_bytes(path, encode_checkpoint(p, meta, opt));
}

inline ScorerParams load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr,
                                    OptimizerState* opt = nullptr, bool* has_opt = nullptr) {
    return decode_checkpoint(read_file_bytes(path), meta, opt, has_opt);
}

} // namespace hirqa
