#pragma once

// Independent exhaustive-enumeration implementations of the pair-based
// losses, written against the loss definitions directly (plain sigmoid/log
// BCE instead of the softplus form). Test-only; the implementation under
// test must match these to 1e-10 on small batches.

#include <cmath>
#include <vector>

namespace oracle {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double bce(double x, double t) {
    // -t ln sigma(x) - (1-t) ln sigma(-x)
    return -t * std::log(sigmoid(x)) - (1.0 - t) * std::log(sigmoid(-x));
}

struct Pair {
    int i, j;
    double gap;
};

inline std::vector<Pair> pairs_over(const std::vector<double>& v, double threshold) {
    std::vector<Pair> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) {
            double g = std::abs(v[i] - v[j]);
            if (g > threshold) out.push_back({static_cast<int>(i), static_cast<int>(j), g});
        }
    return out;
}

inline double ranknet(const std::vector<double>& q, const std::vector<double>& d, double t_d) {
    auto ps = pairs_over(d, t_d);
    double total = 0.0;
    std::size_t combos = 0;
    for (std::size_t a = 0; a < ps.size(); ++a)
        for (std::size_t b = a + 1; b < ps.size(); ++b) {
            if (ps[a].gap == ps[b].gap) continue;
            double y = ps[a].gap > ps[b].gap ? 1.0 : 0.0;
            double dq_a = std::abs(q[ps[a].i] - q[ps[a].j]);
            double dq_b = std::abs(q[ps[b].i] - q[ps[b].j]);
            total += bce(dq_a, y) + bce(dq_b, 1.0 - y);
            ++combos;
        }
    return combos == 0 ? 0.0 : total / (2.0 * static_cast<double>(combos));
}

inline double mreg(const std::vector<double>& q, const std::vector<double>& d) {
    double total = 0.0;
    std::size_t n = q.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            total += std::log(1.0 + std::exp((q[i] - q[j]) * (d[i] - d[j])));
        }
    return total / static_cast<double>(n * (n - 1));
}

inline double ranking(const std::vector<double>& q, const std::vector<double>& d, double t_d, double lambda_mreg) {
    return ranknet(q, d, t_d) + lambda_mreg * mreg(q, d);
}

inline double edist(const std::vector<std::vector<double>>& fhat, const std::vector<double>& q, double t_q,
                    double tau) {
    auto ps = pairs_over(q, t_q);
    auto delta_f = [&](const Pair& p) {
        double dot = 0.0;
        for (std::size_t k = 0; k < fhat[p.i].size(); ++k) dot += fhat[p.i][k] * fhat[p.j][k];
        return std::exp(dot / tau);
    };
    double total = 0.0;
    std::size_t combos = 0;
    for (std::size_t a = 0; a < ps.size(); ++a)
        for (std::size_t b = a + 1; b < ps.size(); ++b) {
            if (ps[a].gap == ps[b].gap) continue;
            double y = ps[a].gap < ps[b].gap ? 1.0 : 0.0;
            total += bce(delta_f(ps[a]), y) + bce(delta_f(ps[b]), 1.0 - y);
            ++combos;
        }
    return combos == 0 ? 0.0 : total / (2.0 * static_cast<double>(combos));
}

inline double cov(const std::vector<std::vector<double>>& fhat) {
    std::size_t n = fhat.size(), dim = fhat[0].size();
    if (dim < 2) return 0.0;
    std::vector<double> mean(dim, 0.0);
    for (const auto& f : fhat)
        for (std::size_t k = 0; k < dim; ++k) mean[k] += f[k] / static_cast<double>(n);
    double loss = 0.0;
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) {
            if (a == b) continue;
            double s = 0.0;
            for (std::size_t r = 0; r < n; ++r) s += (fhat[r][a] - mean[a]) * (fhat[r][b] - mean[b]);
            s /= static_cast<double>(n - 1);
            loss += s * s;
        }
    return loss / (static_cast<double>(dim) * dim);
}

inline double embdist(const std::vector<std::vector<double>>& fhat, const std::vector<double>& q, double t_q,
                      double tau, double lambda_cov) {
    return edist(fhat, q, t_q, tau) + lambda_cov * cov(fhat);
}

// Symmetric InfoNCE on precomputed unit vectors: s = scale * vhat . text^T.
inline double align(const std::vector<std::vector<double>>& vhat, const std::vector<std::vector<double>>& text,
                    double scale) {
    std::size_t n = vhat.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double num = 0.0, den_row = 0.0, den_col = 0.0;
        for (std::size_t k = 0; k < vhat[i].size(); ++k) num += vhat[i][k] * text[i][k];
        num = std::exp(scale * num);
        for (std::size_t j = 0; j < n; ++j) {
            double srow = 0.0, scol = 0.0;
            for (std::size_t k = 0; k < vhat[i].size(); ++k) {
                srow += vhat[i][k] * text[j][k];
                scol += vhat[j][k] * text[i][k];
            }
            den_row += std::exp(scale * srow);
            den_col += std::exp(scale * scol);
        }
        total += -std::log(num / den_row) - std::log(num / den_col);
    }
    return total / (2.0 * static_cast<double>(n));
}

} // namespace oracle
