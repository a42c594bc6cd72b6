#pragma once

// Bidirectional InfoNCE over an N x N similarity matrix with temperature
// scale tau:
//
//   L     = 1/2 (L_AB + L_BA)
//   L_AB  = -1/|P| sum_{i in P} log( exp(tau s_ii) / sum_j exp(tau s_ij) )
//   L_BA  = same over columns: exp(tau s_ii) / sum_j exp(tau s_ji)
//
// Rows with label 0 are not in P but still appear in every denominator.
// Log-sum-exp always subtracts the running maximum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "helea/error.hpp"

namespace helea {

struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

inline std::vector<std::size_t> positive_indices(const std::vector<int>& labels) {
    std::vector<std::size_t> p;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) p.push_back(i);
    }
    return p;
}

struct InfoNceResult {
    double loss = 0.0;
    DenseMatrix d_similarity;  // dL/dS
    double d_tau = 0.0;        // dL/dtau
};

namespace detail {

inline void check_infonce_inputs(const DenseMatrix& s, const std::vector<std::size_t>& positives, double tau) {
    if (s.rows != s.cols) throw DimensionMismatch("similarity matrix must be square");
    if (positives.empty()) throw EmptyPositives("batch has no positive pairs");
    if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
    for (auto i : positives) {
        if (i >= s.rows) throw InvalidArgument("positive index out of range");
    }
}

} // namespace detail

// Loss with analytic gradients w.r.t. the similarity matrix and tau.
inline InfoNceResult infonce_loss_and_grad(const DenseMatrix& s, const std::vector<std::size_t>& positives,
                                           double tau) {
    detail::check_infonce_inputs(s, positives, tau);
    const std::size_t n = s.rows;
    const double inv_p = 1.0 / static_cast<double>(positives.size());

    InfoNceResult r;
    r.d_similarity = DenseMatrix(n, n);
    std::vector<double> prob(n);
    double loss_ab = 0.0, loss_ba = 0.0;
    double dtau_ab = 0.0, dtau_ba = 0.0;

    for (std::size_t i : positives) {
        // Row i: A_i against every B_j.
        double mx = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, tau * s(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(tau * s(i, j) - mx);
        const double lse = mx + std::log(z);
        loss_ab += lse - tau * s(i, i);
        double expected = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            prob[j] = std::exp(tau * s(i, j) - lse);
            expected += prob[j] * s(i, j);
            r.d_similarity(i, j) += 0.5 * inv_p * tau * prob[j];
        }
        r.d_similarity(i, i) -= 0.5 * inv_p * tau;
        dtau_ab += expected - s(i, i);

        // Column i: B_i against every A_j.
        mx = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, tau * s(j, i));
        z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(tau * s(j, i) - mx);
        const double lse_col = mx + std::log(z);
        loss_ba += lse_col - tau * s(i, i);
        expected = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            prob[j] = std::exp(tau * s(j, i) - lse_col);
            expected += prob[j] * s(j, i);
            r.d_similarity(j, i) += 0.5 * inv_p * tau * prob[j];
        }
        r.d_similarity(i, i) -= 0.5 * inv_p * tau;
        dtau_ba += expected - s(i, i);
    }
    r.loss = 0.5 * inv_p * (loss_ab + loss_ba);
    r.d_tau = 0.5 * inv_p * (dtau_ab + dtau_ba);
    return r;
}

inline double infonce_loss(const DenseMatrix& s, const std::vector<std::size_t>& positives, double tau) {
    return infonce_loss_and_grad(s, positives, tau).loss;
}

} // namespace helea
