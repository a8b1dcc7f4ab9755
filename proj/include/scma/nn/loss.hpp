// loss.hpp - binary cross-entropy over independent sigmoid outputs
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scma/nn/matrix.hpp"

namespace scma::nn {

inline constexpr double kProbFloor = 1e-12;

inline double clamp_prob(double p) {
    if (std::isnan(p)) return p;  // divergence must surface in the loss
    return std::min(1.0 - kProbFloor, std::max(kProbFloor, p));
}

// L = -sum_i [ t_i log p_i + (1 - t_i) log(1 - p_i) ], summed over outputs,
// averaged over the batch. Probabilities are floored at 1e-12 before the log.
inline double cross_entropy(const Matrix& targets, const Matrix& probs) {
    if (!targets.same_shape(probs))
        throw std::invalid_argument("cross_entropy: shape mismatch");
    double loss = 0.0;
    for (size_t i = 0; i < probs.v.size(); ++i) {
        const double p = clamp_prob(probs.v[i]);
        const double t = targets.v[i];
        loss -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    return loss / static_cast<double>(targets.rows);
}

// dL/dp of cross_entropy (the same clamping, so it is the exact gradient of
// the computed loss away from the floor).
inline Matrix cross_entropy_grad(const Matrix& targets, const Matrix& probs) {
    if (!targets.same_shape(probs))
        throw std::invalid_argument("cross_entropy_grad: shape mismatch");
    Matrix g(probs.rows, probs.cols);
    const double inv_batch = 1.0 / static_cast<double>(targets.rows);
    for (size_t i = 0; i < probs.v.size(); ++i) {
        const double p = clamp_prob(probs.v[i]);
        const double t = targets.v[i];
        g.v[i] = (-t / p + (1.0 - t) / (1.0 - p)) * inv_batch;
    }
    return g;
}

}  // namespace scma::nn
