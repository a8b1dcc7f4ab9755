// gradcheck.hpp - finite-difference verification of the analytic gradients
#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "scma/nn/loss.hpp"
#include "scma/nn/network.hpp"
#include "scma/nn/optim.hpp"

namespace scma::nn {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst;  // "layer 2 param 3 [W]" style locator
};

// relative error with an absolute floor: gradients at roundoff scale would
// otherwise register spurious relative disagreement
inline double rel_err(double a, double b) {
    const double denom = std::max(1e-4, std::abs(a) + std::abs(b));
    return std::abs(a - b) / denom;
}

// Central finite differences of loss_fn over every trainable parameter,
// compared against the provided analytic gradients. loss_fn must be a pure
// function of the current parameters.
inline GradCheckReport compare_with_finite_diff(Network& net, const Gradients& analytic,
                                                const std::function<double()>& loss_fn,
                                                double eps) {
    GradCheckReport rep;
    size_t flat = 0;
    const char* names[4] = {"W", "b", "gamma", "beta"};
    for (size_t l = 0; l < net.layers.size(); ++l) {
        auto& ly = net.layers[l];
        const auto& lg = analytic.layers[l];
        double* arrays[4] = {ly.W.v.data(), ly.b.data(),
                             ly.bn ? ly.bn->gamma.data() : nullptr,
                             ly.bn ? ly.bn->beta.data() : nullptr};
        const double* grads[4] = {lg.dW.v.data(), lg.db.data(),
                                  ly.bn ? lg.dgamma.data() : nullptr,
                                  ly.bn ? lg.dbeta.data() : nullptr};
        size_t lens[4] = {ly.W.v.size(), ly.b.size(), ly.bn ? ly.bn->gamma.size() : 0,
                          ly.bn ? ly.bn->beta.size() : 0};
        for (int p = 0; p < 4; ++p) {
            for (size_t i = 0; i < lens[p]; ++i, ++flat) {
                double& th = arrays[p][i];
                const double orig = th;
                th = orig + eps;
                const double lp = loss_fn();
                th = orig - eps;
                const double lm = loss_fn();
                th = orig;
                const double numeric = (lp - lm) / (2.0 * eps);
                const double e = rel_err(grads[p][i], numeric);
                if (e > rep.max_rel_err) {
                    rep.max_rel_err = e;
                    rep.worst = "layer " + std::to_string(l) + " " + names[p] + "[" +
                                std::to_string(i) + "] analytic=" + std::to_string(grads[p][i]) +
                                " numeric=" + std::to_string(numeric);
                }
            }
        }
    }
    return rep;
}

// Cross-entropy gradient check on one (batch, targets) pair. Train-mode
// forward passes without running-statistics updates keep the loss a pure
// function of the parameters.
inline GradCheckReport grad_check(Network& net, const Matrix& batch, const Matrix& targets,
                                  double eps = 1e-5) {
    if (eps < 1e-7 || eps > 1e-3)
        throw std::invalid_argument("grad_check: eps out of sensible range");
    Matrix probs = net.forward(batch, Mode::train, /*update_running=*/false);
    Gradients analytic = net.backward(cross_entropy_grad(targets, probs));
    auto loss_fn = [&]() {
        return cross_entropy(targets, net.forward(batch, Mode::train, false));
    };
    return compare_with_finite_diff(net, analytic, loss_fn, eps);
}

}  // namespace scma::nn
