// optim.hpp - Adam and plain SGD parameter updates
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "scma/nn/network.hpp"

namespace scma::nn {

// Enumerates all trainable parameter arrays of a network in a fixed order
// (per layer: W, b, gamma, beta). Optimizer state is aligned to this order.
template <typename Fn>
void for_each_param(Network& net, Fn&& fn) {
    for (auto& ly : net.layers) {
        fn(ly.W.v.data(), ly.W.v.size());
        fn(ly.b.data(), ly.b.size());
        if (ly.bn) {
            fn(ly.bn->gamma.data(), ly.bn->gamma.size());
            fn(ly.bn->beta.data(), ly.bn->beta.size());
        }
    }
}

template <typename Fn>
void for_each_param_grad(Network& net, const Gradients& g, Fn&& fn) {
    if (g.layers.size() != net.layers.size())
        throw std::invalid_argument("for_each_param_grad: gradient layer count mismatch");
    for (size_t l = 0; l < net.layers.size(); ++l) {
        auto& ly = net.layers[l];
        const auto& lg = g.layers[l];
        if (lg.dW.v.size() != ly.W.v.size() || lg.db.size() != ly.b.size())
            throw std::invalid_argument("for_each_param_grad: gradient shape mismatch");
        fn(ly.W.v.data(), lg.dW.v.data(), ly.W.v.size());
        fn(ly.b.data(), lg.db.data(), ly.b.size());
        if (ly.bn) {
            if (lg.dgamma.size() != ly.bn->gamma.size() || lg.dbeta.size() != ly.bn->beta.size())
                throw std::invalid_argument("for_each_param_grad: batch-norm gradient mismatch");
            fn(ly.bn->gamma.data(), lg.dgamma.data(), ly.bn->gamma.size());
            fn(ly.bn->beta.data(), lg.dbeta.data(), ly.bn->beta.size());
        }
    }
}

inline size_t param_count(Network& net) {
    size_t n = 0;
    for_each_param(net, [&](double*, size_t len) { n += len; });
    return n;
}

struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long step = 0;
    std::vector<double> m, v;

    static AdamState for_network(Network& net, double lr = 1e-4) {
        AdamState s;
        s.lr = lr;
        const size_t n = param_count(net);
        s.m.assign(n, 0.0);
        s.v.assign(n, 0.0);
        return s;
    }
};

// standard bias-corrected Adam
inline void adam_step(Network& net, const Gradients& grads, AdamState& s) {
    if (s.m.size() != param_count(net))
        throw std::invalid_argument("adam_step: state size mismatch");
    ++s.step;
    const double b1t = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double b2t = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    size_t off = 0;
    for_each_param_grad(net, grads, [&](double* p, const double* g, size_t len) {
        for (size_t i = 0; i < len; ++i) {
            double& m = s.m[off + i];
            double& v = s.v[off + i];
            m = s.beta1 * m + (1.0 - s.beta1) * g[i];
            v = s.beta2 * v + (1.0 - s.beta2) * g[i] * g[i];
            const double mhat = m / b1t;
            const double vhat = v / b2t;
            p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
        }
        off += len;
    });
}

// plain gradient descent, kept for unit-testing the coupled update form
inline void sgd_step(Network& net, const Gradients& grads, double lr) {
    for_each_param_grad(net, grads, [&](double* p, const double* g, size_t len) {
        for (size_t i = 0; i < len; ++i) p[i] -= lr * g[i];
    });
}

}  // namespace scma::nn
