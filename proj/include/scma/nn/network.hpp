// network.hpp - dense layers, batch normalization, forward/backward passes
#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "scma/nn/matrix.hpp"
#include "scma/rng.hpp"

namespace scma::nn {

enum class Activation { identity, relu, tanh, sigmoid };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "sigmoid") return Activation::sigmoid;
    throw std::invalid_argument("unknown activation: " + s);
}

inline double activate(Activation a, double x) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    }
    return x;
}

// derivative expressed through pre-activation x and output y
inline double activate_grad(Activation a, double x, double y) {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: return 1.0 - y * y;
        case Activation::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

// Per-feature batch normalization state. Train-time statistics come from the
// batch; inference uses the exponential moving averages.
struct BatchNorm {
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;
    double eps = 1e-8;
    double momentum = 0.99;

    BatchNorm() = default;
    explicit BatchNorm(size_t n)
        : gamma(n, 1.0), beta(n, 0.0), running_mean(n, 0.0), running_var(n, 1.0) {}

    size_t width() const { return gamma.size(); }
    void validate() const {
        if (!(eps > 0.0)) throw std::invalid_argument("BatchNorm: eps must be positive");
        if (!(momentum > 0.0 && momentum < 1.0))
            throw std::invalid_argument("BatchNorm: momentum must be in (0,1)");
        for (double v : running_var)
            if (v < 0.0) throw std::invalid_argument("BatchNorm: negative running variance");
    }
};

// running <- momentum * running + (1 - momentum) * batch
inline void update_running_stats(BatchNorm& bn, std::span<const double> batch_mean,
                                 std::span<const double> batch_var) {
    for (size_t k = 0; k < bn.width(); ++k) {
        bn.running_mean[k] = bn.momentum * bn.running_mean[k] + (1.0 - bn.momentum) * batch_mean[k];
        bn.running_var[k] = bn.momentum * bn.running_var[k] + (1.0 - bn.momentum) * batch_var[k];
    }
}

struct DenseLayer {
    Matrix W;               // n_in x n_out
    std::vector<double> b;  // n_out
    Activation act = Activation::identity;
    std::optional<BatchNorm> bn;

    size_t in_width() const { return W.rows; }
    size_t out_width() const { return W.cols; }
};

// uniform on [-sqrt(6/(n_in+n_out)), +sqrt(6/(n_in+n_out))]: zero mean,
// variance 2/(n_in+n_out)
inline Matrix xavier_init(size_t n_in, size_t n_out, Rng& rng) {
    if (n_in < 1 || n_out < 1) throw std::invalid_argument("xavier_init: widths must be >= 1");
    const double limit = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix w(n_in, n_out);
    for (double& x : w.v) x = u(rng);
    return w;
}

struct LayerGrads {
    Matrix dW;
    std::vector<double> db, dgamma, dbeta;
};

struct Gradients {
    std::vector<LayerGrads> layers;
    Matrix input;  // dL/dX of the whole network
};

enum class Mode { train, infer };

class Network {
  public:
    std::vector<DenseLayer> layers;

    size_t input_width() const { return layers.front().in_width(); }
    size_t output_width() const { return layers.back().out_width(); }

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("Network: needs at least one layer");
        for (size_t l = 0; l < layers.size(); ++l) {
            const auto& ly = layers[l];
            if (ly.b.size() != ly.out_width())
                throw std::invalid_argument("Network: bias width mismatch in layer " +
                                            std::to_string(l));
            if (ly.bn && ly.bn->width() != ly.out_width())
                throw std::invalid_argument("Network: batch-norm width mismatch in layer " +
                                            std::to_string(l));
            if (ly.bn) ly.bn->validate();
            if (l + 1 < layers.size() && ly.out_width() != layers[l + 1].in_width())
                throw std::invalid_argument("Network: widths do not chain at layer " +
                                            std::to_string(l));
        }
    }

    // Train-mode forward: batch statistics for batch-norm, all intermediate
    // activations retained for backward(). Running statistics are updated
    // unless update_running is false (finite-difference checks use that).
    Matrix forward(const Matrix& x, Mode mode, bool update_running = true) {
        if (mode == Mode::infer) return infer(x);
        if (x.cols != input_width())
            throw std::invalid_argument("Network: input width mismatch");
        cache_.assign(layers.size(), Cache{});
        Matrix cur = x;
        for (size_t l = 0; l < layers.size(); ++l) {
            auto& ly = layers[l];
            Cache& cc = cache_[l];
            cc.x = cur;
            Matrix z = matmul(cur, ly.W);
            for (size_t r = 0; r < z.rows; ++r)
                for (size_t c = 0; c < z.cols; ++c) z(r, c) += ly.b[c];
            if (ly.bn) {
                if (z.rows < 2)
                    throw std::invalid_argument(
                        "Network: batch normalization needs batch size >= 2 in train mode");
                const size_t n = z.cols;
                const double bsz = static_cast<double>(z.rows);
                cc.mu.assign(n, 0.0);
                cc.var.assign(n, 0.0);
                for (size_t r = 0; r < z.rows; ++r)
                    for (size_t c = 0; c < n; ++c) cc.mu[c] += z(r, c);
                for (double& m : cc.mu) m /= bsz;
                for (size_t r = 0; r < z.rows; ++r)
                    for (size_t c = 0; c < n; ++c) {
                        const double d = z(r, c) - cc.mu[c];
                        cc.var[c] += d * d;
                    }
                for (double& s : cc.var) s /= bsz;
                cc.z = z;
                cc.zhat = Matrix(z.rows, n);
                Matrix a(z.rows, n);
                for (size_t c = 0; c < n; ++c) {
                    const double inv = 1.0 / std::sqrt(cc.var[c] + ly.bn->eps);
                    for (size_t r = 0; r < z.rows; ++r) {
                        cc.zhat(r, c) = (z(r, c) - cc.mu[c]) * inv;
                        a(r, c) = ly.bn->gamma[c] * cc.zhat(r, c) + ly.bn->beta[c];
                    }
                }
                if (update_running) update_running_stats(*ly.bn, cc.mu, cc.var);
                cc.a = std::move(a);
            } else {
                cc.z = z;
                cc.a = std::move(z);
            }
            cc.y = Matrix(cc.a.rows, cc.a.cols);
            for (size_t i = 0; i < cc.a.v.size(); ++i) cc.y.v[i] = activate(ly.act, cc.a.v[i]);
            cur = cc.y;
        }
        have_cache_ = true;
        return cur;
    }

    // Inference: running averages for batch-norm, no state mutation.
    Matrix infer(const Matrix& x) const {
        if (x.cols != input_width())
            throw std::invalid_argument("Network: input width mismatch");
        Matrix cur = x;
        for (const auto& ly : layers) {
            Matrix z = matmul(cur, ly.W);
            for (size_t r = 0; r < z.rows; ++r)
                for (size_t c = 0; c < z.cols; ++c) z(r, c) += ly.b[c];
            if (ly.bn) {
                for (size_t c = 0; c < z.cols; ++c) {
                    const double inv = 1.0 / std::sqrt(ly.bn->running_var[c] + ly.bn->eps);
                    for (size_t r = 0; r < z.rows; ++r)
                        z(r, c) =
                            ly.bn->gamma[c] * (z(r, c) - ly.bn->running_mean[c]) * inv +
                            ly.bn->beta[c];
                }
            }
            for (double& v : z.v) v = activate(ly.act, v);
            cur = std::move(z);
        }
        return cur;
    }

    // Reverse-mode gradients for the batch of the last train-mode forward.
    // Gradients flow through the batch statistics (full batch-norm backward).
    Gradients backward(const Matrix& dLdY) const {
        if (!have_cache_) throw std::logic_error("Network: backward without retained forward");
        if (!dLdY.same_shape(cache_.back().y))
            throw std::invalid_argument("Network: output gradient shape mismatch");
        Gradients g;
        g.layers.resize(layers.size());
        Matrix dy = dLdY;
        for (size_t li = layers.size(); li-- > 0;) {
            const auto& ly = layers[li];
            const Cache& cc = cache_[li];
            LayerGrads& lg = g.layers[li];

            Matrix da(dy.rows, dy.cols);
            for (size_t i = 0; i < dy.v.size(); ++i)
                da.v[i] = dy.v[i] * activate_grad(ly.act, cc.a.v[i], cc.y.v[i]);

            Matrix dz;
            if (ly.bn) {
                const size_t n = da.cols;
                const double bsz = static_cast<double>(da.rows);
                lg.dgamma.assign(n, 0.0);
                lg.dbeta.assign(n, 0.0);
                dz = Matrix(da.rows, n);
                for (size_t c = 0; c < n; ++c) {
                    const double inv = 1.0 / std::sqrt(cc.var[c] + ly.bn->eps);
                    double sum_dzh = 0.0, sum_dzh_zm = 0.0;
                    for (size_t r = 0; r < da.rows; ++r) {
                        lg.dgamma[c] += da(r, c) * cc.zhat(r, c);
                        lg.dbeta[c] += da(r, c);
                        const double dzh = da(r, c) * ly.bn->gamma[c];
                        sum_dzh += dzh;
                        sum_dzh_zm += dzh * (cc.z(r, c) - cc.mu[c]);
                    }
                    const double dvar = sum_dzh_zm * (-0.5) * inv * inv * inv;
                    double sum_zm = 0.0;
                    for (size_t r = 0; r < da.rows; ++r) sum_zm += cc.z(r, c) - cc.mu[c];
                    const double dmu = -inv * sum_dzh + dvar * (-2.0 / bsz) * sum_zm;
                    for (size_t r = 0; r < da.rows; ++r) {
                        const double dzh = da(r, c) * ly.bn->gamma[c];
                        dz(r, c) = dzh * inv +
                                   dvar * 2.0 * (cc.z(r, c) - cc.mu[c]) / bsz + dmu / bsz;
                    }
                }
            } else {
                dz = std::move(da);
            }

            lg.db.assign(ly.out_width(), 0.0);
            for (size_t r = 0; r < dz.rows; ++r)
                for (size_t c = 0; c < dz.cols; ++c) lg.db[c] += dz(r, c);
            lg.dW = matmul_at_b(cc.x, dz);
            dy = matmul_a_bt(dz, ly.W);
        }
        g.input = std::move(dy);
        return g;
    }

    void drop_cache() {
        cache_.clear();
        have_cache_ = false;
    }

  private:
    struct Cache {
        Matrix x, z, zhat, a, y;
        std::vector<double> mu, var;
    };
    std::vector<Cache> cache_;
    bool have_cache_ = false;
};

// Fully-connected stack: widths[0] inputs, widths.back() outputs, hidden
// layers with hidden_act (+ batch-norm when bn_hidden), output layer with
// out_act and no batch-norm. Weights Xavier-initialized, biases zero.
inline Network make_mlp(const std::vector<size_t>& widths, Activation hidden_act,
                        Activation out_act, bool bn_hidden, Rng& rng) {
    if (widths.size() < 2) throw std::invalid_argument("make_mlp: need at least two widths");
    Network net;
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        DenseLayer ly;
        ly.W = xavier_init(widths[l], widths[l + 1], rng);
        ly.b.assign(widths[l + 1], 0.0);
        const bool last = (l + 2 == widths.size());
        ly.act = last ? out_act : hidden_act;
        if (!last && bn_hidden) ly.bn = BatchNorm(widths[l + 1]);
        net.layers.push_back(std::move(ly));
    }
    net.validate();
    return net;
}

}  // namespace scma::nn
