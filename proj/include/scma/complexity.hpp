// complexity.hpp - arithmetic-operation accounting and closed-form cost models
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "scma/config.hpp"

namespace scma {

struct OperationCount {
    long long multiplications = 0;
    long long additions = 0;
    long long log_exp_ops = 0;

    OperationCount& operator+=(const OperationCount& o) {
        multiplications += o.multiplications;
        additions += o.additions;
        log_exp_ops += o.log_exp_ops;
        return *this;
    }
    long long total() const { return multiplications + additions + log_exp_ops; }
    bool operator==(const OperationCount&) const = default;
};

// Relative cost of the three operation classes; an addition is the unit.
struct ComplexityWeights {
    long long add_units = 1;
    long long mul_units = 10;
    long long exp_units = 20;
};

inline long long normalize_complexity(const OperationCount& c,
                                      const ComplexityWeights& w = ComplexityWeights{}) {
    return c.additions * w.add_units + c.multiplications * w.mul_units +
           c.log_exp_ops * w.exp_units;
}

// Closed-form average operation counts of log-domain MPA detection on the
// regular graph with overlap d_f = J*N/K:
//   mul     = M*K*d_f * (4*d_f*M^(d_f-1) + 5)
//   add     = M*K*d_f * (M^(d_f-1)*(4*d_f - 2 + I_t*(2 + 1/M)) + I_t*(2 - 1/N) + 5)
//   log/exp = M*K*d_f*I_t * (M^(d_f-1) + 1) + 1
inline OperationCount count_logmpa_ops(const SystemConfig& cfg, int iterations) {
    if (iterations < 1) throw std::invalid_argument("count_logmpa_ops: iterations must be >= 1");
    const double m = cfg.codebook_size;
    const double k = cfg.resources;
    const double df = cfg.overlap_degree();
    const double n = cfg.nonzero_per_codeword;
    const double it = iterations;
    const double mdf1 = std::pow(m, df - 1.0);
    const double mkdf = m * k * df;

    OperationCount c;
    c.multiplications = std::llround(mkdf * (4.0 * df * mdf1 + 5.0));
    c.additions = std::llround(mkdf * (mdf1 * (4.0 * df - 2.0 + it * (2.0 + 1.0 / m)) +
                                  it * (2.0 - 1.0 / n) + 5.0));
    c.log_exp_ops = std::llround(mkdf * it * (mdf1 + 1.0) + 1.0);
    return c;
}

// Forward-pass cost of a uniform-width decoding network (2K inputs, N_L
// hidden layers of N_HN nodes, 2J outputs):
//   mul = N_HN * (2K + N_L*N_HN + 2J),  add = N_HN*(N_L - 1) + 2J
inline OperationCount count_dnn_ops(int hidden_width, int hidden_layers, int resources,
                                    int users) {
    const long long nhn = hidden_width;
    const long long nl = hidden_layers;
    OperationCount c;
    c.multiplications = nhn * (2LL * resources + nl * nhn + 2LL * users);
    c.additions = nhn * (nl - 1) + 2LL * users;
    c.log_exp_ops = 0;
    return c;
}

}  // namespace scma
