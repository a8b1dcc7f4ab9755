// channel.hpp - bit mapping, superposition, Eb/N0 conversion and the AWGN channel
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "scma/codebook.hpp"
#include "scma/config.hpp"
#include "scma/rng.hpp"

namespace scma {

// Per-real-component channel gains, length 2K (re, im of resource 0, 1, ...).
// Constant across frames; no fading.
struct ChannelGain {
    std::vector<double> g;

    static ChannelGain ones(int resources) {
        return ChannelGain{std::vector<double>(static_cast<size_t>(2) * resources, 1.0)};
    }
    int resources() const { return static_cast<int>(g.size() / 2); }
    void validate() const {
        if (g.empty() || g.size() % 2 != 0)
            throw std::invalid_argument("ChannelGain: length must be positive and even");
        for (double v : g)
            if (!std::isfinite(v)) throw std::invalid_argument("ChannelGain: non-finite entry");
    }
};

// Interleaved real observation of one frame plus the per-real-component
// noise variance it was generated with (0 when noiseless).
struct ReceivedSignal {
    std::vector<double> y;
    double noise_var_per_component = 0.0;

    int resources() const { return static_cast<int>(y.size() / 2); }
};

// big-endian: bits[0] is the most significant bit of the symbol index
inline int bits_to_symbol(std::span<const std::uint8_t> bits) {
    int s = 0;
    for (auto b : bits) s = (s << 1) | (b & 1);
    return s;
}

inline std::vector<std::uint8_t> symbol_to_bits(int symbol, int bits_per_symbol) {
    std::vector<std::uint8_t> b(static_cast<size_t>(bits_per_symbol));
    for (int i = 0; i < bits_per_symbol; ++i)
        b[i] = static_cast<std::uint8_t>((symbol >> (bits_per_symbol - 1 - i)) & 1);
    return b;
}

inline const std::vector<cplx>& encode_user(const Codebook& cb, int user,
                                            std::span<const std::uint8_t> bits) {
    if (static_cast<int>(bits.size()) != cb.bits_per_symbol())
        throw std::invalid_argument("encode_user: expected " +
                                    std::to_string(cb.bits_per_symbol()) + " bits");
    return cb.codeword(user, bits_to_symbol(bits));
}

// Serialize K complex values to the interleaved 2K real layout
// (re, im per resource, resources ascending).
inline void interleave_into(std::span<const cplx> cw, std::span<double> out) {
    for (size_t k = 0; k < cw.size(); ++k) {
        out[2 * k] = cw[k].real();
        out[2 * k + 1] = cw[k].imag();
    }
}

// Gain-weighted superposition of all users' codewords: accumulate the user
// sum first, then scale component-wise by the gains.
inline std::vector<double> superpose(std::span<const std::vector<cplx>> codewords,
                                     const ChannelGain& gains) {
    const size_t n = gains.g.size();
    std::vector<double> acc(n, 0.0);
    for (const auto& cw : codewords) {
        if (cw.size() * 2 != n)
            throw std::invalid_argument("superpose: codeword length mismatch");
        for (size_t k = 0; k < cw.size(); ++k) {
            acc[2 * k] += cw[k].real();
            acc[2 * k + 1] += cw[k].imag();
        }
    }
    for (size_t i = 0; i < n; ++i) acc[i] *= gains.g[i];
    return acc;
}

inline double ebn0_db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// SNR = (Eb/N0) * m * J / K
inline double ebn0_to_snr(double ebn0_linear, const SystemConfig& cfg) {
    if (!(ebn0_linear > 0.0))
        throw std::invalid_argument("ebn0_to_snr: Eb/N0 must be positive");
    return ebn0_linear * cfg.bits_per_symbol * cfg.users / cfg.resources;
}

// Total noise power E[||n||^2] = E[||ybar||^2] / SNR spread uniformly over the
// 2K real components, so sigma_c^2 = P / (SNR * 2K) per component.
inline double noise_var_per_component(double ensemble_power, double snr_linear, int resources) {
    return ensemble_power / (snr_linear * 2.0 * resources);
}

inline ReceivedSignal add_awgn(std::span<const double> clean, double ebn0_linear,
                               const SystemConfig& cfg, double signal_power_estimate, Rng& rng) {
    if (!(signal_power_estimate > 0.0))
        throw std::invalid_argument("add_awgn: signal power must be positive");
    const double snr = ebn0_to_snr(ebn0_linear, cfg);
    const double var = noise_var_per_component(signal_power_estimate, snr, cfg.resources);
    ReceivedSignal r;
    r.y.assign(clean.begin(), clean.end());
    r.noise_var_per_component = var;
    std::normal_distribution<double> n(0.0, std::sqrt(var));
    for (double& v : r.y) v += n(rng);
    return r;
}

inline ReceivedSignal without_noise(std::span<const double> clean) {
    ReceivedSignal r;
    r.y.assign(clean.begin(), clean.end());
    r.noise_var_per_component = 0.0;
    return r;
}

// Exact E[||ybar||^2] under independent uniform user symbols:
//   sum_j mean_a ||v_j(a)||^2 + sum_{i != j} <vbar_i, vbar_j>
// with v_j(a) the gain-scaled interleaved codeword and vbar_j its mean over a.
// The cross terms vanish for zero-mean codebooks but are kept for generality.
inline double ensemble_power(const Codebook& cb, const ChannelGain& gains) {
    gains.validate();
    if (gains.resources() != cb.resources())
        throw std::invalid_argument("ensemble_power: gain length mismatch");
    const size_t n = gains.g.size();
    double total_mean_sq = 0.0;
    std::vector<double> vbar_sum(n, 0.0);
    double vbar_sq = 0.0;
    std::vector<double> v(n), vbar(n);
    for (int j = 0; j < cb.users(); ++j) {
        std::fill(vbar.begin(), vbar.end(), 0.0);
        double mean_sq = 0.0;
        for (int a = 0; a < cb.size(); ++a) {
            interleave_into(cb.codeword(j, a), v);
            for (size_t i = 0; i < n; ++i) {
                v[i] *= gains.g[i];
                mean_sq += v[i] * v[i];
                vbar[i] += v[i];
            }
        }
        total_mean_sq += mean_sq / cb.size();
        for (size_t i = 0; i < n; ++i) {
            vbar[i] /= cb.size();
            vbar_sum[i] += vbar[i];
            vbar_sq += vbar[i] * vbar[i];
        }
    }
    double sum_sq = 0.0;
    for (size_t i = 0; i < n; ++i) sum_sq += vbar_sum[i] * vbar_sum[i];
    return total_mean_sq + (sum_sq - vbar_sq);
}

}  // namespace scma
