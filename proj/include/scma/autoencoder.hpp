// autoencoder.hpp - end-to-end codebook learning: per-user encoders, masked
// superposition, channel layer, shared decoder
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "scma/channel.hpp"
#include "scma/codebook.hpp"
#include "scma/factor_graph.hpp"
#include "scma/nn/checkpoint.hpp"
#include "scma/nn/loss.hpp"
#include "scma/nn/network.hpp"
#include "scma/nn/optim.hpp"
#include "scma/rng.hpp"

namespace scma {

struct EncoderArch {
    int hidden_layers = 4;
    int hidden_width = 32;
};

struct AeDecoderArch {
    int hidden_layers = 5;
    int hidden_width = 48;
};

// J per-user encoder networks (m bits -> 2K, tanh output bounded to [-1,1])
// whose outputs are zeroed off the mapping masks, summed, scaled by the
// channel gains, noise-corrupted, and fed to a shared decoding network.
struct Autoencoder {
    SystemConfig cfg;
    std::vector<MappingMask> masks;
    ChannelGain gains;
    std::vector<nn::Network> encoders;
    nn::Network decoder;
};

inline Autoencoder build_autoencoder(const SystemConfig& cfg,
                                     const std::vector<MappingMask>& masks,
                                     const EncoderArch& enc_arch, const AeDecoderArch& dec_arch,
                                     const ChannelGain& gains, Rng& rng) {
    if (static_cast<int>(masks.size()) != cfg.users)
        throw std::invalid_argument("build_autoencoder: need one mask per user");
    for (const auto& m : masks) {
        m.validate();
        if (m.resources() != cfg.resources)
            throw std::invalid_argument("build_autoencoder: mask length mismatch");
        if (m.occupied() == 0) throw std::invalid_argument("build_autoencoder: empty mask");
    }
    gains.validate();
    if (gains.resources() != cfg.resources)
        throw std::invalid_argument("build_autoencoder: gain length mismatch");

    Autoencoder ae;
    ae.cfg = cfg;
    ae.masks = masks;
    ae.gains = gains;
    std::vector<size_t> enc_widths;
    enc_widths.push_back(static_cast<size_t>(cfg.bits_per_symbol));
    for (int l = 0; l < enc_arch.hidden_layers; ++l)
        enc_widths.push_back(static_cast<size_t>(enc_arch.hidden_width));
    enc_widths.push_back(static_cast<size_t>(2) * cfg.resources);
    for (int j = 0; j < cfg.users; ++j)
        ae.encoders.push_back(nn::make_mlp(enc_widths, nn::Activation::tanh,
                                           nn::Activation::tanh, /*bn_hidden=*/true, rng));
    std::vector<size_t> dec_widths;
    dec_widths.push_back(static_cast<size_t>(2) * cfg.resources);
    for (int l = 0; l < dec_arch.hidden_layers; ++l)
        dec_widths.push_back(static_cast<size_t>(dec_arch.hidden_width));
    dec_widths.push_back(static_cast<size_t>(cfg.frame_bits()));
    ae.decoder = nn::make_mlp(dec_widths, nn::Activation::tanh, nn::Activation::sigmoid,
                              /*bn_hidden=*/true, rng);
    return ae;
}

struct AeForwardResult {
    nn::Matrix clean;  // gain-scaled masked user sum, batch x 2K
    nn::Matrix noisy;  // decoder input
    nn::Matrix probs;  // decoder output, batch x mJ
    double sigma_c2 = 0.0;
    double batch_power = 0.0;  // batch estimate of E[||ybar||^2]
};

namespace detail {

// masked encoder sum scaled by the gains; encoders run in the given mode
inline nn::Matrix ae_clean_sum(Autoencoder& ae, const nn::Matrix& bits, nn::Mode mode) {
    const int m = ae.cfg.bits_per_symbol;
    if (bits.cols != static_cast<size_t>(ae.cfg.frame_bits()))
        throw std::invalid_argument("ae_forward: bits width must be m*J");
    nn::Matrix sum(bits.rows, static_cast<size_t>(2) * ae.cfg.resources);
    nn::Matrix user_bits(bits.rows, static_cast<size_t>(m));
    for (int j = 0; j < ae.cfg.users; ++j) {
        for (size_t r = 0; r < bits.rows; ++r)
            for (int c = 0; c < m; ++c)
                user_bits(r, c) = bits(r, static_cast<size_t>(j) * m + c);
        nn::Matrix out = mode == nn::Mode::train ? ae.encoders[j].forward(user_bits, mode)
                                                 : ae.encoders[j].infer(user_bits);
        const auto& mask = ae.masks[j].bits;
        for (size_t r = 0; r < out.rows; ++r)
            for (size_t c = 0; c < out.cols; ++c)
                if (mask[c]) sum(r, c) += out(r, c);
    }
    for (size_t r = 0; r < sum.rows; ++r)
        for (size_t c = 0; c < sum.cols; ++c) sum(r, c) *= ae.gains.g[c];
    return sum;
}

inline double batch_mean_power(const nn::Matrix& clean) {
    double p = 0.0;
    for (double v : clean.v) p += v * v;
    return clean.rows ? p / static_cast<double>(clean.rows) : 0.0;
}

}  // namespace detail

// Forward pass with fresh AWGN at the given Eb/N0. The noise variance uses the
// batch estimate of the ensemble power (the learned codewords move during
// training, so no closed-form power exists). noise_rng == nullptr disables the
// channel noise entirely.
inline AeForwardResult ae_forward(Autoencoder& ae, const nn::Matrix& bits, double ebn0_db,
                                  Rng* noise_rng, nn::Mode mode) {
    AeForwardResult r;
    r.clean = detail::ae_clean_sum(ae, bits, mode);
    r.batch_power = detail::batch_mean_power(r.clean);
    r.noisy = r.clean;
    if (noise_rng != nullptr && r.batch_power > 0.0) {
        const double snr = ebn0_to_snr(ebn0_db_to_linear(ebn0_db), ae.cfg);
        r.sigma_c2 = noise_var_per_component(r.batch_power, snr, ae.cfg.resources);
        std::normal_distribution<double> n(0.0, std::sqrt(r.sigma_c2));
        for (double& v : r.noisy.v) v += n(*noise_rng);
    }
    r.probs = mode == nn::Mode::train ? ae.decoder.forward(r.noisy, mode)
                                      : ae.decoder.infer(r.noisy);
    return r;
}

// Forward pass with a caller-supplied noise matrix; used by the
// finite-difference gradient checks, which need the corruption frozen.
inline AeForwardResult ae_forward_frozen(Autoencoder& ae, const nn::Matrix& bits,
                                         const nn::Matrix& noise, nn::Mode mode) {
    AeForwardResult r;
    r.clean = detail::ae_clean_sum(ae, bits, mode);
    if (!noise.same_shape(r.clean))
        throw std::invalid_argument("ae_forward_frozen: noise shape mismatch");
    r.batch_power = detail::batch_mean_power(r.clean);
    r.noisy = r.clean;
    for (size_t i = 0; i < r.noisy.v.size(); ++i) r.noisy.v[i] += noise.v[i];
    r.probs = mode == nn::Mode::train ? ae.decoder.forward(r.noisy, mode)
                                      : ae.decoder.infer(r.noisy);
    return r;
}

struct AeGradients {
    std::vector<nn::Gradients> encoders;
    nn::Gradients decoder;
};

// Reverse pass of the end-to-end objective. The additive noise is a constant
// with respect to the parameters, so the decoder's input gradient passes
// through the gain multiply and the masks straight into each encoder.
inline AeGradients ae_backward(Autoencoder& ae, const nn::Matrix& dLdProbs) {
    AeGradients g;
    g.decoder = ae.decoder.backward(dLdProbs);
    nn::Matrix dsum = g.decoder.input;  // dL/d(noisy) == dL/d(clean sum after gains)
    for (size_t r = 0; r < dsum.rows; ++r)
        for (size_t c = 0; c < dsum.cols; ++c) dsum(r, c) *= ae.gains.g[c];
    g.encoders.resize(ae.encoders.size());
    nn::Matrix denc(dsum.rows, dsum.cols);
    for (int j = 0; j < ae.cfg.users; ++j) {
        const auto& mask = ae.masks[j].bits;
        for (size_t r = 0; r < dsum.rows; ++r)
            for (size_t c = 0; c < dsum.cols; ++c)
                denc(r, c) = mask[c] ? dsum(r, c) : 0.0;
        g.encoders[j] = ae.encoders[j].backward(denc);
    }
    return g;
}

struct AeHyper {
    double train_ebn0_db = 5.0;
    std::size_t batch = 256;
    std::size_t samples = 200000;  // total presentations; steps = ceil(samples / batch)
    double lr = 1e-3;
    std::uint64_t seed = 1;
};

struct AeTrainResult {
    std::vector<double> loss_curve;  // per step
    long long coverage = 0;          // distinct joint symbols visited
    long long pattern_total = 0;     // M^J
    double final_loss = 0.0;         // mean loss of one full-pattern pass at train Eb/N0
    long long steps = 0;
};

namespace detail {

inline long long joint_pattern_count(const SystemConfig& cfg) {
    long long n = 1;
    for (int j = 0; j < cfg.users; ++j) {
        n *= cfg.codebook_size;
        if (n > (1LL << 24))
            throw std::invalid_argument("autoencoder: M^J too large for exhaustive coverage");
    }
    return n;
}

inline void pattern_to_bits(long long pattern, const SystemConfig& cfg, double* row) {
    const int m = cfg.bits_per_symbol;
    for (int j = cfg.users - 1; j >= 0; --j) {
        const int sym = static_cast<int>(pattern % cfg.codebook_size);
        pattern /= cfg.codebook_size;
        for (int b = 0; b < m; ++b)
            row[j * m + b] = (sym >> (m - 1 - b)) & 1;
    }
}

}  // namespace detail

// End-to-end Adam training. Batches cycle a permuted enumeration of all M^J
// joint bit patterns (reshuffled each pass), which guarantees full coverage
// deterministically once steps*batch >= M^J; the coverage counter reports it.
inline AeTrainResult train_autoencoder(Autoencoder& ae, const AeHyper& hyper) {
    if (hyper.batch < 2) throw std::invalid_argument("train_autoencoder: batch must be >= 2");
    const long long npat = detail::joint_pattern_count(ae.cfg);
    AeTrainResult res;
    res.pattern_total = npat;
    res.steps = static_cast<long long>((hyper.samples + hyper.batch - 1) / hyper.batch);
    if (res.steps < 1) throw std::invalid_argument("train_autoencoder: no training steps");

    std::vector<nn::AdamState> enc_adam;
    for (auto& e : ae.encoders) enc_adam.push_back(nn::AdamState::for_network(e, hyper.lr));
    nn::AdamState dec_adam = nn::AdamState::for_network(ae.decoder, hyper.lr);

    Rng noise_rng(derive_seed(hyper.seed, 0xae1));
    Rng perm_rng(derive_seed(hyper.seed, 0xae2));
    std::vector<long long> perm(static_cast<size_t>(npat));
    std::iota(perm.begin(), perm.end(), 0LL);
    std::shuffle(perm.begin(), perm.end(), perm_rng);
    std::vector<bool> visited(static_cast<size_t>(npat), false);
    size_t cursor = 0;

    nn::Matrix bits(hyper.batch, static_cast<size_t>(ae.cfg.frame_bits()));
    for (long long step = 0; step < res.steps; ++step) {
        for (size_t r = 0; r < hyper.batch; ++r) {
            if (cursor == perm.size()) {
                std::shuffle(perm.begin(), perm.end(), perm_rng);
                cursor = 0;
            }
            const long long pat = perm[cursor++];
            visited[static_cast<size_t>(pat)] = true;
            detail::pattern_to_bits(pat, ae.cfg, bits.row(r));
        }
        AeForwardResult f = ae_forward(ae, bits, hyper.train_ebn0_db, &noise_rng,
                                       nn::Mode::train);
        const double loss = nn::cross_entropy(bits, f.probs);
        if (!std::isfinite(loss))
            throw std::runtime_error("train_autoencoder: loss diverged at step " +
                                     std::to_string(step));
        AeGradients g = ae_backward(ae, nn::cross_entropy_grad(bits, f.probs));
        for (int j = 0; j < ae.cfg.users; ++j)
            nn::adam_step(ae.encoders[j], g.encoders[j], enc_adam[j]);
        nn::adam_step(ae.decoder, g.decoder, dec_adam);
        res.loss_curve.push_back(loss);
    }
    res.coverage = std::count(visited.begin(), visited.end(), true);

    // final loss: one deterministic pass over every joint pattern, inference
    // mode, fresh noise at the training Eb/N0
    Rng eval_rng(derive_seed(hyper.seed, 0xae3));
    double total = 0.0;
    long long rows = 0;
    for (long long first = 0; first < npat; first += static_cast<long long>(hyper.batch)) {
        const long long count = std::min<long long>(hyper.batch, npat - first);
        nn::Matrix eb(static_cast<size_t>(count), static_cast<size_t>(ae.cfg.frame_bits()));
        for (long long r = 0; r < count; ++r)
            detail::pattern_to_bits(first + r, ae.cfg, eb.row(static_cast<size_t>(r)));
        AeForwardResult f = ae_forward(ae, eb, hyper.train_ebn0_db, &eval_rng, nn::Mode::infer);
        total += nn::cross_entropy(eb, f.probs) * static_cast<double>(count);
        rows += count;
    }
    res.final_loss = total / static_cast<double>(rows);
    for (auto& e : ae.encoders) e.drop_cache();
    ae.decoder.drop_cache();
    return res;
}

// Learned codebook: every bit pattern of every user through its encoder in
// inference mode, masked, de-interleaved to K complex entries. Support comes
// from the mask, so off-support zeros are structural.
inline Codebook extract_codebooks(Autoencoder& ae) {
    const int m = ae.cfg.bits_per_symbol;
    std::vector<UserCodebook> tables(static_cast<size_t>(ae.cfg.users));
    for (int j = 0; j < ae.cfg.users; ++j) {
        nn::Matrix in(static_cast<size_t>(ae.cfg.codebook_size), static_cast<size_t>(m));
        for (int a = 0; a < ae.cfg.codebook_size; ++a)
            for (int b = 0; b < m; ++b) in(a, b) = (a >> (m - 1 - b)) & 1;
        nn::Matrix out = ae.encoders[j].infer(in);
        UserCodebook u;
        u.support = ae.masks[j].support();
        for (int a = 0; a < ae.cfg.codebook_size; ++a) {
            std::vector<cplx> cw(static_cast<size_t>(ae.cfg.resources));
            for (int k = 0; k < ae.cfg.resources; ++k) {
                if (ae.masks[j].bits[2 * k])
                    cw[k] = cplx(out(a, 2 * k), out(a, 2 * k + 1));
                else
                    cw[k] = cplx(0.0, 0.0);
            }
            u.codewords.push_back(std::move(cw));
        }
        tables[j] = std::move(u);
    }
    return Codebook::from_parts(ae.cfg.users, ae.cfg.resources, ae.cfg.codebook_size,
                                std::move(tables));
}

// Dense masks: each user occupies N' = round(density * K) resources assigned
// round-robin; density 1 gives the all-ones masks.
inline std::vector<MappingMask> make_dcma_masks(const SystemConfig& cfg, double density) {
    if (!(density > 0.0 && density <= 1.0))
        throw std::invalid_argument("make_dcma_masks: density must be in (0, 1]");
    const int n = std::max(1, static_cast<int>(std::lround(density * cfg.resources)));
    std::vector<MappingMask> masks(static_cast<size_t>(cfg.users));
    for (int j = 0; j < cfg.users; ++j) {
        masks[j].bits.assign(static_cast<size_t>(2) * cfg.resources, 0);
        for (int i = 0; i < n; ++i) {
            const int k = (j + i) % cfg.resources;
            masks[j].bits[2 * k] = 1;
            masks[j].bits[2 * k + 1] = 1;
        }
    }
    return masks;
}

// ---------------------------------------------------------------------------
// checkpoint container
// ---------------------------------------------------------------------------

inline nlohmann::json autoencoder_to_json(const Autoencoder& ae,
                                          const nlohmann::json& provenance = {}) {
    nlohmann::json j;
    j["format"] = "scma-lab-checkpoint";
    j["version"] = 1;
    j["kind"] = "ae-scma";
    j["config"] = {{"J", ae.cfg.users},
                   {"K", ae.cfg.resources},
                   {"M", ae.cfg.codebook_size},
                   {"m", ae.cfg.bits_per_symbol},
                   {"N", ae.cfg.nonzero_per_codeword}};
    j["masks"] = nlohmann::json::array();
    for (const auto& m : ae.masks) j["masks"].push_back(m.bits);
    j["gains"] = ae.gains.g;
    j["encoders"] = nlohmann::json::array();
    for (const auto& e : ae.encoders) j["encoders"].push_back(nn::network_to_json(e));
    j["decoder"] = nn::network_to_json(ae.decoder);
    if (!provenance.is_null()) j["provenance"] = provenance;
    return j;
}

inline Autoencoder autoencoder_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "ae-scma")
        throw std::invalid_argument("checkpoint: not an ae-scma checkpoint");
    Autoencoder ae;
    try {
        const auto& jc = j.at("config");
        ae.cfg.users = jc.at("J").get<int>();
        ae.cfg.resources = jc.at("K").get<int>();
        ae.cfg.codebook_size = jc.at("M").get<int>();
        ae.cfg.bits_per_symbol = jc.at("m").get<int>();
        ae.cfg.nonzero_per_codeword = jc.at("N").get<int>();
        for (const auto& jm : j.at("masks")) {
            MappingMask m;
            m.bits = jm.get<std::vector<std::uint8_t>>();
            m.validate();
            ae.masks.push_back(std::move(m));
        }
        ae.gains.g = j.at("gains").get<std::vector<double>>();
        for (const auto& je : j.at("encoders"))
            ae.encoders.push_back(nn::network_from_json(je));
        ae.decoder = nn::network_from_json(j.at("decoder"));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("checkpoint: malformed ae-scma document: ") +
                                    e.what());
    }
    if (static_cast<int>(ae.encoders.size()) != ae.cfg.users ||
        static_cast<int>(ae.masks.size()) != ae.cfg.users)
        throw std::invalid_argument("checkpoint: encoder/mask count mismatch");
    return ae;
}

inline void save_autoencoder(const Autoencoder& ae, const std::string& path,
                             const nlohmann::json& provenance = {}) {
    nn::save_json(autoencoder_to_json(ae, provenance), path);
}

inline Autoencoder load_autoencoder(const std::string& path) {
    return autoencoder_from_json(nn::load_json(path));
}

}  // namespace scma
