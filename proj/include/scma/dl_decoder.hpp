// dl_decoder.hpp - learned decoder: data generation, training, hard decisions
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "scma/channel.hpp"
#include "scma/codebook.hpp"
#include "scma/nn/checkpoint.hpp"
#include "scma/nn/loss.hpp"
#include "scma/nn/network.hpp"
#include "scma/nn/optim.hpp"
#include "scma/rng.hpp"

namespace scma {

// 2K inputs -> N_L hidden layers of N_HN tanh nodes with batch-norm ->
// mJ sigmoid outputs.
struct DecoderArch {
    int hidden_layers = 6;  // N_L
    int hidden_width = 48;  // N_HN
};

inline nn::Network make_decoder_network(const SystemConfig& cfg, const DecoderArch& arch,
                                        Rng& rng) {
    std::vector<size_t> widths;
    widths.push_back(static_cast<size_t>(2) * cfg.resources);
    for (int l = 0; l < arch.hidden_layers; ++l)
        widths.push_back(static_cast<size_t>(arch.hidden_width));
    widths.push_back(static_cast<size_t>(cfg.frame_bits()));
    return nn::make_mlp(widths, nn::Activation::tanh, nn::Activation::sigmoid,
                        /*bn_hidden=*/true, rng);
}

struct EbnoGroup {
    double ebn0_db = 5.0;
    std::size_t samples = 0;
};

struct TrainingSet {
    nn::Matrix inputs;  // n x 2K noisy received frames
    nn::Matrix labels;  // n x mJ bits
    std::vector<EbnoGroup> groups;
};

// Frames are synthesized group by group: uniform bits -> encode -> superpose
// -> AWGN at the group's Eb/N0 (skipped when noiseless).
inline TrainingSet generate_training_set(const Codebook& cb, const ChannelGain& gains,
                                         const std::vector<EbnoGroup>& groups, Rng& rng,
                                         bool noiseless = false) {
    const SystemConfig cfg = cb.config();
    std::size_t total = 0;
    for (const auto& g : groups) {
        if (g.samples < 1)
            throw std::invalid_argument("generate_training_set: group needs >= 1 samples");
        total += g.samples;
    }
    if (total == 0) throw std::invalid_argument("generate_training_set: empty group list");

    const double power = ensemble_power(cb, gains);
    TrainingSet set;
    set.groups = groups;
    set.inputs = nn::Matrix(total, static_cast<size_t>(2) * cfg.resources);
    set.labels = nn::Matrix(total, static_cast<size_t>(cfg.frame_bits()));

    std::uniform_int_distribution<int> sym(0, cfg.codebook_size - 1);
    std::vector<std::vector<cplx>> cws(static_cast<size_t>(cfg.users));
    std::size_t row = 0;
    for (const auto& g : groups) {
        const double ebn0 = ebn0_db_to_linear(g.ebn0_db);
        for (std::size_t i = 0; i < g.samples; ++i, ++row) {
            for (int j = 0; j < cfg.users; ++j) {
                const int s = sym(rng);
                cws[j] = cb.codeword(j, s);
                for (int b = 0; b < cfg.bits_per_symbol; ++b)
                    set.labels(row, static_cast<size_t>(j) * cfg.bits_per_symbol + b) =
                        (s >> (cfg.bits_per_symbol - 1 - b)) & 1;
            }
            auto clean = superpose(cws, gains);
            if (noiseless) {
                std::copy(clean.begin(), clean.end(), set.inputs.row(row));
            } else {
                auto rx = add_awgn(clean, ebn0, cfg, power, rng);
                std::copy(rx.y.begin(), rx.y.end(), set.inputs.row(row));
            }
        }
    }
    return set;
}

struct TrainHyper {
    std::size_t batch = 256;
    int epochs = 30;
    double lr = 1e-4;
    std::uint64_t seed = 1;
    double val_fraction = 0.05;  // held-out split for best-snapshot retention
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainedDecoder {
    nn::Network net;  // best-validation snapshot, frozen for inference
    std::vector<EbnoGroup> groups;
    std::uint64_t seed = 0;
    double final_train_loss = 0.0;
    double best_val_loss = 0.0;
    DecoderArch arch;
    int epochs = 0;
};

struct DecoderTrainResult {
    TrainedDecoder decoder;
    std::vector<EpochStats> curve;
};

// Mini-batch Adam on the bit-wise cross-entropy. Deterministic for a fixed
// seed: shuffles, init and noise all derive from it.
inline DecoderTrainResult train_decoder(const SystemConfig& cfg, const DecoderArch& arch,
                                        const TrainingSet& set, const TrainHyper& hyper) {
    if (set.inputs.rows == 0) throw std::invalid_argument("train_decoder: empty training set");
    if (set.inputs.rows != set.labels.rows)
        throw std::invalid_argument("train_decoder: input/label count mismatch");
    if (hyper.batch < 2) throw std::invalid_argument("train_decoder: batch size must be >= 2");

    Rng init_rng(derive_seed(hyper.seed, 0xd1));
    nn::Network net = make_decoder_network(cfg, arch, init_rng);
    nn::AdamState adam = nn::AdamState::for_network(net, hyper.lr);

    const std::size_t n = set.inputs.rows;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(hyper.seed, 0xd2));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    std::size_t n_val = static_cast<std::size_t>(std::floor(hyper.val_fraction * n));
    if (n - n_val < hyper.batch) n_val = 0;  // tiny sets train on everything
    const std::size_t n_train = n - n_val;

    auto gather = [&](std::size_t first, std::size_t count, const std::vector<std::size_t>& idx,
                      nn::Matrix& x, nn::Matrix& t) {
        x = nn::Matrix(count, set.inputs.cols);
        t = nn::Matrix(count, set.labels.cols);
        for (std::size_t r = 0; r < count; ++r) {
            const std::size_t s = idx[first + r];
            std::copy(set.inputs.row(s), set.inputs.row(s) + set.inputs.cols, x.row(r));
            std::copy(set.labels.row(s), set.labels.row(s) + set.labels.cols, t.row(r));
        }
    };

    nn::Matrix val_x, val_t;
    if (n_val > 0) gather(n_train, n_val, order, val_x, val_t);

    DecoderTrainResult res;
    nn::Network best = net;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t off = 0; off + hyper.batch <= n_train; off += hyper.batch) {
            nn::Matrix x, t;
            gather(off, hyper.batch, train_idx, x, t);
            nn::Matrix p = net.forward(x, nn::Mode::train);
            const double loss = nn::cross_entropy(t, p);
            if (!std::isfinite(loss))
                throw std::runtime_error("train_decoder: loss diverged (non-finite) at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batches));
            nn::Gradients g = net.backward(nn::cross_entropy_grad(t, p));
            nn::adam_step(net, g, adam);
            epoch_loss += loss;
            ++batches;
        }
        EpochStats st;
        st.train_loss = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
        if (n_val > 0) {
            st.val_loss = nn::cross_entropy(val_t, net.infer(val_x));
            if (st.val_loss < best_val) {
                best_val = st.val_loss;
                best = net;
            }
        } else {
            st.val_loss = st.train_loss;
            best = net;
            best_val = st.train_loss;
        }
        res.curve.push_back(st);
    }

    best.drop_cache();
    res.decoder.net = std::move(best);
    res.decoder.groups = set.groups;
    res.decoder.seed = hyper.seed;
    res.decoder.final_train_loss = res.curve.empty() ? 0.0 : res.curve.back().train_loss;
    res.decoder.best_val_loss = best_val;
    res.decoder.arch = arch;
    res.decoder.epochs = hyper.epochs;
    return res;
}

// Hard decision: bit = 1 iff sigmoid output >= 0.5 (ties go to 1).
inline std::vector<std::uint8_t> decode_bits(const nn::Network& net,
                                             std::span<const double> received) {
    if (received.size() != net.input_width())
        throw std::invalid_argument("decode_bits: received width mismatch");
    nn::Matrix x(1, received.size());
    std::copy(received.begin(), received.end(), x.row(0));
    nn::Matrix p = net.infer(x);
    std::vector<std::uint8_t> bits(p.cols);
    for (size_t i = 0; i < p.cols; ++i) bits[i] = p(0, i) >= 0.5 ? 1 : 0;
    return bits;
}

inline nn::Matrix decode_batch(const nn::Network& net, const nn::Matrix& received) {
    nn::Matrix p = net.infer(received);
    for (double& v : p.v) v = v >= 0.5 ? 1.0 : 0.0;
    return p;
}

inline nlohmann::json decoder_to_json(const TrainedDecoder& d) {
    nlohmann::json j;
    j["format"] = "scma-lab-checkpoint";
    j["version"] = 1;
    j["kind"] = "dl-decoder";
    nlohmann::json prov;
    prov["seed"] = d.seed;
    prov["final_train_loss"] = d.final_train_loss;
    prov["best_val_loss"] = d.best_val_loss;
    prov["epochs"] = d.epochs;
    prov["hidden_layers"] = d.arch.hidden_layers;
    prov["hidden_width"] = d.arch.hidden_width;
    prov["groups"] = nlohmann::json::array();
    for (const auto& g : d.groups)
        prov["groups"].push_back({{"ebn0_db", g.ebn0_db}, {"samples", g.samples}});
    j["provenance"] = std::move(prov);
    j["network"] = nn::network_to_json(d.net);
    return j;
}

inline TrainedDecoder decoder_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "dl-decoder")
        throw std::invalid_argument("checkpoint: not a dl-decoder checkpoint");
    TrainedDecoder d;
    d.net = nn::network_from_json(j.at("network"));
    const auto& prov = j.at("provenance");
    d.seed = prov.value("seed", 0ULL);
    d.final_train_loss = prov.value("final_train_loss", 0.0);
    d.best_val_loss = prov.value("best_val_loss", 0.0);
    d.epochs = prov.value("epochs", 0);
    d.arch.hidden_layers = prov.value("hidden_layers", 0);
    d.arch.hidden_width = prov.value("hidden_width", 0);
    if (prov.contains("groups"))
        for (const auto& g : prov.at("groups"))
            d.groups.push_back({g.at("ebn0_db").get<double>(), g.at("samples").get<std::size_t>()});
    return d;
}

inline void save_decoder(const TrainedDecoder& d, const std::string& path) {
    nn::save_json(decoder_to_json(d), path);
}

inline TrainedDecoder load_decoder(const std::string& path) {
    return decoder_from_json(nn::load_json(path));
}

// Binary dataset container, little-endian: magic "SCMADS1\n", then three
// uint32 (frame count, input width, label width), then per frame input
// doubles followed by label bytes.
inline void export_dataset(const TrainingSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    out.write("SCMADS1\n", 8);
    const std::uint32_t n = static_cast<std::uint32_t>(set.inputs.rows);
    const std::uint32_t iw = static_cast<std::uint32_t>(set.inputs.cols);
    const std::uint32_t lw = static_cast<std::uint32_t>(set.labels.cols);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&iw), 4);
    out.write(reinterpret_cast<const char*>(&lw), 4);
    std::vector<std::uint8_t> lbl(lw);
    for (std::uint32_t r = 0; r < n; ++r) {
        out.write(reinterpret_cast<const char*>(set.inputs.row(r)),
                  static_cast<std::streamsize>(iw * sizeof(double)));
        for (std::uint32_t c = 0; c < lw; ++c)
            lbl[c] = set.labels(r, c) != 0.0 ? 1 : 0;
        out.write(reinterpret_cast<const char*>(lbl.data()), lw);
    }
}

inline TrainingSet load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "SCMADS1\n")
        throw std::invalid_argument("dataset file: bad magic");
    std::uint32_t n = 0, iw = 0, lw = 0;
    in.read(reinterpret_cast<char*>(&n), 4);
    in.read(reinterpret_cast<char*>(&iw), 4);
    in.read(reinterpret_cast<char*>(&lw), 4);
    if (!in) throw std::invalid_argument("dataset file: truncated header");
    TrainingSet set;
    set.inputs = nn::Matrix(n, iw);
    set.labels = nn::Matrix(n, lw);
    std::vector<std::uint8_t> lbl(lw);
    for (std::uint32_t r = 0; r < n; ++r) {
        in.read(reinterpret_cast<char*>(set.inputs.row(r)),
                static_cast<std::streamsize>(iw * sizeof(double)));
        in.read(reinterpret_cast<char*>(lbl.data()), lw);
        for (std::uint32_t c = 0; c < lw; ++c) set.labels(r, c) = lbl[c];
    }
    if (!in) throw std::invalid_argument("dataset file: truncated body");
    return set;
}

}  // namespace scma
