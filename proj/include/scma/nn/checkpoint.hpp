// checkpoint.hpp - JSON container for network parameters and running stats
#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "scma/nn/network.hpp"

namespace scma::nn {

// Doubles are serialized by the shortest round-trip representation, so a
// save/load cycle reproduces inference bit-exactly.
inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json j;
    j["layers"] = nlohmann::json::array();
    for (const auto& ly : net.layers) {
        nlohmann::json jl;
        jl["in"] = ly.in_width();
        jl["out"] = ly.out_width();
        jl["activation"] = activation_name(ly.act);
        jl["W"] = ly.W.v;
        jl["b"] = ly.b;
        if (ly.bn) {
            nlohmann::json jb;
            jb["gamma"] = ly.bn->gamma;
            jb["beta"] = ly.bn->beta;
            jb["running_mean"] = ly.bn->running_mean;
            jb["running_var"] = ly.bn->running_var;
            jb["eps"] = ly.bn->eps;
            jb["momentum"] = ly.bn->momentum;
            jl["batch_norm"] = std::move(jb);
        }
        j["layers"].push_back(std::move(jl));
    }
    return j;
}

inline Network network_from_json(const nlohmann::json& j) {
    Network net;
    try {
        for (const auto& jl : j.at("layers")) {
            DenseLayer ly;
            const size_t in = jl.at("in").get<size_t>();
            const size_t out = jl.at("out").get<size_t>();
            ly.W = Matrix(in, out);
            ly.W.v = jl.at("W").get<std::vector<double>>();
            if (ly.W.v.size() != in * out)
                throw std::invalid_argument("checkpoint: weight size mismatch");
            ly.b = jl.at("b").get<std::vector<double>>();
            ly.act = activation_from_name(jl.at("activation").get<std::string>());
            if (jl.contains("batch_norm")) {
                const auto& jb = jl.at("batch_norm");
                BatchNorm bn;
                bn.gamma = jb.at("gamma").get<std::vector<double>>();
                bn.beta = jb.at("beta").get<std::vector<double>>();
                bn.running_mean = jb.at("running_mean").get<std::vector<double>>();
                bn.running_var = jb.at("running_var").get<std::vector<double>>();
                bn.eps = jb.at("eps").get<double>();
                bn.momentum = jb.at("momentum").get<double>();
                ly.bn = std::move(bn);
            }
            net.layers.push_back(std::move(ly));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("checkpoint: malformed network section: ") +
                                    e.what());
    }
    net.validate();
    return net;
}

inline void save_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << j.dump(1) << "\n";
}

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(path + ": parse error: " + e.what());
    }
}

}  // namespace scma::nn
