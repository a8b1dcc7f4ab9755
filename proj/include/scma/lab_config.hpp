// lab_config.hpp - the single-document run configuration consumed by the CLI
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "scma/channel.hpp"
#include "scma/config.hpp"
#include "scma/nn/checkpoint.hpp"

namespace scma {

// {"system": {"J":6,"K":4,"M":4,"N":2}, "codebook": "path.json",
//  "factor_graph": "path.txt", "gains": [2K reals], "detector":
//  {"kind":"logmpa","iterations":5}}  -- every field optional
struct LabConfig {
    SystemConfig system = SystemConfig::canonical();
    std::string codebook_path;
    std::string factor_graph_path;
    std::vector<double> gains;  // empty -> all-ones
    std::string detector_kind;
    int iterations = 5;
};

inline LabConfig lab_config_from_json(const nlohmann::json& j) {
    LabConfig c;
    if (j.contains("system")) {
        const auto& js = j.at("system");
        c.system.users = js.value("J", c.system.users);
        c.system.resources = js.value("K", c.system.resources);
        c.system.codebook_size = js.value("M", c.system.codebook_size);
        c.system.nonzero_per_codeword = js.value("N", c.system.nonzero_per_codeword);
        int m = 0;
        while ((1 << m) < c.system.codebook_size) ++m;
        c.system.bits_per_symbol = js.value("m", m);
        c.system.validate();
    }
    c.codebook_path = j.value("codebook", "");
    c.factor_graph_path = j.value("factor_graph", "");
    if (j.contains("gains")) c.gains = j.at("gains").get<std::vector<double>>();
    if (j.contains("detector")) {
        c.detector_kind = j.at("detector").value("kind", "");
        c.iterations = j.at("detector").value("iterations", 5);
    }
    return c;
}

inline LabConfig load_lab_config(const std::string& path) {
    return lab_config_from_json(nn::load_json(path));
}

inline ChannelGain gains_for(const LabConfig& c, int resources) {
    if (c.gains.empty()) return ChannelGain::ones(resources);
    ChannelGain g{c.gains};
    g.validate();
    if (g.resources() != resources)
        throw std::invalid_argument("config: gains length must be 2K");
    return g;
}

}  // namespace scma
