// config.hpp - SCMA system dimensioning constants
#pragma once

#include <stdexcept>
#include <string>

namespace scma {

// J users share K sub-carriers. Each user maps m = log2(M) bits to one of
// M codewords occupying N of the K resources. N < K gives the sparse
// (SCMA) regime, N = K the dense (DCMA) regime.
struct SystemConfig {
    int users = 6;                 // J
    int resources = 4;             // K
    int codebook_size = 4;         // M
    int bits_per_symbol = 2;       // m = log2(M)
    int nonzero_per_codeword = 2;  // N

    int frame_bits() const { return users * bits_per_symbol; }
    double overlap_degree() const {  // d_f, users colliding per resource
        return static_cast<double>(users) * nonzero_per_codeword / resources;
    }
    double overload() const { return static_cast<double>(users) / resources; }
    bool dense() const { return nonzero_per_codeword == resources; }

    static SystemConfig canonical() { return SystemConfig{}; }

    void validate() const {
        if (users < 1 || resources < 1 || codebook_size < 1 || bits_per_symbol < 1 ||
            nonzero_per_codeword < 1)
            throw std::invalid_argument("SystemConfig: all counts must be positive");
        if ((1 << bits_per_symbol) != codebook_size)
            throw std::invalid_argument("SystemConfig: need M = 2^m, got M=" +
                                        std::to_string(codebook_size) +
                                        ", m=" + std::to_string(bits_per_symbol));
        if (nonzero_per_codeword > resources)
            throw std::invalid_argument("SystemConfig: N must not exceed K");
        if (!dense() && resources >= users)
            throw std::invalid_argument("SystemConfig: sparse mode expects overloading (K < J)");
    }
};

}  // namespace scma
