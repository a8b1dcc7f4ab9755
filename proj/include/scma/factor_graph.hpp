// factor_graph.hpp - resource-occupancy structure of the SCMA mapping
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace scma {

// Binary K x J occupancy matrix: entry (k, j) = 1 when user j transmits on
// resource k. Columns are the codeword support patterns, rows the per-resource
// collision sets.
class FactorGraph {
  public:
    FactorGraph(int resources, int users)
        : k_(resources), j_(users), m_(static_cast<size_t>(resources) * users, 0) {
        if (resources < 1 || users < 1)
            throw std::invalid_argument("FactorGraph: dimensions must be positive");
    }

    // The regular J=6, K=4, N=2 design: the six distinct resource pairs,
    // one per user, so every resource carries exactly d_f = 3 users.
    static FactorGraph canonical() {
        FactorGraph g(4, 6);
        const int supports[6][2] = {{1, 3}, {0, 2}, {0, 1}, {2, 3}, {0, 3}, {1, 2}};
        for (int j = 0; j < 6; ++j)
            for (int r : supports[j]) g.set(r, j, 1);
        return g;
    }

    int resources() const { return k_; }
    int users() const { return j_; }

    std::uint8_t at(int k, int j) const { return m_[static_cast<size_t>(k) * j_ + j]; }
    void set(int k, int j, std::uint8_t v) {
        if (v > 1) throw std::invalid_argument("FactorGraph: entries must be 0/1");
        m_[static_cast<size_t>(k) * j_ + j] = v;
    }

    // resources occupied by user j, ascending
    std::vector<int> user_support(int j) const {
        std::vector<int> s;
        for (int k = 0; k < k_; ++k)
            if (at(k, j)) s.push_back(k);
        return s;
    }

    // users colliding on resource k, ascending
    std::vector<int> resource_users(int k) const {
        std::vector<int> u;
        for (int j = 0; j < j_; ++j)
            if (at(k, j)) u.push_back(j);
        return u;
    }

    int column_weight(int j) const { return static_cast<int>(user_support(j).size()); }
    int row_weight(int k) const { return static_cast<int>(resource_users(k).size()); }

    // every user occupies exactly N resources
    void validate_column_weight(int n) const {
        for (int j = 0; j < j_; ++j)
            if (column_weight(j) != n)
                throw std::invalid_argument("FactorGraph: user " + std::to_string(j) +
                                            " occupies " + std::to_string(column_weight(j)) +
                                            " resources, expected " + std::to_string(n));
    }

    bool operator==(const FactorGraph& o) const {
        return k_ == o.k_ && j_ == o.j_ && m_ == o.m_;
    }

    // Text format: K lines of J space-separated 0/1 entries.
    static FactorGraph from_stream(std::istream& in) {
        std::vector<std::vector<int>> rows;
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::vector<int> row;
            int v;
            while (ls >> v) {
                if (v != 0 && v != 1)
                    throw std::invalid_argument("factor graph file: entries must be 0/1");
                row.push_back(v);
            }
            if (!row.empty()) rows.push_back(std::move(row));
        }
        if (rows.empty()) throw std::invalid_argument("factor graph file: empty");
        const size_t j = rows.front().size();
        for (const auto& r : rows)
            if (r.size() != j)
                throw std::invalid_argument("factor graph file: ragged rows");
        FactorGraph g(static_cast<int>(rows.size()), static_cast<int>(j));
        for (int k = 0; k < g.resources(); ++k)
            for (int c = 0; c < g.users(); ++c)
                g.set(k, c, static_cast<std::uint8_t>(rows[k][c]));
        return g;
    }

    static FactorGraph from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open factor graph file: " + path);
        return from_stream(in);
    }

    void save(std::ostream& out) const {
        for (int k = 0; k < k_; ++k) {
            for (int j = 0; j < j_; ++j) out << (j ? " " : "") << int(at(k, j));
            out << "\n";
        }
    }

    void save_file(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write factor graph file: " + path);
        save(out);
    }

  private:
    int k_, j_;
    std::vector<std::uint8_t> m_;
};

// Per-user binary vector of length 2K selecting the real/imaginary positions
// of the occupied resources; positions 2k and 2k+1 always carry equal values.
struct MappingMask {
    std::vector<std::uint8_t> bits;

    int resources() const { return static_cast<int>(bits.size() / 2); }
    int occupied() const {
        int n = 0;
        for (int k = 0; k < resources(); ++k) n += bits[2 * k];
        return n;
    }
    std::vector<int> support() const {
        std::vector<int> s;
        for (int k = 0; k < resources(); ++k)
            if (bits[2 * k]) s.push_back(k);
        return s;
    }
    void validate() const {
        if (bits.size() % 2 != 0) throw std::invalid_argument("MappingMask: odd length");
        for (int k = 0; k < resources(); ++k) {
            if (bits[2 * k] > 1 || bits[2 * k + 1] > 1)
                throw std::invalid_argument("MappingMask: entries must be 0/1");
            if (bits[2 * k] != bits[2 * k + 1])
                throw std::invalid_argument("MappingMask: real/imag pair mismatch at resource " +
                                            std::to_string(k));
        }
    }
};

// Column j of the graph expanded to the interleaved 2K layout.
inline std::vector<MappingMask> derive_masks(const FactorGraph& g) {
    std::vector<MappingMask> masks(g.users());
    for (int j = 0; j < g.users(); ++j) {
        masks[j].bits.assign(static_cast<size_t>(2) * g.resources(), 0);
        for (int k : g.user_support(j)) {
            masks[j].bits[2 * k] = 1;
            masks[j].bits[2 * k + 1] = 1;
        }
    }
    return masks;
}

// Inverse of derive_masks; validates the re/im pairing.
inline FactorGraph graph_from_masks(const std::vector<MappingMask>& masks) {
    if (masks.empty()) throw std::invalid_argument("graph_from_masks: no masks");
    const int k = masks.front().resources();
    FactorGraph g(k, static_cast<int>(masks.size()));
    for (size_t j = 0; j < masks.size(); ++j) {
        masks[j].validate();
        if (masks[j].resources() != k)
            throw std::invalid_argument("graph_from_masks: inconsistent mask lengths");
        for (int r : masks[j].support()) g.set(r, static_cast<int>(j), 1);
    }
    return g;
}

}  // namespace scma
