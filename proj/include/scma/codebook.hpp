// codebook.hpp - per-user codeword tables and the codebook file format
#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scma/config.hpp"
#include "scma/factor_graph.hpp"

namespace scma {

using cplx = std::complex<double>;

// One user's mapping table: M codewords of K complex entries, all sharing the
// same support (the N resources carrying non-zero values).
struct UserCodebook {
    std::vector<int> support;                 // ascending resource indices
    std::vector<std::vector<cplx>> codewords; // M x K
};

class Codebook {
  public:
    Codebook() = default;

    static Codebook from_parts(int users, int resources, int codebook_size,
                               std::vector<UserCodebook> tables) {
        Codebook cb;
        cb.j_ = users;
        cb.k_ = resources;
        cb.m_ = codebook_size;
        cb.users_ = std::move(tables);
        cb.validate();
        return cb;
    }

    int users() const { return j_; }
    int resources() const { return k_; }
    int size() const { return m_; }  // M
    int bits_per_symbol() const {
        int m = 0;
        while ((1 << m) < m_) ++m;
        return m;
    }
    int nonzero_per_codeword() const { return static_cast<int>(users_[0].support.size()); }

    const std::vector<cplx>& codeword(int user, int symbol) const {
        return users_[user].codewords[symbol];
    }
    const std::vector<int>& support(int user) const { return users_[user].support; }
    const UserCodebook& user(int j) const { return users_[j]; }

    FactorGraph graph() const {
        FactorGraph g(k_, j_);
        for (int j = 0; j < j_; ++j)
            for (int r : users_[j].support) g.set(r, j, 1);
        return g;
    }

    SystemConfig config() const {
        SystemConfig c;
        c.users = j_;
        c.resources = k_;
        c.codebook_size = m_;
        c.bits_per_symbol = bits_per_symbol();
        c.nonzero_per_codeword = nonzero_per_codeword();
        return c;
    }

    void validate() const {
        if (j_ < 1 || k_ < 1 || m_ < 1)
            throw std::invalid_argument("codebook: J, K, M must be positive");
        if ((m_ & (m_ - 1)) != 0)
            throw std::invalid_argument("codebook: M must be a power of two");
        if (static_cast<int>(users_.size()) != j_)
            throw std::invalid_argument("codebook: expected " + std::to_string(j_) +
                                        " user tables, got " + std::to_string(users_.size()));
        const size_t n0 = users_[0].support.size();
        for (int j = 0; j < j_; ++j) {
            const auto& u = users_[j];
            const std::string who = "codebook user " + std::to_string(j);
            if (u.support.empty() || u.support.size() != n0)
                throw std::invalid_argument(who + ": support size mismatch");
            int prev = -1;
            for (int r : u.support) {
                if (r <= prev || r < 0 || r >= k_)
                    throw std::invalid_argument(who + ": support must be ascending in [0, K)");
                prev = r;
            }
            if (static_cast<int>(u.codewords.size()) != m_)
                throw std::invalid_argument(who + ": expected " + std::to_string(m_) +
                                            " codewords, got " +
                                            std::to_string(u.codewords.size()));
            std::vector<bool> on(static_cast<size_t>(k_), false);
            for (int r : u.support) on[r] = true;
            std::vector<bool> used(static_cast<size_t>(k_), false);
            for (const auto& cw : u.codewords) {
                if (static_cast<int>(cw.size()) != k_)
                    throw std::invalid_argument(who + ": codeword length != K");
                for (int k = 0; k < k_; ++k) {
                    if (!std::isfinite(cw[k].real()) || !std::isfinite(cw[k].imag()))
                        throw std::invalid_argument(who + ": non-finite codeword entry");
                    const bool nz = cw[k].real() != 0.0 || cw[k].imag() != 0.0;
                    if (nz && !on[k])
                        throw std::invalid_argument(who + ": non-zero entry off support at resource " +
                                                    std::to_string(k));
                    if (nz) used[k] = true;
                }
            }
            for (int r : u.support)
                if (!used[r])
                    throw std::invalid_argument(who + ": declared support resource " +
                                                std::to_string(r) +
                                                " carries no non-zero entry");
        }
    }

    // File format: {"J":..,"K":..,"M":..,"users":[{"support":[..],
    // "codewords":[[[re,im] x K] x M]} x J]}. Support indices are 0-based.
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["J"] = j_;
        j["K"] = k_;
        j["M"] = m_;
        j["users"] = nlohmann::json::array();
        for (const auto& u : users_) {
            nlohmann::json ju;
            ju["support"] = u.support;
            auto cws = nlohmann::json::array();
            for (const auto& cw : u.codewords) {
                auto jcw = nlohmann::json::array();
                for (const auto& c : cw) jcw.push_back({c.real(), c.imag()});
                cws.push_back(std::move(jcw));
            }
            ju["codewords"] = std::move(cws);
            j["users"].push_back(std::move(ju));
        }
        return j;
    }

    static Codebook from_json(const nlohmann::json& j) {
        try {
            const int users = j.at("J").get<int>();
            const int resources = j.at("K").get<int>();
            const int size = j.at("M").get<int>();
            std::vector<UserCodebook> tables;
            for (const auto& ju : j.at("users")) {
                UserCodebook u;
                u.support = ju.at("support").get<std::vector<int>>();
                for (const auto& jcw : ju.at("codewords")) {
                    std::vector<cplx> cw;
                    for (const auto& pair : jcw) {
                        if (!pair.is_array() || pair.size() != 2)
                            throw std::invalid_argument("codebook: entries must be [re, im] pairs");
                        cw.emplace_back(pair[0].get<double>(), pair[1].get<double>());
                    }
                    u.codewords.push_back(std::move(cw));
                }
                tables.push_back(std::move(u));
            }
            return from_parts(users, resources, size, std::move(tables));
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(std::string("codebook: malformed document: ") + e.what());
        }
    }

    static Codebook load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open codebook file: " + path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("codebook " + path + ": parse error: " + e.what());
        }
        return from_json(j);
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write codebook file: " + path);
        out << to_json().dump(1) << "\n";
    }

  private:
    int j_ = 0, k_ = 0, m_ = 0;
    std::vector<UserCodebook> users_;
};

}  // namespace scma
