#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <limits>

#include "scma/codebook.hpp"

using namespace scma;

namespace {

const std::string kBaseline = std::string(SCMA_LAB_DATA_DIR) + "/baseline_codebook.json";

nlohmann::json baseline_json() {
    std::ifstream in(kBaseline);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("baseline codebook loads with the expected shape") {
    Codebook cb = Codebook::load(kBaseline);
    CHECK(cb.users() == 6);
    CHECK(cb.resources() == 4);
    CHECK(cb.size() == 4);
    CHECK(cb.bits_per_symbol() == 2);
    CHECK(cb.nonzero_per_codeword() == 2);
    for (int j = 0; j < 6; ++j) {
        CHECK(cb.support(j).size() == 2);
        CHECK(cb.user(j).codewords.size() == 4);
        for (const auto& cw : cb.user(j).codewords) {
            CHECK(cw.size() == 4);
            int nz = 0;
            for (const auto& v : cw)
                if (v != cplx(0, 0)) ++nz;
            CHECK(nz == 2);
        }
    }
    // shipped factor graph file agrees with the codebook supports
    FactorGraph file = FactorGraph::from_file(std::string(SCMA_LAB_DATA_DIR) +
                                              "/factor_graph_6x4.txt");
    CHECK(file == cb.graph());
}

TEST_CASE("codeword off its support is rejected") {
    auto j = baseline_json();
    // user 0 has support {1,3}; poke a value onto resource 0
    j["users"][0]["codewords"][1][0][0] = 0.5;
    CHECK_THROWS_WITH(Codebook::from_json(j), Catch::Matchers::ContainsSubstring("off support"));
}

TEST_CASE("codeword count must match M") {
    auto j = baseline_json();
    j["users"][2]["codewords"].erase(3);
    CHECK_THROWS_WITH(Codebook::from_json(j), Catch::Matchers::ContainsSubstring("codewords"));
}

TEST_CASE("non-finite entries are rejected") {
    auto j = baseline_json();
    UserCodebook u;
    u.support = {0};
    u.codewords = {{cplx(std::numeric_limits<double>::infinity(), 0), cplx(0, 0)},
                   {cplx(1, 0), cplx(0, 0)}};
    CHECK_THROWS_WITH(Codebook::from_parts(1, 2, 2, {u}),
                      Catch::Matchers::ContainsSubstring("non-finite"));

    // literal NaN is not valid JSON either
    std::string text = "{\"J\":1,\"K\":1,\"M\":1,\"users\":[{\"support\":[0],"
                       "\"codewords\":[[[NaN,0]]]}]}";
    CHECK_THROWS_AS(Codebook::from_json(nlohmann::json::parse(text, nullptr, true, true)),
                    std::exception);
}

TEST_CASE("declared support must carry signal") {
    UserCodebook u;
    u.support = {0, 1};
    u.codewords = {{cplx(1, 0), cplx(0, 0)}, {cplx(-1, 0), cplx(0, 0)}};
    CHECK_THROWS_WITH(Codebook::from_parts(1, 2, 2, {u}),
                      Catch::Matchers::ContainsSubstring("no non-zero"));
}

TEST_CASE("support indices must be ascending and in range") {
    UserCodebook u;
    u.support = {1, 0};
    u.codewords = {{cplx(1, 0), cplx(1, 0)}, {cplx(-1, 0), cplx(1, 0)}};
    CHECK_THROWS_AS(Codebook::from_parts(1, 2, 2, {u}), std::invalid_argument);
    u.support = {0, 5};
    CHECK_THROWS_AS(Codebook::from_parts(1, 2, 2, {u}), std::invalid_argument);
}

TEST_CASE("user table count must equal J") {
    auto j = baseline_json();
    j["users"].erase(5);
    CHECK_THROWS_WITH(Codebook::from_json(j), Catch::Matchers::ContainsSubstring("user tables"));
}

TEST_CASE("codebook save/load round-trips exactly") {
    Codebook cb = Codebook::load(kBaseline);
    const std::string tmp = "roundtrip_codebook.json";
    cb.save(tmp);
    Codebook back = Codebook::load(tmp);
    std::remove(tmp.c_str());
    REQUIRE(back.users() == cb.users());
    for (int j = 0; j < cb.users(); ++j) {
        CHECK(back.support(j) == cb.support(j));
        for (int a = 0; a < cb.size(); ++a) CHECK(back.codeword(j, a) == cb.codeword(j, a));
    }
}

TEST_CASE("missing file and malformed documents raise") {
    CHECK_THROWS_AS(Codebook::load("does_not_exist.json"), std::runtime_error);
    CHECK_THROWS_WITH(Codebook::from_json(nlohmann::json::parse("{\"J\":2}")),
                      Catch::Matchers::ContainsSubstring("malformed"));
}
