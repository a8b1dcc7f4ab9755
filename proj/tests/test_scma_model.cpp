#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>

#include "scma/channel.hpp"
#include "scma/codebook.hpp"
#include "scma/config.hpp"
#include "scma/factor_graph.hpp"

using namespace scma;

namespace {
Codebook baseline() {
    return Codebook::load(std::string(SCMA_LAB_DATA_DIR) + "/baseline_codebook.json");
}
}  // namespace

TEST_CASE("system config invariants") {
    SystemConfig c = SystemConfig::canonical();
    REQUIRE_NOTHROW(c.validate());
    CHECK(c.overlap_degree() == Catch::Approx(3.0));
    CHECK(c.overload() == Catch::Approx(1.5));
    CHECK(c.frame_bits() == 12);

    SystemConfig bad = c;
    bad.codebook_size = 5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.nonzero_per_codeword = 5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.users = 3;  // K >= J without dense masks
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("canonical factor graph is the regular distinct-pair design") {
    FactorGraph g = FactorGraph::canonical();
    REQUIRE(g.resources() == 4);
    REQUIRE(g.users() == 6);
    for (int j = 0; j < 6; ++j) CHECK(g.column_weight(j) == 2);
    for (int k = 0; k < 4; ++k) CHECK(g.row_weight(k) == 3);
    REQUIRE_NOTHROW(g.validate_column_weight(2));

    // all six resource pairs distinct
    std::set<std::vector<int>> supports;
    for (int j = 0; j < 6; ++j) supports.insert(g.user_support(j));
    CHECK(supports.size() == 6);
}

TEST_CASE("factor graph text round-trip and parse errors") {
    FactorGraph g = FactorGraph::canonical();
    std::ostringstream out;
    g.save(out);
    std::istringstream in(out.str());
    CHECK(FactorGraph::from_stream(in) == g);

    std::istringstream ragged("1 0\n1\n");
    CHECK_THROWS_AS(FactorGraph::from_stream(ragged), std::invalid_argument);
    std::istringstream nonbinary("1 2\n0 1\n");
    CHECK_THROWS_AS(FactorGraph::from_stream(nonbinary), std::invalid_argument);
    std::istringstream empty("");
    CHECK_THROWS_AS(FactorGraph::from_stream(empty), std::invalid_argument);
}

TEST_CASE("mask derivation matches the interleaved layout") {
    // user on resources 1 and 3 (0-based) of K=4
    FactorGraph g(4, 1);
    g.set(1, 0, 1);
    g.set(3, 0, 1);
    auto masks = derive_masks(g);
    CHECK(masks[0].bits == std::vector<std::uint8_t>{0, 0, 1, 1, 0, 0, 1, 1});

    FactorGraph dense(4, 1);
    for (int k = 0; k < 4; ++k) dense.set(k, 0, 1);
    CHECK(derive_masks(dense)[0].bits == std::vector<std::uint8_t>(8, 1));

    FactorGraph single(4, 1);
    single.set(0, 0, 1);
    CHECK(derive_masks(single)[0].bits == std::vector<std::uint8_t>{1, 1, 0, 0, 0, 0, 0, 0});
}

TEST_CASE("mask/graph consistency round-trip") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        FactorGraph g(4, 6);
        std::uniform_int_distribution<int> coin(0, 1);
        for (int j = 0; j < 6; ++j) {
            int placed = 0;
            for (int k = 0; k < 4; ++k)
                if (coin(rng)) {
                    g.set(k, j, 1);
                    ++placed;
                }
            if (placed == 0) g.set(j % 4, j, 1);
        }
        CHECK(graph_from_masks(derive_masks(g)) == g);
    }
}

TEST_CASE("bit mapping is big-endian and round-trips") {
    const std::uint8_t b00[] = {0, 0};
    const std::uint8_t b11[] = {1, 1};
    const std::uint8_t b10[] = {1, 0};
    CHECK(bits_to_symbol(std::span<const std::uint8_t>(b00, 2)) == 0);
    CHECK(bits_to_symbol(std::span<const std::uint8_t>(b11, 2)) == 3);
    CHECK(bits_to_symbol(std::span<const std::uint8_t>(b10, 2)) == 2);
    for (int s = 0; s < 16; ++s) {
        auto bits = symbol_to_bits(s, 4);
        CHECK(bits_to_symbol(bits) == s);
    }
}

TEST_CASE("encode_user looks up by bit value and respects support") {
    Codebook cb = baseline();
    const std::uint8_t b00[] = {0, 0};
    const std::uint8_t b11[] = {1, 1};
    CHECK(encode_user(cb, 0, std::span<const std::uint8_t>(b00, 2)) == cb.codeword(0, 0));
    CHECK(encode_user(cb, 2, std::span<const std::uint8_t>(b11, 2)) == cb.codeword(2, 3));

    FactorGraph g = cb.graph();
    for (int j = 0; j < cb.users(); ++j)
        for (int a = 0; a < cb.size(); ++a) {
            int nonzero = 0;
            const auto& cw = cb.codeword(j, a);
            for (int k = 0; k < cb.resources(); ++k) {
                const bool nz = cw[k] != cplx(0.0, 0.0);
                if (nz) ++nonzero;
                if (!g.at(k, j)) CHECK_FALSE(nz);
            }
            CHECK(nonzero == 2);
        }
}

TEST_CASE("superposition: identity, collision, linearity") {
    ChannelGain ones = ChannelGain::ones(2);

    std::vector<std::vector<cplx>> zero(3, std::vector<cplx>(2, cplx(0, 0)));
    auto z = superpose(zero, ones);
    CHECK(z == std::vector<double>(4, 0.0));

    std::vector<std::vector<cplx>> one = {{cplx(0.25, -1.5), cplx(2.0, 0.125)}};
    CHECK(superpose(one, ones) == std::vector<double>{0.25, -1.5, 2.0, 0.125});

    std::vector<std::vector<cplx>> collide = {{cplx(1, 0), cplx(0, 0)},
                                              {cplx(0, 1), cplx(0, 0)}};
    auto y = superpose(collide, ones);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 1.0);

    // linearity in one user's codeword with the others zero
    Rng rng(5);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int t = 0; t < 10; ++t) {
        const double a = u(rng), b = u(rng);
        std::vector<cplx> c1 = {cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
        std::vector<cplx> c2 = {cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
        std::vector<cplx> mix(2);
        for (int k = 0; k < 2; ++k) mix[k] = a * c1[k] + b * c2[k];
        auto lhs = superpose(std::vector<std::vector<cplx>>{mix}, ones);
        auto r1 = superpose(std::vector<std::vector<cplx>>{c1}, ones);
        auto r2 = superpose(std::vector<std::vector<cplx>>{c2}, ones);
        for (int i = 0; i < 4; ++i)
            CHECK(lhs[i] == Catch::Approx(a * r1[i] + b * r2[i]).margin(1e-12));
    }
}

TEST_CASE("ebn0_to_snr evaluates (Eb/N0) * mJ/K and is linear") {
    SystemConfig c = SystemConfig::canonical();
    CHECK(ebn0_to_snr(1.0, c) == Catch::Approx(3.0));
    CHECK(ebn0_to_snr(2.0, c) == Catch::Approx(6.0));

    SystemConfig unit;
    unit.users = 1;
    unit.resources = 1;
    unit.codebook_size = 2;
    unit.bits_per_symbol = 1;
    unit.nonzero_per_codeword = 1;
    CHECK(ebn0_to_snr(0.37, unit) == Catch::Approx(0.37));

    CHECK_THROWS_AS(ebn0_to_snr(0.0, c), std::invalid_argument);
    CHECK_THROWS_AS(ebn0_to_snr(-1.0, c), std::invalid_argument);

    Rng rng(17);
    std::uniform_real_distribution<double> u(0.01, 50.0);
    for (int t = 0; t < 25; ++t) {
        const double x = u(rng), s = u(rng);
        CHECK(ebn0_to_snr(s * x, c) == Catch::Approx(s * ebn0_to_snr(x, c)));
        CHECK(ebn0_to_snr(x + 1.0, c) > ebn0_to_snr(x, c));
    }
}

TEST_CASE("awgn noise variance derivation") {
    // total power P / SNR spread over 2K reals
    CHECK(noise_var_per_component(4.0, 2.0, 4) == Catch::Approx(0.25));

    SystemConfig c = SystemConfig::canonical();
    std::vector<double> clean(8, 0.5);
    CHECK_THROWS_AS(
        [&] {
            Rng r(1);
            return add_awgn(clean, 1.0, c, 0.0, r);
        }(),
        std::invalid_argument);

    auto quiet = without_noise(clean);
    CHECK(quiet.y == clean);
    CHECK(quiet.noise_var_per_component == 0.0);
}

TEST_CASE("awgn sample statistics at one million draws") {
    // tolerances: mean within 5 sigma_c/sqrt(n) (false-alarm ~5.7e-7),
    // variance within 1% = ~7 standard errors of the variance estimator
    // (false-alarm ~1e-11)
    SystemConfig c = SystemConfig::canonical();
    const double power = 4.0, ebn0 = 1.0;
    const double snr = ebn0_to_snr(ebn0, c);
    const double expect_var = noise_var_per_component(power, snr, c.resources);

    const size_t frames = 125000;  // 8 components each -> 1e6 draws
    std::vector<double> clean(8, 0.0);
    Rng rng(20260809);
    double sum = 0.0, sum_sq = 0.0;
    for (size_t f = 0; f < frames; ++f) {
        auto rx = add_awgn(clean, ebn0, c, power, rng);
        CHECK(rx.noise_var_per_component == Catch::Approx(expect_var));
        for (double v : rx.y) {
            sum += v;
            sum_sq += v * v;
        }
    }
    const double n = static_cast<double>(frames) * 8;
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 5.0 * std::sqrt(expect_var / n));
    CHECK(std::abs(var - expect_var) < 0.01 * expect_var);
}

TEST_CASE("ensemble power: closed form, oracle, scaling") {
    // deterministic single-codeword signal
    UserCodebook u;
    u.support = {0};
    u.codewords = {{cplx(1, 0), cplx(0, 0)}};
    Codebook one = Codebook::from_parts(1, 2, 1, {u});
    CHECK(ensemble_power(one, ChannelGain::ones(2)) == Catch::Approx(1.0));

    Codebook cb = baseline();
    ChannelGain ones = ChannelGain::ones(cb.resources());
    const double exact = ensemble_power(cb, ones);

    // Monte-Carlo oracle: one million random frames
    Rng rng(424242);
    std::uniform_int_distribution<int> sym(0, cb.size() - 1);
    std::vector<std::vector<cplx>> cws(static_cast<size_t>(cb.users()));
    double acc = 0.0;
    const int frames = 1'000'000;
    for (int f = 0; f < frames; ++f) {
        for (int j = 0; j < cb.users(); ++j) cws[j] = cb.codeword(j, sym(rng));
        auto y = superpose(cws, ones);
        double s = 0.0;
        for (double v : y) s += v * v;
        acc += s;
    }
    const double estimate = acc / frames;
    CHECK(std::abs(estimate - exact) < 0.005 * exact);

    ChannelGain doubled{std::vector<double>(8, 2.0)};
    CHECK(ensemble_power(cb, doubled) == Catch::Approx(4.0 * exact));
}
