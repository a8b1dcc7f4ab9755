#include <catch2/catch_amalgamated.hpp>

#include "scma/complexity.hpp"
#include "scma/dl_decoder.hpp"
#include "scma/sweep.hpp"

using namespace scma;

TEST_CASE("logmpa closed forms reproduce the published table") {
    SystemConfig c = SystemConfig::canonical();
    auto c3 = count_logmpa_ops(c, 3);
    CHECK(c3.multiplications == 9456);
    CHECK(c3.additions == 13320);
    CHECK(c3.log_exp_ops == 2449);
    auto c5 = count_logmpa_ops(c, 5);
    CHECK(c5.multiplications == 9456);
    CHECK(c5.additions == 16920);
    CHECK(c5.log_exp_ops == 4081);
    auto c7 = count_logmpa_ops(c, 7);
    CHECK(c7.multiplications == 9456);
    CHECK(c7.additions == 20520);
    CHECK(c7.log_exp_ops == 5713);
    CHECK_THROWS_AS(count_logmpa_ops(c, 0), std::invalid_argument);
}

TEST_CASE("network forward cost closed forms") {
    auto d = count_dnn_ops(48, 6, 4, 6);
    CHECK(d.multiplications == 14784);
    CHECK(d.additions == 252);
    CHECK(d.log_exp_ops == 0);

    auto degenerate = count_dnn_ops(1, 1, 0, 0);
    CHECK(degenerate.multiplications == 1);
    CHECK(degenerate.additions == 0);

    // the N_L * N_HN^2 term dominates: doubling the width roughly quadruples
    auto w1 = count_dnn_ops(64, 6, 4, 6);
    auto w2 = count_dnn_ops(128, 6, 4, 6);
    const double ratio = static_cast<double>(w2.multiplications) /
                         static_cast<double>(w1.multiplications);
    CHECK(ratio > 3.4);
    CHECK(ratio < 4.2);
}

TEST_CASE("normalization weights and linearity") {
    SystemConfig c = SystemConfig::canonical();
    CHECK(normalize_complexity(count_logmpa_ops(c, 3)) == 156860);
    CHECK(normalize_complexity(count_logmpa_ops(c, 5)) == 193100);
    CHECK(normalize_complexity(count_logmpa_ops(c, 7)) == 229340);
    CHECK(normalize_complexity(count_dnn_ops(48, 6, 4, 6)) == 148092);
    CHECK(normalize_complexity(OperationCount{}) == 0);

    OperationCount a{3, 5, 7}, b{11, 13, 17};
    OperationCount sum = a;
    sum += b;
    CHECK(normalize_complexity(sum) == normalize_complexity(a) + normalize_complexity(b));

    ComplexityWeights unit{1, 1, 1};
    CHECK(normalize_complexity(a, unit) == a.total());
}

TEST_CASE("comparison table carries the one-decimal reductions") {
    auto rows = compare_complexity(SystemConfig::canonical(), {3, 5, 7}, DecoderArch{});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].normalized == 156860);
    CHECK(rows[1].normalized == 193100);
    CHECK(rows[2].normalized == 229340);
    CHECK(rows[3].normalized == 148092);
    CHECK_FALSE(rows[3].has_reduction);

    std::ostringstream csv;
    write_complexity_csv(csv, rows);
    const std::string s = csv.str();
    CHECK(s.find("logmpa_it3,9456,13320,2449,156860,5.6") != std::string::npos);
    CHECK(s.find("logmpa_it5,9456,16920,4081,193100,23.3") != std::string::npos);
    CHECK(s.find("logmpa_it7,9456,20520,5713,229340,35.4") != std::string::npos);
    CHECK(s.find("dl_scma,14784,252,0,148092,") != std::string::npos);
}
