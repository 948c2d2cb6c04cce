#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "importance.hpp"
#include "support/oracles.hpp"

using namespace glupruner;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
}

} // namespace

TEST_CASE("magnitude scores are absolute values") {
    const auto s = magnitude_scores(Tensor2D(1, 2, {-2.0f, 0.5f}));
    CHECK(s.scores == ScoreMatrix(1, 2, {2.0, 0.5}));
    CHECK(s.metric == ScoreMetric::Magnitude);
    const auto z = magnitude_scores(Tensor2D(3, 3));
    for (double v : z.scores.data()) CHECK(v == 0.0);
}

TEST_CASE("wanda scores multiply by input norms per column") {
    const Tensor2D w(2, 2, {1, -2, 3, 0.5f});
    const std::vector<double> norms{2, 1};
    CHECK(wanda_scores(w, norms).scores == ScoreMatrix(2, 2, {2, 2, 6, 0.5}));

    const std::vector<double> ones{1, 1};
    CHECK(wanda_scores(w, ones).scores == magnitude_scores(w).scores);

    const std::vector<double> zero_col{0, 5};
    const auto s = wanda_scores(w, zero_col);
    CHECK(s.scores(0, 0) == 0.0);
    CHECK(s.scores(1, 0) == 0.0);
}

TEST_CASE("wanda and dass reject bad norms") {
    const Tensor2D w(2, 3);
    const std::vector<double> short_norms{1, 1};
    CHECK(code_of([&] { wanda_scores(w, short_norms); }) == ErrorCode::Dimension);
    CHECK(code_of([&] { dass_down_scores(w, short_norms); }) == ErrorCode::Dimension);
    const std::vector<double> three{1, 1, 1};
    CHECK(code_of([&] { dass_gate_up_scores(w, three, 0.5); }) == ErrorCode::Dimension);
    const std::vector<double> neg{1, -1};
    CHECK(code_of([&] { dass_gate_up_scores(w, neg, 0.5); }) == ErrorCode::Data);
    const std::vector<double> nan{1, std::numeric_limits<double>::quiet_NaN(), 1};
    CHECK(code_of([&] { wanda_scores(w, nan); }) == ErrorCode::Data);
}

TEST_CASE("dass gate/up examples") {
    const std::vector<double> fours{4, 4};
    CHECK(dass_gate_up_scores(Tensor2D(2, 1, {3, 1}), fours, 0.5).scores == ScoreMatrix(2, 1, {6, 2}));

    const std::vector<double> norms{2, 8};
    const auto s = dass_gate_up_scores(Tensor2D(2, 1, {1, 1}), norms, 0.5);
    CHECK(s.scores(0, 0) == doctest::Approx(1.4142135623730951).epsilon(1e-15));
    CHECK(s.scores(1, 0) == doctest::Approx(2.8284271247461903).epsilon(1e-15));
    CHECK(s.alpha == 0.5);
}

TEST_CASE("dass gate/up with alpha 0 is magnitude, including zero norms") {
    std::mt19937_64 rng(1);
    const Tensor2D w_t = testutil::random_tensor(rng, 6, 4);
    std::vector<double> norms = testutil::random_norms(rng, 6);
    norms[2] = 0.0;
    CHECK(dass_gate_up_scores(w_t, norms, 0.0).scores == magnitude_scores(w_t).scores);
}

TEST_CASE("negative or non-finite alpha is a config error") {
    const std::vector<double> norms{1};
    const Tensor2D w(1, 1, {1});
    CHECK(code_of([&] { dass_gate_up_scores(w, norms, -0.1); }) == ErrorCode::Config);
    CHECK(code_of([&] { dass_gate_up_scores(w, norms, std::numeric_limits<double>::infinity()); }) ==
          ErrorCode::Config);
}

TEST_CASE("dass down examples") {
    const std::vector<double> norms{3, 10};
    CHECK(dass_down_scores(Tensor2D(1, 2, {2, -1}), norms).scores == ScoreMatrix(1, 2, {6, 10}));
    const std::vector<double> ones{1, 1};
    const Tensor2D w(2, 2, {-1, 2, 0.25f, -8});
    CHECK(dass_down_scores(w, ones).scores == magnitude_scores(w).scores);
}

TEST_CASE("dass down equals wanda with intermediate norms, elementwise exact") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor2D w_t = testutil::random_tensor(rng, 5, 12);
        const auto norms = testutil::random_norms(rng, 12);
        CHECK(dass_down_scores(w_t, norms).scores == wanda_scores(w_t, norms).scores);
    }
}

TEST_CASE("scores match the brute-force formulas") {
    std::mt19937_64 rng(3);
    const Tensor2D w = testutil::random_tensor(rng, 7, 5); // storage gate (d_hidden=7, d_int=5)
    const auto inter = testutil::random_norms(rng, 5);
    const auto ref = oracle::dass_gate_up(oracle::to_grid(w), inter, 0.75);
    const auto got = dass_gate_up_scores(w.transposed(), inter, 0.75).scores;
    for (std::size_t j = 0; j < 7; ++j)
        for (std::size_t i = 0; i < 5; ++i) CHECK(got(i, j) == doctest::Approx(ref[j][i]).epsilon(1e-14));
}

TEST_CASE("gate/up score ratios grow with alpha for above-unit norms") {
    const Tensor2D w_t(2, 1, {1, 1});
    const std::vector<double> norms{2, 9};
    double prev = 0.0;
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const auto s = dass_gate_up_scores(w_t, norms, alpha).scores;
        const double ratio = s(1, 0) / s(0, 0);
        CHECK(ratio >= prev);
        prev = ratio;
    }
    CHECK(prev == doctest::Approx(4.5));
}
