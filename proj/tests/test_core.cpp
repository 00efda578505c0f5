#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "bcp/core.hpp"

namespace {

bcp::LabelSpace space4() { return bcp::LabelSpace{4}; }

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

TEST_CASE("label space layout", "[core]") {
    bcp::LabelSpace sp = space4();
    REQUIRE(sp.size() == 6);
    REQUIRE(sp.kind_of(0) == bcp::LabelKind::NoTransmission);
    REQUIRE(sp.kind_of(1) == bcp::LabelKind::WifiOnly);
    for (int i = 2; i < sp.size(); ++i) REQUIRE(sp.kind_of(i) == bcp::LabelKind::Interference);
    REQUIRE(sp.name_of(0) == "no_transmission");
    REQUIRE(sp.name_of(1) == "wifi_only");
    REQUIRE(sp.name_of(2) == "subcarrier_1");
    REQUIRE(sp.name_of(5) == "subcarrier_4");

    REQUIRE(bcp::make_label(sp, 3).kind == bcp::LabelKind::Interference);
    REQUIRE_THROWS_AS(bcp::make_label(sp, -1), bcp::DomainError);
    REQUIRE_THROWS_AS(bcp::make_label(sp, 6), bcp::DomainError);
}

TEST_CASE("cost model validation", "[core]") {
    bcp::LabelSpace sp = space4();

    bcp::CostModel uniform = bcp::uniform_cost_model(sp);
    REQUIRE(uniform.costs == std::vector<double>{0.0, 0.0, 1.0, 1.0, 1.0, 1.0});
    REQUIRE(uniform.total() == 4.0);

    bcp::CostModel mixed = bcp::make_cost_model(sp, {0.0, 0.0, 0.5, 0.25, 1.0, 0.125});
    REQUIRE(mixed.total() == Catch::Approx(1.875));

    REQUIRE_THROWS_AS(bcp::make_cost_model(sp, {0.1, 0.0, 1.0, 1.0, 1.0, 1.0}),
                      bcp::ConfigError);
    REQUIRE_THROWS_AS(bcp::make_cost_model(sp, {0.0, 0.0, 0.0, 1.0, 1.0, 1.0}),
                      bcp::ConfigError);
    REQUIRE_THROWS_AS(bcp::make_cost_model(sp, {0.0, 0.0, 1.5, 1.0, 1.0, 1.0}),
                      bcp::ConfigError);
    REQUIRE_THROWS_AS(bcp::make_cost_model(sp, {0.0, 0.0, 1.0}), bcp::LengthMismatchError);
    REQUIRE_THROWS_AS(bcp::uniform_cost_model(sp, 0.0), bcp::ConfigError);
}

TEST_CASE("normalize on clean input", "[core]") {
    bcp::LabelSpace sp = space4();

    SECTION("one-hot vector keeps the floor on the zeros") {
        bcp::PredictiveDistribution d = bcp::normalize({0, 0, 1, 0, 0, 0}, sp);
        REQUIRE(std::abs(sum(d.probs) - 1.0) < 1e-9);
        for (double p : d.probs) REQUIRE(p >= bcp::kEpsFloor);
        REQUIRE(d.probs[2] > 0.999999);
        for (int i : {0, 1, 3, 4, 5})
            REQUIRE(d.probs[static_cast<std::size_t>(i)] == Catch::Approx(bcp::kEpsFloor));
    }

    SECTION("constant vector becomes uniform") {
        bcp::PredictiveDistribution d = bcp::normalize({2, 2, 2, 2, 2, 2}, sp);
        for (double p : d.probs) REQUIRE(p == Catch::Approx(1.0 / 6.0).margin(1e-15));
    }

    SECTION("two positive entries split 1:3") {
        // Hand computation: 1 and 3 share all mass except four floors, so the
        // positives land at (1 - 4e) * {0.25, 0.75}, indistinguishable from
        // {0.25, 0.75} at 1e-9.
        bcp::PredictiveDistribution d = bcp::normalize({1, 3, 0, 0, 0, 0}, sp);
        REQUIRE(d.probs[0] == Catch::Approx(0.25).margin(1e-9));
        REQUIRE(d.probs[1] == Catch::Approx(0.75).margin(1e-9));
        for (int i = 2; i < 6; ++i) {
            REQUIRE(d.probs[static_cast<std::size_t>(i)] >= bcp::kEpsFloor);
            REQUIRE(d.probs[static_cast<std::size_t>(i)] <= 2e-12);
        }
        REQUIRE(std::abs(sum(d.probs) - 1.0) < 1e-12);
    }
}

TEST_CASE("normalize rejects bad input", "[core]") {
    bcp::LabelSpace sp = space4();
    REQUIRE_THROWS_AS(bcp::normalize({0, 0, 0, 0, 0, 0}, sp), bcp::AllZeroError);
    REQUIRE_THROWS_AS(bcp::normalize({1, 2, 3}, sp), bcp::LengthMismatchError);
    REQUIRE_THROWS_AS(bcp::normalize({1, -0.5, 0, 0, 0, 0}, sp), bcp::DomainError);
    REQUIRE_THROWS_AS(bcp::normalize({1, std::nan(""), 0, 0, 0, 0}, sp), bcp::DomainError);
}

TEST_CASE("normalize is idempotent and argmax-preserving", "[core]") {
    bcp::LabelSpace sp = space4();
    std::mt19937_64 rng(0xC0DE);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> raw(6);
        bool any = false;
        for (double& v : raw) {
            v = unif(rng);
            if (trial % 3 == 0 && unif(rng) < 0.4) v = 0.0;  // exercise the floor path
            any = any || v > 0.0;
        }
        if (!any) raw[0] = 0.5;

        bcp::PredictiveDistribution once = bcp::normalize(raw, sp);
        bcp::PredictiveDistribution twice = bcp::normalize(once.probs, sp);
        for (int i = 0; i < 6; ++i) {
            REQUIRE(std::abs(twice.probs[static_cast<std::size_t>(i)] -
                             once.probs[static_cast<std::size_t>(i)]) <= 1e-12);
            REQUIRE(once.probs[static_cast<std::size_t>(i)] >= bcp::kEpsFloor);
        }
        REQUIRE(std::abs(sum(once.probs) - 1.0) < 1e-9);

        // Positive rescaling of the input cannot move the argmax.
        int base = bcp::point_estimate(once, sp).index;
        for (double c : {1e-6, 0.5, 1e6}) {
            std::vector<double> scaled = raw;
            for (double& v : scaled) v *= c;
            bcp::PredictiveDistribution ds = bcp::normalize(scaled, sp);
            REQUIRE(bcp::point_estimate(ds, sp).index == base);
        }
    }
}

TEST_CASE("point estimate breaks ties toward the smallest index", "[core]") {
    bcp::LabelSpace sp = space4();
    bcp::PredictiveDistribution uniform = bcp::normalize({1, 1, 1, 1, 1, 1}, sp);
    REQUIRE(bcp::point_estimate(uniform, sp).index == 0);

    bcp::PredictiveDistribution peaked = bcp::normalize({0.1, 0.6, 0.1, 0.1, 0.05, 0.05}, sp);
    REQUIRE(bcp::point_estimate(peaked, sp).index == 1);

    bcp::PredictiveDistribution tied = bcp::normalize({0.1, 0.3, 0.3, 0.1, 0.1, 0.1}, sp);
    REQUIRE(bcp::point_estimate(tied, sp).index == 1);
}

TEST_CASE("calibration set caches the score sum", "[core]") {
    bcp::LabelSpace sp = space4();
    bcp::PredictiveDistribution uniform = bcp::normalize({1, 1, 1, 1, 1, 1}, sp);
    std::vector<bcp::Example> exs = {
        {uniform, bcp::make_label(sp, 0), std::nullopt},
        {uniform, bcp::make_label(sp, 1), std::nullopt},
        {uniform, bcp::make_label(sp, 2), std::nullopt},
    };

    bcp::CalibrationSet cal(exs, {1.0, 2.0, 3.0});
    REQUIRE(cal.size() == 3);
    REQUIRE(cal.score_sum() == Catch::Approx(6.0));

    bcp::CalibrationSet grown =
        cal.with_example({uniform, bcp::make_label(sp, 3), std::nullopt}, 4.0);
    REQUIRE(grown.size() == 4);
    REQUIRE(grown.score_sum() == Catch::Approx(10.0));
    REQUIRE(cal.size() == 3);  // with_example is a value operation

    REQUIRE_THROWS_AS(bcp::CalibrationSet({}, {}), bcp::EmptyInputError);
    REQUIRE_THROWS_AS(bcp::CalibrationSet(exs, {1.0, 2.0}), bcp::LengthMismatchError);
    REQUIRE_THROWS_AS(bcp::CalibrationSet(exs, {1.0, 0.0, 3.0}), bcp::DomainError);
    REQUIRE_THROWS_AS(bcp::CalibrationSet(exs, {1.0, std::nan(""), 3.0}), bcp::DomainError);
}
