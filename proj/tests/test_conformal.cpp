#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "bcp/budget_set.hpp"
#include "bcp/conformal.hpp"
#include "bcp/core.hpp"

namespace {

bcp::LabelSpace space4() { return bcp::LabelSpace{4}; }

// Calibration set with prescribed scores; the attached examples are inert.
bcp::CalibrationSet cal_with_scores(std::vector<double> scores) {
    bcp::LabelSpace sp = space4();
    bcp::PredictiveDistribution uniform = bcp::normalize({1, 1, 1, 1, 1, 1}, sp);
    std::vector<bcp::Example> exs(scores.size(),
                                  bcp::Example{uniform, bcp::make_label(sp, 0), std::nullopt});
    return bcp::CalibrationSet(std::move(exs), std::move(scores));
}

}  // namespace

TEST_CASE("nonconformity score is the inverse power of the probability", "[conformal]") {
    REQUIRE(bcp::nc_score(1.0, {1.0}) == Catch::Approx(1.0));
    REQUIRE(bcp::nc_score(0.5, {1.0}) == Catch::Approx(2.0));
    REQUIRE(bcp::nc_score(0.25, {2.0}) == Catch::Approx(16.0));
    REQUIRE(bcp::nc_score(0.5, {0.5}) == Catch::Approx(std::sqrt(2.0)));

    REQUIRE_THROWS_AS(bcp::nc_score(0.0, {1.0}), bcp::DomainError);
    REQUIRE_THROWS_AS(bcp::nc_score(1e-13, {1.0}), bcp::DomainError);
    REQUIRE_THROWS_AS(bcp::nc_score(1.5, {1.0}), bcp::DomainError);
    REQUIRE_THROWS_AS(bcp::nc_score(0.5, {0.0}), bcp::DomainError);
    REQUIRE_THROWS_AS(bcp::nc_score(0.5, {-1.0}), bcp::DomainError);
}

TEST_CASE("e-value against a fixed calibration pool", "[conformal]") {
    // scores {1,2,3}, test score 4: 4 * 4 / (6 + 4) = 1.6
    REQUIRE(bcp::e_value(4.0, 6.0, 3) == Catch::Approx(1.6).epsilon(1e-12));
    REQUIRE(bcp::e_value(4.0, cal_with_scores({1, 2, 3})) == Catch::Approx(1.6).epsilon(1e-12));

    // identical scores are perfectly conforming
    REQUIRE(bcp::e_value(5.0, 20.0, 4) == Catch::Approx(1.0));

    // the supremum N + 1 is approached but never attained
    double e = bcp::e_value(1e12, 6.0, 3);
    REQUIRE(e < 4.0);
    REQUIRE(e == Catch::Approx(4.0).epsilon(1e-10));

    REQUIRE_THROWS_AS(bcp::e_value(1.0, 0.0, 0), bcp::EmptyInputError);
    REQUIRE_THROWS_AS(bcp::e_value(0.0, 6.0, 3), bcp::DomainError);
    REQUIRE_THROWS_AS(bcp::e_value(std::numeric_limits<double>::infinity(), 6.0, 3),
                      bcp::DomainError);
}

TEST_CASE("leave-one-out e-values average to one", "[conformal]") {
    // For any multiset of N + 1 scores, averaging E over the choice of which
    // score plays the test role gives exactly 1. This is an algebraic
    // identity, so the tolerance covers only floating-point noise.
    std::mt19937_64 rng(0xE1D0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double worst = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
        int n_plus_1 = 2 + static_cast<int>(unif(rng) * 199.0);
        std::vector<double> s(static_cast<std::size_t>(n_plus_1));
        for (double& v : s) v = std::exp(std::log(1e-3) + unif(rng) * std::log(1e6));

        double mean = 0.0;
        for (int j = 0; j < n_plus_1; ++j) {
            double rest = 0.0;
            for (int i = 0; i < n_plus_1; ++i)
                if (i != j) rest += s[static_cast<std::size_t>(i)];
            mean += bcp::e_value(s[static_cast<std::size_t>(j)], rest, n_plus_1 - 1);
        }
        mean /= static_cast<double>(n_plus_1);
        worst = std::max(worst, std::abs(mean - 1.0));
    }
    REQUIRE(worst <= 1e-10);
}

TEST_CASE("e-value depends only on score ratios and not on pool order", "[conformal]") {
    std::mt19937_64 rng(0xE2A1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int trial = 0; trial < 200; ++trial) {
        int n = 1 + static_cast<int>(unif(rng) * 50.0);
        std::vector<double> s(static_cast<std::size_t>(n));
        for (double& v : s) v = 0.1 + unif(rng) * 10.0;
        double test = 0.1 + unif(rng) * 10.0;

        double base = bcp::e_value(test, cal_with_scores(s));
        for (double c : {1e-3, 7.0, 1e3}) {
            std::vector<double> cs = s;
            for (double& v : cs) v *= c;
            REQUIRE(std::abs(bcp::e_value(test * c, cal_with_scores(cs)) - base) <= 1e-10);
        }

        std::vector<double> perm = s;
        std::shuffle(perm.begin(), perm.end(), rng);
        REQUIRE(std::abs(bcp::e_value(test, cal_with_scores(perm)) - base) <= 1e-10);
    }
}

TEST_CASE("backward miscoverage estimate on fixed cases", "[conformal]") {
    bcp::LabelSpace sp = space4();
    bcp::CostModel uniform = bcp::uniform_cost_model(sp);
    bcp::ScoreParams params{1.0};

    SECTION("excluded label with probability 0.25 against scores {1,2,3}") {
        // zero budget, interference label on top: the set is empty and the
        // first excluded label has p = 0.25, score 4, e-value 1.6
        bcp::PredictiveDistribution d{{0.2, 0.19, 0.25, 0.14, 0.12, 0.1}};
        bcp::PredictionSetResult r = bcp::build_set(d, uniform, bcp::Budget{0.0});
        REQUIRE(r.c_max == 0);

        bcp::MiscoverageEstimate est = bcp::bcp_alpha(d, r, cal_with_scores({1, 2, 3}), params);
        REQUIRE(est.method == bcp::Method::BCP);
        REQUIRE(est.value == Catch::Approx(0.625).epsilon(1e-12));
        REQUIRE(est.e_value.has_value());
        REQUIRE(*est.e_value == Catch::Approx(1.6).epsilon(1e-12));
        REQUIRE(est.value * *est.e_value == Catch::Approx(1.0).margin(1e-15));
    }

    SECTION("full set takes the infimum 1/(N+1)") {
        bcp::PredictiveDistribution d{{0.4, 0.3, 0.2, 0.05, 0.03, 0.02}};
        bcp::PredictionSetResult r = bcp::build_set(d, uniform, bcp::Budget{6.0});
        REQUIRE(r.c_max == 6);

        bcp::MiscoverageEstimate est =
            bcp::bcp_alpha(d, r, cal_with_scores({1, 1, 1, 1, 1, 1, 1, 1, 1}), params);
        REQUIRE(est.value == Catch::Approx(0.1).epsilon(1e-12));
        REQUIRE(*est.e_value == Catch::Approx(10.0).epsilon(1e-12));
    }

    SECTION("conforming exclusions clamp at one") {
        // excluded score 2 against calibration scores {10,10,10} gives an
        // e-value of 0.25; the estimate clamps to 1 and the stored e-value
        // mirrors the clamp
        bcp::PredictiveDistribution d{{0.2, 0.19, 0.5, 0.05, 0.03, 0.03}};
        bcp::PredictionSetResult r = bcp::build_set(d, uniform, bcp::Budget{0.0});
        REQUIRE(r.c_max == 0);

        bcp::MiscoverageEstimate est = bcp::bcp_alpha(d, r, cal_with_scores({10, 10, 10}), params);
        REQUIRE(est.value == 1.0);
        REQUIRE(*est.e_value == 1.0);
    }

    SECTION("boundary case lands exactly at one without clamping") {
        bcp::PredictiveDistribution d{{0.2, 0.19, 0.25, 0.14, 0.12, 0.1}};
        bcp::PredictionSetResult r = bcp::build_set(d, uniform, bcp::Budget{0.0});
        bcp::MiscoverageEstimate est = bcp::bcp_alpha(d, r, cal_with_scores({4, 4, 4}), params);
        REQUIRE(est.value == Catch::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("naive mass estimate sums the excluded probability", "[conformal]") {
    bcp::LabelSpace sp = space4();
    bcp::CostModel uniform = bcp::uniform_cost_model(sp);
    bcp::PredictiveDistribution d{{0.4, 0.3, 0.2, 0.05, 0.03, 0.02}};

    bcp::PredictionSetResult top3 = bcp::build_set(d, uniform, bcp::Budget{1.0});
    REQUIRE(top3.c_max == 3);
    bcp::MiscoverageEstimate est = bcp::nme_alpha(d, top3);
    REQUIRE(est.method == bcp::Method::NME);
    REQUIRE(est.value == Catch::Approx(0.1).margin(1e-12));
    REQUIRE_FALSE(est.e_value.has_value());

    bcp::PredictionSetResult full = bcp::build_set(d, uniform, bcp::Budget{6.0});
    REQUIRE(bcp::nme_alpha(d, full).value == Catch::Approx(0.0).margin(1e-12));

    bcp::PredictiveDistribution top_interf{{0.2, 0.19, 0.25, 0.14, 0.12, 0.1}};
    bcp::PredictionSetResult empty = bcp::build_set(top_interf, uniform, bcp::Budget{0.0});
    REQUIRE(bcp::nme_alpha(top_interf, empty).value == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("miscoverage indicator", "[conformal]") {
    bcp::LabelSpace sp = space4();
    bcp::CostModel uniform = bcp::uniform_cost_model(sp);
    bcp::PredictiveDistribution d{{0.4, 0.3, 0.2, 0.05, 0.03, 0.02}};
    bcp::PredictionSetResult r = bcp::build_set(d, uniform, bcp::Budget{1.0});

    REQUIRE(bcp::miscovered(r, bcp::make_label(sp, 0)) == 0);
    REQUIRE(bcp::miscovered(r, bcp::make_label(sp, 2)) == 0);
    REQUIRE(bcp::miscovered(r, bcp::make_label(sp, 3)) == 1);
    REQUIRE(bcp::miscovered(r, bcp::make_label(sp, 5)) == 1);
}

TEST_CASE("estimator ranges on random instances", "[conformal]") {
    std::mt19937_64 rng(0xA1FA);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int trial = 0; trial < 300; ++trial) {
        bcp::LabelSpace sp{1 + static_cast<int>(unif(rng) * 6.0)};
        std::vector<double> raw(static_cast<std::size_t>(sp.size()));
        for (double& v : raw) v = 0.01 + unif(rng);
        bcp::PredictiveDistribution d = bcp::normalize(raw, sp);
        bcp::CostModel cm = bcp::uniform_cost_model(sp);
        double k = unif(rng) * (cm.total() + 0.5);
        bcp::PredictionSetResult r = bcp::build_set(d, cm, bcp::Budget{k});

        int n = 1 + static_cast<int>(unif(rng) * 40.0);
        std::vector<double> scores(static_cast<std::size_t>(n));
        for (double& s : scores) s = 0.5 + unif(rng) * 20.0;
        bcp::CalibrationSet cal = cal_with_scores(scores);
        bcp::ScoreParams params{0.25 + 2.0 * unif(rng)};

        bcp::MiscoverageEstimate b = bcp::bcp_alpha(d, r, cal, params);
        REQUIRE(b.value >= 1.0 / static_cast<double>(n + 1) - 1e-15);
        REQUIRE(b.value <= 1.0);
        REQUIRE(b.value * *b.e_value == Catch::Approx(1.0).margin(1e-15));

        bcp::MiscoverageEstimate m = bcp::nme_alpha(d, r);
        REQUIRE(m.value >= 0.0);
        REQUIRE(m.value <= 1.0);
    }
}

TEST_CASE("scoring examples builds the calibration pool", "[conformal]") {
    bcp::LabelSpace sp = space4();
    bcp::PredictiveDistribution d1 = bcp::normalize({0.5, 0.2, 0.1, 0.1, 0.05, 0.05}, sp);
    bcp::PredictiveDistribution d2 = bcp::normalize({0.25, 0.25, 0.25, 0.05, 0.1, 0.1}, sp);
    std::vector<bcp::Example> exs = {
        {d1, bcp::make_label(sp, 0), std::nullopt},  // p = 0.5 -> score 2
        {d2, bcp::make_label(sp, 2), std::nullopt},  // p = 0.25 -> score 4
    };
    bcp::CalibrationSet cal = bcp::build_calibration_set(exs, {1.0});
    REQUIRE(cal.scores()[0] == Catch::Approx(2.0));
    REQUIRE(cal.scores()[1] == Catch::Approx(4.0));
    REQUIRE(cal.score_sum() == Catch::Approx(6.0));
}
