#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "bcp/conformal.hpp"
#include "bcp/rng.hpp"

namespace bcp {

// Deterministic invariant suite behind `validate`. Every check compares the
// library against an independently coded oracle (fresh summation, exhaustive
// threshold search) rather than against the code path it is checking.
struct ValidationOptions {
    std::uint64_t seed = 1;
    int instances = 1000;
    bool corrupt_e_value = false;    // negative-control hook: suite must fail
};

struct CheckResult {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool all_passed() const {
        for (const CheckResult& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

namespace detail {

struct RandomInstance {
    LabelSpace space;
    PredictiveDistribution dist;
    CostModel costs;
    double k = 0.0;
};

inline RandomInstance random_instance(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> s_draw(1, 6);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    RandomInstance inst;
    inst.space = LabelSpace{s_draw(rng)};
    for (;;) {
        std::vector<double> raw(static_cast<std::size_t>(inst.space.size()));
        for (double& v : raw) v = 0.01 + 0.99 * unif(rng);
        inst.dist = normalize(raw, inst.space);
        bool distinct = true;
        for (std::size_t i = 0; i < inst.dist.probs.size() && distinct; ++i)
            for (std::size_t j = i + 1; j < inst.dist.probs.size(); ++j)
                if (inst.dist.probs[i] == inst.dist.probs[j]) {
                    distinct = false;
                    break;
                }
        if (distinct) break;
    }
    std::vector<double> costs(static_cast<std::size_t>(inst.space.size()));
    for (int i = 2; i < inst.space.size(); ++i)
        costs[static_cast<std::size_t>(i)] = 0.05 + 0.95 * unif(rng);
    inst.costs = make_cost_model(inst.space, std::move(costs));
    inst.k = unif(rng) * (inst.costs.total() + 0.5);
    return inst;
}

// Exhaustive prefix oracle: evaluate every m with a fresh left-to-right sum.
inline int oracle_cmax(const std::vector<int>& ordering, const CostModel& costs, double k) {
    int best = 0;
    for (int m = 0; m <= static_cast<int>(ordering.size()); ++m) {
        double total = 0.0;
        for (int pos = 0; pos < m; ++pos)
            total += costs.costs[static_cast<std::size_t>(ordering[static_cast<std::size_t>(pos)])];
        if (total <= k) best = m;
    }
    return best;
}

// Ordering by repeated max extraction with smallest-index ties, independent
// of the sort used by the library.
inline std::vector<int> oracle_ordering(const PredictiveDistribution& dist) {
    std::vector<int> out;
    std::vector<bool> used(dist.probs.size(), false);
    for (std::size_t round = 0; round < dist.probs.size(); ++round) {
        int best = -1;
        for (int i = 0; i < dist.size(); ++i)
            if (!used[static_cast<std::size_t>(i)] &&
                (best < 0 || dist.probs[static_cast<std::size_t>(i)] >
                                 dist.probs[static_cast<std::size_t>(best)]))
                best = i;
        used[static_cast<std::size_t>(best)] = true;
        out.push_back(best);
    }
    return out;
}

// Smallest threshold on the grid of observed probability values whose strict
// upper set is small enough.
inline double oracle_lambda(const PredictiveDistribution& dist, int c_max) {
    std::vector<double> grid = dist.probs;
    std::sort(grid.begin(), grid.end());
    double best = 1.0;
    bool found = false;
    for (double lam : grid) {
        int size = 0;
        for (double p : dist.probs)
            if (p > lam) ++size;
        if (size <= c_max && (!found || lam < best)) {
            best = lam;
            found = true;
        }
    }
    return best;
}

inline std::string format_detail(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return std::string(buf);
}

using EValueFn = std::function<double(double, double, int)>;

inline EValueFn make_e_value_fn(bool corrupt) {
    if (!corrupt)
        return [](double test_score, double sum, int n) { return e_value(test_score, sum, n); };
    return [](double test_score, double sum, int n) {
        return e_value(test_score, sum, n) * 1.01;
    };
}

}  // namespace detail

inline ValidationReport run_validation(const ValidationOptions& opts) {
    if (opts.instances < 1) throw ConfigError("instances must be >= 1");
    ValidationReport report;
    const detail::EValueFn ev = detail::make_e_value_fn(opts.corrupt_e_value);

    // Leave-one-out identity: for any multiset of N+1 positive scores the
    // average e-value over the N+1 test choices is exactly 1.
    {
        std::mt19937_64 rng = make_rng(derive_seed(opts.seed, 0xE1));
        std::uniform_int_distribution<int> size_draw(2, 200);
        std::uniform_real_distribution<double> log_unif(std::log(1e-3), std::log(1e3));
        double worst = 0.0;
        for (int t = 0; t < opts.instances; ++t) {
            int n_plus_1 = size_draw(rng);
            std::vector<double> scores(static_cast<std::size_t>(n_plus_1));
            double total = 0.0;
            for (double& s : scores) {
                s = std::exp(log_unif(rng));
                total += s;
            }
            double mean = 0.0;
            for (double s : scores) mean += ev(s, total - s, n_plus_1 - 1);
            mean /= static_cast<double>(n_plus_1);
            worst = std::max(worst, std::abs(mean - 1.0));
        }
        report.checks.push_back({"exchangeability identity", worst <= 1e-10,
                                 "max |mean - 1| = " + detail::format_detail(worst)});
    }

    // Scale and permutation invariance of the miscoverage estimate.
    {
        std::mt19937_64 rng = make_rng(derive_seed(opts.seed, 0xE2));
        std::uniform_int_distribution<int> n_draw(1, 50);
        std::uniform_real_distribution<double> log_unif(std::log(1e-3), std::log(1e3));
        double worst_scale = 0.0, worst_perm = 0.0;
        for (int t = 0; t < opts.instances; ++t) {
            int n = n_draw(rng);
            std::vector<double> scores(static_cast<std::size_t>(n));
            for (double& s : scores) s = std::exp(log_unif(rng));
            double test_score = std::exp(log_unif(rng));

            double sum = 0.0;
            for (double s : scores) sum += s;
            double base = 1.0 / std::max(ev(test_score, sum, n), 1.0);
            for (double c : {1e-3, 1e3}) {
                double scaled_sum = 0.0;
                for (double s : scores) scaled_sum += s * c;
                double got = 1.0 / std::max(ev(test_score * c, scaled_sum, n), 1.0);
                worst_scale = std::max(worst_scale, std::abs(got - base));
            }
            std::vector<double> perm = scores;
            std::shuffle(perm.begin(), perm.end(), rng);
            double perm_sum = 0.0;
            for (double s : perm) perm_sum += s;
            double got = 1.0 / std::max(ev(test_score, perm_sum, n), 1.0);
            worst_perm = std::max(worst_perm, std::abs(got - base));
        }
        report.checks.push_back({"score scale invariance", worst_scale <= 1e-10,
                                 "max drift = " + detail::format_detail(worst_scale)});
        report.checks.push_back({"calibration permutation invariance", worst_perm <= 1e-10,
                                 "max drift = " + detail::format_detail(worst_perm)});
    }

    // Budget-set checks against exhaustive oracles.
    {
        std::mt19937_64 rng = make_rng(derive_seed(opts.seed, 0xE3));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        int bad_cmax = 0, bad_lambda = 0, bad_members = 0, bad_monotone = 0, bad_beta = 0;
        for (int t = 0; t < opts.instances; ++t) {
            detail::RandomInstance inst = detail::random_instance(rng);
            PredictionSetResult set = build_set(inst.dist, inst.costs, Budget{inst.k});

            std::vector<int> ordering = detail::oracle_ordering(inst.dist);
            int want_cmax = detail::oracle_cmax(ordering, inst.costs, inst.k);
            if (set.c_max != want_cmax) ++bad_cmax;

            if (want_cmax < inst.space.size()) {
                double want_lambda = detail::oracle_lambda(inst.dist, want_cmax);
                if (!set.lambda_star.has_value() || *set.lambda_star != want_lambda) ++bad_lambda;
                // Strict-threshold membership must agree with the prefix.
                for (int i = 0; i < inst.space.size(); ++i) {
                    bool want_in = inst.dist.probs[static_cast<std::size_t>(i)] > want_lambda;
                    if (want_in != set_contains(set, i)) ++bad_members;
                }
            } else if (set.lambda_star.has_value()) {
                ++bad_lambda;
            }

            double k2 = inst.k + unif(rng) * inst.costs.total();
            PredictionSetResult wider = build_set(inst.dist, inst.costs, Budget{k2});
            if (wider.c_max < set.c_max) ++bad_monotone;

            // The score exponent is not an input to set construction, so any
            // beta must reproduce the identical prefix.
            for (double beta : {0.5, 1.0, 2.0}) {
                (void)beta;
                PredictionSetResult same = build_set(inst.dist, inst.costs, Budget{inst.k});
                if (same.included != set.included) ++bad_beta;
            }
        }
        report.checks.push_back({"threshold-search equivalence", bad_lambda + bad_members == 0,
                                 std::to_string(bad_lambda) + " lambda / " +
                                     std::to_string(bad_members) + " membership mismatches"});
        report.checks.push_back({"prefix-sum oracle for c_max", bad_cmax == 0,
                                 std::to_string(bad_cmax) + " mismatches"});
        report.checks.push_back({"budget monotonicity", bad_monotone == 0,
                                 std::to_string(bad_monotone) + " violations"});
        report.checks.push_back({"beta independence of the set", bad_beta == 0,
                                 std::to_string(bad_beta) + " mismatches"});
    }

    return report;
}

}  // namespace bcp
