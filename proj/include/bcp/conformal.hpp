#pragma once

#include <cmath>

#include "bcp/budget_set.hpp"
#include "bcp/core.hpp"

namespace bcp {

struct ScoreParams {
    double beta = 1.0;
};

enum class Method { BCP, NME };

inline const char* method_name(Method m) { return m == Method::BCP ? "bcp" : "nme"; }

struct MiscoverageEstimate {
    double value = 0.0;                 // in (0,1] for BCP, [0,1] for NME
    Method method = Method::BCP;
    std::optional<double> e_value;      // present for BCP; clamped to >= 1 alongside value
};

// Power-law nonconformity score s = p^(-beta). Finite on [kEpsFloor, 1].
inline double nc_score(double p, const ScoreParams& params) {
    if (!(params.beta > 0.0)) throw DomainError("beta must be positive");
    if (!(p >= kEpsFloor) || p > 1.0)
        throw DomainError("nc_score needs p in [eps_floor, 1]; clamp before scoring");
    return std::pow(p, -params.beta);
}

// E(x0, y) = s(x0, y) / [ (sum_i s(x_i, y_i) + s(x0, y)) / (N + 1) ].
//
// The denominator is the mean score over the calibration scores plus the
// candidate itself, so averaging over the N + 1 leave-one-out choices of the
// test score gives exactly 1. Range (0, N + 1); only score ratios matter.
inline double e_value(double test_score, double cal_score_sum, int n_cal) {
    if (n_cal < 1) throw EmptyInputError("e_value needs at least one calibration score");
    if (!(test_score > 0.0) || !std::isfinite(test_score))
        throw DomainError("test score must be finite and positive");
    return test_score * static_cast<double>(n_cal + 1) / (cal_score_sum + test_score);
}

inline double e_value(double test_score, const CalibrationSet& cal) {
    return e_value(test_score, cal.score_sum(), cal.size());
}

inline CalibrationSet build_calibration_set(std::vector<Example> examples,
                                            const ScoreParams& params) {
    std::vector<double> scores;
    scores.reserve(examples.size());
    for (const Example& ex : examples)
        scores.push_back(
            nc_score(ex.dist.probs[static_cast<std::size_t>(ex.true_label.index)], params));
    return CalibrationSet(std::move(examples), std::move(scores));
}

// Estimated miscoverage of the budget set: the reciprocal e-value of the
// first excluded label. For the full set no label is excluded and the
// estimate takes its infimum 1/(N+1), the limit as the excluded probability
// vanishes; miscoverage is impossible there, so any positive value is safe.
// Estimates above 1 (e-value below 1) are clamped to 1, and the clamp is
// mirrored into the stored e-value so the pair stays reciprocal.
inline MiscoverageEstimate bcp_alpha(const PredictiveDistribution& test_dist,
                                     const PredictionSetResult& set_result,
                                     const CalibrationSet& cal, const ScoreParams& params) {
    MiscoverageEstimate est;
    est.method = Method::BCP;
    if (set_result.c_max >= test_dist.size()) {
        est.e_value = static_cast<double>(cal.size() + 1);
        est.value = 1.0 / *est.e_value;
        return est;
    }
    double excluded_p =
        test_dist.probs[static_cast<std::size_t>(set_result.ordering[set_result.c_max])];
    double e = e_value(nc_score(excluded_p, params), cal);
    if (e < 1.0) e = 1.0;
    est.e_value = e;
    est.value = 1.0 / e;
    return est;
}

// Naive mass estimate: probability outside the set. Underestimates whenever
// the detector is overconfident.
inline MiscoverageEstimate nme_alpha(const PredictiveDistribution& test_dist,
                                     const PredictionSetResult& set_result) {
    double inside = 0.0;
    for (int idx : set_result.included) inside += test_dist.probs[static_cast<std::size_t>(idx)];
    MiscoverageEstimate est;
    est.method = Method::NME;
    est.value = std::clamp(1.0 - inside, 0.0, 1.0);
    return est;
}

inline int miscovered(const PredictionSetResult& set_result, const Label& true_label) {
    return set_contains(set_result, true_label.index) ? 0 : 1;
}

}  // namespace bcp
