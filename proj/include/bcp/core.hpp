#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bcp/errors.hpp"

namespace bcp {

// Probability floor applied before normalization and scoring; the power-law
// nonconformity score diverges at p = 0.
inline constexpr double kEpsFloor = 1e-12;

enum class LabelKind { NoTransmission, WifiOnly, Interference };

// Labels are fixed to the order [no_transmission, wifi_only, subcarrier_1 .. subcarrier_S].
struct LabelSpace {
    int num_subcarriers = 4;

    int size() const { return num_subcarriers + 2; }

    LabelKind kind_of(int index) const {
        if (index == 0) return LabelKind::NoTransmission;
        if (index == 1) return LabelKind::WifiOnly;
        return LabelKind::Interference;
    }

    // 1-based subcarrier number for interference labels.
    int subcarrier_of(int index) const { return index - 1; }

    std::string name_of(int index) const {
        switch (kind_of(index)) {
            case LabelKind::NoTransmission: return "no_transmission";
            case LabelKind::WifiOnly: return "wifi_only";
            default: return "subcarrier_" + std::to_string(subcarrier_of(index));
        }
    }
};

struct Label {
    int index = 0;
    LabelKind kind = LabelKind::NoTransmission;
};

inline Label make_label(const LabelSpace& space, int index) {
    if (index < 0 || index >= space.size())
        throw DomainError("label index " + std::to_string(index) + " outside [0, " +
                          std::to_string(space.size() - 1) + "]");
    return Label{index, space.kind_of(index)};
}

// Mitigation cost per label. The two interference-free labels cost nothing;
// every interference label must cost something.
struct CostModel {
    std::vector<double> costs;

    double total() const { return std::accumulate(costs.begin(), costs.end(), 0.0); }
};

inline CostModel make_cost_model(const LabelSpace& space, std::vector<double> costs) {
    if (static_cast<int>(costs.size()) != space.size())
        throw LengthMismatchError("cost vector length " + std::to_string(costs.size()) +
                                  " does not match label count " + std::to_string(space.size()));
    if (costs[0] != 0.0 || costs[1] != 0.0)
        throw ConfigError("no_transmission and wifi_only must have zero cost");
    for (int i = 2; i < space.size(); ++i) {
        if (!(costs[i] > 0.0) || costs[i] > 1.0)
            throw ConfigError("interference label cost must lie in (0, 1], got " +
                              std::to_string(costs[i]) + " at index " + std::to_string(i));
    }
    return CostModel{std::move(costs)};
}

inline CostModel uniform_cost_model(const LabelSpace& space, double interference_cost = 1.0) {
    std::vector<double> c(static_cast<std::size_t>(space.size()), interference_cost);
    c[0] = 0.0;
    c[1] = 0.0;
    return make_cost_model(space, std::move(c));
}

struct PredictiveDistribution {
    std::vector<double> probs;

    int size() const { return static_cast<int>(probs.size()); }
};

// Clamp to the floor, divide by the sum, then pin any entry the division
// pushed back under the floor and rescale the rest. The pin loop terminates
// because each pass pins at least one more entry. Output satisfies both
// invariants exactly: sum within 1e-9 of 1 and every entry >= kEpsFloor.
inline PredictiveDistribution normalize(const std::vector<double>& raw, const LabelSpace& space) {
    if (static_cast<int>(raw.size()) != space.size())
        throw LengthMismatchError("probability vector length " + std::to_string(raw.size()) +
                                  " does not match label count " + std::to_string(space.size()));
    bool any_positive = false;
    for (double v : raw) {
        if (std::isnan(v) || v < 0.0)
            throw DomainError("probability entries must be nonnegative and finite");
        any_positive = any_positive || v > 0.0;
    }
    if (!any_positive) throw AllZeroError("cannot normalize an all-zero vector");

    std::vector<double> p(raw.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        p[i] = std::max(raw[i], kEpsFloor);
        sum += p[i];
    }
    for (double& v : p) v /= sum;

    std::vector<bool> pinned(p.size(), false);
    for (;;) {
        bool new_pin = false;
        double pinned_mass = 0.0, free_mass = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!pinned[i] && p[i] <= kEpsFloor) {
                pinned[i] = true;
                new_pin = true;
            }
            if (pinned[i])
                pinned_mass += kEpsFloor;
            else
                free_mass += p[i];
        }
        if (!new_pin) break;
        double scale = (1.0 - pinned_mass) / free_mass;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = pinned[i] ? kEpsFloor : p[i] * scale;
    }
    return PredictiveDistribution{std::move(p)};
}

inline Label point_estimate(const PredictiveDistribution& dist, const LabelSpace& space) {
    // Ties break toward the smallest index: strict '>' keeps the first max.
    int best = 0;
    for (int i = 1; i < dist.size(); ++i)
        if (dist.probs[i] > dist.probs[best]) best = i;
    return make_label(space, best);
}

struct Example {
    PredictiveDistribution dist;
    Label true_label;
    std::optional<std::uint64_t> raw_input_id;
};

// Labeled exchangeable examples with their nonconformity scores cached at
// ingestion; estimator calls afterwards touch only score_sum and size.
class CalibrationSet {
  public:
    CalibrationSet(std::vector<Example> examples, std::vector<double> scores)
        : examples_(std::move(examples)), scores_(std::move(scores)) {
        if (examples_.empty()) throw EmptyInputError("calibration set needs at least one example");
        if (examples_.size() != scores_.size())
            throw LengthMismatchError("calibration scores and examples differ in length");
        for (double s : scores_) {
            if (!std::isfinite(s) || s <= 0.0)
                throw DomainError("calibration scores must be finite and positive");
            score_sum_ += s;
        }
    }

    int size() const { return static_cast<int>(examples_.size()); }
    const std::vector<Example>& examples() const { return examples_; }
    const std::vector<double>& scores() const { return scores_; }
    double score_sum() const { return score_sum_; }

    CalibrationSet with_example(Example ex, double score) const {
        std::vector<Example> exs = examples_;
        std::vector<double> scs = scores_;
        exs.push_back(std::move(ex));
        scs.push_back(score);
        return CalibrationSet(std::move(exs), std::move(scs));
    }

  private:
    std::vector<Example> examples_;
    std::vector<double> scores_;
    double score_sum_ = 0.0;
};

}  // namespace bcp
