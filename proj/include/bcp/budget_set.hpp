#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "bcp/core.hpp"

namespace bcp {

struct Budget {
    double k = 1.0;
};

// The generalized top-K set for one test input. `included` is the prefix of
// `ordering` of length c_max; with a boundary tie the prefix rule keeps the
// set size at c_max where a strict p > lambda_star test would under-fill it.
struct PredictionSetResult {
    std::vector<int> ordering;           // label indices, descending probability
    int c_max = 0;                       // in [0, S+2]
    std::optional<double> lambda_star;   // absent when the set is full
    std::vector<int> included;           // ordering prefix of length c_max
};

// Descending probability; equal probabilities keep ascending label index.
inline std::vector<int> order_labels(const PredictiveDistribution& dist) {
    std::vector<int> idx(dist.probs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return dist.probs[a] > dist.probs[b]; });
    return idx;
}

// Largest m in {0..S+2} whose prefix of the ordering fits the budget.
// Prefix sums accumulate left to right; cost monotonicity makes the first
// overflow final.
inline int compute_cmax(const std::vector<int>& ordering, const CostModel& costs,
                        const Budget& budget) {
    double spent = 0.0;
    int m = 0;
    for (int pos = 0; pos < static_cast<int>(ordering.size()); ++pos) {
        spent += costs.costs[static_cast<std::size_t>(ordering[pos])];
        if (spent > budget.k) break;
        m = pos + 1;
    }
    return m;
}

// Probability of the first excluded label; absent for the full set.
inline std::optional<double> lambda_star(const std::vector<int>& ordering, int c_max,
                                         const PredictiveDistribution& dist) {
    if (c_max >= static_cast<int>(ordering.size())) return std::nullopt;
    return dist.probs[static_cast<std::size_t>(ordering[c_max])];
}

inline PredictionSetResult build_set(const PredictiveDistribution& dist, const CostModel& costs,
                                     const Budget& budget) {
    PredictionSetResult r;
    r.ordering = order_labels(dist);
    r.c_max = compute_cmax(r.ordering, costs, budget);
    r.lambda_star = lambda_star(r.ordering, r.c_max, dist);
    r.included.assign(r.ordering.begin(), r.ordering.begin() + r.c_max);
    return r;
}

inline bool set_contains(const PredictionSetResult& r, int label_index) {
    for (int i = 0; i < r.c_max; ++i)
        if (r.ordering[static_cast<std::size_t>(i)] == label_index) return true;
    return false;
}

}  // namespace bcp
