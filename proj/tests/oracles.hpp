#pragma once

// Test-side reference implementations, deliberately independent of the
// library code paths they check: naive DFT instead of radix-2, fresh
// summation instead of cached sums, direct definitions for the calibration
// diagnostics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace oracles {

inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
    const std::size_t n = x.size();
    const double pi = 3.14159265358979323846;
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            double ang = -2.0 * pi * static_cast<double>(k) * static_cast<double>(t) /
                         static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

struct CalibrationDiagnostics {
    double ece = 0.0;      // 10 equal-mass bins over top-1 confidence
    double slope = 0.0;    // least-squares accuracy-vs-confidence slope
};

// confidences[i] = predicted top-1 probability, hits[i] = 1 if the top-1
// label was the true one.
inline CalibrationDiagnostics calibration_diagnostics(std::vector<double> confidences,
                                                      std::vector<int> hits) {
    const std::size_t n = confidences.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return confidences[a] < confidences[b]; });

    const int bins = 10;
    CalibrationDiagnostics d;
    std::vector<double> bin_conf, bin_acc;
    for (int b = 0; b < bins; ++b) {
        std::size_t lo = n * static_cast<std::size_t>(b) / bins;
        std::size_t hi = n * static_cast<std::size_t>(b + 1) / bins;
        if (hi <= lo) continue;
        double conf = 0.0, acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            conf += confidences[idx[i]];
            acc += hits[idx[i]];
        }
        conf /= static_cast<double>(hi - lo);
        acc /= static_cast<double>(hi - lo);
        d.ece += (static_cast<double>(hi - lo) / static_cast<double>(n)) * std::abs(conf - acc);
        bin_conf.push_back(conf);
        bin_acc.push_back(acc);
    }

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < bin_conf.size(); ++i) {
        mx += bin_conf[i];
        my += bin_acc[i];
    }
    mx /= static_cast<double>(bin_conf.size());
    my /= static_cast<double>(bin_conf.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < bin_conf.size(); ++i) {
        sxy += (bin_conf[i] - mx) * (bin_acc[i] - my);
        sxx += (bin_conf[i] - mx) * (bin_conf[i] - mx);
    }
    d.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    return d;
}

// Brute-force top-m cost: sum of costs of the m most probable labels,
// extracted by repeated scans.
inline double top_m_cost(const std::vector<double>& probs, const std::vector<double>& costs,
                         int m) {
    std::vector<bool> used(probs.size(), false);
    double total = 0.0;
    for (int round = 0; round < m; ++round) {
        int best = -1;
        for (std::size_t i = 0; i < probs.size(); ++i)
            if (!used[i] && (best < 0 || probs[i] > probs[static_cast<std::size_t>(best)]))
                best = static_cast<int>(i);
        used[static_cast<std::size_t>(best)] = true;
        total += costs[static_cast<std::size_t>(best)];
    }
    return total;
}

}  // namespace oracles
