#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "bcp/conformal.hpp"
#include "bcp/scenario.hpp"

namespace bcp {

struct ExperimentConfig {
    int n_runs = 500;
    std::vector<int> n_cal_list = {10, 50, 100, 500, 1000};
    int n_te = 100;
    std::vector<double> budgets = {1.0, 2.0, 3.0};
    double beta = 1.0;
    double interference_cost = 1.0;
    std::vector<double> costs;        // explicit per-label costs; empty = uniform model
    DataSourceConfig source;
    std::uint64_t master_seed = 1;
    int workers = 0;                  // 0 = all available cores
    bool reuse_pool = false;          // one shared pool instead of per-run regeneration
    int pool_size = 0;                // only read when reuse_pool is set
};

inline CostModel make_cost_model_for(const ExperimentConfig& cfg);

inline void validate(const ExperimentConfig& cfg) {
    if (cfg.n_runs < 1) throw ConfigError("n_runs must be >= 1");
    if (cfg.n_te < 1) throw ConfigError("n_te must be >= 1");
    if (cfg.n_cal_list.empty()) throw ConfigError("n_cal list must be nonempty");
    for (int n : cfg.n_cal_list)
        if (n < 1) throw ConfigError("n_cal entries must be >= 1");
    if (cfg.budgets.empty()) throw ConfigError("budgets must be nonempty");
    for (double k : cfg.budgets)
        if (!(k >= 0.0)) throw ConfigError("budgets must be nonnegative");
    if (!(cfg.beta > 0.0)) throw ConfigError("beta must be positive");
    if (cfg.workers < 0) throw ConfigError("workers must be >= 0");
    validate(cfg.source);
    make_cost_model_for(cfg);    // validates costs against the label space
}

struct RunRecord {
    int run = 0;
    Method method = Method::BCP;
    double k = 0.0;
    int n_cal = 0;
    double emr = 0.0;
    double tmr = 0.0;
    double smd = 0.0;
    double brier = 0.0;
};

// ─── per-test-set metrics ───

inline double metric_emr(const std::vector<double>& alphas) {
    if (alphas.empty()) throw EmptyInputError("metrics need a nonempty test set");
    double s = 0.0;
    for (double a : alphas) s += a;
    return s / static_cast<double>(alphas.size());
}

inline double metric_tmr(const std::vector<int>& miscoverages) {
    if (miscoverages.empty()) throw EmptyInputError("metrics need a nonempty test set");
    double s = 0.0;
    for (int m : miscoverages) s += m;
    return s / static_cast<double>(miscoverages.size());
}

inline double metric_smd(const std::vector<double>& alphas, const std::vector<int>& miscoverages) {
    if (alphas.empty() || alphas.size() != miscoverages.size())
        throw EmptyInputError("smd needs matched nonempty alphas and miscoverages");
    double s = 0.0;
    for (std::size_t j = 0; j < alphas.size(); ++j) s += alphas[j] - miscoverages[j];
    return s / static_cast<double>(alphas.size());
}

inline double metric_brier(const std::vector<double>& alphas,
                           const std::vector<int>& miscoverages) {
    if (alphas.empty() || alphas.size() != miscoverages.size())
        throw EmptyInputError("brier needs matched nonempty alphas and miscoverages");
    double s = 0.0;
    for (std::size_t j = 0; j < alphas.size(); ++j) {
        double d = alphas[j] - miscoverages[j];
        s += d * d;
    }
    return s / static_cast<double>(alphas.size());
}

// Mean and standard error of m_j / alpha_j across (run, test) pairs. Pairs
// with m == 0 contribute exactly 0, which also covers the alpha == 0 case
// the naive estimator produces on full sets. A miscovered pair with a
// vanishing estimate is floored at kEpsFloor so the diagnostic stays finite;
// backward estimates never get near the floor (they are >= 1/(N+1)).
struct ReliabilityAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    long long count = 0;

    void add(int m, double alpha) {
        double r = m == 0 ? 0.0 : static_cast<double>(m) / std::max(alpha, kEpsFloor);
        sum += r;
        sum_sq += r * r;
        count += 1;
    }
    void merge(const ReliabilityAccumulator& o) {
        sum += o.sum;
        sum_sq += o.sum_sq;
        count += o.count;
    }
    double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
    double stderr_mean() const {
        if (count < 2) return 0.0;
        double n = static_cast<double>(count);
        double var = (sum_sq - n * mean() * mean()) / (n - 1.0);
        return std::sqrt(std::max(var, 0.0) / n);
    }
};

inline std::pair<double, double> reliability_statistic(const std::vector<int>& miscoverages,
                                                       const std::vector<double>& alphas) {
    if (alphas.size() != miscoverages.size())
        throw LengthMismatchError("reliability needs matched alphas and miscoverages");
    ReliabilityAccumulator acc;
    for (std::size_t j = 0; j < alphas.size(); ++j) acc.add(miscoverages[j], alphas[j]);
    return {acc.mean(), acc.stderr_mean()};
}

// ─── aggregation ───

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;
    double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
};

// Linear interpolation between order statistics at h = p * (n - 1).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 0) throw EmptyInputError("quantile of empty sample");
    double h = p * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline MetricSummary summarize_metric(std::vector<double> values) {
    MetricSummary s;
    const double n = static_cast<double>(values.size());
    for (double v : values) s.mean += v;
    s.mean /= n;
    if (values.size() > 1) {
        double acc = 0.0;
        for (double v : values) acc += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(acc / (n - 1.0));
    }
    std::sort(values.begin(), values.end());
    s.q05 = quantile_sorted(values, 0.05);
    s.q25 = quantile_sorted(values, 0.25);
    s.q50 = quantile_sorted(values, 0.50);
    s.q75 = quantile_sorted(values, 0.75);
    s.q95 = quantile_sorted(values, 0.95);
    return s;
}

inline const char* metric_name(int i) {
    static const char* names[4] = {"emr", "tmr", "smd", "brier"};
    return names[i];
}

struct CellReport {
    Method method = Method::BCP;
    double k = 0.0;
    int n_cal = 0;
    MetricSummary metrics[4];              // emr, tmr, smd, brier
    double reliability_mean = 0.0;
    double reliability_stderr = 0.0;
    long long reliability_count = 0;
    std::optional<bool> reliability_pass;  // only set for BCP cells
};

struct AggregateReport {
    std::vector<CellReport> cells;         // n_cal-major, then K, then method

    bool all_bcp_pass() const {
        for (const CellReport& c : cells)
            if (c.reliability_pass.has_value() && !*c.reliability_pass) return false;
        return true;
    }
};

struct ExperimentResult {
    std::vector<RunRecord> records;        // n_cal-major, then run, K, method
    AggregateReport report;
};

// ─── experiment runner ───

inline CostModel make_cost_model_for(const ExperimentConfig& cfg) {
    const LabelSpace space = cfg.source.label_space();
    if (!cfg.costs.empty()) return make_cost_model(space, cfg.costs);
    if (!(cfg.interference_cost > 0.0) || cfg.interference_cost > 1.0)
        throw ConfigError("interference_cost must lie in (0, 1]");
    return uniform_cost_model(space, cfg.interference_cost);
}

namespace detail {

struct KCellSums {
    double emr_bcp = 0.0, smd_bcp = 0.0, brier_bcp = 0.0;
    double emr_nme = 0.0, smd_nme = 0.0, brier_nme = 0.0;
    double tmr = 0.0;
    ReliabilityAccumulator rel_bcp, rel_nme;
};

struct RunOutput {
    std::vector<KCellSums> per_k;
};

// Pool indices for one run. The pool is balanced and the split is a uniform
// draw without replacement, so calibration and test points stay exchangeable.
inline std::vector<Example> fresh_pool(const ExperimentConfig& cfg, std::uint64_t run_seed,
                                       int n_needed) {
    const int n_labels = cfg.source.label_space().size();
    const int per_label = (n_needed + n_labels - 1) / n_labels;
    std::vector<Example> pool;
    pool.reserve(static_cast<std::size_t>(per_label) * static_cast<std::size_t>(n_labels));
    for (int i = 0; i < per_label * n_labels; ++i)
        pool.push_back(generate_example(cfg.source, i % n_labels,
                                        derive_seed(run_seed, 0xE0, static_cast<std::uint64_t>(i))));
    std::mt19937_64 rng = make_rng(derive_seed(run_seed, 0x5F));
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(static_cast<std::size_t>(n_needed));
    return pool;
}

inline RunOutput execute_run(const ExperimentConfig& cfg, const CostModel& costs,
                             const std::vector<Example>* shared_pool, int n_cal_idx, int run) {
    const int n_cal = cfg.n_cal_list[static_cast<std::size_t>(n_cal_idx)];
    const std::uint64_t run_seed = derive_seed(cfg.master_seed,
                                               static_cast<std::uint64_t>(n_cal_idx),
                                               static_cast<std::uint64_t>(run));
    const ScoreParams params{cfg.beta};

    std::vector<Example> cal_examples, test_examples;
    if (shared_pool != nullptr) {
        std::vector<std::size_t> idx(shared_pool->size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::mt19937_64 rng = make_rng(derive_seed(run_seed, 0x5F));
        std::shuffle(idx.begin(), idx.end(), rng);
        for (int j = 0; j < n_cal; ++j) cal_examples.push_back((*shared_pool)[idx[static_cast<std::size_t>(j)]]);
        for (int j = 0; j < cfg.n_te; ++j)
            test_examples.push_back((*shared_pool)[idx[static_cast<std::size_t>(n_cal + j)]]);
    } else {
        std::vector<Example> pool = fresh_pool(cfg, run_seed, n_cal + cfg.n_te);
        cal_examples.assign(pool.begin(), pool.begin() + n_cal);
        test_examples.assign(pool.begin() + n_cal, pool.end());
    }

    CalibrationSet cal = build_calibration_set(std::move(cal_examples), params);

    RunOutput out;
    out.per_k.resize(cfg.budgets.size());
    for (const Example& ex : test_examples) {
        for (std::size_t ki = 0; ki < cfg.budgets.size(); ++ki) {
            PredictionSetResult set = build_set(ex.dist, costs, Budget{cfg.budgets[ki]});
            const int m = miscovered(set, ex.true_label);
            const double a_bcp = bcp_alpha(ex.dist, set, cal, params).value;
            const double a_nme = nme_alpha(ex.dist, set).value;
            KCellSums& cell = out.per_k[ki];
            cell.tmr += m;
            cell.emr_bcp += a_bcp;
            cell.smd_bcp += a_bcp - m;
            cell.brier_bcp += (a_bcp - m) * (a_bcp - m);
            cell.emr_nme += a_nme;
            cell.smd_nme += a_nme - m;
            cell.brier_nme += (a_nme - m) * (a_nme - m);
            cell.rel_bcp.add(m, a_bcp);
            cell.rel_nme.add(m, a_nme);
        }
    }
    const double n = static_cast<double>(cfg.n_te);
    for (KCellSums& cell : out.per_k) {
        cell.tmr /= n;
        cell.emr_bcp /= n;
        cell.smd_bcp /= n;
        cell.brier_bcp /= n;
        cell.emr_nme /= n;
        cell.smd_nme /= n;
        cell.brier_nme /= n;
    }
    return out;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    const CostModel costs = make_cost_model_for(cfg);

    std::vector<Example> shared_pool;
    const std::vector<Example>* pool_ptr = nullptr;
    if (cfg.reuse_pool) {
        int max_needed = 0;
        for (int n_cal : cfg.n_cal_list) max_needed = std::max(max_needed, n_cal + cfg.n_te);
        if (cfg.pool_size < max_needed)
            throw InsufficientDataError("pool_size " + std::to_string(cfg.pool_size) +
                                        " is smaller than required n_cal + n_te = " +
                                        std::to_string(max_needed));
        shared_pool = detail::fresh_pool(cfg, derive_seed(cfg.master_seed, 0xB001), cfg.pool_size);
        pool_ptr = &shared_pool;
    }

    const std::size_t n_tasks = cfg.n_cal_list.size() * static_cast<std::size_t>(cfg.n_runs);
    std::vector<detail::RunOutput> outputs(n_tasks);
    int workers = cfg.workers > 0
                      ? cfg.workers
                      : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n_tasks));

    std::atomic<std::size_t> next{0};
    auto body = [&]() {
        for (;;) {
            std::size_t t = next.fetch_add(1);
            if (t >= n_tasks) break;
            int n_cal_idx = static_cast<int>(t / static_cast<std::size_t>(cfg.n_runs));
            int run = static_cast<int>(t % static_cast<std::size_t>(cfg.n_runs));
            outputs[t] = detail::execute_run(cfg, costs, pool_ptr, n_cal_idx, run);
        }
    };
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) threads.emplace_back(body);
        for (std::thread& th : threads) th.join();
    }

    // Deterministic reduction: records and cell aggregates walk the outputs
    // in (n_cal, run, K) order regardless of which worker produced them.
    ExperimentResult result;
    for (std::size_t ci = 0; ci < cfg.n_cal_list.size(); ++ci) {
        const int n_cal = cfg.n_cal_list[ci];
        for (int run = 0; run < cfg.n_runs; ++run) {
            const detail::RunOutput& out =
                outputs[ci * static_cast<std::size_t>(cfg.n_runs) + static_cast<std::size_t>(run)];
            for (std::size_t ki = 0; ki < cfg.budgets.size(); ++ki) {
                const detail::KCellSums& cell = out.per_k[ki];
                result.records.push_back(RunRecord{run, Method::BCP, cfg.budgets[ki], n_cal,
                                                   cell.emr_bcp, cell.tmr, cell.smd_bcp,
                                                   cell.brier_bcp});
                result.records.push_back(RunRecord{run, Method::NME, cfg.budgets[ki], n_cal,
                                                   cell.emr_nme, cell.tmr, cell.smd_nme,
                                                   cell.brier_nme});
            }
        }
        for (std::size_t ki = 0; ki < cfg.budgets.size(); ++ki) {
            for (Method method : {Method::BCP, Method::NME}) {
                CellReport cell;
                cell.method = method;
                cell.k = cfg.budgets[ki];
                cell.n_cal = n_cal;
                std::vector<double> emr, tmr, smd, brier;
                ReliabilityAccumulator rel;
                for (int run = 0; run < cfg.n_runs; ++run) {
                    const detail::KCellSums& s =
                        outputs[ci * static_cast<std::size_t>(cfg.n_runs) +
                                static_cast<std::size_t>(run)]
                            .per_k[ki];
                    const bool bcp = method == Method::BCP;
                    emr.push_back(bcp ? s.emr_bcp : s.emr_nme);
                    tmr.push_back(s.tmr);
                    smd.push_back(bcp ? s.smd_bcp : s.smd_nme);
                    brier.push_back(bcp ? s.brier_bcp : s.brier_nme);
                    rel.merge(bcp ? s.rel_bcp : s.rel_nme);
                }
                cell.metrics[0] = summarize_metric(std::move(emr));
                cell.metrics[1] = summarize_metric(std::move(tmr));
                cell.metrics[2] = summarize_metric(std::move(smd));
                cell.metrics[3] = summarize_metric(std::move(brier));
                cell.reliability_mean = rel.mean();
                cell.reliability_stderr = rel.stderr_mean();
                cell.reliability_count = rel.count;
                if (method == Method::BCP)
                    cell.reliability_pass =
                        cell.reliability_mean <= 1.0 + 3.0 * cell.reliability_stderr;
                result.report.cells.push_back(cell);
            }
        }
    }
    return result;
}

// ─── CSV emission ───

// Shortest round-trip decimal form; identical runs yield identical bytes.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_runs_csv(const std::vector<RunRecord>& records, std::ostream& os) {
    os << "run,method,K,n_cal,emr,tmr,smd,brier\n";
    for (const RunRecord& r : records) {
        os << r.run << ',' << method_name(r.method) << ',' << format_double(r.k) << ',' << r.n_cal
           << ',' << format_double(r.emr) << ',' << format_double(r.tmr) << ','
           << format_double(r.smd) << ',' << format_double(r.brier) << '\n';
    }
}

inline void write_aggregate_csv(const AggregateReport& report, std::ostream& os) {
    os << "method,K,n_cal,metric,mean,std,q05,q25,q50,q75,q95\n";
    for (const CellReport& c : report.cells) {
        for (int mi = 0; mi < 4; ++mi) {
            const MetricSummary& s = c.metrics[mi];
            os << method_name(c.method) << ',' << format_double(c.k) << ',' << c.n_cal << ','
               << metric_name(mi) << ',' << format_double(s.mean) << ',' << format_double(s.stddev)
               << ',' << format_double(s.q05) << ',' << format_double(s.q25) << ','
               << format_double(s.q50) << ',' << format_double(s.q75) << ','
               << format_double(s.q95) << '\n';
        }
    }
}

}  // namespace bcp
