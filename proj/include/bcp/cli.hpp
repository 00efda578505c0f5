#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bcp/dataset_io.hpp"
#include "bcp/harness.hpp"
#include "bcp/validate.hpp"

namespace bcp::cli {

using nlohmann::json;

// Resolved configuration for every subcommand. Defaults here are the
// documented ones; a config file overrides defaults, flags override the file,
// and BCP_SEED slots between file and built-in default for the seed only.
struct CliConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    ExperimentConfig experiment;    // includes the data source configs
};

struct FlagOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> source;
    std::optional<int> num_subcarriers;
    std::optional<double> confusion_scale;
    std::optional<double> temperature;
    std::optional<std::vector<double>> class_prior;
    std::optional<int> num_bins;
    std::optional<int> num_symbols;
    std::optional<double> snr_db;
    std::optional<double> sir_db;
    std::optional<double> assumed_noise_power;
    std::optional<std::vector<int>> monitored_bins;
    std::optional<int> n_runs;
    std::optional<int> n_te;
    std::optional<std::vector<int>> n_cal;
    std::optional<std::vector<double>> budgets;
    std::optional<double> beta;
    std::optional<double> interference_cost;
    std::optional<std::vector<double>> costs;
    std::optional<int> workers;
    std::optional<bool> reuse_pool;
    std::optional<int> pool_size;
};

namespace detail {

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                ok = true;
                break;
            }
        if (!ok)
            throw ConfigError("unknown config key '" +
                              (path.empty() ? item.key() : path + "." + item.key()) + "'");
    }
}

template <typename T>
void read_field(const json& obj, const std::string& path, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + (path.empty() ? std::string(key) : path + "." + key) +
                          "' has the wrong type");
    }
}

inline Source parse_source(const std::string& name) {
    if (name == "synthetic") return Source::Synthetic;
    if (name == "ofdm") return Source::Ofdm;
    throw ConfigError("source must be 'synthetic' or 'ofdm', got '" + name + "'");
}

}  // namespace detail

inline void apply_config_json(const json& doc, CliConfig& cfg, bool& seed_in_file) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    detail::check_keys(doc, "", {"seed", "out_dir", "source", "synthetic", "ofdm", "experiment"});
    seed_in_file = doc.contains("seed");
    detail::read_field(doc, "", "seed", cfg.seed);
    detail::read_field(doc, "", "out_dir", cfg.out_dir);
    if (doc.contains("source"))
        cfg.experiment.source.source = detail::parse_source(doc.at("source").get<std::string>());
    if (doc.contains("synthetic")) {
        const json& s = doc.at("synthetic");
        detail::check_keys(s, "synthetic",
                           {"num_subcarriers", "confusion_scale", "temperature", "class_prior"});
        SyntheticDetectorConfig& sc = cfg.experiment.source.synthetic;
        detail::read_field(s, "synthetic", "num_subcarriers", sc.num_subcarriers);
        detail::read_field(s, "synthetic", "confusion_scale", sc.confusion_scale);
        detail::read_field(s, "synthetic", "temperature", sc.temperature);
        detail::read_field(s, "synthetic", "class_prior", sc.class_prior);
    }
    if (doc.contains("ofdm")) {
        const json& o = doc.at("ofdm");
        detail::check_keys(o, "ofdm", {"num_bins", "num_symbols", "snr_db", "sir_db",
                                       "monitored_bins", "assumed_noise_power"});
        OfdmScenarioConfig& oc = cfg.experiment.source.ofdm;
        detail::read_field(o, "ofdm", "num_bins", oc.num_bins);
        detail::read_field(o, "ofdm", "num_symbols", oc.num_symbols);
        detail::read_field(o, "ofdm", "snr_db", oc.snr_db);
        detail::read_field(o, "ofdm", "sir_db", oc.sir_db);
        detail::read_field(o, "ofdm", "monitored_bins", oc.monitored_bins);
        detail::read_field(o, "ofdm", "assumed_noise_power", oc.assumed_noise_power);
    }
    if (doc.contains("experiment")) {
        const json& e = doc.at("experiment");
        detail::check_keys(e, "experiment",
                           {"n_runs", "n_cal", "n_te", "budgets", "beta", "interference_cost",
                            "costs", "workers", "reuse_pool", "pool_size"});
        ExperimentConfig& ec = cfg.experiment;
        detail::read_field(e, "experiment", "n_runs", ec.n_runs);
        detail::read_field(e, "experiment", "n_cal", ec.n_cal_list);
        detail::read_field(e, "experiment", "n_te", ec.n_te);
        detail::read_field(e, "experiment", "budgets", ec.budgets);
        detail::read_field(e, "experiment", "beta", ec.beta);
        detail::read_field(e, "experiment", "interference_cost", ec.interference_cost);
        detail::read_field(e, "experiment", "costs", ec.costs);
        detail::read_field(e, "experiment", "workers", ec.workers);
        detail::read_field(e, "experiment", "reuse_pool", ec.reuse_pool);
        detail::read_field(e, "experiment", "pool_size", ec.pool_size);
    }
}

inline void apply_overrides(const FlagOverrides& f, CliConfig& cfg) {
    if (f.seed) cfg.seed = *f.seed;
    if (f.out_dir) cfg.out_dir = *f.out_dir;
    if (f.source) cfg.experiment.source.source = detail::parse_source(*f.source);
    SyntheticDetectorConfig& sc = cfg.experiment.source.synthetic;
    if (f.num_subcarriers) sc.num_subcarriers = *f.num_subcarriers;
    if (f.confusion_scale) sc.confusion_scale = *f.confusion_scale;
    if (f.temperature) sc.temperature = *f.temperature;
    if (f.class_prior) sc.class_prior = *f.class_prior;
    OfdmScenarioConfig& oc = cfg.experiment.source.ofdm;
    if (f.num_bins) oc.num_bins = *f.num_bins;
    if (f.num_symbols) oc.num_symbols = *f.num_symbols;
    if (f.snr_db) oc.snr_db = *f.snr_db;
    if (f.sir_db) oc.sir_db = *f.sir_db;
    if (f.assumed_noise_power) oc.assumed_noise_power = *f.assumed_noise_power;
    if (f.monitored_bins) oc.monitored_bins = *f.monitored_bins;
    ExperimentConfig& ec = cfg.experiment;
    if (f.n_runs) ec.n_runs = *f.n_runs;
    if (f.n_te) ec.n_te = *f.n_te;
    if (f.n_cal) ec.n_cal_list = *f.n_cal;
    if (f.budgets) ec.budgets = *f.budgets;
    if (f.beta) ec.beta = *f.beta;
    if (f.interference_cost) ec.interference_cost = *f.interference_cost;
    if (f.costs) ec.costs = *f.costs;
    if (f.workers) ec.workers = *f.workers;
    if (f.reuse_pool) ec.reuse_pool = *f.reuse_pool;
    if (f.pool_size) ec.pool_size = *f.pool_size;
}

inline std::optional<std::uint64_t> seed_from_env() {
    const char* raw = std::getenv("BCP_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    std::string s(raw);
    std::uint64_t value = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("BCP_SEED is not an unsigned integer: '" + s + "'");
    return value;
}

// Precedence: flag > config file > BCP_SEED (seed only) > built-in default.
inline CliConfig resolve_config(const std::optional<std::string>& config_path,
                                const FlagOverrides& flags) {
    CliConfig cfg;
    bool seed_in_file = false;
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw ConfigError("cannot open config file '" + *config_path + "'");
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config file '" + *config_path + "' is not valid JSON: " + e.what());
        }
        apply_config_json(doc, cfg, seed_in_file);
    }
    if (!flags.seed && !seed_in_file) {
        if (std::optional<std::uint64_t> env = seed_from_env()) cfg.seed = *env;
    }
    apply_overrides(flags, cfg);
    cfg.experiment.master_seed = cfg.seed;
    return cfg;
}

inline json config_to_json(const CliConfig& cfg) {
    const ExperimentConfig& ec = cfg.experiment;
    json doc;
    doc["seed"] = cfg.seed;
    doc["out_dir"] = cfg.out_dir;
    doc["source"] = ec.source.source == Source::Synthetic ? "synthetic" : "ofdm";
    doc["synthetic"] = {{"num_subcarriers", ec.source.synthetic.num_subcarriers},
                        {"confusion_scale", ec.source.synthetic.confusion_scale},
                        {"temperature", ec.source.synthetic.temperature},
                        {"class_prior", ec.source.synthetic.class_prior}};
    doc["ofdm"] = {{"num_bins", ec.source.ofdm.num_bins},
                   {"num_symbols", ec.source.ofdm.num_symbols},
                   {"snr_db", ec.source.ofdm.snr_db},
                   {"sir_db", ec.source.ofdm.sir_db},
                   {"monitored_bins", ec.source.ofdm.monitored_bins},
                   {"assumed_noise_power", ec.source.ofdm.assumed_noise_power}};
    doc["experiment"] = {{"n_runs", ec.n_runs},
                         {"n_cal", ec.n_cal_list},
                         {"n_te", ec.n_te},
                         {"budgets", ec.budgets},
                         {"beta", ec.beta},
                         {"interference_cost", ec.interference_cost},
                         {"costs", ec.costs},
                         {"workers", ec.workers},
                         {"reuse_pool", ec.reuse_pool},
                         {"pool_size", ec.pool_size}};
    return doc;
}

inline json report_to_json(const AggregateReport& report) {
    json cells = json::array();
    for (const CellReport& c : report.cells) {
        json cell;
        cell["method"] = method_name(c.method);
        cell["k"] = c.k;
        cell["n_cal"] = c.n_cal;
        cell["reliability_mean"] = c.reliability_mean;
        cell["reliability_stderr"] = c.reliability_stderr;
        cell["reliability_pairs"] = c.reliability_count;
        if (c.reliability_pass.has_value())
            cell["reliability_pass"] = *c.reliability_pass ? "PASS" : "FAIL";
        json metrics;
        for (int mi = 0; mi < 4; ++mi) {
            const MetricSummary& s = c.metrics[mi];
            metrics[metric_name(mi)] = {{"mean", s.mean}, {"std", s.stddev}, {"q05", s.q05},
                                        {"q25", s.q25},   {"q50", s.q50},   {"q75", s.q75},
                                        {"q95", s.q95}};
        }
        cell["metrics"] = metrics;
        cells.push_back(cell);
    }
    json doc;
    doc["cells"] = cells;
    doc["reliability_all_pass"] = report.all_bcp_pass() ? "PASS" : "FAIL";
    return doc;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

inline std::filesystem::path ensure_out_dir(const CliConfig& cfg) {
    std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

}  // namespace detail

inline int cmd_generate(const CliConfig& cfg, int n_per_label,
                        const std::optional<std::string>& out_path, std::ostream& console) {
    validate(cfg.experiment.source);
    std::vector<Example> data = generate_dataset(cfg.experiment.source, n_per_label, cfg.seed);
    std::filesystem::path path;
    if (out_path) {
        path = *out_path;
        if (path.has_parent_path()) {
            std::error_code ec;
            std::filesystem::create_directories(path.parent_path(), ec);
        }
    } else {
        path = detail::ensure_out_dir(cfg) / "dataset.csv";
    }
    std::ostringstream buf;
    write_dataset_csv(data, cfg.experiment.source.label_space(), buf);
    detail::write_text_file(path, buf.str());
    console << data.size() << " rows written to " << path.string() << "\n";
    return 0;
}

inline int cmd_run(const CliConfig& cfg, std::ostream& console) {
    ExperimentResult result = run_experiment(cfg.experiment);
    std::filesystem::path dir = detail::ensure_out_dir(cfg);

    std::ostringstream runs;
    write_runs_csv(result.records, runs);
    detail::write_text_file(dir / "runs.csv", runs.str());

    std::ostringstream agg;
    write_aggregate_csv(result.report, agg);
    detail::write_text_file(dir / "aggregate.csv", agg.str());

    json report = report_to_json(result.report);
    report["config"] = config_to_json(cfg);
    detail::write_text_file(dir / "report.json", report.dump(2) + "\n");

    console << result.records.size() << " run records, "
            << result.report.cells.size() << " cells, reliability "
            << (result.report.all_bcp_pass() ? "PASS" : "FAIL") << ", outputs in " << dir.string()
            << "\n";
    return 0;
}

inline int cmd_sweep(const CliConfig& cfg, std::vector<double> betas,
                     std::vector<double> temperatures, std::ostream& console) {
    if (cfg.experiment.source.source == Source::Ofdm && !temperatures.empty())
        throw ConfigError("temperature sweeps apply to the synthetic source only");
    if (betas.empty()) betas = {cfg.experiment.beta};
    if (temperatures.empty()) temperatures = {cfg.experiment.source.synthetic.temperature};
    for (double b : betas)
        if (!(b > 0.0)) throw ConfigError("swept beta values must be positive");
    for (double t : temperatures)
        if (!(t > 0.0)) throw ConfigError("swept temperatures must be positive");

    std::filesystem::path dir = detail::ensure_out_dir(cfg);
    std::ostringstream csv;
    csv << "beta,temperature,method,K,n_cal,metric,mean,std,q05,q25,q50,q75,q95\n";
    json combos = json::array();
    for (double beta : betas) {
        for (double temp : temperatures) {
            CliConfig point = cfg;
            point.experiment.beta = beta;
            point.experiment.source.synthetic.temperature = temp;
            ExperimentResult result = run_experiment(point.experiment);
            for (const CellReport& c : result.report.cells) {
                for (int mi = 0; mi < 4; ++mi) {
                    const MetricSummary& s = c.metrics[mi];
                    csv << format_double(beta) << ',' << format_double(temp) << ','
                        << method_name(c.method) << ',' << format_double(c.k) << ',' << c.n_cal
                        << ',' << metric_name(mi) << ',' << format_double(s.mean) << ','
                        << format_double(s.stddev) << ',' << format_double(s.q05) << ','
                        << format_double(s.q25) << ',' << format_double(s.q50) << ','
                        << format_double(s.q75) << ',' << format_double(s.q95) << '\n';
                }
            }
            json combo = report_to_json(result.report);
            combo["beta"] = beta;
            combo["temperature"] = temp;
            combos.push_back(combo);
        }
    }
    detail::write_text_file(dir / "sweep.csv", csv.str());
    json report;
    report["config"] = config_to_json(cfg);
    report["combos"] = combos;
    detail::write_text_file(dir / "sweep_report.json", report.dump(2) + "\n");
    console << combos.size() << " grid points, outputs in " << dir.string() << "\n";
    return 0;
}

inline int cmd_validate(const ValidationOptions& opts, std::ostream& console) {
    ValidationReport report = run_validation(opts);
    for (const CheckResult& c : report.checks)
        console << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << " (" << c.detail << ")\n";
    if (!report.all_passed()) {
        console << "validation failed\n";
        return 4;
    }
    console << "validation passed\n";
    return 0;
}

}  // namespace bcp::cli
