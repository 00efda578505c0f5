#include <charconv>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bcp/cli.hpp"

namespace {

// List flags take one comma-separated token (e.g. --n-cal 10,50,500) so that
// a repeated flag is always a conflict, never a silent append.
template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
    std::vector<T> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string::npos) end = text.size();
        std::string piece = text.substr(start, end - start);
        T value{};
        auto res = std::from_chars(piece.data(), piece.data() + piece.size(), value);
        if (res.ec != std::errc{} || res.ptr != piece.data() + piece.size())
            throw bcp::ConfigError(std::string(flag) + ": bad list element '" + piece + "'");
        out.push_back(value);
        start = end + 1;
    }
    return out;
}

struct ScalarFlags {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string source;
    int num_subcarriers = 0;
    double confusion_scale = 0.0;
    double temperature = 0.0;
    int num_bins = 0;
    int num_symbols = 0;
    double snr_db = 0.0;
    double sir_db = 0.0;
    double assumed_noise_power = 0.0;
    int n_runs = 0;
    int n_te = 0;
    double beta = 0.0;
    double interference_cost = 0.0;
    int workers = 0;
    bool reuse_pool = false;
    int pool_size = 0;
    std::string n_cal_csv, budgets_csv, costs_csv, class_prior_csv, monitored_csv;
};

struct CommandState {
    std::string config_path;
    CLI::Option* config_opt = nullptr;
    ScalarFlags v;
    std::map<std::string, CLI::Option*> opts;

    bool has(const std::string& name) const {
        auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }
};

void add_common_options(CLI::App* cmd, CommandState& st, bool experiment_flags) {
    auto track = [&](const char* name, CLI::Option* opt) { st.opts[name] = opt; };
    st.config_opt = cmd->add_option("--config", st.config_path, "JSON config file");
    track("seed", cmd->add_option("--seed", st.v.seed, "master seed (fallback: BCP_SEED)"));
    track("out", cmd->add_option("--out", st.v.out_dir, "output directory (default out)"));
    track("source",
          cmd->add_option("--source", st.v.source, "data source: synthetic or ofdm"));
    track("num-subcarriers", cmd->add_option("--num-subcarriers", st.v.num_subcarriers,
                                             "monitored subcarrier count S (default 4)"));
    track("confusion-scale", cmd->add_option("--confusion-scale", st.v.confusion_scale,
                                             "synthetic logit noise std dev (default 1)"));
    track("temperature", cmd->add_option("--temperature", st.v.temperature,
                                         "synthetic softmax temperature (default 1)"));
    track("class-prior", cmd->add_option("--class-prior", st.v.class_prior_csv,
                                         "comma-separated class prior (default uniform)"));
    track("num-bins", cmd->add_option("--num-bins", st.v.num_bins,
                                      "OFDM FFT size, power of two (default 64)"));
    track("num-symbols", cmd->add_option("--num-symbols", st.v.num_symbols,
                                         "OFDM symbols per observation (default 8)"));
    track("snr-db", cmd->add_option("--snr-db", st.v.snr_db, "OFDM SNR in dB (default 10)"));
    track("sir-db", cmd->add_option("--sir-db", st.v.sir_db, "OFDM SIR in dB (default 5)"));
    track("assumed-noise-power",
          cmd->add_option("--assumed-noise-power", st.v.assumed_noise_power,
                          "detector noise belief; 0 = matched (default 0)"));
    track("monitored-bins", cmd->add_option("--monitored-bins", st.v.monitored_csv,
                                            "comma-separated monitored bins (default 8,24,40,56)"));
    if (experiment_flags) {
        track("n-runs", cmd->add_option("--n-runs", st.v.n_runs, "runs per cell (default 500)"));
        track("n-cal", cmd->add_option("--n-cal", st.v.n_cal_csv,
                                       "comma-separated calibration sizes (default 10,50,100,500,1000)"));
        track("n-te", cmd->add_option("--n-te", st.v.n_te, "test size per run (default 100)"));
        track("budgets", cmd->add_option("--budgets", st.v.budgets_csv,
                                         "comma-separated budgets K (default 1,2,3)"));
        track("beta", cmd->add_option("--beta", st.v.beta, "score exponent (default 1)"));
        track("interference-cost",
              cmd->add_option("--interference-cost", st.v.interference_cost,
                              "uniform interference label cost (default 1)"));
        track("costs", cmd->add_option("--costs", st.v.costs_csv,
                                       "comma-separated per-label costs (overrides uniform)"));
        track("workers", cmd->add_option("--workers", st.v.workers,
                                         "worker threads, 0 = all cores (default 0)"));
        track("reuse-pool", cmd->add_flag("--reuse-pool", st.v.reuse_pool,
                                          "draw splits from one shared pool"));
        track("pool-size", cmd->add_option("--pool-size", st.v.pool_size,
                                           "shared pool size (with --reuse-pool)"));
    }
    for (auto& [name, opt] : st.opts) opt->multi_option_policy(CLI::MultiOptionPolicy::Throw);
    st.config_opt->multi_option_policy(CLI::MultiOptionPolicy::Throw);
}

bcp::cli::CliConfig resolve_from_state(const CommandState& st) {
    bcp::cli::FlagOverrides f;
    if (st.has("seed")) f.seed = st.v.seed;
    if (st.has("out")) f.out_dir = st.v.out_dir;
    if (st.has("source")) f.source = st.v.source;
    if (st.has("num-subcarriers")) f.num_subcarriers = st.v.num_subcarriers;
    if (st.has("confusion-scale")) f.confusion_scale = st.v.confusion_scale;
    if (st.has("temperature")) f.temperature = st.v.temperature;
    if (st.has("class-prior"))
        f.class_prior = parse_list<double>(st.v.class_prior_csv, "--class-prior");
    if (st.has("num-bins")) f.num_bins = st.v.num_bins;
    if (st.has("num-symbols")) f.num_symbols = st.v.num_symbols;
    if (st.has("snr-db")) f.snr_db = st.v.snr_db;
    if (st.has("sir-db")) f.sir_db = st.v.sir_db;
    if (st.has("assumed-noise-power")) f.assumed_noise_power = st.v.assumed_noise_power;
    if (st.has("monitored-bins"))
        f.monitored_bins = parse_list<int>(st.v.monitored_csv, "--monitored-bins");
    if (st.has("n-runs")) f.n_runs = st.v.n_runs;
    if (st.has("n-cal")) f.n_cal = parse_list<int>(st.v.n_cal_csv, "--n-cal");
    if (st.has("n-te")) f.n_te = st.v.n_te;
    if (st.has("budgets")) f.budgets = parse_list<double>(st.v.budgets_csv, "--budgets");
    if (st.has("beta")) f.beta = st.v.beta;
    if (st.has("interference-cost")) f.interference_cost = st.v.interference_cost;
    if (st.has("costs")) f.costs = parse_list<double>(st.v.costs_csv, "--costs");
    if (st.has("workers")) f.workers = st.v.workers;
    if (st.has("reuse-pool")) f.reuse_pool = st.v.reuse_pool;
    if (st.has("pool-size")) f.pool_size = st.v.pool_size;
    std::optional<std::string> config;
    if (st.config_opt->count() > 0) config = st.config_path;
    return bcp::cli::resolve_config(config, f);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"budget-constrained prediction sets with backward conformal prediction"};
    app.require_subcommand(1);

    CommandState gen_state, run_state, sweep_state;
    int n_per_label = 3000;
    std::string gen_out_file;
    CLI::Option* gen_out_opt = nullptr;

    CLI::App* gen = app.add_subcommand("generate", "write a dataset CSV");
    add_common_options(gen, gen_state, false);
    gen->add_option("--n-per-label", n_per_label, "examples per class (default 3000)")
        ->multi_option_policy(CLI::MultiOptionPolicy::Throw);
    gen_out_opt = gen->add_option("--out-file", gen_out_file,
                                  "output CSV path (default <out>/dataset.csv)");
    gen_out_opt->multi_option_policy(CLI::MultiOptionPolicy::Throw);

    CLI::App* run = app.add_subcommand("run", "run the Monte Carlo experiment grid");
    add_common_options(run, run_state, true);

    CLI::App* sweep = app.add_subcommand("sweep", "cartesian sweep over beta and temperature");
    add_common_options(sweep, sweep_state, true);
    std::string betas_csv, temps_csv;
    CLI::Option* betas_opt =
        sweep->add_option("--betas", betas_csv, "comma-separated beta grid (default: config beta)");
    CLI::Option* temps_opt = sweep->add_option(
        "--temperatures", temps_csv, "comma-separated temperature grid (synthetic source only)");
    betas_opt->multi_option_policy(CLI::MultiOptionPolicy::Throw);
    temps_opt->multi_option_policy(CLI::MultiOptionPolicy::Throw);

    CLI::App* validate = app.add_subcommand("validate", "run the deterministic invariant suite");
    std::uint64_t val_seed = 1;
    int val_instances = 1000;
    std::string corrupt_target;
    CLI::Option* val_seed_opt =
        validate->add_option("--seed", val_seed, "suite seed (fallback: BCP_SEED)");
    validate->add_option("--instances", val_instances, "random instances per check (default 1000)")
        ->multi_option_policy(CLI::MultiOptionPolicy::Throw);
    CLI::Option* corrupt_opt = validate->add_option(
        "--corrupt", corrupt_target, "fault-injection hook; only value: e-value");
    val_seed_opt->multi_option_policy(CLI::MultiOptionPolicy::Throw);
    corrupt_opt->multi_option_policy(CLI::MultiOptionPolicy::Throw);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            bcp::cli::CliConfig cfg = resolve_from_state(gen_state);
            std::optional<std::string> out_file;
            if (gen_out_opt->count() > 0) out_file = gen_out_file;
            return bcp::cli::cmd_generate(cfg, n_per_label, out_file, std::cout);
        }
        if (run->parsed()) {
            return bcp::cli::cmd_run(resolve_from_state(run_state), std::cout);
        }
        if (sweep->parsed()) {
            std::vector<double> betas, temps;
            if (betas_opt->count() > 0) betas = parse_list<double>(betas_csv, "--betas");
            if (temps_opt->count() > 0) temps = parse_list<double>(temps_csv, "--temperatures");
            return bcp::cli::cmd_sweep(resolve_from_state(sweep_state), betas, temps, std::cout);
        }
        if (validate->parsed()) {
            bcp::ValidationOptions opts;
            opts.seed = val_seed;
            if (val_seed_opt->count() == 0) {
                if (std::optional<std::uint64_t> env = bcp::cli::seed_from_env()) opts.seed = *env;
            }
            opts.instances = val_instances;
            if (corrupt_opt->count() > 0) {
                if (corrupt_target != "e-value")
                    throw bcp::ConfigError("--corrupt only supports 'e-value', got '" +
                                           corrupt_target + "'");
                opts.corrupt_e_value = true;
            }
            return bcp::cli::cmd_validate(opts, std::cout);
        }
    } catch (const bcp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
