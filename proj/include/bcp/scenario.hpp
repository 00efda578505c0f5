#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <vector>

#include "bcp/core.hpp"
#include "bcp/fft.hpp"
#include "bcp/rng.hpp"

namespace bcp {

// ─────────────────────────── synthetic detector ───────────────────────────

// Controlled-miscalibration softmax source. Logits for the true label are
// elevated by a fixed margin over i.i.d. Gaussian noise; the reported
// distribution is the exact posterior of that generative model, tempered:
//
//   z_k = margin*1(k==y) + confusion_scale*g_k
//   log p(y=k | z) = log prior_k + (margin/scale^2) * z_k + const
//   reported_k ∝ exp(log p(y=k | z) / temperature)
//
// temperature 1 reports the posterior itself, so the source is calibrated by
// construction; temperature below 1 sharpens it (overconfident), above 1
// flattens it (underconfident). The temperature never moves the argmax.
struct SyntheticDetectorConfig {
    int num_subcarriers = 4;
    double confusion_scale = 1.0;            // logit noise std dev
    double temperature = 1.0;
    std::vector<double> class_prior;         // empty means uniform

    LabelSpace label_space() const { return LabelSpace{num_subcarriers}; }
};

inline constexpr double kLogitMargin = 2.0;

inline void validate(const SyntheticDetectorConfig& cfg) {
    if (cfg.num_subcarriers < 1) throw ConfigError("num_subcarriers must be >= 1");
    if (!(cfg.confusion_scale > 0.0)) throw ConfigError("confusion_scale must be positive");
    if (!(cfg.temperature > 0.0)) throw ConfigError("temperature must be positive");
    if (!cfg.class_prior.empty()) {
        if (static_cast<int>(cfg.class_prior.size()) != cfg.label_space().size())
            throw ConfigError("class_prior length must equal num_subcarriers + 2");
        double sum = 0.0;
        for (double p : cfg.class_prior) {
            if (!(p >= 0.0)) throw ConfigError("class_prior entries must be nonnegative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("class_prior must sum to 1");
    }
}

struct ScenarioSample {
    Example example;
    std::vector<std::complex<double>> iq;    // empty unless the source emits a waveform
};

namespace detail {

inline int draw_from_prior(const std::vector<double>& prior, int n_labels, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (prior.empty()) return std::min(n_labels - 1, static_cast<int>(unif(rng) * n_labels));
    double u = unif(rng), acc = 0.0;
    for (int k = 0; k < n_labels; ++k) {
        acc += prior[static_cast<std::size_t>(k)];
        if (u < acc) return k;
    }
    return n_labels - 1;
}

inline PredictiveDistribution softmax_normalized(std::vector<double> logits,
                                                 const LabelSpace& space) {
    double top = logits[0];
    for (double v : logits) top = std::max(top, v);
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - top);
        sum += v;
    }
    for (double& v : logits) v /= sum;
    return normalize(logits, space);
}

}  // namespace detail

inline ScenarioSample sample_synthetic_labeled(const SyntheticDetectorConfig& cfg, int true_label,
                                               std::uint64_t seed) {
    const LabelSpace space = cfg.label_space();
    std::mt19937_64 rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double scale2 = cfg.confusion_scale * cfg.confusion_scale;
    std::vector<double> logits(static_cast<std::size_t>(space.size()));
    for (int k = 0; k < space.size(); ++k) {
        double z = (k == true_label ? kLogitMargin : 0.0) + cfg.confusion_scale * gauss(rng);
        double log_prior = cfg.class_prior.empty()
                               ? 0.0
                               : std::log(std::max(cfg.class_prior[static_cast<std::size_t>(k)],
                                                   kEpsFloor));
        logits[static_cast<std::size_t>(k)] = (log_prior + kLogitMargin * z / scale2) /
                                              cfg.temperature;
    }
    ScenarioSample s;
    s.example.dist = detail::softmax_normalized(std::move(logits), space);
    s.example.true_label = make_label(space, true_label);
    return s;
}

inline ScenarioSample sample_synthetic(const SyntheticDetectorConfig& cfg, std::uint64_t seed) {
    const LabelSpace space = cfg.label_space();
    std::mt19937_64 rng = make_rng(derive_seed(seed, 0x10ad));
    int y = detail::draw_from_prior(cfg.class_prior, space.size(), rng);
    return sample_synthetic_labeled(cfg, y, seed);
}

// ───────────────────────────── OFDM scenario ──────────────────────────────

// One observation is num_symbols OFDM symbols of num_bins subcarriers.
// Per-bin frequency samples under each hypothesis:
//   no_transmission:   n                      n ~ CN(0, noise_power)
//   wifi_only:         q + n                  q unit-modulus QPSK per symbol
//   interference on b: q + a*e^{i phi} + n    on bin b only; phi fixed per
//                                             observation, a^2 = 10^(-sir_db/10)
// Per-bin WiFi power is 1, so snr_db fixes noise_power = 10^(-snr_db/10) and
// sir_db fixes the tone power relative to 1.
struct OfdmScenarioConfig {
    int num_bins = 64;
    int num_symbols = 8;
    double snr_db = 10.0;                    // sets the true noise power
    double sir_db = 5.0;
    std::vector<int> monitored_bins = {8, 24, 40, 56};
    double assumed_noise_power = 0.0;        // 0 means matched to snr_db

    LabelSpace label_space() const {
        return LabelSpace{static_cast<int>(monitored_bins.size())};
    }
    double true_noise_power() const { return std::pow(10.0, -snr_db / 10.0); }
    double detector_noise_power() const {
        return assumed_noise_power > 0.0 ? assumed_noise_power : true_noise_power();
    }
    double tone_power() const { return std::pow(10.0, -sir_db / 10.0); }
};

inline void validate(const OfdmScenarioConfig& cfg) {
    if (!is_pow2(cfg.num_bins)) throw ConfigError("num_bins must be a power of two");
    if (cfg.num_symbols < 1) throw ConfigError("num_symbols must be >= 1");
    if (cfg.monitored_bins.empty()) throw ConfigError("monitored_bins must be nonempty");
    if (cfg.assumed_noise_power < 0.0) throw ConfigError("assumed_noise_power must be >= 0");
    std::vector<int> sorted = cfg.monitored_bins;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] < 0 || sorted[i] >= cfg.num_bins)
            throw ConfigError("monitored bin " + std::to_string(sorted[i]) +
                              " outside [0, num_bins)");
        if (i > 0 && sorted[i] == sorted[i - 1])
            throw ConfigError("monitored bins collide at " + std::to_string(sorted[i]));
    }
}

// Per-symbol per-bin energies |X_{b,l}|^2; rows are bins.
struct EnergyGrid {
    int num_bins = 0;
    int num_symbols = 0;
    std::vector<double> e;    // num_bins * num_symbols, bin-major

    double& at(int bin, int sym) {
        return e[static_cast<std::size_t>(bin * num_symbols + sym)];
    }
    double at(int bin, int sym) const {
        return e[static_cast<std::size_t>(bin * num_symbols + sym)];
    }
};

namespace detail {

// log I0 with the large-argument asymptotic branch; std::cyl_bessel_i
// overflows past x ~ 713.
inline double log_i0(double x) {
    x = std::abs(x);
    if (x < 15.0) return std::log(std::cyl_bessel_i(0.0, x));
    double inv = 1.0 / x;
    double series = 1.0 + 0.125 * inv + (9.0 / 128.0) * inv * inv;
    return x - 0.5 * std::log(2.0 * 3.14159265358979323846 * x) + std::log(series);
}

// log density of e = |X|^2 for X ~ CN(mu, sigma2), m2 = |mu|^2 (Rice power).
// m2 = 0 reduces to the exponential law of a noise-only bin.
inline double log_rice_power(double e, double m2, double sigma2) {
    if (e < 0.0) return -std::numeric_limits<double>::infinity();
    return -std::log(sigma2) - (e + m2) / sigma2 + log_i0(2.0 * std::sqrt(e * m2) / sigma2);
}

inline double logsumexp(const double* v, int n) {
    double top = v[0];
    for (int i = 1; i < n; ++i) top = std::max(top, v[i]);
    if (!std::isfinite(top)) return top;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::exp(v[i] - top);
    return top + std::log(sum);
}

inline double logsumexp(const std::vector<double>& v) {
    return logsumexp(v.data(), static_cast<int>(v.size()));
}

// Log-likelihood of the energies observed on the interfered bin. The tone
// phase phi is constant across the observation while the QPSK phase is
// redrawn per symbol, so symbols couple through phi:
//
//   f({e_l}) = E_phi prod_l E_q Rice(e_l ; |q + a e^{i phi}|^2, sigma2)
//   |q + a e^{i phi}|^2 = 1 + a^2 + 2 a cos(phi - theta_q)
//
// The integrand is pi/2-periodic (QPSK symmetry), and equally spaced nodes
// over one period make the quadrature spectrally accurate.
inline double log_tone_block(const double* e, int num_symbols, double tone_pow, double sigma2) {
    constexpr int kPhaseNodes = 16;
    const double pi = 3.14159265358979323846;
    const double a = std::sqrt(tone_pow);
    std::vector<double> per_phase(kPhaseNodes);
    for (int q = 0; q < kPhaseNodes; ++q) {
        double phi = (q + 0.5) * (pi / 2.0) / kPhaseNodes;
        double c = std::cos(phi), s = std::sin(phi);
        double m2[4] = {1.0 + tone_pow + 2.0 * a * c, 1.0 + tone_pow - 2.0 * a * s,
                        1.0 + tone_pow - 2.0 * a * c, 1.0 + tone_pow + 2.0 * a * s};
        double acc = 0.0;
        for (int l = 0; l < num_symbols; ++l) {
            double lk[4];
            for (int k = 0; k < 4; ++k) lk[k] = log_rice_power(e[l], m2[k], sigma2);
            acc += logsumexp(lk, 4) - std::log(4.0);
        }
        per_phase[static_cast<std::size_t>(q)] = acc;
    }
    return logsumexp(per_phase) - std::log(static_cast<double>(kPhaseNodes));
}

}  // namespace detail

// Posterior over the S+2 hypotheses from per-symbol bin energies, computed
// with the likelihoods the generator actually samples from. With
// assumed_noise_power matched to the truth this makes the detector an exact
// Bayes posterior, which is what the calibrated regime relies on; a
// mismatched value is the controlled way to break calibration.
inline PredictiveDistribution bayes_energy_detector(const EnergyGrid& grid,
                                                    const OfdmScenarioConfig& cfg) {
    validate(cfg);
    const LabelSpace space = cfg.label_space();
    if (grid.num_bins != cfg.num_bins || grid.num_symbols != cfg.num_symbols)
        throw LengthMismatchError("energy grid shape does not match config");
    const double sigma2 = cfg.detector_noise_power();

    double all_noise = 0.0, all_wifi = 0.0;
    for (int b = 0; b < grid.num_bins; ++b)
        for (int l = 0; l < grid.num_symbols; ++l) {
            all_noise += detail::log_rice_power(grid.at(b, l), 0.0, sigma2);
            all_wifi += detail::log_rice_power(grid.at(b, l), 1.0, sigma2);
        }

    std::vector<double> loglik(static_cast<std::size_t>(space.size()));
    loglik[0] = all_noise;
    loglik[1] = all_wifi;
    for (int s = 0; s < space.num_subcarriers; ++s) {
        int bin = cfg.monitored_bins[static_cast<std::size_t>(s)];
        double plain = 0.0;
        for (int l = 0; l < grid.num_symbols; ++l)
            plain += detail::log_rice_power(grid.at(bin, l), 1.0, sigma2);
        double tone = detail::log_tone_block(&grid.e[static_cast<std::size_t>(
                                                 bin * grid.num_symbols)],
                                             grid.num_symbols, cfg.tone_power(), sigma2);
        loglik[static_cast<std::size_t>(2 + s)] = all_wifi - plain + tone;
    }
    return detail::softmax_normalized(std::move(loglik), space);
}

inline EnergyGrid energies_from_iq(const std::vector<std::complex<double>>& iq,
                                   const OfdmScenarioConfig& cfg) {
    const std::size_t want =
        static_cast<std::size_t>(cfg.num_bins) * static_cast<std::size_t>(cfg.num_symbols);
    if (iq.size() != want)
        throw LengthMismatchError("iq length " + std::to_string(iq.size()) + ", expected " +
                                  std::to_string(want));
    EnergyGrid grid{cfg.num_bins, cfg.num_symbols,
                    std::vector<double>(want, 0.0)};
    std::vector<std::complex<double>> sym(static_cast<std::size_t>(cfg.num_bins));
    for (int l = 0; l < cfg.num_symbols; ++l) {
        for (int b = 0; b < cfg.num_bins; ++b)
            sym[static_cast<std::size_t>(b)] = iq[static_cast<std::size_t>(l * cfg.num_bins + b)];
        fft_radix2(sym, false);
        for (int b = 0; b < cfg.num_bins; ++b) grid.at(b, l) = std::norm(sym[static_cast<std::size_t>(b)]);
    }
    return grid;
}

inline PredictiveDistribution bayes_energy_detector(const std::vector<std::complex<double>>& iq,
                                                    const OfdmScenarioConfig& cfg) {
    return bayes_energy_detector(energies_from_iq(iq, cfg), cfg);
}

inline ScenarioSample sample_ofdm_labeled(const OfdmScenarioConfig& cfg, int true_label,
                                          std::uint64_t seed) {
    validate(cfg);
    const LabelSpace space = cfg.label_space();
    if (true_label < 0 || true_label >= space.size())
        throw DomainError("label outside the hypothesis space");
    std::mt19937_64 rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> qpsk(0, 3);
    const double pi = 3.14159265358979323846;
    const double noise_sd = std::sqrt(cfg.true_noise_power() / 2.0);
    const bool has_signal = true_label != 0;
    const int tone_bin =
        true_label >= 2 ? cfg.monitored_bins[static_cast<std::size_t>(true_label - 2)] : -1;
    const double tone_amp = std::sqrt(cfg.tone_power());
    const double tone_phase = 2.0 * pi * unif(rng);

    EnergyGrid grid{cfg.num_bins, cfg.num_symbols,
                    std::vector<double>(static_cast<std::size_t>(cfg.num_bins) *
                                        static_cast<std::size_t>(cfg.num_symbols))};
    ScenarioSample out;
    out.iq.reserve(grid.e.size());
    std::vector<std::complex<double>> sym(static_cast<std::size_t>(cfg.num_bins));
    for (int l = 0; l < cfg.num_symbols; ++l) {
        for (int b = 0; b < cfg.num_bins; ++b) {
            std::complex<double> x(noise_sd * gauss(rng), noise_sd * gauss(rng));
            if (has_signal) {
                double theta = pi / 4.0 + (pi / 2.0) * qpsk(rng);
                x += std::complex<double>(std::cos(theta), std::sin(theta));
            }
            if (b == tone_bin)
                x += tone_amp * std::complex<double>(std::cos(tone_phase), std::sin(tone_phase));
            sym[static_cast<std::size_t>(b)] = x;
            grid.at(b, l) = std::norm(x);
        }
        std::vector<std::complex<double>> td = sym;
        fft_radix2(td, true);
        out.iq.insert(out.iq.end(), td.begin(), td.end());
    }
    out.example.dist = bayes_energy_detector(grid, cfg);
    out.example.true_label = make_label(space, true_label);
    return out;
}

inline ScenarioSample sample_ofdm(const OfdmScenarioConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(derive_seed(seed, 0x0fd3));
    std::uniform_int_distribution<int> lab(0, cfg.label_space().size() - 1);
    return sample_ofdm_labeled(cfg, lab(rng), seed);
}

// ─────────────────────────── dataset generation ───────────────────────────

enum class Source { Synthetic, Ofdm };

struct DataSourceConfig {
    Source source = Source::Synthetic;
    SyntheticDetectorConfig synthetic;
    OfdmScenarioConfig ofdm;

    LabelSpace label_space() const {
        return source == Source::Synthetic ? synthetic.label_space() : ofdm.label_space();
    }
};

inline void validate(const DataSourceConfig& cfg) {
    if (cfg.source == Source::Synthetic)
        validate(cfg.synthetic);
    else
        validate(cfg.ofdm);
}

inline Example generate_example(const DataSourceConfig& cfg, int label, std::uint64_t seed) {
    if (cfg.source == Source::Synthetic)
        return sample_synthetic_labeled(cfg.synthetic, label, seed).example;
    return sample_ofdm_labeled(cfg.ofdm, label, seed).example;
}

// Balanced by construction: example i carries label i % (S+2) and its own
// derived seed, so generation parallelizes without order effects.
inline std::vector<Example> generate_dataset(const DataSourceConfig& cfg, int n_per_label,
                                             std::uint64_t master_seed) {
    validate(cfg);
    if (n_per_label < 1) throw ConfigError("n_per_label must be >= 1");
    const int n_labels = cfg.label_space().size();
    const std::size_t total =
        static_cast<std::size_t>(n_per_label) * static_cast<std::size_t>(n_labels);
    std::vector<Example> out;
    out.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        Example ex = generate_example(cfg, static_cast<int>(i) % n_labels,
                                      derive_seed(master_seed, i));
        ex.raw_input_id = static_cast<std::uint64_t>(i);
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace bcp
