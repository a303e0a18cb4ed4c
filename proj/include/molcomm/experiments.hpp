#ifndef MOLCOMM_EXPERIMENTS_HPP
#define MOLCOMM_EXPERIMENTS_HPP

// Experiment drivers behind the command-line tool. Each driver returns plain
// result structs; run_experiment adds file output and the run manifest.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "molcomm/channel.hpp"
#include "molcomm/config.hpp"
#include "molcomm/csv.hpp"
#include "molcomm/detectors.hpp"
#include "molcomm/error_analysis.hpp"
#include "molcomm/monte_carlo.hpp"
#include "molcomm/mutual_info.hpp"
#include "molcomm/particle_sim.hpp"

#ifndef MOLCOMM_VERSION
#define MOLCOMM_VERSION "0.1.0"
#endif

namespace molcomm {

enum class ExperimentId { impulse, mi_sweep, ber_isifree, ber_isi, ber_distance, ber_enzyme, ber_flow };

inline const char* to_string(ExperimentId id) {
    switch (id) {
        case ExperimentId::impulse: return "impulse";
        case ExperimentId::mi_sweep: return "mi-sweep";
        case ExperimentId::ber_isifree: return "ber-isifree";
        case ExperimentId::ber_isi: return "ber-isi";
        case ExperimentId::ber_distance: return "ber-distance";
        case ExperimentId::ber_enzyme: return "ber-enzyme";
        case ExperimentId::ber_flow: return "ber-flow";
    }
    return "unknown";
}

inline ExperimentId parse_experiment_id(const std::string& s) {
    for (auto id : {ExperimentId::impulse, ExperimentId::mi_sweep, ExperimentId::ber_isifree, ExperimentId::ber_isi,
                    ExperimentId::ber_distance, ExperimentId::ber_enzyme, ExperimentId::ber_flow}) {
        if (s == to_string(id)) return id;
    }
    throw ConfigError("unknown experiment '" + s +
                          "' (impulse, mi-sweep, ber-isifree, ber-isi, ber-distance, ber-enzyme, ber-flow)",
                      "experiment.id");
}

inline bool is_ber_experiment(ExperimentId id) {
    return id != ExperimentId::impulse && id != ExperimentId::mi_sweep;
}

/// Realization counts are multiplied by `scale` and rounded up.
inline std::int64_t scaled_count(std::int64_t base, double scale) {
    if (!(scale > 0.0)) throw ConfigError("scale factor must be positive", "scale");
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(static_cast<double>(base) * scale - 1e-9)));
}

namespace detail {

inline std::vector<double> json_numbers(const Json& section, const std::string& key, std::vector<double> fallback) {
    if (!section.contains(key)) return fallback;
    const Json& v = section[key];
    if (!v.is_array()) throw ConfigError("expected an array of numbers", "experiment." + key);
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError("expected an array of numbers", "experiment." + key);
        out.push_back(x.get<double>());
    }
    return out;
}

inline double json_number(const Json& section, const std::string& key, double fallback) {
    if (!section.contains(key)) return fallback;
    if (!section[key].is_number()) throw ConfigError("expected a number", "experiment." + key);
    return section[key].get<double>();
}

/// Progress on standard error, at most every 5%.
inline ProgressSink stderr_progress(std::string label, bool enabled) {
    if (!enabled) return {};
    auto last = std::make_shared<std::int64_t>(-1);
    return [label = std::move(label), last](std::int64_t done, std::int64_t total) {
        const std::int64_t pct = done * 20 / std::max<std::int64_t>(total, 1);
        if (pct != *last) {
            *last = pct;
            std::cerr << "[" << label << "] " << done << "/" << total << " realizations\n";
        }
    };
}

inline std::vector<double> sorted_union(std::vector<double> v, double scale) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || std::abs(x - out.back()) > 1e-9 * scale) out.push_back(x);
    return out;
}

inline std::vector<int> column_indices(const std::vector<double>& grid, const std::vector<double>& wanted, double scale) {
    std::vector<int> cols;
    for (double g : wanted) {
        auto it = std::min_element(grid.begin(), grid.end(),
                                   [g](double a, double b) { return std::abs(a - g) < std::abs(b - g); });
        if (it == grid.end() || std::abs(*it - g) > 1e-9 * scale) throw DomainError("sample offset missing from grid");
        cols.push_back(static_cast<int>(it - grid.begin()));
    }
    return cols;
}

}  // namespace detail

inline ObservationMatrix select_columns(const ObservationMatrix& in, const std::vector<int>& cols) {
    ObservationMatrix out(in.intervals(), static_cast<int>(cols.size()));
    for (int j = 0; j < in.intervals(); ++j)
        for (std::size_t c = 0; c < cols.size(); ++c) out(j, static_cast<int>(c)) = in(j, cols[c]);
    return out;
}

// ---------------------------------------------------------------- impulse

struct ImpulseResult {
    std::vector<double> times;     // analytic grid, s
    std::vector<double> analytic;  // expected count
    std::vector<double> sim_times;
    std::vector<double> sim_mean;
    std::vector<double> sim_stderr;
    double peak_time = 0.0;
    double peak_value = 0.0;
    std::int64_t realizations = 0;
};

/// Time of the largest expected single-impulse count in (0, horizon]:
/// grid scan followed by golden-section refinement.
inline std::pair<double, double> impulse_peak(const SignalModel& model, double horizon) {
    const int n = 2000;
    const double h = horizon / n;
    int best = 1;
    double best_v = 0.0;
    const double count = static_cast<double>(model.tx.molecules_per_one);
    for (int i = 1; i <= n; ++i) {
        const double v = count * p_obs(model, i * h);
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    double a = std::max((best - 1) * h, 1e-3 * h), b = std::min((best + 1) * h, horizon);
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double c = b - ratio * (b - a), d = a + ratio * (b - a);
        if (p_obs(model, c) > p_obs(model, d)) b = d; else a = c;
    }
    const double t = 0.5 * (a + b);
    return {t, count * p_obs(model, t)};
}

/// Analytic impulse response on a `step` grid up to `duration`, and the
/// simulated mean count at every `sim_step` multiple.
inline ImpulseResult run_impulse(const RunConfig& cfg, double duration, double step, double sim_step,
                                 std::int64_t realizations, const ProgressSink& progress = {}) {
    ImpulseResult r;
    SignalModel model = cfg.model();
    model.tx.noise = {};
    const int n = static_cast<int>(std::llround(duration / step));
    for (int i = 1; i <= n; ++i) {
        r.times.push_back(i * step);
        r.analytic.push_back(expected_tx_signal(model, BitSequence{1}, i * step));
    }
    std::tie(r.peak_time, r.peak_value) = impulse_peak(model, duration);
    if (realizations <= 0 || sim_step <= 0.0) return r;

    TransmissionSpec tx = cfg.tx;
    tx.noise = {};
    tx.sequence_length = 1;
    const int ns = static_cast<int>(std::llround(duration / sim_step));
    tx.sample_offsets.clear();
    for (int i = 1; i <= ns; ++i) tx.sample_offsets.push_back(i * sim_step);
    tx.bit_interval = tx.sample_offsets.back();
    SimConfig sim = cfg.sim;
    sim.realization_count = realizations;
    const auto matrices = simulate_ensemble(cfg.env, tx, sim, [](std::uint64_t) { return BitSequence{1}; }, progress);
    r.realizations = realizations;
    r.sim_times = tx.sample_offsets;
    for (int m = 0; m < ns; ++m) {
        double s = 0.0, s2 = 0.0;
        for (const auto& mat : matrices) {
            const double x = static_cast<double>(mat(0, m));
            s += x;
            s2 += x * x;
        }
        const double nn = static_cast<double>(matrices.size());
        const double mean = s / nn;
        const double var = std::max(0.0, (s2 - nn * mean * mean) / std::max(nn - 1.0, 1.0));
        r.sim_mean.push_back(mean);
        r.sim_stderr.push_back(std::sqrt(var / nn));
    }
    return r;
}

// ---------------------------------------------------------------- mutual information

struct MiPoint {
    double t1 = 0.0;
    double lag = 0.0;
    double p_stay = 0.0;
    double mi_analytic = 0.0;
    std::optional<double> mi_empirical;
    std::int64_t trials = 0;
};

/// Analytic MI over t1 x lags; empirical MI from `trials` simulated
/// impulses at every lag in `sim_lags`.
inline std::vector<MiPoint> run_mi_sweep(const RunConfig& cfg, const std::vector<double>& t1s, const std::vector<double>& lags,
                                         const std::vector<double>& sim_lags, std::int64_t trials,
                                         const ProgressSink& progress = {}) {
    std::vector<MiPoint> out;
    const SignalModel model = cfg.model();
    for (double t1 : t1s) {
        std::vector<std::optional<double>> empirical(sim_lags.size());
        if (trials > 0 && !sim_lags.empty()) {
            TransmissionSpec tx = cfg.tx;
            tx.noise = {};
            tx.sequence_length = 1;
            tx.sample_offsets = {t1};
            for (double l : sim_lags) tx.sample_offsets.push_back(t1 + l);
            tx.bit_interval = tx.sample_offsets.back();
            SimConfig sim = cfg.sim;
            sim.realization_count = trials;
            const auto matrices = simulate_ensemble(cfg.env, tx, sim, [](std::uint64_t) { return BitSequence{1}; }, progress);
            for (std::size_t k = 0; k < sim_lags.size(); ++k) {
                std::vector<CountPair> pairs;
                pairs.reserve(matrices.size());
                for (const auto& m : matrices) pairs.push_back({m(0, 0), m(0, static_cast<int>(k + 1))});
                empirical[k] = empirical_mutual_information(pairs);
            }
        }
        auto add = [&](double lag, std::optional<double> emp) {
            SamplePairSpec spec{t1, t1 + lag, cfg.tx.molecules_per_one};
            out.push_back({t1, lag, p_stay(cfg.env, lag, cfg.degradation_mode), mutual_information(spec, model), emp,
                           emp ? trials : 0});
        };
        std::vector<double> all = lags;
        all.insert(all.end(), sim_lags.begin(), sim_lags.end());
        all = detail::sorted_union(all, 1e-6);
        for (double lag : all) {
            std::optional<double> emp;
            for (std::size_t k = 0; k < sim_lags.size(); ++k)
                if (std::abs(sim_lags[k] - lag) <= 1e-15) emp = empirical[k];
            add(lag, emp);
        }
    }
    return out;
}

// ---------------------------------------------------------------- bit error rates

struct BerPoint {
    std::string label;
    int samples = 0;
    DetectorSpec detector;
    BerReport mc;
    std::optional<double> threshold_mc;
    std::optional<BerReport> analytic;
    std::optional<double> threshold_analytic;
    double receiver_distance = 0.0;
    Vec3 flow{};
    bool enzymes = false;
    double noise_mean = 0.0;
    std::int64_t transmissions = 0;
};

struct BerSweepOptions {
    std::vector<int> samples{1};
    std::vector<DetectorSpec> detectors;
    std::int64_t ensemble_size = 1000;
    double min_sample_spacing = 0.0;
    bool analytic = true;
    ProgressSink progress;
};

/// Simulates one configuration on the union of all sampling grids, then
/// evaluates every (M, detector) pair on the matching columns.
inline std::vector<BerPoint> run_ber_case(const RunConfig& cfg, const std::string& label, const BerSweepOptions& opt,
                                          std::vector<std::string>* notes = nullptr) {
    const double t_int = cfg.tx.bit_interval;
    std::vector<int> ms;
    for (int m : opt.samples) {
        if (m < 1) throw ConfigError("samples per interval must be positive", "experiment.samples");
        if (opt.min_sample_spacing > 0.0 && t_int / m < opt.min_sample_spacing * (1.0 - 1e-9)) {
            if (notes)
                notes->push_back(label + ": M = " + std::to_string(m) + " skipped, spacing below " +
                                 format_number(opt.min_sample_spacing) + " s");
            continue;
        }
        ms.push_back(m);
    }
    if (ms.empty()) return {};

    std::vector<double> grid;
    for (int m : ms) {
        const auto g = uniform_sample_offsets(t_int, m);
        grid.insert(grid.end(), g.begin(), g.end());
    }
    grid = detail::sorted_union(grid, t_int);
    TransmissionSpec tx = cfg.tx;
    tx.sample_offsets = grid;
    tx.validate();

    const auto sequences = realization_sequences(tx, cfg.sim.master_seed, cfg.sim.realization_count);
    const auto matrices = simulate_ensemble(
        cfg.env, tx, cfg.sim, [&](std::uint64_t i) { return sequences[static_cast<std::size_t>(i)]; }, opt.progress);

    const int b = tx.sequence_length;
    std::optional<SequenceEnsemble> ensemble;
    std::vector<BerPoint> out;
    for (int m : ms) {
        TransmissionSpec tx_m = cfg.tx;
        tx_m.sample_offsets = uniform_sample_offsets(t_int, m);
        const SignalModel model{cfg.env, tx_m, cfg.degradation_mode};
        const auto cols = detail::column_indices(grid, tx_m.sample_offsets, t_int);
        std::vector<ObservationMatrix> sub;
        sub.reserve(matrices.size());
        for (const auto& mat : matrices) sub.push_back(select_columns(mat, cols));

        for (DetectorSpec det : opt.detectors) {
            if (det.kind == DetectorKind::ml) det.memory = std::min(det.memory, b);
            if (det.kind == DetectorKind::custom && det.weights.size() != static_cast<std::size_t>(m)) {
                if (notes) notes->push_back(label + ": custom weights skipped for M = " + std::to_string(m));
                continue;
            }
            BerPoint p;
            p.label = label;
            p.samples = m;
            p.detector = det;
            p.receiver_distance = cfg.env.receiver_distance;
            p.flow = cfg.env.flow;
            p.enzymes = cfg.env.reactions.enzymes_present();
            p.noise_mean = cfg.tx.noise.constant;
            p.transmissions = static_cast<std::int64_t>(sequences.size()) * b;
            auto res = evaluate_detector(model, sub, sequences, det);
            p.mc = std::move(res.report);
            p.threshold_mc = res.threshold;
            if (opt.analytic && det.kind != DetectorKind::ml) {
                if (!ensemble) {
                    ensemble = b <= 10 ? SequenceEnsemble::exhaustive(b, tx.p1)
                                       : SequenceEnsemble::random(opt.ensemble_size, b, tx.p1,
                                                                  stream_seed(cfg.sim.master_seed, StreamTag::ensemble, 0));
                }
                const ErrorSurface surface(model, *ensemble, detector_weights(det, model));
                const ThresholdChoice choice = det.threshold ? ThresholdChoice{*det.threshold, surface.average(*det.threshold)}
                                                             : optimize_threshold(surface);
                p.analytic = surface.report(choice.threshold);
                p.threshold_analytic = choice.threshold;
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

// ---------------------------------------------------------------- orchestration

struct ExperimentSpec {
    ExperimentId id = ExperimentId::impulse;
    std::string config_path;
    std::string output_dir = ".";
    std::optional<std::uint64_t> seed;
    double scale = 1.0;
    std::vector<std::string> overrides;                 // key=value
    std::optional<std::vector<DetectorKind>> detectors;
    std::optional<int> memory;
    std::optional<std::vector<int>> samples;
    std::optional<std::vector<double>> custom_weights;
    bool progress = true;
};

struct ExperimentOutput {
    std::vector<std::string> files;
    Json manifest;
};

namespace detail {

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Json report_json(const BerReport& r) {
    return Json{{"average", r.average},       {"ci95", r.ci95},
                {"ensemble_size", r.ensemble_size}, {"method", to_string(r.method)},
                {"per_interval", r.per_interval}};
}

inline std::vector<DetectorSpec> detectors_from(const ExperimentSpec& spec, const Json& section) {
    std::vector<DetectorKind> kinds;
    if (spec.detectors) {
        kinds = *spec.detectors;
    } else if (section.contains("detectors")) {
        if (!section["detectors"].is_array()) throw ConfigError("expected an array of detector names", "experiment.detectors");
        for (const auto& d : section["detectors"]) {
            if (!d.is_string()) throw ConfigError("expected an array of detector names", "experiment.detectors");
            kinds.push_back(parse_detector_kind(d.get<std::string>()));
        }
    } else {
        kinds = {DetectorKind::ml, DetectorKind::matched, DetectorKind::equal};
    }
    const int memory = spec.memory ? *spec.memory : static_cast<int>(json_number(section, "memory", 2));
    if (memory < 1) throw ConfigError("memory must be at least 1", "experiment.memory");
    std::vector<DetectorSpec> out;
    for (auto k : kinds) {
        DetectorSpec d;
        d.kind = k;
        d.memory = memory;
        if (k == DetectorKind::custom) {
            if (!spec.custom_weights) throw ConfigError("custom detector requires a weights file", "detector.weights");
            d.weights = *spec.custom_weights;
        }
        out.push_back(d);
    }
    return out;
}

}  // namespace detail

/// Default output file name stem for an experiment.
inline std::string output_stem(ExperimentId id) { return to_string(id); }

/// Loads the configuration, runs the experiment, writes
/// <out>/<id>.csv (+ auxiliary tables) and <out>/<id>.manifest.json.
inline ExperimentOutput run_experiment(const ExperimentSpec& spec) {
    const auto started = std::chrono::steady_clock::now();
    const std::string started_utc = detail::utc_timestamp();
    if (!(spec.scale > 0.0)) throw ConfigError("scale factor must be positive", "scale");
    std::vector<std::string> overrides = spec.overrides;
    if (spec.seed) overrides.push_back("simulation.seed=" + std::to_string(*spec.seed));
    RunConfig base = load_config(spec.config_path, overrides);
    const Json section = base.experiment;
    if (section.contains("id")) {
        if (!section["id"].is_string()) throw ConfigError("expected a string", "experiment.id");
        const auto declared = parse_experiment_id(section["id"].get<std::string>());
        if (declared != spec.id)
            throw ConfigError(std::string("configuration is for '") + to_string(declared) + "', not '" +
                                  to_string(spec.id) + "'",
                              "experiment.id");
    }

    std::filesystem::create_directories(spec.output_dir);
    const std::string stem = (std::filesystem::path(spec.output_dir) / output_stem(spec.id)).string();
    ExperimentOutput out;
    Json manifest;
    manifest["experiment"] = to_string(spec.id);
    manifest["version"] = MOLCOMM_VERSION;
    manifest["config_path"] = spec.config_path;
    manifest["seed"] = base.sim.master_seed;
    manifest["scale"] = spec.scale;
    manifest["overrides"] = spec.overrides;
    manifest["resolved_config"] = base.resolved;
    std::vector<std::string> notes;

    auto open = [&](const std::string& path) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot write '" + path + "'", "out");
        out.files.push_back(path);
        return f;
    };

    const std::int64_t realizations = scaled_count(base.sim.realization_count, spec.scale);

    switch (spec.id) {
        case ExperimentId::impulse: {
            const double duration = detail::json_number(section, "duration", base.tx.bit_interval);
            const double step = detail::json_number(section, "grid_step", base.sim.time_step);
            const double sim_step = detail::json_number(section, "sim_step", 5e-6);
            if (!(duration > 0.0 && step > 0.0 && sim_step > 0.0))
                throw ConfigError("duration, grid_step and sim_step must be positive", "experiment");
            if (!SimConfig::is_step_multiple(sim_step, base.sim.time_step))
                throw ConfigError("sim_step must be a multiple of simulation.time_step", "experiment.sim_step");
            const auto r = run_impulse(base, duration, step, sim_step, realizations,
                                       detail::stderr_progress("impulse", spec.progress));
            auto f = open(stem + ".csv");
            CsvWriter w(f, {"t_s", "analytic_count", "simulated_mean_count", "simulated_stderr"});
            std::size_t k = 0;
            for (std::size_t i = 0; i < r.times.size(); ++i) {
                std::optional<double> mean, se;
                while (k < r.sim_times.size() && r.sim_times[k] < r.times[i] - 1e-12) ++k;
                if (k < r.sim_times.size() && std::abs(r.sim_times[k] - r.times[i]) <= 1e-12) {
                    mean = r.sim_mean[k];
                    se = r.sim_stderr[k];
                }
                w.row({r.times[i], r.analytic[i], mean, se});
            }
            manifest["peak"] = {{"time_s", r.peak_time}, {"expected_count", r.peak_value}};
            manifest["realizations"] = r.realizations;
            break;
        }
        case ExperimentId::mi_sweep: {
            const auto t1s = detail::json_numbers(section, "t1", {10e-6, 20e-6, 50e-6});
            std::vector<double> default_lags;
            for (int i = 1; i <= 20; ++i) default_lags.push_back(i * 0.5e-6);
            const auto lags = detail::json_numbers(section, "lags", default_lags);
            const auto sim_lags = detail::json_numbers(section, "simulate_lags", {1e-6, 2e-6});
            const auto trials = scaled_count(
                static_cast<std::int64_t>(detail::json_number(section, "trials", 100000)), spec.scale);
            const auto points = run_mi_sweep(base, t1s, lags, sim_lags, trials, detail::stderr_progress("mi", spec.progress));
            auto f = open(stem + ".csv");
            CsvWriter w(f, {"t1_s", "t_o_s", "p_stay", "mi_analytic_bits", "mi_empirical_bits", "trials"});
            for (const auto& p : points) w.row({p.t1, p.lag, p.p_stay, p.mi_analytic, p.mi_empirical, p.trials});
            manifest["trials"] = trials;
            break;
        }
        default: {
            BerSweepOptions opt;
            std::vector<double> ms_d = detail::json_numbers(section, "samples", {1, 2, 5, 10, 20});
            if (spec.samples) {
                opt.samples = *spec.samples;
            } else {
                opt.samples.clear();
                for (double m : ms_d) opt.samples.push_back(static_cast<int>(m));
            }
            opt.detectors = detail::detectors_from(spec, section);
            opt.ensemble_size = static_cast<std::int64_t>(detail::json_number(section, "ensemble_size", 1000));
            opt.min_sample_spacing = detail::json_number(section, "min_sample_spacing", 0.0);
            if (section.contains("analytic") && !section["analytic"].is_boolean())
                throw ConfigError("expected true or false", "experiment.analytic");
            opt.analytic = !section.contains("analytic") || section["analytic"].get<bool>();

            struct Case {
                std::string label;
                Json set;
            };
            std::vector<Case> cases;
            if (section.contains("cases")) {
                if (!section["cases"].is_array()) throw ConfigError("expected an array", "experiment.cases");
                for (const auto& c : section["cases"]) {
                    if (!c.is_object() || !c.contains("label"))
                        throw ConfigError("each case needs a label", "experiment.cases");
                    cases.push_back({c["label"].get<std::string>(), c.value("set", Json::object())});
                }
            } else {
                cases.push_back({"base", Json::object()});
            }

            std::ifstream in(spec.config_path);
            std::stringstream buf;
            buf << in.rdbuf();
            Json user = buf.str().find_first_not_of(" \t\r\n") == std::string::npos ? Json::object() : Json::parse(buf.str());
            for (const auto& o : overrides) apply_override(user, o);

            std::vector<BerPoint> points;
            Json case_configs = Json::object();
            for (const auto& c : cases) {
                Json u = user;
                for (auto it = c.set.begin(); it != c.set.end(); ++it) set_path(u, it.key(), it.value());
                RunConfig rc = resolve_config(u);
                rc.sim.realization_count = realizations;
                case_configs[c.label] = rc.resolved;
                opt.progress = detail::stderr_progress(c.label, spec.progress);
                auto pts = run_ber_case(rc, c.label, opt, &notes);
                points.insert(points.end(), pts.begin(), pts.end());
            }
            manifest["cases"] = case_configs;

            auto f = open(stem + ".csv");
            CsvWriter w(f, {"case", "receiver_distance_m", "flow_x_m_per_s", "flow_y_m_per_s", "flow_z_m_per_s",
                            "enzymes", "noise_mean", "samples_per_interval", "detector", "memory", "ber_mc", "ci95",
                            "ber_analytic", "threshold_mc", "threshold_analytic", "transmissions"});
            Json summary = Json::array();
            for (const auto& p : points) {
                const std::optional<double> analytic = p.analytic ? std::optional<double>(p.analytic->average) : std::nullopt;
                const std::optional<double> memory =
                    p.detector.kind == DetectorKind::ml ? std::optional<double>(p.detector.memory) : std::nullopt;
                w.row({p.label, p.receiver_distance, p.flow.x, p.flow.y, p.flow.z, p.enzymes ? 1 : 0, p.noise_mean,
                       p.samples, to_string(p.detector.kind), memory, p.mc.average, p.mc.ci95, analytic, p.threshold_mc,
                       p.threshold_analytic, p.transmissions});
                Json s{{"case", p.label}, {"samples_per_interval", p.samples}, {"detector", to_string(p.detector.kind)},
                       {"monte_carlo", detail::report_json(p.mc)}};
                if (p.analytic) s["analytic"] = detail::report_json(*p.analytic);
                summary.push_back(std::move(s));
            }
            auto fi = open(stem + ".per_interval.csv");
            CsvWriter wi(fi, {"case", "samples_per_interval", "detector", "j", "pe_analytic", "pe_mc", "ci95"});
            for (const auto& p : points) {
                for (std::size_t j = 0; j < p.mc.per_interval.size(); ++j) {
                    const std::optional<double> pa =
                        p.analytic ? std::optional<double>(p.analytic->per_interval[j]) : std::nullopt;
                    wi.row({p.label, p.samples, to_string(p.detector.kind), static_cast<std::int64_t>(j + 1), pa,
                            p.mc.per_interval[j], ci95_half_width(p.mc.per_interval[j], p.mc.ensemble_size)});
                }
            }
            auto fs = open(stem + ".summary.json");
            fs << summary.dump(2) << '\n';
            manifest["realizations_per_case"] = realizations;
            break;
        }
    }

    manifest["notes"] = notes;
    manifest["started_utc"] = started_utc;
    manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    manifest["outputs"] = out.files;
    {
        const std::string path = stem + ".manifest.json";
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot write '" + path + "'", "out");
        f << manifest.dump(2) << '\n';
        out.files.push_back(path);
    }
    out.manifest = std::move(manifest);
    return out;
}

}  // namespace molcomm

#endif  // MOLCOMM_EXPERIMENTS_HPP
