// Command-line front end: impulse, mi, ber and validate subcommands.

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "molcomm/molcomm.hpp"

namespace {

enum ExitCode { ok = 0, failure = 1, bad_config = 2, numeric_failure = 3 };

std::vector<double> read_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw molcomm::ConfigError("cannot open weights file '" + path + "'", "detector.weights");
    std::vector<double> w;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r,");
        const std::string cell = line.substr(first, last - first + 1);
        double x = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
            if (w.empty() && lineno == 1) continue;  // header
            throw molcomm::ConfigError(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'",
                                       "detector.weights");
        }
        if (!(x >= 0.0)) throw molcomm::ConfigError(path + ":" + std::to_string(lineno) + ": weights must be non-negative",
                                                    "detector.weights");
        w.push_back(x);
    }
    if (w.empty()) throw molcomm::ConfigError("weights file '" + path + "' has no values", "detector.weights");
    return w;
}

struct CommonOptions {
    std::string config;
    std::string out = "results";
    std::optional<std::uint64_t> seed;
    double scale = 1.0;
    std::vector<std::string> sets;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
    cmd->add_option("-o,--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "master seed (overrides simulation.seed)");
    cmd->add_option("--scale", o.scale, "realization-count multiplier")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--set", o.sets, "override a configuration value, key=value (repeatable)");
    cmd->add_flag("-q,--quiet", o.quiet, "no progress output");
}

molcomm::ExperimentSpec to_spec(molcomm::ExperimentId id, const CommonOptions& o) {
    molcomm::ExperimentSpec s;
    s.id = id;
    s.config_path = o.config;
    s.output_dir = o.out;
    s.seed = o.seed;
    s.scale = o.scale;
    s.overrides = o.sets;
    s.progress = !o.quiet;
    return s;
}

void report(const molcomm::ExperimentOutput& out) {
    for (const auto& f : out.files) std::cout << f << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusive molecular communication: channel model, simulator and detectors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", MOLCOMM_VERSION);

    CommonOptions impulse_opt, mi_opt, ber_opt;
    auto* impulse = app.add_subcommand("impulse", "expected and simulated single-impulse response");
    add_common(impulse, impulse_opt);

    auto* mi = app.add_subcommand("mi", "mutual information between consecutive observations");
    add_common(mi, mi_opt);

    auto* ber = app.add_subcommand("ber", "bit error rates of the sequence and weighted-sum detectors");
    add_common(ber, ber_opt);
    std::string experiment;
    std::vector<std::string> detectors;
    std::optional<int> memory;
    std::vector<int> samples;
    std::string weights_path;
    ber->add_option("--experiment", experiment,
                    "ber-isifree, ber-isi, ber-distance, ber-enzyme or ber-flow (default: experiment.id, else ber-isi)");
    ber->add_option("--detector", detectors, "ml, matched, equal, custom (repeat or comma-separate)")
        ->delimiter(',')
        ->check(CLI::IsMember({"ml", "matched", "equal", "custom"}));
    ber->add_option("--memory", memory, "explicit channel memory F of the sequence detector")->check(CLI::PositiveNumber);
    ber->add_option("--samples", samples, "samples per interval M (repeat or comma-separate)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    ber->add_option("--weights", weights_path, "single-column CSV of custom weights")->check(CLI::ExistingFile);

    auto* validate = app.add_subcommand("validate", "check a configuration and print it fully resolved");
    std::string validate_path;
    std::vector<std::string> validate_sets;
    validate->add_option("-c,--config,config", validate_path, "JSON configuration file")->required();
    validate->add_option("--set", validate_sets, "override a configuration value, key=value (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto cfg = molcomm::load_config(validate_path, validate_sets);
            std::cout << cfg.resolved.dump(2) << '\n';
            return ok;
        }
        if (*impulse) {
            report(molcomm::run_experiment(to_spec(molcomm::ExperimentId::impulse, impulse_opt)));
            return ok;
        }
        if (*mi) {
            report(molcomm::run_experiment(to_spec(molcomm::ExperimentId::mi_sweep, mi_opt)));
            return ok;
        }
        if (*ber) {
            molcomm::ExperimentId id = molcomm::ExperimentId::ber_isi;
            if (!experiment.empty()) {
                id = molcomm::parse_experiment_id(experiment);
            } else {
                const auto cfg = molcomm::load_config(ber_opt.config, ber_opt.sets);
                if (cfg.experiment.contains("id") && cfg.experiment["id"].is_string())
                    id = molcomm::parse_experiment_id(cfg.experiment["id"].get<std::string>());
            }
            if (!molcomm::is_ber_experiment(id))
                throw molcomm::ConfigError(std::string("'") + molcomm::to_string(id) + "' is not a bit-error experiment",
                                           "experiment.id");
            auto spec = to_spec(id, ber_opt);
            if (!detectors.empty()) {
                std::vector<molcomm::DetectorKind> kinds;
                for (const auto& d : detectors) kinds.push_back(molcomm::parse_detector_kind(d));
                spec.detectors = kinds;
            }
            spec.memory = memory;
            if (!samples.empty()) spec.samples = samples;
            if (!weights_path.empty()) spec.custom_weights = read_weights(weights_path);
            report(molcomm::run_experiment(spec));
            return ok;
        }
    } catch (const molcomm::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return bad_config;
    } catch (const molcomm::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return numeric_failure;
    } catch (const molcomm::RealizationError& e) {
        std::cerr << "simulation failure: " << e.what() << '\n';
        return numeric_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failure;
    }
    return failure;
}
