#ifndef MOLCOMM_CONFIG_HPP
#define MOLCOMM_CONFIG_HPP

// JSON run configuration. Every field is addressable by a dotted key path
// (e.g. "transmission.bit_interval"); missing optional keys take the base
// case defaults, unknown keys are rejected.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "molcomm/channel.hpp"
#include "molcomm/environment.hpp"
#include "molcomm/errors.hpp"
#include "molcomm/particle_sim.hpp"

namespace molcomm {

using Json = nlohmann::ordered_json;

/// Several configuration problems reported together, one per line.
class ConfigErrors : public ConfigError {
public:
    explicit ConfigErrors(std::vector<std::string> problems)
        : ConfigError(join(problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s = "invalid configuration:";
        for (const auto& p : v) s += "\n  " + p;
        return s;
    }
    std::vector<std::string> problems_;
};

inline const std::vector<std::string>& required_config_keys() {
    static const std::vector<std::string> keys = {"receiver.distance", "receiver.radius",
                                                  "transmission.molecules_per_one", "transmission.bit_interval"};
    return keys;
}

/// Full key tree with defaults; null marks required or derived values.
inline Json default_config() {
    return Json::parse(R"({
  "environment": {"temperature_c": 25.0, "viscosity": 0.001, "flow": {"x": 0.0, "y": 0.0, "z": 0.0}},
  "receiver": {"distance": null, "radius": null},
  "species": {
    "A": {"radius": 0.5e-9, "diffusion_coefficient": null},
    "E": {"radius": 2.5e-9, "diffusion_coefficient": null},
    "EA": {"radius": 3.0e-9, "diffusion_coefficient": null}
  },
  "enzymes": {"enabled": false, "concentration_um": 84.0, "k1": 2e-19, "k_minus1": 1e4, "k2": 1e6,
              "volume_side": null},
  "degradation_mode": "strict_bound",
  "transmission": {"molecules_per_one": null, "bit_interval": null, "p1": 0.5, "sequence_length": 1,
                   "samples_per_interval": null, "sample_offsets": null, "noise_mean": 0.0},
  "simulation": {"time_step": 0.5e-6, "seed": 1, "realizations": 20000, "enzyme_mode": "first_order",
                 "first_order_rate": "approximation"},
  "experiment": {}
})");
}

struct RunConfig {
    EnvironmentSpec env;
    TransmissionSpec tx;
    SimConfig sim;
    DegradationMode degradation_mode = DegradationMode::strict_bound;
    Json experiment = Json::object();
    Json resolved;  // defaults merged with the file, derived values filled in

    SignalModel model() const { return SignalModel{env, tx, degradation_mode}; }
};

namespace detail {

inline void merge_checked(Json& base, const Json& user, const std::string& prefix, std::vector<std::string>& problems) {
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key())) {
            problems.push_back(key + ": unknown key");
            continue;
        }
        Json& slot = base[it.key()];
        if (key == "experiment") {
            if (!it.value().is_object()) problems.push_back(key + ": expected an object");
            else slot = it.value();
        } else if (slot.is_object()) {
            if (!it.value().is_object()) problems.push_back(key + ": expected an object");
            else merge_checked(slot, it.value(), key, problems);
        } else {
            slot = it.value();
        }
    }
}

inline const Json* find_path(const Json& j, const std::string& dotted) {
    const Json* cur = &j;
    std::size_t start = 0;
    while (start <= dotted.size()) {
        const auto end = dotted.find('.', start);
        const std::string part = dotted.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!cur->is_object() || !cur->contains(part)) return nullptr;
        cur = &(*cur)[part];
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return cur;
}

class Reader {
public:
    Reader(Json& root, std::vector<std::string>& problems) : root_(root), problems_(problems) {}

    Json& at(const std::string& dotted) {
        Json* cur = &root_;
        std::size_t start = 0;
        for (;;) {
            const auto end = dotted.find('.', start);
            cur = &(*cur)[dotted.substr(start, end == std::string::npos ? std::string::npos : end - start)];
            if (end == std::string::npos) return *cur;
            start = end + 1;
        }
    }

    double number(const std::string& key, double fallback = 0.0) {
        const Json& v = at(key);
        if (!v.is_number()) {
            problems_.push_back(key + (v.is_null() ? ": value required" : ": expected a number"));
            return fallback;
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) problems_.push_back(key + ": must be finite");
        return x;
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback = 0) {
        const Json& v = at(key);
        if (v.is_number_integer()) return v.get<std::int64_t>();
        if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()) && std::abs(v.get<double>()) < 9e15)
            return static_cast<std::int64_t>(v.get<double>());
        problems_.push_back(key + (v.is_null() ? ": value required" : ": expected an integer"));
        return fallback;
    }
    bool boolean(const std::string& key) {
        const Json& v = at(key);
        if (!v.is_boolean()) {
            problems_.push_back(key + ": expected true or false");
            return false;
        }
        return v.get<bool>();
    }
    std::string text(const std::string& key) {
        const Json& v = at(key);
        if (!v.is_string()) {
            problems_.push_back(key + ": expected a string");
            return {};
        }
        return v.get<std::string>();
    }
    void check(bool ok, const std::string& key, const std::string& message) {
        if (!ok) problems_.push_back(key + ": " + message);
    }

private:
    Json& root_;
    std::vector<std::string>& problems_;
};

}  // namespace detail

inline DegradationMode parse_degradation_mode(const std::string& s) {
    if (s == "strict_bound") return DegradationMode::strict_bound;
    if (s == "approximation") return DegradationMode::approximation;
    if (s == "none") return DegradationMode::none;
    throw ConfigError("unknown degradation mode '" + s + "' (strict_bound, approximation, none)");
}

inline const char* to_string(DegradationMode m) {
    switch (m) {
        case DegradationMode::strict_bound: return "strict_bound";
        case DegradationMode::approximation: return "approximation";
        case DegradationMode::none: return "none";
    }
    return "unknown";
}

inline EnzymeMode parse_enzyme_mode(const std::string& s) {
    if (s == "off") return EnzymeMode::off;
    if (s == "first_order") return EnzymeMode::first_order;
    if (s == "explicit") return EnzymeMode::explicit_molecules;
    throw ConfigError("unknown enzyme mode '" + s + "' (off, first_order, explicit)");
}

/// Assigns `value` at a dotted key path, creating objects on the way.
inline void set_path(Json& j, const std::string& dotted, Json value) {
    Json* cur = &j;
    std::size_t start = 0;
    for (;;) {
        const auto end = dotted.find('.', start);
        const std::string part = dotted.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (end == std::string::npos) {
            (*cur)[part] = std::move(value);
            return;
        }
        if (!cur->contains(part) || !(*cur)[part].is_object()) (*cur)[part] = Json::object();
        cur = &(*cur)[part];
        start = end + 1;
    }
}

/// Parses "key=value" where value is JSON (bare words are taken as strings).
inline void apply_override(Json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    set_path(j, key, std::move(value));
}

/// Validates a user tree against the schema, fills defaults and derived
/// values, and builds the typed specs. All problems are reported together.
inline RunConfig resolve_config(const Json& user) {
    std::vector<std::string> problems;
    if (!user.is_object()) throw ConfigErrors({"<root>: expected a JSON object"});
    {
        std::vector<std::string> missing;
        for (const auto& key : required_config_keys()) {
            const Json* v = detail::find_path(user, key);
            if (!v || v->is_null()) missing.push_back(key + ": required key missing");
        }
        if (!missing.empty()) problems = missing;
    }
    Json tree = default_config();
    detail::merge_checked(tree, user, "", problems);
    if (!problems.empty()) throw ConfigErrors(problems);

    detail::Reader r(tree, problems);
    RunConfig cfg;
    EnvironmentSpec& env = cfg.env;

    const double temp_c = r.number("environment.temperature_c");
    env.temperature = temp_c + constants::celsius_offset;
    r.check(env.temperature > 0.0, "environment.temperature_c", "must be above absolute zero");
    env.viscosity = r.number("environment.viscosity");
    r.check(env.viscosity > 0.0, "environment.viscosity", "must be positive");
    env.flow = {r.number("environment.flow.x"), r.number("environment.flow.y"), r.number("environment.flow.z")};

    env.receiver_distance = r.number("receiver.distance");
    env.receiver_radius = r.number("receiver.radius");
    r.check(env.receiver_distance > 0.0, "receiver.distance", "must be positive");
    r.check(env.receiver_radius > 0.0, "receiver.radius", "must be positive");
    r.check(env.receiver_distance > env.receiver_radius, "receiver.radius",
            "receiver must not contain the transmitter (radius < distance)");

    auto species = [&](const std::string& name, SpeciesSpec& out) {
        const std::string base = "species." + name;
        out.name = name;
        out.radius = r.number(base + ".radius");
        r.check(out.radius > 0.0, base + ".radius", "must be positive");
        Json& dnode = r.at(base + ".diffusion_coefficient");
        if (dnode.is_null()) {
            if (out.radius > 0.0 && env.temperature > 0.0 && env.viscosity > 0.0) {
                out.diffusion_coefficient = einstein_diffusion(env.temperature, env.viscosity, out.radius);
                dnode = out.diffusion_coefficient;
            }
        } else {
            out.diffusion_coefficient = r.number(base + ".diffusion_coefficient");
            r.check(out.diffusion_coefficient > 0.0, base + ".diffusion_coefficient", "must be positive");
        }
    };
    species("A", env.a);
    species("E", env.e);
    species("EA", env.ea);

    const bool enzymes = r.boolean("enzymes.enabled");
    const double conc = r.number("enzymes.concentration_um");
    r.check(conc >= 0.0, "enzymes.concentration_um", "must be non-negative");
    env.reactions.k1 = r.number("enzymes.k1");
    env.reactions.k_minus1 = r.number("enzymes.k_minus1");
    env.reactions.k2 = r.number("enzymes.k2");
    r.check(env.reactions.k1 >= 0.0, "enzymes.k1", "must be non-negative");
    r.check(env.reactions.k_minus1 >= 0.0, "enzymes.k_minus1", "must be non-negative");
    r.check(env.reactions.k2 >= 0.0, "enzymes.k2", "must be non-negative");
    env.reactions.enzyme_total_concentration = enzymes ? micromolar_to_number_density(conc) : 0.0;
    Json& side_node = r.at("enzymes.volume_side");
    double side = 10.0 * env.receiver_distance;
    if (side_node.is_null()) {
        side_node = side;
    } else {
        side = r.number("enzymes.volume_side");
        r.check(side > 0.0, "enzymes.volume_side", "must be positive");
    }
    env.enzyme_volume = side * side * side;

    try {
        cfg.degradation_mode = parse_degradation_mode(r.text("degradation_mode"));
    } catch (const ConfigError& e) {
        problems.push_back(std::string("degradation_mode: ") + e.what());
    }
    if (enzymes && cfg.degradation_mode == DegradationMode::approximation)
        r.check(env.reactions.k_minus1 + env.reactions.k2 > 0.0, "enzymes.k2", "k_minus1 + k2 must be positive");

    TransmissionSpec& tx = cfg.tx;
    tx.molecules_per_one = r.integer("transmission.molecules_per_one");
    r.check(tx.molecules_per_one > 0, "transmission.molecules_per_one", "must be positive");
    tx.bit_interval = r.number("transmission.bit_interval");
    r.check(tx.bit_interval > 0.0, "transmission.bit_interval", "must be positive");
    tx.p1 = r.number("transmission.p1");
    r.check(tx.p1 >= 0.0 && tx.p1 <= 1.0, "transmission.p1", "must lie in [0, 1]");
    tx.sequence_length = static_cast<int>(r.integer("transmission.sequence_length", 1));
    r.check(tx.sequence_length >= 1, "transmission.sequence_length", "must be at least 1");
    const double noise = r.number("transmission.noise_mean");
    r.check(noise >= 0.0, "transmission.noise_mean", "must be non-negative");
    tx.noise.constant = noise;

    Json& offsets_node = r.at("transmission.sample_offsets");
    Json& m_node = r.at("transmission.samples_per_interval");
    if (offsets_node.is_null()) {
        const std::int64_t m = m_node.is_null() ? 1 : r.integer("transmission.samples_per_interval", 1);
        r.check(m >= 1, "transmission.samples_per_interval", "must be at least 1");
        if (m >= 1 && tx.bit_interval > 0.0) {
            tx.sample_offsets = uniform_sample_offsets(tx.bit_interval, static_cast<int>(m));
            offsets_node = tx.sample_offsets;
        }
        m_node = m;
    } else if (!offsets_node.is_array() || offsets_node.empty()) {
        problems.push_back("transmission.sample_offsets: expected a non-empty array of times");
    } else {
        for (std::size_t i = 0; i < offsets_node.size(); ++i) {
            if (!offsets_node[i].is_number()) {
                problems.push_back("transmission.sample_offsets[" + std::to_string(i) + "]: expected a number");
                continue;
            }
            tx.sample_offsets.push_back(offsets_node[i].get<double>());
        }
        if (!m_node.is_null() && r.integer("transmission.samples_per_interval") != static_cast<std::int64_t>(tx.sample_offsets.size()))
            problems.push_back("transmission.samples_per_interval: does not match the number of sample offsets");
        m_node = tx.sample_offsets.size();
        double prev = 0.0;
        for (double g : tx.sample_offsets) {
            if (!(g > prev)) {
                problems.push_back("transmission.sample_offsets: must be positive and strictly increasing");
                break;
            }
            prev = g;
        }
        if (!tx.sample_offsets.empty() && tx.sample_offsets.back() > tx.bit_interval * (1.0 + 1e-12))
            problems.push_back("transmission.sample_offsets: last offset exceeds the bit interval");
    }

    SimConfig& sim = cfg.sim;
    sim.time_step = r.number("simulation.time_step");
    r.check(sim.time_step > 0.0, "simulation.time_step", "must be positive");
    const std::int64_t seed = r.integer("simulation.seed");
    r.check(seed >= 0, "simulation.seed", "must be non-negative");
    sim.master_seed = static_cast<std::uint64_t>(seed);
    sim.realization_count = r.integer("simulation.realizations");
    r.check(sim.realization_count >= 1, "simulation.realizations", "must be at least 1");
    try {
        sim.enzyme_mode = parse_enzyme_mode(r.text("simulation.enzyme_mode"));
    } catch (const ConfigError& e) {
        problems.push_back(std::string("simulation.enzyme_mode: ") + e.what());
    }
    try {
        sim.first_order_rate = parse_degradation_mode(r.text("simulation.first_order_rate"));
    } catch (const ConfigError& e) {
        problems.push_back(std::string("simulation.first_order_rate: ") + e.what());
    }
    if (sim.time_step > 0.0 && tx.bit_interval > 0.0) {
        if (!SimConfig::is_step_multiple(tx.bit_interval, sim.time_step))
            problems.push_back("transmission.bit_interval: must be a multiple of simulation.time_step");
        for (double g : tx.sample_offsets) {
            if (!SimConfig::is_step_multiple(g, sim.time_step)) {
                problems.push_back("transmission.sample_offsets: offset " + std::to_string(g) +
                                   " s is not a multiple of simulation.time_step; observation lags must be "
                                   "whole numbers of simulation steps");
                break;
            }
        }
    }

    if (!problems.empty()) throw ConfigErrors(problems);
    cfg.experiment = tree["experiment"];
    cfg.resolved = tree;
    return cfg;
}

/// Reads and resolves a JSON file. An empty file counts as {}.
inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    Json user = Json::object();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
        try {
            user = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw ConfigError(path + ": " + e.what());
        }
    }
    for (const auto& o : overrides) apply_override(user, o);
    return resolve_config(user);
}

}  // namespace molcomm

#endif  // MOLCOMM_CONFIG_HPP
