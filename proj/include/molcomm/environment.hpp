#ifndef MOLCOMM_ENVIRONMENT_HPP
#define MOLCOMM_ENVIRONMENT_HPP

// Physical environment shared by every other module: species, reactions,
// geometry, flow, and the transmitter's signalling schedule.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "molcomm/errors.hpp"
#include "molcomm/vec3.hpp"

namespace molcomm {

namespace constants {
inline constexpr double boltzmann = 1.38e-23;  // J/K, value used throughout the model
inline constexpr double avogadro = 6.02214076e23;
inline constexpr double celsius_offset = 273.15;
}  // namespace constants

/// Which effective rate constant stands in for the enzyme kinetics when the
/// channel is treated analytically.
enum class DegradationMode {
    strict_bound,   ///< k = k1, a strict lower bound on the expected concentration
    approximation,  ///< k = k1 k2 / (k-1 + k2)
    none,           ///< enzymes ignored
};

/// Stokes-Einstein diffusion coefficient of a sphere of radius `radius` (m)
/// in a fluid at `temperature` (K) with dynamic viscosity `viscosity`.
inline double einstein_diffusion(double temperature, double viscosity, double radius) {
    detail::require(temperature > 0.0, "einstein_diffusion: temperature must be positive");
    detail::require(viscosity > 0.0, "einstein_diffusion: viscosity must be positive");
    detail::require(radius > 0.0, "einstein_diffusion: radius must be positive");
    return constants::boltzmann * temperature / (6.0 * std::numbers::pi * viscosity * radius);
}

inline double receiver_volume(double r_obs) {
    detail::require(r_obs > 0.0, "receiver_volume: radius must be positive");
    return 4.0 / 3.0 * std::numbers::pi * r_obs * r_obs * r_obs;
}

inline double micromolar_to_number_density(double micromolar) {
    return micromolar * 1e-6 * 1e3 * constants::avogadro;  // mol/L -> molecule/m^3
}

struct SpeciesSpec {
    std::string name;
    double radius = 0.0;                 // m
    double diffusion_coefficient = 0.0;  // m^2/s

    /// Diffusion coefficient from the Einstein relation unless `override_d` is given.
    static SpeciesSpec make(std::string name, double radius, double temperature, double viscosity,
                            std::optional<double> override_d = std::nullopt) {
        SpeciesSpec s{std::move(name), radius, 0.0};
        s.diffusion_coefficient =
            override_d ? *override_d : einstein_diffusion(temperature, viscosity, radius);
        s.validate();
        return s;
    }

    void validate() const {
        if (!(radius > 0.0)) throw DomainError("species " + name + ": radius must be positive");
        if (!(diffusion_coefficient > 0.0))
            throw DomainError("species " + name + ": diffusion coefficient must be positive");
    }
};

struct ReactionSpec {
    double k1 = 0.0;                          // molecule^-1 m^3 s^-1
    double k_minus1 = 0.0;                    // s^-1
    double k2 = 0.0;                          // s^-1
    double enzyme_total_concentration = 0.0;  // molecule/m^3, 0 disables enzymes

    bool enzymes_present() const noexcept { return enzyme_total_concentration > 0.0; }

    void validate() const {
        detail::require(k1 >= 0.0 && k_minus1 >= 0.0 && k2 >= 0.0,
                        "reaction rates must be non-negative");
        detail::require(enzyme_total_concentration >= 0.0,
                        "enzyme concentration must be non-negative");
    }
};

/// k in the degradation exponent exp(-k C_E_Tot t).
inline double degradation_rate_constant(const ReactionSpec& reactions, DegradationMode mode) {
    switch (mode) {
        case DegradationMode::strict_bound:
            return reactions.k1;
        case DegradationMode::approximation: {
            const double denom = reactions.k_minus1 + reactions.k2;
            if (!(denom > 0.0))
                throw DomainError("degradation_rate_constant: k-1 + k2 must be positive");
            return reactions.k1 * reactions.k2 / denom;
        }
        case DegradationMode::none:
            return 0.0;
    }
    throw DomainError("degradation_rate_constant: unknown mode");
}

struct EnvironmentSpec {
    double temperature = 298.15;  // K
    double viscosity = 1e-3;      // kg m^-1 s^-1
    Vec3 flow{};                  // m/s
    SpeciesSpec a;                // information molecule
    SpeciesSpec e;                // enzyme
    SpeciesSpec ea;               // enzyme-substrate complex
    ReactionSpec reactions{};
    double receiver_distance = 300e-9;  // x0, m
    double receiver_radius = 45e-9;     // r_obs, m
    /// Bounding volume for explicit enzyme molecules (m^3). Only the
    /// particle simulator's explicit mode reads it.
    double enzyme_volume = 0.0;

    Vec3 receiver_center() const noexcept { return {receiver_distance, 0.0, 0.0}; }
    double receiver_volume() const { return molcomm::receiver_volume(receiver_radius); }
    double diffusion_a() const noexcept { return a.diffusion_coefficient; }
    bool has_flow() const noexcept { return flow.norm2() > 0.0; }

    /// k C_E_Tot, the first-order decay rate of free A molecules.
    double decay_rate(DegradationMode mode) const {
        if (!reactions.enzymes_present()) return 0.0;
        return degradation_rate_constant(reactions, mode) * reactions.enzyme_total_concentration;
    }

    void validate() const {
        detail::require(temperature > 0.0, "temperature must be positive");
        detail::require(viscosity > 0.0, "viscosity must be positive");
        detail::require(receiver_distance > 0.0, "receiver distance must be positive");
        detail::require(receiver_radius > 0.0, "receiver radius must be positive");
        detail::require(receiver_distance > receiver_radius,
                        "receiver must not contain the transmitter");
        detail::require(enzyme_volume >= 0.0, "enzyme volume must be non-negative");
        a.validate();
        e.validate();
        ea.validate();
        reactions.validate();
    }

    /// The base case: 25 C water, 0.5/2.5/3 nm molecules, x0 = 300 nm,
    /// r_obs = 45 nm, no flow and no enzymes. Reaction constants are filled in
    /// so that enabling enzymes only needs a concentration.
    static EnvironmentSpec base_case() {
        EnvironmentSpec env;
        env.temperature = 25.0 + constants::celsius_offset;
        env.viscosity = 1e-3;
        env.a = SpeciesSpec::make("A", 0.5e-9, env.temperature, env.viscosity);
        env.e = SpeciesSpec::make("E", 2.5e-9, env.temperature, env.viscosity);
        env.ea = SpeciesSpec::make("EA", 3.0e-9, env.temperature, env.viscosity);
        env.reactions = {2e-19, 1e4, 1e6, 0.0};
        env.enzyme_volume = std::pow(10.0 * env.receiver_distance, 3);
        return env;
    }
};

/// Distance from the flow-displaced diffusion cloud centre to the receiver centre.
inline double effective_distance(const EnvironmentSpec& env, double t) {
    detail::require(t >= 0.0, "effective_distance: time must be non-negative");
    const double dx = env.receiver_distance - env.flow.x * t;
    const double dy = env.flow.y * t;
    const double dz = env.flow.z * t;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double peclet_number(const EnvironmentSpec& env, double speed) {
    detail::require(speed >= 0.0, "peclet_number: speed must be non-negative");
    return env.receiver_distance * speed / env.diffusion_a();
}

/// Expected additive-noise count as a function of absolute time.
struct NoiseProfile {
    double constant = 0.0;
    std::function<double(double)> custom{};

    double operator()(double t) const { return custom ? custom(t) : constant; }
    bool is_zero() const noexcept { return !custom && constant == 0.0; }
};

/// Evenly spaced in-interval sampling offsets g(m) = m T_int / M, m = 1..M.
inline std::vector<double> uniform_sample_offsets(double bit_interval, int samples) {
    detail::require(samples >= 1, "uniform_sample_offsets: need at least one sample");
    std::vector<double> g(static_cast<std::size_t>(samples));
    for (int m = 1; m <= samples; ++m) g[m - 1] = m * bit_interval / samples;
    return g;
}

struct TransmissionSpec {
    std::int64_t molecules_per_one = 5000;  // N_AEM
    double bit_interval = 200e-6;           // T_int, s
    double p1 = 0.5;
    int sequence_length = 1;                // B
    std::vector<double> sample_offsets;     // g(m), s
    NoiseProfile noise{};

    int samples_per_interval() const noexcept { return static_cast<int>(sample_offsets.size()); }

    /// Global sampling time t(j, m) with zero-based j and m.
    double sample_time(int j, int m) const { return j * bit_interval + sample_offsets[m]; }

    void validate() const {
        detail::require(molecules_per_one > 0, "molecules_per_one must be positive");
        detail::require(bit_interval > 0.0, "bit_interval must be positive");
        detail::require(p1 >= 0.0 && p1 <= 1.0, "p1 must lie in [0, 1]");
        detail::require(sequence_length >= 1, "sequence_length must be at least 1");
        detail::require(!sample_offsets.empty(), "at least one sample per interval is required");
        double prev = 0.0;
        for (double g : sample_offsets) {
            detail::require(g > prev, "sample offsets must be positive and strictly increasing");
            prev = g;
        }
        detail::require(sample_offsets.back() <= bit_interval * (1.0 + 1e-12),
                        "last sample offset must not exceed the bit interval");
    }
};

}  // namespace molcomm

#endif  // MOLCOMM_ENVIRONMENT_HPP
