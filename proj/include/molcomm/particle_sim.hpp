#ifndef MOLCOMM_PARTICLE_SIM_HPP
#define MOLCOMM_PARTICLE_SIM_HPP

// Particle-based simulation of the channel. Two engines share one contract:
//
//  * a step engine advancing every molecule by dt (diffuse_step, react_step,
//    observe), required for explicit enzyme molecules;
//  * an event engine for the off and first_order modes that moves each
//    molecule directly from its last evaluation to the next sampling time at
//    which it could possibly be inside the receiver. Gaussian increments
//    compose exactly, so the counts have the same distribution as dt
//    stepping; a molecule is skipped over a sample only when reaching the
//    receiver would need a displacement beyond 7 standard deviations.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <ostream>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "molcomm/channel.hpp"
#include "molcomm/environment.hpp"
#include "molcomm/errors.hpp"
#include "molcomm/random.hpp"
#include "molcomm/vec3.hpp"

namespace molcomm {

enum class EnzymeMode {
    off,                 ///< enzymes ignored
    first_order,         ///< each free A decays independently at rate k C_E_Tot
    explicit_molecules,  ///< individual E molecules, binding and EA resolution
};

struct SimConfig {
    double time_step = 0.5e-6;
    std::uint64_t master_seed = 1;
    std::int64_t realization_count = 20000;
    EnzymeMode enzyme_mode = EnzymeMode::first_order;
    /// Rate constant used by first_order mode.
    DegradationMode first_order_rate = DegradationMode::approximation;
    /// Run off/first_order through the step engine as well (slow; for cross-checks).
    bool force_stepping = false;

    void validate() const {
        if (!(time_step > 0.0)) throw ConfigError("time step must be positive", "simulation.time_step");
        if (realization_count < 1)
            throw ConfigError("at least one realization is required", "simulation.realizations");
    }

    static bool is_step_multiple(double t, double dt) {
        const double r = t / dt;
        return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
    }

    /// Sampling offsets and the bit interval must be whole numbers of steps.
    void validate_against(const TransmissionSpec& tx) const {
        validate();
        if (!is_step_multiple(tx.bit_interval, time_step))
            throw ConfigError("bit interval must be a multiple of the simulation time step",
                              "transmission.bit_interval");
        for (double g : tx.sample_offsets) {
            if (!is_step_multiple(g, time_step))
                throw ConfigError("sampling offset " + std::to_string(g) +
                                      " s is not a multiple of the simulation time step; "
                                      "observation lags must be whole numbers of steps",
                                  "transmission.sample_offsets");
        }
    }
};

/// Counts s[j, m], j over bit intervals and m over samples within an interval.
class ObservationMatrix {
public:
    ObservationMatrix() = default;
    ObservationMatrix(int intervals, int samples)
        : intervals_(intervals), samples_(samples),
          counts_(static_cast<std::size_t>(intervals) * static_cast<std::size_t>(samples), 0) {
        detail::require(intervals >= 0 && samples >= 0, "ObservationMatrix: negative dimension");
    }

    int intervals() const noexcept { return intervals_; }
    int samples() const noexcept { return samples_; }
    std::int64_t& operator()(int j, int m) { return counts_[index(j, m)]; }
    std::int64_t operator()(int j, int m) const { return counts_[index(j, m)]; }
    std::span<const std::int64_t> row(int j) const {
        return {counts_.data() + index(j, 0), static_cast<std::size_t>(samples_)};
    }
    std::span<std::int64_t> row(int j) {
        return {counts_.data() + index(j, 0), static_cast<std::size_t>(samples_)};
    }
    std::span<const std::int64_t> values() const noexcept { return counts_; }
    std::span<std::int64_t> values() noexcept { return counts_; }

    friend bool operator==(const ObservationMatrix&, const ObservationMatrix&) = default;

private:
    std::size_t index(int j, int m) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(samples_) + static_cast<std::size_t>(m);
    }
    int intervals_ = 0;
    int samples_ = 0;
    std::vector<std::int64_t> counts_;
};

struct SimState {
    std::vector<Vec3> a;   // free information molecules
    std::vector<Vec3> e;   // free enzymes
    std::vector<Vec3> ea;  // bound complexes
    double time = 0.0;
    std::int64_t emitted = 0;
    std::int64_t degraded = 0;
    /// Half side of the periodic enzyme box; 0 leaves E and EA unconfined.
    double enzyme_half_side = 0.0;
    Vec3 enzyme_center{};
    /// Encounter radius for explicit binding, computed on first use.
    double binding_radius = 0.0;

    /// Emitted = free + bound + degraded.
    bool conserved() const noexcept {
        return emitted == static_cast<std::int64_t>(a.size() + ea.size()) + degraded;
    }
};

/// Encounter radius at which binding on contact after each step reproduces
/// the bimolecular rate `k1` (m^3/s) for relative diffusion `d_sum`.
/// A pair uniformly placed outside radius r moves inside it during one step
/// with expected volume (4/3 pi r^3 - E[overlap(r, |delta|)]), where delta is
/// the Gaussian relative displacement; that volume is set equal to k1 dt.
inline double binding_radius(double k1, double d_sum, double dt) {
    detail::require(k1 > 0.0 && d_sum > 0.0 && dt > 0.0, "binding_radius: arguments must be positive");
    const double sigma = std::sqrt(2.0 * d_sum * dt);
    const double target = k1 * dt;
    auto entered_volume = [&](double r) {
        // Maxwell density of |delta| times the lens volume of two radius-r balls.
        auto integrand = [&](double d) {
            const double lens = std::numbers::pi * (4.0 * r + d) * (2.0 * r - d) * (2.0 * r - d) / 12.0;
            const double density = std::sqrt(2.0 / std::numbers::pi) * d * d / (sigma * sigma * sigma) *
                                   std::exp(-d * d / (2.0 * sigma * sigma));
            return lens * density;
        };
        const double overlap =
            boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 2.0 * r, 15, 1e-12);
        return 4.0 / 3.0 * std::numbers::pi * r * r * r - overlap;
    };
    double lo = 0.0;
    double hi = std::cbrt(3.0 * target / (4.0 * std::numbers::pi));
    while (entered_volume(hi) < target) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (entered_volume(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

inline void gaussian_move(std::vector<Vec3>& positions, double sigma, const Vec3& drift, Engine& rng) {
    if (positions.empty()) return;
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    for (Vec3& p : positions) {
        p.x += drift.x + sigma * normal(rng);
        p.y += drift.y + sigma * normal(rng);
        p.z += drift.z + sigma * normal(rng);
    }
}

inline double wrap(double x, double center, double half) {
    const double side = 2.0 * half;
    double u = std::fmod(x - (center - half), side);
    if (u < 0.0) u += side;
    return center - half + u;
}

inline Vec3 wrap(const Vec3& p, const Vec3& center, double half) {
    return {wrap(p.x, center.x, half), wrap(p.y, center.y, half), wrap(p.z, center.z, half)};
}

inline bool in_box(const Vec3& p, const Vec3& center, double half) {
    return std::abs(p.x - center.x) <= half && std::abs(p.y - center.y) <= half &&
           std::abs(p.z - center.z) <= half;
}

inline Vec3 random_direction(Engine& rng) {
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        Vec3 v{normal(rng), normal(rng), normal(rng)};
        const double n = v.norm();
        if (n > 0.0) return v * (1.0 / n);
    }
}

}  // namespace detail

/// Places round(C_E_Tot V_enz) enzymes uniformly in the enzyme box, centred
/// midway between transmitter and receiver.
inline void seed_enzymes(SimState& state, const EnvironmentSpec& env, Engine& rng) {
    if (!env.reactions.enzymes_present()) return;
    if (!(env.enzyme_volume > 0.0))
        throw ConfigError("explicit enzymes need a positive enzyme volume", "enzymes.volume_side");
    const double count = std::round(env.reactions.enzyme_total_concentration * env.enzyme_volume);
    if (count > 5e7)
        throw ConfigError("explicit enzyme count " + std::to_string(count) +
                              " is too large; reduce the enzyme volume",
                          "enzymes.volume_side");
    state.enzyme_half_side = 0.5 * std::cbrt(env.enzyme_volume);
    state.enzyme_center = {0.5 * env.receiver_distance, 0.0, 0.0};
    boost::random::uniform_01<double> u;
    const double h = state.enzyme_half_side;
    state.e.resize(static_cast<std::size_t>(count));
    for (Vec3& p : state.e) {
        p = {state.enzyme_center.x - h + 2.0 * h * u(rng), state.enzyme_center.y - h + 2.0 * h * u(rng),
             state.enzyme_center.z - h + 2.0 * h * u(rng)};
    }
}

/// Brownian displacement N(0, 2 D dt) per axis plus flow for every free species.
/// Free enzymes are wrapped back into the enzyme box.
inline void diffuse_step(SimState& state, double dt, const EnvironmentSpec& env, Engine& rng) {
    const Vec3 drift = env.flow * dt;
    detail::gaussian_move(state.a, std::sqrt(2.0 * env.a.diffusion_coefficient * dt), drift, rng);
    detail::gaussian_move(state.e, std::sqrt(2.0 * env.e.diffusion_coefficient * dt), drift, rng);
    detail::gaussian_move(state.ea, std::sqrt(2.0 * env.ea.diffusion_coefficient * dt), drift, rng);
    if (state.enzyme_half_side > 0.0) {
        for (Vec3& p : state.e) p = detail::wrap(p, state.enzyme_center, state.enzyme_half_side);
    }
    state.time += dt;
}

namespace detail {

inline void first_order_decay(SimState& state, double rate, double dt, Engine& rng) {
    if (rate <= 0.0 || state.a.empty()) return;
    const double p_decay = -std::expm1(-rate * dt);
    boost::random::uniform_01<double> u;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < state.a.size(); ++i) {
        if (u(rng) < p_decay) {
            ++state.degraded;
        } else {
            state.a[kept++] = state.a[i];
        }
    }
    state.a.resize(kept);
}

struct CellGrid {
    double cell = 0.0;
    Vec3 origin{};
    std::vector<std::pair<std::uint64_t, std::uint32_t>> entries;  // (cell key, enzyme index)

    static constexpr std::int64_t span = 1 << 20;

    std::uint64_t key(std::int64_t ix, std::int64_t iy, std::int64_t iz) const {
        auto enc = [](std::int64_t v) { return static_cast<std::uint64_t>((v + span / 2) & (span - 1)); };
        return (enc(ix) << 40) | (enc(iy) << 20) | enc(iz);
    }
    std::int64_t coord(double x, double o) const { return static_cast<std::int64_t>(std::floor((x - o) / cell)); }

    void build(const std::vector<Vec3>& points, double cell_size, const Vec3& o) {
        cell = cell_size;
        origin = o;
        entries.resize(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            const Vec3& p = points[i];
            entries[i] = {key(coord(p.x, o.x), coord(p.y, o.y), coord(p.z, o.z)), static_cast<std::uint32_t>(i)};
        }
        std::sort(entries.begin(), entries.end());
    }
};

inline void explicit_reactions(SimState& state, const EnvironmentSpec& env, double dt, Engine& rng) {
    const auto& rx = env.reactions;
    boost::random::uniform_01<double> u;
    const double total_rate = rx.k_minus1 + rx.k2;
    const double p_resolve = total_rate > 0.0 ? -std::expm1(-total_rate * dt) : 0.0;
    const double p_unbind = total_rate > 0.0 ? rx.k_minus1 / total_rate : 0.0;
    if (state.binding_radius <= 0.0)
        state.binding_radius = binding_radius(rx.k1, env.a.diffusion_coefficient + env.e.diffusion_coefficient, dt);
    const double r_b = state.binding_radius;

    // Complexes resolve first so a freshly bound pair survives at least one step.
    std::vector<Vec3> still_bound;
    still_bound.reserve(state.ea.size());
    std::vector<Vec3> released_e;
    for (const Vec3& c : state.ea) {
        const bool outside = state.enzyme_half_side > 0.0 && !in_box(c, state.enzyme_center, state.enzyme_half_side);
        if (!outside && !(u(rng) < p_resolve)) {
            still_bound.push_back(c);
            continue;
        }
        Vec3 enzyme = state.enzyme_half_side > 0.0 ? wrap(c, state.enzyme_center, state.enzyme_half_side) : c;
        if (u(rng) < p_unbind) {
            state.a.push_back(c + random_direction(rng) * r_b);
        } else {
            ++state.degraded;
        }
        released_e.push_back(enzyme);
    }

    // Binding: each free A binds the first unclaimed enzyme within r_B.
    std::vector<Vec3> new_bound;
    if (!state.e.empty() && !state.a.empty()) {
        CellGrid grid;
        grid.build(state.e, r_b, state.enzyme_center);
        std::vector<char> claimed(state.e.size(), 0);
        std::size_t kept = 0;
        const double r2 = r_b * r_b;
        for (std::size_t i = 0; i < state.a.size(); ++i) {
            const Vec3& p = state.a[i];
            const auto cx = grid.coord(p.x, grid.origin.x);
            const auto cy = grid.coord(p.y, grid.origin.y);
            const auto cz = grid.coord(p.z, grid.origin.z);
            std::int64_t hit = -1;
            for (int dx = -1; dx <= 1 && hit < 0; ++dx) {
                for (int dy = -1; dy <= 1 && hit < 0; ++dy) {
                    for (int dz = -1; dz <= 1 && hit < 0; ++dz) {
                        const std::uint64_t k = grid.key(cx + dx, cy + dy, cz + dz);
                        auto it = std::lower_bound(grid.entries.begin(), grid.entries.end(),
                                                   std::pair<std::uint64_t, std::uint32_t>{k, 0});
                        for (; it != grid.entries.end() && it->first == k; ++it) {
                            if (claimed[it->second]) continue;
                            if ((state.e[it->second] - p).norm2() <= r2) {
                                hit = it->second;
                                break;
                            }
                        }
                    }
                }
            }
            if (hit >= 0) {
                claimed[static_cast<std::size_t>(hit)] = 1;
                new_bound.push_back(state.e[static_cast<std::size_t>(hit)]);
            } else {
                state.a[kept++] = p;
            }
        }
        state.a.resize(kept);
        std::size_t e_kept = 0;
        for (std::size_t i = 0; i < state.e.size(); ++i)
            if (!claimed[i]) state.e[e_kept++] = state.e[i];
        state.e.resize(e_kept);
    }
    state.e.insert(state.e.end(), released_e.begin(), released_e.end());
    still_bound.insert(still_bound.end(), new_bound.begin(), new_bound.end());
    state.ea = std::move(still_bound);
}

}  // namespace detail

inline void react_step(SimState& state, double dt, const EnvironmentSpec& env, EnzymeMode mode, Engine& rng,
                       DegradationMode first_order_rate = DegradationMode::approximation) {
    switch (mode) {
        case EnzymeMode::off:
            return;
        case EnzymeMode::first_order:
            detail::first_order_decay(state, env.decay_rate(first_order_rate), dt, rng);
            return;
        case EnzymeMode::explicit_molecules:
            if (env.reactions.enzymes_present() || !state.ea.empty()) detail::explicit_reactions(state, env, dt, rng);
            return;
    }
    throw ConfigError("unknown enzyme mode", "simulation.enzyme_mode");
}

/// Free A molecules inside the receiver sphere (boundary inclusive).
inline std::int64_t observe(const SimState& state, const EnvironmentSpec& env) {
    const Vec3 c = env.receiver_center();
    const double r2 = env.receiver_radius * env.receiver_radius;
    std::int64_t n = 0;
    for (const Vec3& p : state.a)
        if ((p - c).norm2() <= r2) ++n;
    return n;
}

namespace detail {

inline void check_sequence(const TransmissionSpec& tx, const BitSequence& sequence) {
    if (sequence.size() != static_cast<std::size_t>(tx.sequence_length))
        throw DomainError("run_realization: sequence length " + std::to_string(sequence.size()) +
                          " does not match B = " + std::to_string(tx.sequence_length));
}

inline ObservationMatrix run_stepping(const EnvironmentSpec& env, const TransmissionSpec& tx, const SimConfig& cfg,
                                      const BitSequence& sequence, Engine& rng) {
    const int b = tx.sequence_length;
    const int mcount = tx.samples_per_interval();
    ObservationMatrix out(b, mcount);
    const double dt = cfg.time_step;
    const auto step_of = [dt](double t) { return static_cast<std::int64_t>(std::llround(t / dt)); };

    std::vector<std::pair<std::int64_t, std::pair<int, int>>> samples;
    samples.reserve(static_cast<std::size_t>(b) * mcount);
    for (int j = 0; j < b; ++j)
        for (int m = 0; m < mcount; ++m) samples.push_back({step_of(tx.sample_time(j, m)), {j, m}});
    std::sort(samples.begin(), samples.end());

    SimState state;
    if (cfg.enzyme_mode == EnzymeMode::explicit_molecules) seed_enzymes(state, env, rng);
    const std::int64_t last = samples.empty() ? 0 : samples.back().first;
    std::size_t next_sample = 0;
    int next_emission = 0;
    for (std::int64_t n = 0; n < last; ++n) {
        while (next_emission < b && step_of(next_emission * tx.bit_interval) == n) {
            if (sequence[static_cast<std::size_t>(next_emission)]) {
                state.a.insert(state.a.end(), static_cast<std::size_t>(tx.molecules_per_one), Vec3{});
                state.emitted += tx.molecules_per_one;
            }
            ++next_emission;
        }
        diffuse_step(state, dt, env, rng);
        react_step(state, dt, env, cfg.enzyme_mode, rng, cfg.first_order_rate);
        state.time = static_cast<double>(n + 1) * dt;
        while (next_sample < samples.size() && samples[next_sample].first == n + 1) {
            const auto [j, m] = samples[next_sample].second;
            out(j, m) = observe(state, env);
            ++next_sample;
        }
    }
    return out;
}

struct LazyMolecule {
    Vec3 pos;
    double time;
    double death;
};

inline ObservationMatrix run_event_driven(const EnvironmentSpec& env, const TransmissionSpec& tx,
                                          const SimConfig& cfg, const BitSequence& sequence, Engine& rng) {
    constexpr double tail_sigmas = 7.0;
    const int b = tx.sequence_length;
    const int mcount = tx.samples_per_interval();
    ObservationMatrix out(b, mcount);

    std::vector<double> times(static_cast<std::size_t>(b) * mcount);
    for (int j = 0; j < b; ++j)
        for (int m = 0; m < mcount; ++m) times[static_cast<std::size_t>(j) * mcount + m] = tx.sample_time(j, m);
    // Offsets lie in (0, T_int], so the global grid is already sorted.
    const std::size_t total = times.size();

    const double d = env.a.diffusion_coefficient;
    const double speed = env.flow.norm();
    const double reach = tail_sigmas * std::sqrt(2.0 * d);
    const Vec3 center = env.receiver_center();
    const double r_obs = env.receiver_radius;
    const double r2 = r_obs * r_obs;
    const double rate =
        cfg.enzyme_mode == EnzymeMode::first_order ? env.decay_rate(cfg.first_order_rate) : 0.0;

    boost::random::normal_distribution<double> normal(0.0, 1.0);
    boost::random::exponential_distribution<double> exponential(rate > 0.0 ? rate : 1.0);

    std::vector<std::vector<LazyMolecule>> buckets(total);

    // Index of the next sample the molecule could occupy, or `total` to retire it.
    auto schedule = [&](const LazyMolecule& mol, std::size_t from) {
        const double margin = std::sqrt((mol.pos - center).norm2()) - r_obs;
        double horizon = 0.0;
        if (margin > 0.0) {
            if (speed > 0.0) {
                const double root = (-reach + std::sqrt(reach * reach + 4.0 * speed * margin)) / (2.0 * speed);
                horizon = root * root;
            } else {
                horizon = (margin / reach) * (margin / reach);
            }
        }
        const double until = mol.time + horizon;
        std::size_t k = from;
        if (k < total && times[k] <= until) {
            k = static_cast<std::size_t>(
                std::upper_bound(times.begin() + static_cast<std::ptrdiff_t>(from), times.end(), until) -
                times.begin());
        }
        if (k < total && mol.death <= times[k]) return total;
        return k;
    };

    for (std::size_t k = 0; k < total; ++k) {
        if (k % static_cast<std::size_t>(mcount) == 0) {
            const int j = static_cast<int>(k / static_cast<std::size_t>(mcount));
            if (sequence[static_cast<std::size_t>(j)]) {
                const double t0 = j * tx.bit_interval;
                for (std::int64_t i = 0; i < tx.molecules_per_one; ++i) {
                    LazyMolecule mol{Vec3{}, t0, rate > 0.0 ? t0 + exponential(rng) : INFINITY};
                    const std::size_t target = schedule(mol, k);
                    if (target < total) buckets[target].push_back(mol);
                }
            }
        }
        std::vector<LazyMolecule> current;
        current.swap(buckets[k]);
        const double tk = times[k];
        std::int64_t count = 0;
        for (LazyMolecule& mol : current) {
            const double tau = tk - mol.time;
            const double sigma = std::sqrt(2.0 * d * tau);
            mol.pos.x += env.flow.x * tau + sigma * normal(rng);
            mol.pos.y += env.flow.y * tau + sigma * normal(rng);
            mol.pos.z += env.flow.z * tau + sigma * normal(rng);
            mol.time = tk;
            if ((mol.pos - center).norm2() <= r2) ++count;
            const std::size_t target = schedule(mol, k + 1);
            if (target < total) buckets[target].push_back(mol);
        }
        out.values()[k] = count;
    }
    return out;
}

}  // namespace detail

/// One independent realization: N_AEM molecules released at the origin at
/// the start of each interval carrying a 1, counts recorded at every t(j, m).
/// Deterministic in (master_seed, realization_index).
inline ObservationMatrix run_realization(const EnvironmentSpec& env, const TransmissionSpec& tx,
                                         const SimConfig& cfg, const BitSequence& sequence,
                                         std::uint64_t realization_index) {
    cfg.validate_against(tx);
    detail::check_sequence(tx, sequence);
    Engine rng = make_engine(cfg.master_seed, StreamTag::simulation, realization_index);
    if (cfg.enzyme_mode == EnzymeMode::explicit_molecules || cfg.force_stepping)
        return detail::run_stepping(env, tx, cfg, sequence, rng);
    return detail::run_event_driven(env, tx, cfg, sequence, rng);
}

/// Adds an independent Poisson(noise(t(j, m))) draw to every entry.
inline ObservationMatrix inject_noise(ObservationMatrix matrix, const TransmissionSpec& tx, std::uint64_t seed,
                                      std::uint64_t realization_index = 0) {
    if (tx.noise.is_zero()) return matrix;
    Engine rng = make_engine(seed, StreamTag::noise, realization_index);
    for (int j = 0; j < matrix.intervals(); ++j) {
        for (int m = 0; m < matrix.samples(); ++m) {
            const double mean = tx.noise(tx.sample_time(j, m));
            if (mean < 0.0) throw DomainError("inject_noise: noise mean must be non-negative");
            if (mean == 0.0) continue;
            boost::random::poisson_distribution<std::int64_t, double> poisson(mean);
            matrix(j, m) += poisson(rng);
        }
    }
    return matrix;
}

/// Realization failure with the failing index attached.
class RealizationError : public std::runtime_error {
public:
    RealizationError(std::uint64_t index, const std::string& what)
        : std::runtime_error("realization " + std::to_string(index) + ": " + what), index_(index) {}
    std::uint64_t index() const noexcept { return index_; }

private:
    std::uint64_t index_;
};

using SequenceSource = std::function<BitSequence(std::uint64_t realization_index)>;
using ProgressSink = std::function<void(std::int64_t done, std::int64_t total)>;

/// Runs cfg.realization_count realizations in parallel, each with its own
/// sequence and streams, and returns the noisy matrices in index order.
inline std::vector<ObservationMatrix> simulate_ensemble(const EnvironmentSpec& env, const TransmissionSpec& tx,
                                                        const SimConfig& cfg, const SequenceSource& sequences,
                                                        const ProgressSink& progress = {}) {
    cfg.validate_against(tx);
    const std::int64_t n = cfg.realization_count;
    std::vector<ObservationMatrix> out(static_cast<std::size_t>(n));
    std::atomic<std::int64_t> done{0};
    std::mutex progress_mutex;
    parallel_for(n, [&](std::int64_t i) {
        const auto index = static_cast<std::uint64_t>(i);
        try {
            const BitSequence seq = sequences(index);
            out[static_cast<std::size_t>(i)] =
                inject_noise(run_realization(env, tx, cfg, seq, index), tx, cfg.master_seed, index);
        } catch (const std::exception& ex) {
            throw RealizationError(index, ex.what());
        }
        const auto finished = ++done;
        if (progress) {
            std::lock_guard lock(progress_mutex);
            progress(finished, n);
        }
    });
    return out;
}

/// Raw counts as CSV rows: realization, j, m, t_s, count (j and m one-based).
inline void write_trace_rows(std::ostream& os, std::uint64_t realization, const ObservationMatrix& matrix,
                             const TransmissionSpec& tx) {
    for (int j = 0; j < matrix.intervals(); ++j) {
        for (int m = 0; m < matrix.samples(); ++m) {
            os << realization << ',' << j + 1 << ',' << m + 1 << ',' << tx.sample_time(j, m) << ','
               << matrix(j, m) << '\n';
        }
    }
}

}  // namespace molcomm

#endif  // MOLCOMM_PARTICLE_SIM_HPP
