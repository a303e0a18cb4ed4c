#ifndef MOLCOMM_CHANNEL_HPP
#define MOLCOMM_CHANNEL_HPP

// Expected receiver signal under the uniform concentration assumption: the
// mean count inside the receiver is V_obs times the point concentration at
// its centre. The approximation improves with transmitter distance and is
// least accurate for early samples and for flow towards the receiver.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <vector>

#include "molcomm/environment.hpp"
#include "molcomm/errors.hpp"
#include "molcomm/poisson.hpp"

namespace molcomm {

using Bit = std::uint8_t;

/// Transmitted (or detected) binary sequence W[1..B]; stored zero-based.
class BitSequence {
public:
    BitSequence() = default;
    explicit BitSequence(std::vector<Bit> bits) : bits_(std::move(bits)) {
        for (Bit& b : bits_) {
            if (b > 1) throw DomainError("BitSequence: bits must be 0 or 1");
        }
    }
    BitSequence(std::initializer_list<int> bits) {
        bits_.reserve(bits.size());
        for (int b : bits) {
            if (b != 0 && b != 1) throw DomainError("BitSequence: bits must be 0 or 1");
            bits_.push_back(static_cast<Bit>(b));
        }
    }
    static BitSequence zeros(std::size_t n) { return BitSequence(std::vector<Bit>(n, 0)); }

    std::size_t size() const noexcept { return bits_.size(); }
    Bit operator[](std::size_t j) const { return bits_[j]; }
    Bit& operator[](std::size_t j) { return bits_[j]; }
    std::span<const Bit> bits() const noexcept { return bits_; }
    auto begin() const noexcept { return bits_.begin(); }
    auto end() const noexcept { return bits_.end(); }
    friend bool operator==(const BitSequence&, const BitSequence&) = default;

private:
    std::vector<Bit> bits_;
};

struct SignalModel {
    EnvironmentSpec env;
    TransmissionSpec tx;
    DegradationMode degradation_mode = DegradationMode::strict_bound;

    /// k C_E_Tot under the selected mode; zero with no enzymes or mode none.
    double decay_rate() const { return env.decay_rate(degradation_mode); }
};

/// Expected point concentration (molecule/m^3) at `distance` from the centre
/// of the impulse emitted at t = 0, treating the enzyme bound as an equality.
inline double point_concentration(const SignalModel& model, double distance, double t) {
    detail::require(t > 0.0, "point_concentration: time must be positive");
    detail::require(distance >= 0.0, "point_concentration: distance must be non-negative");
    const double d = model.env.diffusion_a();
    const double spread = 4.0 * std::numbers::pi * d * t;
    const double exponent = -model.decay_rate() * t - distance * distance / (4.0 * d * t);
    return static_cast<double>(model.tx.molecules_per_one) / (spread * std::sqrt(spread)) *
           std::exp(exponent);
}

/// Probability that a single molecule released at t = 0 is inside the receiver at t.
inline double p_obs(const SignalModel& model, double t) {
    detail::require(t > 0.0, "p_obs: time must be positive");
    const double d = model.env.diffusion_a();
    const double spread = 4.0 * std::numbers::pi * d * t;
    const double r_eff = effective_distance(model.env, t);
    return model.env.receiver_volume() / (spread * std::sqrt(spread)) *
           std::exp(-model.decay_rate() * t - r_eff * r_eff / (4.0 * d * t));
}

/// Expected count from the transmitter at absolute time t, summing the
/// contribution of every emission made before t.
inline double expected_tx_signal(const SignalModel& model, const BitSequence& sequence, double t) {
    detail::require(t > 0.0, "expected_tx_signal: time must be positive");
    const double n = static_cast<double>(model.tx.molecules_per_one);
    double total = 0.0;
    for (std::size_t j = 0; j < sequence.size(); ++j) {
        const double emitted_at = static_cast<double>(j) * model.tx.bit_interval;
        if (emitted_at >= t) break;
        if (sequence[j]) total += n * p_obs(model, t - emitted_at);
    }
    return total;
}

inline double expected_total_signal(const SignalModel& model, const BitSequence& sequence,
                                    double t) {
    return expected_tx_signal(model, sequence, t) + model.tx.noise(t);
}

/// Table of N_AEM * P_obs(k T_int + g(m)) for k = 0..intervals-1: the
/// expected count at sample m of an interval due to an emission k intervals
/// earlier. Row-major, `intervals` x M.
struct ImpulseTable {
    int intervals = 0;
    int samples = 0;
    std::vector<double> values;

    double operator()(int lag, int m) const {
        return values[static_cast<std::size_t>(lag) * samples + m];
    }
    std::span<const double> row(int lag) const {
        return {values.data() + static_cast<std::size_t>(lag) * samples,
                static_cast<std::size_t>(samples)};
    }
};

inline ImpulseTable impulse_table(const SignalModel& model, int intervals) {
    ImpulseTable table;
    table.intervals = intervals;
    table.samples = model.tx.samples_per_interval();
    table.values.resize(static_cast<std::size_t>(intervals) * table.samples);
    const double n = static_cast<double>(model.tx.molecules_per_one);
    for (int k = 0; k < intervals; ++k) {
        for (int m = 0; m < table.samples; ++m) {
            table.values[static_cast<std::size_t>(k) * table.samples + m] =
                n * p_obs(model, k * model.tx.bit_interval + model.tx.sample_offsets[m]);
        }
    }
    return table;
}

/// Per-sample means lambda(t(j, m)) for every interval of `sequence`, row-major B x M.
inline std::vector<double> expected_sample_means(const SignalModel& model,
                                                 const BitSequence& sequence,
                                                 const ImpulseTable& table) {
    const int b = static_cast<int>(sequence.size());
    const int mcount = table.samples;
    if (table.intervals < b) throw DomainError("expected_sample_means: impulse table too short");
    std::vector<double> means(static_cast<std::size_t>(b) * mcount, 0.0);
    for (int j = 0; j < b; ++j) {
        double* row = means.data() + static_cast<std::size_t>(j) * mcount;
        for (int m = 0; m < mcount; ++m) row[m] = model.tx.noise(model.tx.sample_time(j, m));
        for (int i = 0; i <= j; ++i) {
            if (!sequence[static_cast<std::size_t>(i)]) continue;
            const auto contrib = table.row(j - i);
            for (int m = 0; m < mcount; ++m) row[m] += contrib[m];
        }
    }
    return means;
}

}  // namespace molcomm

#endif  // MOLCOMM_CHANNEL_HPP
