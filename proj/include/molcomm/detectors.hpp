#ifndef MOLCOMM_DETECTORS_HPP
#define MOLCOMM_DETECTORS_HPP

// Sequence detection (Viterbi over a shortened channel memory) and the
// weighted-sum detector family with threshold search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "molcomm/channel.hpp"
#include "molcomm/error_analysis.hpp"
#include "molcomm/errors.hpp"
#include "molcomm/particle_sim.hpp"

namespace molcomm {

struct WeightedSumSpec {
    std::vector<double> weights;
    double threshold = 1.0;

    void validate() const {
        if (weights.empty()) throw DomainError("weighted sum detector needs at least one weight");
        bool positive = false;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be finite and non-negative");
            positive = positive || w > 0.0;
        }
        if (!positive) throw DomainError("at least one weight must be positive");
        if (!(threshold > 0.0)) throw DomainError("threshold must be positive");
    }
};

/// w_m = expected count from an emission in the current interval only.
inline std::vector<double> matched_filter_weights(const SignalModel& model) {
    std::vector<double> w;
    w.reserve(model.tx.sample_offsets.size());
    const double n = static_cast<double>(model.tx.molecules_per_one);
    for (double g : model.tx.sample_offsets) w.push_back(n * p_obs(model, g));
    return w;
}

inline std::vector<double> equal_weights(int samples) {
    detail::require(samples >= 1, "equal_weights: need at least one sample");
    return std::vector<double>(static_cast<std::size_t>(samples), 1.0);
}

inline double weighted_sum(std::span<const double> weights, std::span<const std::int64_t> counts) {
    if (weights.size() != counts.size())
        throw DomainError("weighted sum: " + std::to_string(counts.size()) + " counts for " +
                          std::to_string(weights.size()) + " weights");
    double s = 0.0;
    for (std::size_t m = 0; m < weights.size(); ++m) s += weights[m] * static_cast<double>(counts[m]);
    return s;
}

inline Bit weighted_sum_decide(const WeightedSumSpec& spec, std::span<const std::int64_t> counts) {
    return weighted_sum(spec.weights, counts) >= spec.threshold ? 1 : 0;
}

inline BitSequence weighted_sum_detect(const WeightedSumSpec& spec, const ObservationMatrix& obs) {
    std::vector<Bit> bits(static_cast<std::size_t>(obs.intervals()));
    for (int j = 0; j < obs.intervals(); ++j) bits[static_cast<std::size_t>(j)] = weighted_sum_decide(spec, obs.row(j));
    return BitSequence(std::move(bits));
}

/// Per-sample means for any candidate history: noise plus the impulse
/// responses of every earlier 1.
class SequenceModel {
public:
    SequenceModel(const SignalModel& model, int intervals)
        : table_(impulse_table(model, intervals)), noise_(static_cast<std::size_t>(intervals) * table_.samples) {
        for (int j = 0; j < intervals; ++j)
            for (int m = 0; m < table_.samples; ++m)
                noise_[static_cast<std::size_t>(j) * table_.samples + m] = model.tx.noise(model.tx.sample_time(j, m));
    }

    int intervals() const noexcept { return table_.intervals; }
    int samples() const noexcept { return table_.samples; }

    /// Mean of sample m in interval j given bits[0..j] (history may be longer).
    void means(std::span<const Bit> history, int j, std::span<double> out) const {
        for (int m = 0; m < table_.samples; ++m) out[m] = noise_[static_cast<std::size_t>(j) * table_.samples + m];
        for (int i = 0; i <= j; ++i) {
            if (!history[static_cast<std::size_t>(i)]) continue;
            const auto row = table_.row(j - i);
            for (int m = 0; m < table_.samples; ++m) out[m] += row[m];
        }
    }

    /// Poisson log-likelihood of interval j's counts under bits[0..j]. Means
    /// are floored at 1e-300 so impossible paths score very low instead of -inf.
    double interval_log_likelihood(std::span<const Bit> history, int j, std::span<const std::int64_t> counts,
                                   std::vector<double>& scratch) const {
        scratch.resize(static_cast<std::size_t>(table_.samples));
        means(history, j, scratch);
        double ll = 0.0;
        for (int m = 0; m < table_.samples; ++m) {
            const double lambda = std::max(scratch[m], 1e-300);
            const double k = static_cast<double>(counts[m]);
            ll += k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
        }
        return ll;
    }

private:
    ImpulseTable table_;
    std::vector<double> noise_;
};

struct ViterbiSpec {
    int memory = 2;  // F, explicit channel memory in bit intervals

    void validate(int sequence_length) const {
        if (memory < 1 || memory > sequence_length)
            throw DomainError("Viterbi memory F = " + std::to_string(memory) + " must lie in [1, B = " +
                              std::to_string(sequence_length) + "]");
        if (memory > 20) throw DomainError("Viterbi memory above 20 is not supported");
    }
};

namespace detail {

/// True when `a` should win a likelihood tie against `b`: at the most
/// recent position where they differ, `a` has a 0.
inline bool prefer_on_tie(std::span<const Bit> a, std::span<const Bit> b) {
    for (std::size_t i = a.size(); i-- > 0;) {
        if (a[i] != b[i]) return a[i] == 0;
    }
    return false;
}

inline bool better_path(double ll_a, std::span<const Bit> a, double ll_b, std::span<const Bit> b) {
    if (ll_a != ll_b) return ll_a > ll_b;
    return prefer_on_tie(a, b);
}

}  // namespace detail

/// Maximum-likelihood sequence detection with 2^F trellis states. Each
/// surviving path keeps its whole history, so ISI from bits older than the
/// state window still enters the means exactly. F = B is exhaustive search.
inline BitSequence ml_sequence_detect(const ObservationMatrix& obs, const ViterbiSpec& spec, const SequenceModel& model) {
    const int b = obs.intervals();
    spec.validate(b);
    if (model.intervals() < b || model.samples() != obs.samples())
        throw DomainError("ml_sequence_detect: observation shape does not match the sequence model");
    const std::size_t states = std::size_t{1} << spec.memory;
    const std::size_t mask = states - 1;

    struct Path {
        double ll = -std::numeric_limits<double>::infinity();
        std::vector<Bit> history;
        bool alive = false;
    };
    std::vector<Path> current(states), next(states);
    current[0].alive = true;
    current[0].ll = 0.0;
    std::vector<double> scratch;

    for (int j = 0; j < b; ++j) {
        for (auto& p : next) p.alive = false;
        for (std::size_t s = 0; s < states; ++s) {
            const Path& path = current[s];
            if (!path.alive) continue;
            for (Bit bit : {Bit{0}, Bit{1}}) {
                std::vector<Bit> history = path.history;
                history.push_back(bit);
                const double ll = path.ll + model.interval_log_likelihood(history, j, obs.row(j), scratch);
                const std::size_t target = ((s << 1) | bit) & mask;
                Path& slot = next[target];
                if (!slot.alive || detail::better_path(ll, history, slot.ll, slot.history)) {
                    slot.ll = ll;
                    slot.history = std::move(history);
                    slot.alive = true;
                }
            }
        }
        std::swap(current, next);
    }
    const Path* best = nullptr;
    for (const auto& p : current) {
        if (!p.alive) continue;
        if (!best || detail::better_path(p.ll, p.history, best->ll, best->history)) best = &p;
    }
    return BitSequence(best->history);
}

inline BitSequence ml_sequence_detect(const ObservationMatrix& obs, const ViterbiSpec& spec, const SignalModel& model) {
    return ml_sequence_detect(obs, spec, SequenceModel(model, obs.intervals()));
}

/// Candidate thresholds: integers 1..ceil(mu + 6 sigma) of the all-ones
/// weighted sum when every weight is an integer.
inline std::vector<double> integer_threshold_grid(const SumMoments& peak) {
    const double top = std::max(1.0, std::ceil(peak.mean + 6.0 * std::sqrt(peak.variance)));
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(top));
    for (double x = 1.0; x <= top; x += 1.0) grid.push_back(x);
    return grid;
}

struct ThresholdChoice {
    double threshold = 1.0;
    double error = 0.0;
};

/// Analytic threshold search minimising the ensemble-average error. Integer
/// weights scan the integer grid; other weights scan a uniform grid over
/// (0, mu + 6 sigma] and repeatedly refine around the best point. Ties go to
/// the smaller threshold.
inline ThresholdChoice optimize_threshold(const ErrorSurface& surface) {
    const SumMoments& peak = surface.peak_moments();
    ThresholdChoice best{0.0, std::numeric_limits<double>::infinity()};
    auto consider = [&](double xi) {
        const double e = surface.average(xi);
        if (e < best.error || (e == best.error && xi < best.threshold)) best = {xi, e};
    };
    if (all_integer(surface.weights())) {
        const auto grid = integer_threshold_grid(peak);
        if (grid.empty()) throw DomainError("optimize_threshold: empty candidate set");
        for (double xi : grid) consider(xi);
        return best;
    }
    const double top = std::max(peak.mean + 6.0 * std::sqrt(peak.variance), 1e-12);
    constexpr int points = 200;
    double lo = 0.0, hi = top;
    for (int round = 0; round < 8; ++round) {
        const double step = (hi - lo) / points;
        for (int i = 1; i <= points; ++i) consider(lo + i * step);
        lo = std::max(0.0, best.threshold - step);
        hi = best.threshold + step;
        if (step < 1e-9 * top) break;
    }
    return best;
}

inline ThresholdChoice optimize_threshold(const SignalModel& model, std::span<const double> weights,
                                          const SequenceEnsemble& ensemble, TailMethod method = TailMethod::automatic) {
    return optimize_threshold(ErrorSurface(model, ensemble, std::vector<double>(weights.begin(), weights.end()), method));
}

/// Threshold minimising the observed error count over labelled weighted sums.
/// Candidates are the distinct positive observed sums plus one above the
/// largest; ties go to the smaller threshold.
inline ThresholdChoice optimize_threshold_empirical(std::span<const double> sums, std::span<const Bit> truth) {
    if (sums.size() != truth.size()) throw DomainError("optimize_threshold_empirical: size mismatch");
    if (sums.empty()) throw DomainError("optimize_threshold_empirical: empty candidate set");
    std::vector<std::pair<double, Bit>> v(sums.size());
    std::int64_t ones = 0;
    for (std::size_t i = 0; i < sums.size(); ++i) {
        v[i] = {sums[i], truth[i]};
        ones += truth[i];
    }
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    // Threshold just above everything: decide 0 always.
    ThresholdChoice best{v.back().first + 1.0, static_cast<double>(ones) / n};
    // Sweep thresholds downward; at xi = v[i].first, samples i.. decide 1.
    std::int64_t ones_below = ones;  // ones with sum < xi
    std::int64_t zeros_above = 0;    // zeros with sum >= xi
    for (std::size_t i = v.size(); i-- > 0;) {
        if (v[i].second) --ones_below; else ++zeros_above;
        if (i > 0 && v[i - 1].first == v[i].first) continue;
        if (!(v[i].first > 0.0)) break;
        const double e = static_cast<double>(ones_below + zeros_above) / n;
        if (e <= best.error) best = {v[i].first, e};
    }
    return best;
}

}  // namespace molcomm

#endif  // MOLCOMM_DETECTORS_HPP
