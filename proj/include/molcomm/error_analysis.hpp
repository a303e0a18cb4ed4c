#ifndef MOLCOMM_ERROR_ANALYSIS_HPP
#define MOLCOMM_ERROR_ANALYSIS_HPP

// Expected bit-error probability of weighted-sum detectors. Samples are
// treated as independent Poisson variables; an equal-weight sum is Poisson
// and handled exactly, any other weighting uses a Gaussian approximation
// with a -0.5 continuity correction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/random/bernoulli_distribution.hpp>

#include "molcomm/channel.hpp"
#include "molcomm/errors.hpp"
#include "molcomm/poisson.hpp"
#include "molcomm/random.hpp"

namespace molcomm {

enum class TailMethod {
    automatic,  ///< Poisson when all non-zero weights are equal, Gaussian otherwise
    poisson,
    gaussian,
};

enum class BerMethod { analytic_poisson, analytic_gaussian, monte_carlo };

inline const char* to_string(BerMethod m) {
    switch (m) {
        case BerMethod::analytic_poisson: return "analytic_poisson";
        case BerMethod::analytic_gaussian: return "analytic_gaussian";
        case BerMethod::monte_carlo: return "monte_carlo";
    }
    return "unknown";
}

struct TailResult {
    double probability = 0.0;  // Pr(weighted sum < threshold)
    bool degenerate = false;   // zero variance under the Gaussian form
    BerMethod method = BerMethod::analytic_poisson;
};

/// The common positive weight when every non-zero weight is equal, else 0.
inline double common_weight(std::span<const double> weights) {
    double c = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw DomainError("weights must be non-negative");
        if (w == 0.0) continue;
        if (c == 0.0) {
            c = w;
        } else if (w != c) {
            return 0.0;
        }
    }
    return c;
}

inline bool all_integer(std::span<const double> weights) {
    return std::all_of(weights.begin(), weights.end(), [](double w) { return w == std::floor(w); });
}

/// Moments of the weighted sum for per-sample means `lambda`.
struct SumMoments {
    double mean = 0.0;
    double variance = 0.0;
    double poisson_mean = 0.0;  // sum of lambda over non-zero weights
};

inline SumMoments sum_moments(std::span<const double> weights, std::span<const double> lambda) {
    if (weights.size() != lambda.size())
        throw DomainError("weight count " + std::to_string(weights.size()) + " does not match sample count " +
                          std::to_string(lambda.size()));
    SumMoments s;
    for (std::size_t m = 0; m < weights.size(); ++m) {
        s.mean += weights[m] * lambda[m];
        s.variance += weights[m] * weights[m] * lambda[m];
        if (weights[m] > 0.0) s.poisson_mean += lambda[m];
    }
    return s;
}

/// Pr(sum < threshold) from precomputed moments; `c` is common_weight(weights).
inline TailResult tail_from_moments(const SumMoments& s, double c, double threshold, TailMethod method) {
    if (!(threshold > 0.0)) throw DomainError("threshold must be positive");
    if (method == TailMethod::poisson && c == 0.0)
        throw DomainError("Poisson tail needs equal non-zero weights");
    const bool use_poisson = method == TailMethod::poisson || (method == TailMethod::automatic && c > 0.0);
    if (c == 0.0 && s.mean == 0.0 && method == TailMethod::automatic) {
        // all weights zero: the sum is surely 0
        return {1.0, false, BerMethod::analytic_poisson};
    }
    if (use_poisson) {
        // c Y < xi  <=>  Y < ceil(xi / c)
        const double k = std::ceil(threshold / c - 1e-12);
        return {poisson_cdf(static_cast<std::int64_t>(k), s.poisson_mean, CdfMethod::gamma), false,
                BerMethod::analytic_poisson};
    }
    if (s.variance <= 0.0) return {s.mean < threshold ? 1.0 : 0.0, true, BerMethod::analytic_gaussian};
    const double p = 0.5 * (1.0 + std::erf((threshold - 0.5 - s.mean) / std::sqrt(2.0 * s.variance)));
    return {p, false, BerMethod::analytic_gaussian};
}

/// Pr(sum_m w_m N_obs(t(j, m)) < threshold) for interval j (zero-based) of `sequence`.
inline TailResult weighted_sum_tail(const SignalModel& model, const BitSequence& sequence, int j,
                                    std::span<const double> weights, double threshold,
                                    TailMethod method = TailMethod::automatic) {
    detail::require(j >= 0 && static_cast<std::size_t>(j) < sequence.size(), "weighted_sum_tail: interval out of range");
    const ImpulseTable table = impulse_table(model, j + 1);
    const BitSequence prefix(std::vector<Bit>(sequence.begin(), sequence.begin() + j + 1));
    const auto means = expected_sample_means(model, prefix, table);
    const std::span<const double> row(means.data() + static_cast<std::size_t>(j) * table.samples,
                                      static_cast<std::size_t>(table.samples));
    return tail_from_moments(sum_moments(weights, row), common_weight(weights), threshold, method);
}

/// Error probability of bit j: Pr(sum < xi) for a 1, Pr(sum >= xi) for a 0.
inline double analytic_bit_error(const SignalModel& model, const BitSequence& sequence, int j,
                                 std::span<const double> weights, double threshold,
                                 TailMethod method = TailMethod::automatic) {
    const double tail = weighted_sum_tail(model, sequence, j, weights, threshold, method).probability;
    return sequence[static_cast<std::size_t>(j)] ? tail : 1.0 - tail;
}

/// Sequences with probabilities of occurrence (uniform for random draws).
struct SequenceEnsemble {
    std::vector<BitSequence> sequences;
    std::vector<double> probabilities;
    bool sampled = false;  // drawn at random rather than enumerated

    std::size_t size() const noexcept { return sequences.size(); }
    int length() const { return sequences.empty() ? 0 : static_cast<int>(sequences.front().size()); }

    void validate() const {
        if (sequences.empty()) throw DomainError("sequence ensemble is empty");
        if (probabilities.size() != sequences.size())
            throw DomainError("sequence ensemble: probability count mismatch");
        for (const auto& s : sequences)
            if (s.size() != sequences.front().size()) throw DomainError("sequence ensemble: mixed lengths");
    }

    /// All 2^B sequences weighted by their probability under p1 (B <= 20).
    static SequenceEnsemble exhaustive(int length, double p1) {
        detail::require(length >= 1 && length <= 20, "exhaustive ensemble needs 1 <= B <= 20");
        SequenceEnsemble e;
        const std::uint64_t count = 1ull << length;
        for (std::uint64_t code = 0; code < count; ++code) {
            std::vector<Bit> bits(static_cast<std::size_t>(length));
            double p = 1.0;
            for (int i = 0; i < length; ++i) {
                bits[static_cast<std::size_t>(i)] = static_cast<Bit>((code >> i) & 1u);
                p *= bits[static_cast<std::size_t>(i)] ? p1 : 1.0 - p1;
            }
            e.sequences.emplace_back(std::move(bits));
            e.probabilities.push_back(p);
        }
        return e;
    }

    /// `count` sequences with independent bits, each 1 with probability p1.
    static SequenceEnsemble random(std::int64_t count, int length, double p1, std::uint64_t seed) {
        detail::require(count >= 1 && length >= 1, "random ensemble needs count >= 1 and B >= 1");
        SequenceEnsemble e;
        for (std::int64_t i = 0; i < count; ++i) e.sequences.push_back(random_sequence(length, p1, seed, static_cast<std::uint64_t>(i)));
        e.probabilities.assign(static_cast<std::size_t>(count), 1.0 / static_cast<double>(count));
        e.sampled = true;
        return e;
    }

    static BitSequence random_sequence(int length, double p1, std::uint64_t seed, std::uint64_t index) {
        Engine rng = make_engine(seed, StreamTag::bits, index);
        boost::random::bernoulli_distribution<double> bit(p1);
        std::vector<Bit> bits(static_cast<std::size_t>(length));
        for (Bit& b : bits) b = bit(rng) ? 1 : 0;
        return BitSequence(std::move(bits));
    }
};

struct BerReport {
    std::vector<double> per_interval;  // Pe[j], j = 0..B-1
    double average = 0.0;
    std::int64_t ensemble_size = 0;
    BerMethod method = BerMethod::analytic_poisson;
    double ci95 = 0.0;  // normal-approximation half-width; for analytic reports, the ensemble sampling error
};

/// Weighted-sum moments for every (sequence, interval) of an ensemble, so the
/// error at many thresholds can be evaluated without recomputing the means.
class ErrorSurface {
public:
    ErrorSurface(const SignalModel& model, const SequenceEnsemble& ensemble, std::vector<double> weights,
                 TailMethod method = TailMethod::automatic)
        : weights_(std::move(weights)), method_(method) {
        ensemble.validate();
        if (weights_.size() != model.tx.sample_offsets.size())
            throw DomainError("weight count does not match samples per interval");
        common_ = common_weight(weights_);
        intervals_ = ensemble.length();
        const ImpulseTable table = impulse_table(model, intervals_);
        for (std::size_t s = 0; s < ensemble.size(); ++s) {
            const auto means = expected_sample_means(model, ensemble.sequences[s], table);
            for (int j = 0; j < intervals_; ++j) {
                const std::span<const double> row(means.data() + static_cast<std::size_t>(j) * table.samples,
                                                  static_cast<std::size_t>(table.samples));
                entries_.push_back({sum_moments(weights_, row), ensemble.probabilities[s],
                                    ensemble.sequences[s][static_cast<std::size_t>(j)] != 0, j, s});
            }
        }
        // Moments under the all-ones sequence at its last interval bound the useful thresholds.
        const auto ones = expected_sample_means(model, BitSequence(std::vector<Bit>(static_cast<std::size_t>(intervals_), 1)), table);
        const std::span<const double> last(ones.data() + static_cast<std::size_t>(intervals_ - 1) * table.samples,
                                           static_cast<std::size_t>(table.samples));
        peak_ = sum_moments(weights_, last);
        size_ = static_cast<std::int64_t>(ensemble.size());
        sampled_ = ensemble.sampled;
    }

    const std::vector<double>& weights() const noexcept { return weights_; }
    const SumMoments& peak_moments() const noexcept { return peak_; }
    int intervals() const noexcept { return intervals_; }

    /// Ensemble-averaged error per interval and overall at `threshold`.
    BerReport report(double threshold) const {
        BerReport r;
        r.per_interval.assign(static_cast<std::size_t>(intervals_), 0.0);
        r.ensemble_size = size_;
        r.method = common_ > 0.0 && method_ != TailMethod::gaussian ? BerMethod::analytic_poisson
                                                                     : BerMethod::analytic_gaussian;
        for (const auto& e : entries_) {
            const double tail = tail_from_moments(e.moments, common_, threshold, method_).probability;
            r.per_interval[static_cast<std::size_t>(e.interval)] += e.probability * (e.one ? tail : 1.0 - tail);
        }
        double sum = 0.0;
        for (double p : r.per_interval) sum += p;
        r.average = sum / intervals_;
        if (sampled_ && size_ > 1) {
            // spread of the per-sequence averages around the ensemble mean
            std::vector<double> per_sequence(static_cast<std::size_t>(size_), 0.0);
            for (const auto& e : entries_) {
                const double tail = tail_from_moments(e.moments, common_, threshold, method_).probability;
                per_sequence[e.sequence] += (e.one ? tail : 1.0 - tail) / intervals_;
            }
            double ss = 0.0;
            for (double x : per_sequence) ss += (x - r.average) * (x - r.average);
            const double n = static_cast<double>(size_);
            r.ci95 = 1.96 * std::sqrt(ss / (n - 1.0) / n);
        }
        return r;
    }

    double average(double threshold) const {
        double sum = 0.0;
        for (const auto& e : entries_) {
            const double tail = tail_from_moments(e.moments, common_, threshold, method_).probability;
            sum += e.probability * (e.one ? tail : 1.0 - tail);
        }
        return sum / intervals_;
    }

private:
    struct Entry {
        SumMoments moments;
        double probability;
        bool one;
        int interval;
        std::size_t sequence;
    };
    std::vector<double> weights_;
    TailMethod method_;
    double common_ = 0.0;
    int intervals_ = 0;
    std::int64_t size_ = 0;
    bool sampled_ = false;
    SumMoments peak_{};
    std::vector<Entry> entries_;
};

/// Ensemble average of the per-bit analytic errors, bits weighted uniformly across intervals.
inline double average_error_probability(const SignalModel& model, const SequenceEnsemble& ensemble,
                                        std::span<const double> weights, double threshold,
                                        TailMethod method = TailMethod::automatic) {
    return ErrorSurface(model, ensemble, std::vector<double>(weights.begin(), weights.end()), method).average(threshold);
}

inline double ci95_half_width(double p, std::int64_t n) {
    if (n <= 0) return 0.0;
    return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace molcomm

#endif  // MOLCOMM_ERROR_ANALYSIS_HPP
