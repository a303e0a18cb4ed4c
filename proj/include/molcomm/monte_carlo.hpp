#ifndef MOLCOMM_MONTE_CARLO_HPP
#define MOLCOMM_MONTE_CARLO_HPP

// Simulated bit-error rates for every detector kind.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "molcomm/detectors.hpp"
#include "molcomm/error_analysis.hpp"
#include "molcomm/particle_sim.hpp"

namespace molcomm {

enum class DetectorKind { ml, matched, equal, custom };

inline const char* to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::ml: return "ml";
        case DetectorKind::matched: return "matched";
        case DetectorKind::equal: return "equal";
        case DetectorKind::custom: return "custom";
    }
    return "unknown";
}

inline DetectorKind parse_detector_kind(const std::string& s) {
    if (s == "ml") return DetectorKind::ml;
    if (s == "matched") return DetectorKind::matched;
    if (s == "equal") return DetectorKind::equal;
    if (s == "custom") return DetectorKind::custom;
    throw ConfigError("unknown detector '" + s + "' (expected ml, matched, equal or custom)", "detector");
}

struct DetectorSpec {
    DetectorKind kind = DetectorKind::matched;
    int memory = 2;                   // ml only
    std::vector<double> weights;      // custom only
    std::optional<double> threshold;  // weighted sum; empty = best threshold for the observed data
};

/// Weights a weighted-sum detector of this kind applies under `model`.
inline std::vector<double> detector_weights(const DetectorSpec& d, const SignalModel& model) {
    switch (d.kind) {
        case DetectorKind::matched: return matched_filter_weights(model);
        case DetectorKind::equal: return equal_weights(model.tx.samples_per_interval());
        case DetectorKind::custom:
            if (d.weights.size() != model.tx.sample_offsets.size())
                throw ConfigError("custom weights: " + std::to_string(d.weights.size()) + " values for " +
                                      std::to_string(model.tx.sample_offsets.size()) + " samples",
                                  "detector.weights");
            return d.weights;
        case DetectorKind::ml: break;
    }
    throw DomainError("ML detector has no weights");
}

struct DetectionResult {
    BerReport report;
    std::optional<double> threshold;  // weighted sum detectors
};

/// Applies the detector to simulated matrices with known transmitted
/// sequences and tallies errors per interval.
inline DetectionResult evaluate_detector(const SignalModel& model, const std::vector<ObservationMatrix>& matrices,
                                         const std::vector<BitSequence>& sequences, const DetectorSpec& detector) {
    if (matrices.size() != sequences.size() || matrices.empty())
        throw DomainError("evaluate_detector: need one sequence per matrix");
    const int b = matrices.front().intervals();
    std::vector<std::int64_t> errors(static_cast<std::size_t>(b), 0);
    DetectionResult result;

    if (detector.kind == DetectorKind::ml) {
        const SequenceModel seq_model(model, b);
        const ViterbiSpec spec{detector.memory};
        std::vector<BitSequence> decided(matrices.size());
        parallel_for(static_cast<std::int64_t>(matrices.size()), [&](std::int64_t i) {
            decided[static_cast<std::size_t>(i)] = ml_sequence_detect(matrices[static_cast<std::size_t>(i)], spec, seq_model);
        });
        for (std::size_t i = 0; i < matrices.size(); ++i)
            for (int j = 0; j < b; ++j)
                errors[static_cast<std::size_t>(j)] += decided[i][static_cast<std::size_t>(j)] != sequences[i][static_cast<std::size_t>(j)];
    } else {
        WeightedSumSpec spec{detector_weights(detector, model), 1.0};
        std::vector<double> sums;
        std::vector<Bit> truth;
        sums.reserve(matrices.size() * static_cast<std::size_t>(b));
        truth.reserve(sums.capacity());
        for (std::size_t i = 0; i < matrices.size(); ++i) {
            for (int j = 0; j < b; ++j) {
                sums.push_back(weighted_sum(spec.weights, matrices[i].row(j)));
                truth.push_back(sequences[i][static_cast<std::size_t>(j)]);
            }
        }
        spec.threshold = detector.threshold ? *detector.threshold : optimize_threshold_empirical(sums, truth).threshold;
        spec.validate();
        for (std::size_t k = 0; k < sums.size(); ++k) {
            const Bit decided = sums[k] >= spec.threshold ? 1 : 0;
            errors[k % static_cast<std::size_t>(b)] += decided != truth[k];
        }
        result.threshold = spec.threshold;
    }

    BerReport& r = result.report;
    r.method = BerMethod::monte_carlo;
    r.ensemble_size = static_cast<std::int64_t>(matrices.size());
    r.per_interval.resize(static_cast<std::size_t>(b));
    std::int64_t total = 0;
    for (int j = 0; j < b; ++j) {
        r.per_interval[static_cast<std::size_t>(j)] =
            static_cast<double>(errors[static_cast<std::size_t>(j)]) / static_cast<double>(matrices.size());
        total += errors[static_cast<std::size_t>(j)];
    }
    const std::int64_t bits = static_cast<std::int64_t>(matrices.size()) * b;
    r.average = static_cast<double>(total) / static_cast<double>(bits);
    r.ci95 = ci95_half_width(r.average, bits);
    return result;
}

/// Sequences used for realization i of a run seeded with `seed`.
inline std::vector<BitSequence> realization_sequences(const TransmissionSpec& tx, std::uint64_t seed, std::int64_t count) {
    std::vector<BitSequence> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i)
        out.push_back(SequenceEnsemble::random_sequence(tx.sequence_length, tx.p1, seed, static_cast<std::uint64_t>(i)));
    return out;
}

/// Simulates cfg.realization_count sequences of B bits and reports the
/// detector's bit-error frequency with a 95% confidence half-width.
inline DetectionResult monte_carlo_ber(const EnvironmentSpec& env, const TransmissionSpec& tx, const SimConfig& cfg,
                                       const DetectorSpec& detector,
                                       DegradationMode model_mode = DegradationMode::strict_bound,
                                       const ProgressSink& progress = {}) {
    const auto sequences = realization_sequences(tx, cfg.master_seed, cfg.realization_count);
    const auto matrices = simulate_ensemble(
        env, tx, cfg, [&](std::uint64_t i) { return sequences[static_cast<std::size_t>(i)]; }, progress);
    return evaluate_detector(SignalModel{env, tx, model_mode}, matrices, sequences, detector);
}

}  // namespace molcomm

#endif  // MOLCOMM_MONTE_CARLO_HPP
