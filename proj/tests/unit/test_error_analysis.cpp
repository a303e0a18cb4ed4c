#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "molcomm/detectors.hpp"
#include "molcomm/monte_carlo.hpp"

using namespace molcomm;

namespace {

SignalModel isi_free(int samples) {
    SignalModel m{EnvironmentSpec::base_case(), TransmissionSpec{}, DegradationMode::strict_bound};
    m.tx.bit_interval = 200e-6;
    m.tx.sample_offsets = uniform_sample_offsets(200e-6, samples);
    m.tx.noise.constant = 50.0;
    return m;
}

double best_error(const SignalModel& m, const std::vector<double>& w) {
    return optimize_threshold(m, w, SequenceEnsemble::exhaustive(1, 0.5)).error;
}

}  // namespace

TEST(Tail, UnitWeightsArePoisson) {
    const std::vector<double> w{1, 1, 1};
    const std::vector<double> lambda{2.5, 4.0, 1.25};
    for (double xi : {1.0, 3.0, 7.0, 12.0}) {
        const auto t = tail_from_moments(sum_moments(w, lambda), common_weight(w), xi, TailMethod::automatic);
        EXPECT_DOUBLE_EQ(t.probability, poisson_cdf(static_cast<std::int64_t>(xi), 7.75, CdfMethod::gamma));
        EXPECT_NEAR(t.probability, poisson_cdf(static_cast<std::int64_t>(xi), 7.75, CdfMethod::direct), 1e-12);
        EXPECT_EQ(t.method, BerMethod::analytic_poisson);
    }
}

TEST(Tail, WeightedGaussianExample) {
    const std::vector<double> w{1, 2};
    const std::vector<double> lambda{4, 9};
    const auto t = tail_from_moments(sum_moments(w, lambda), common_weight(w), 22, TailMethod::automatic);
    EXPECT_NEAR(t.probability, 0.4685, 5e-5);
    EXPECT_NEAR(t.probability, 0.5 * (1 + std::erf(-0.5 / std::sqrt(80.0))), 1e-15);
    EXPECT_EQ(t.method, BerMethod::analytic_gaussian);
    EXPECT_FALSE(t.degenerate);
}

TEST(Tail, EqualNonUnitWeightsStayPoisson) {
    const std::vector<double> w{2, 2, 0};
    const std::vector<double> lambda{3, 4, 100};
    // 2 Y < 9  <=>  Y < 5
    const auto t = tail_from_moments(sum_moments(w, lambda), common_weight(w), 9, TailMethod::automatic);
    EXPECT_NEAR(t.probability, poisson_cdf(5, 7.0), 1e-12);
    const auto u = tail_from_moments(sum_moments(w, lambda), common_weight(w), 10, TailMethod::automatic);
    EXPECT_NEAR(u.probability, poisson_cdf(5, 7.0), 1e-12);
}

TEST(Tail, ZeroMeansAndDegenerateGaussian) {
    const std::vector<double> w{1, 3};
    const std::vector<double> zero{0, 0};
    EXPECT_EQ(tail_from_moments(sum_moments(w, zero), common_weight(w), 1, TailMethod::automatic).probability, 1.0);
    const auto t = tail_from_moments(sum_moments(w, zero), common_weight(w), 1, TailMethod::gaussian);
    EXPECT_TRUE(t.degenerate);
    EXPECT_EQ(t.probability, 1.0);
    const std::vector<double> unit{1, 1};
    EXPECT_EQ(tail_from_moments(sum_moments(unit, zero), 1.0, 4, TailMethod::automatic).probability, 1.0);
    EXPECT_THROW(tail_from_moments(sum_moments(w, zero), 0.0, 1, TailMethod::poisson), DomainError);
    EXPECT_THROW(tail_from_moments(sum_moments(w, zero), 0.0, 0, TailMethod::automatic), DomainError);
}

TEST(Tail, PoissonAndGaussianCloseForLargeMeans) {
    const std::vector<double> w(5, 1.0);
    for (double total : {30.0, 60.0, 150.0, 400.0}) {
        const std::vector<double> lambda(5, total / 5);
        const auto s = sum_moments(w, lambda);
        for (double xi = 1; xi < 3 * total; xi += 1) {
            const double p = tail_from_moments(s, 1.0, xi, TailMethod::poisson).probability;
            const double g = tail_from_moments(s, 1.0, xi, TailMethod::gaussian).probability;
            EXPECT_NEAR(p, g, 0.02) << total << " " << xi;
        }
    }
}

TEST(BitError, AllZeroWeights) {
    auto m = isi_free(2);
    m.tx.sequence_length = 2;
    const std::vector<double> w{0, 0};
    EXPECT_EQ(analytic_bit_error(m, {1, 0}, 0, w, 1), 1.0);
    EXPECT_EQ(analytic_bit_error(m, {1, 0}, 1, w, 1), 0.0);
}

TEST(BitError, MonotoneInThreshold) {
    SignalModel m = isi_free(6);
    m.tx.bit_interval = 100e-6;
    m.tx.sample_offsets = uniform_sample_offsets(100e-6, 6);
    m.tx.noise.constant = 0.5;
    const BitSequence seq{1, 0, 1, 1, 0};
    for (const auto& w : {equal_weights(6), matched_filter_weights(m)})
        for (int j = 0; j < 5; ++j) {
            double prev = -1.0;
            for (double xi = 0.5; xi < 80; xi += 0.5) {
                const double e = analytic_bit_error(m, seq, j, w, xi);
                EXPECT_GE(e, 0.0);
                EXPECT_LE(e, 1.0);
                if (prev >= 0.0) {
                    if (seq[static_cast<std::size_t>(j)]) EXPECT_GE(e, prev - 1e-15);
                    else EXPECT_LE(e, prev + 1e-15);
                }
                prev = e;
            }
        }
}

TEST(BitError, IsiFreeBenchmark) {
    const auto m = isi_free(100);
    const double equal = best_error(m, equal_weights(100));
    const double matched = best_error(m, matched_filter_weights(m));
    EXPECT_NEAR(equal, 0.03, 0.005);
    EXPECT_NEAR(matched, 0.017, 0.0015);
    for (int samples : {1, 2, 5, 10, 20, 50, 100}) {
        const auto mm = isi_free(samples);
        EXPECT_LE(best_error(mm, matched_filter_weights(mm)), best_error(mm, equal_weights(samples)) + 1e-12) << samples;
    }
}

TEST(Ensemble, ExhaustiveProbabilities) {
    const auto e = SequenceEnsemble::exhaustive(3, 0.25);
    ASSERT_EQ(e.size(), 8u);
    double total = 0.0;
    for (double p : e.probabilities) total += p;
    EXPECT_NEAR(total, 1.0, 1e-15);
    EXPECT_NEAR(e.probabilities[7], 0.25 * 0.25 * 0.25, 1e-15);
    EXPECT_THROW(SequenceEnsemble::exhaustive(21, 0.5), DomainError);
}

TEST(Ensemble, RandomIsSeeded) {
    const auto a = SequenceEnsemble::random(50, 30, 0.5, 9);
    const auto b = SequenceEnsemble::random(50, 30, 0.5, 9);
    EXPECT_EQ(a.sequences, b.sequences);
    EXPECT_FALSE(a.sequences == SequenceEnsemble::random(50, 30, 0.5, 10).sequences);
    int ones = 0;
    for (const auto& s : SequenceEnsemble::random(200, 100, 0.3, 1).sequences)
        for (Bit bit : s) ones += bit;
    EXPECT_NEAR(ones / 20000.0, 0.3, 3 * std::sqrt(0.21 / 20000));
}

TEST(AverageError, ZeroSequenceWithoutNoise) {
    auto m = isi_free(4);
    m.tx.noise.constant = 0.0;
    m.tx.sequence_length = 3;
    SequenceEnsemble e{{BitSequence::zeros(3)}, {1.0}};
    EXPECT_EQ(average_error_probability(m, e, equal_weights(4), 1.0), 0.0);
}

TEST(AverageError, ConvexCombination) {
    auto m = isi_free(4);
    m.tx.bit_interval = 100e-6;
    m.tx.sample_offsets = uniform_sample_offsets(100e-6, 4);
    m.tx.noise.constant = 0.5;
    const auto e = SequenceEnsemble::random(30, 6, 0.5, 4);
    const auto w = equal_weights(4);
    double lo = 1.0, hi = 0.0;
    for (const auto& s : e.sequences) {
        const double v = average_error_probability(m, SequenceEnsemble{{s}, {1.0}}, w, 6.0);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double avg = average_error_probability(m, e, w, 6.0);
    EXPECT_GE(avg, lo);
    EXPECT_LE(avg, hi);
    const ErrorSurface surface(m, e, w);
    const auto r = surface.report(6.0);
    EXPECT_NEAR(r.average, avg, 1e-15);
    ASSERT_EQ(r.per_interval.size(), 6u);
    for (double p : r.per_interval) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(MonteCarlo, StubDetectors) {
    // Matrices built so a unit-threshold count detector is always right,
    // then so it always says 1.
    const int n = 4000;
    auto m = isi_free(2);
    m.tx.sequence_length = 5;
    const auto seqs = realization_sequences(m.tx, 3, n);
    std::vector<ObservationMatrix> perfect, ones;
    for (const auto& s : seqs) {
        ObservationMatrix a(5, 2), b(5, 2);
        for (int j = 0; j < 5; ++j) {
            a(j, 0) = s[static_cast<std::size_t>(j)] ? 10 : 0;
            b(j, 0) = 10;
        }
        perfect.push_back(a);
        ones.push_back(b);
    }
    DetectorSpec d{DetectorKind::equal, 2, {}, std::nullopt};
    d.threshold = 1.0;
    const auto r0 = evaluate_detector(m, perfect, seqs, d).report;
    EXPECT_EQ(r0.average, 0.0);
    EXPECT_EQ(r0.method, BerMethod::monte_carlo);
    const auto r1 = evaluate_detector(m, ones, seqs, d).report;
    EXPECT_NEAR(r1.average, 0.5, r1.ci95);
    EXPECT_EQ(r1.ensemble_size, n);
    EXPECT_THROW(evaluate_detector(m, ones, {}, d), DomainError);
}

TEST(MonteCarlo, EqualWeightConvergesToAnalytic) {
    auto m = isi_free(10);
    SimConfig cfg;
    cfg.master_seed = 81;
    cfg.realization_count = 10000;
    const auto best = optimize_threshold(m, equal_weights(10), SequenceEnsemble::exhaustive(1, 0.5));
    DetectorSpec d{DetectorKind::equal, 2, {}, std::nullopt};
    d.threshold = best.threshold;
    const auto mc = monte_carlo_ber(m.env, m.tx, cfg, d).report;
    EXPECT_NEAR(mc.average, best.error, 3 * mc.ci95);
}

TEST(MonteCarlo, AnalyticAverageTracksSimulationWithIsi) {
    SignalModel m{EnvironmentSpec::base_case(), TransmissionSpec{}, DegradationMode::strict_bound};
    m.tx.bit_interval = 200e-6;
    m.tx.sequence_length = 10;
    m.tx.sample_offsets = uniform_sample_offsets(200e-6, 4);
    const auto w = matched_filter_weights(m);
    const auto best = optimize_threshold(m, w, SequenceEnsemble::exhaustive(10, 0.5));
    SimConfig cfg;
    cfg.master_seed = 82;
    cfg.realization_count = 2000;
    DetectorSpec d{DetectorKind::matched, 2, {}, std::nullopt};
    d.threshold = best.threshold;
    const auto mc = monte_carlo_ber(m.env, m.tx, cfg, d).report;
    ASSERT_GE(best.error, 0.01);
    EXPECT_NEAR(mc.average, best.error, 0.2 * best.error);
}

TEST(MonteCarlo, ConfidenceHalfWidth) {
    EXPECT_NEAR(ci95_half_width(0.5, 10000), 1.96 * 0.005, 1e-15);
    EXPECT_EQ(ci95_half_width(0.0, 100), 0.0);
    EXPECT_EQ(ci95_half_width(0.3, 0), 0.0);
}

TEST(ErrorSurfaceTest, SampledEnsembleReportsSamplingError) {
    SignalModel m{EnvironmentSpec::base_case(), TransmissionSpec{}, DegradationMode::strict_bound};
    m.tx.bit_interval = 100e-6;
    m.tx.sequence_length = 6;
    m.tx.sample_offsets = uniform_sample_offsets(100e-6, 2);
    const std::vector<double> w{1, 1};
    const ErrorSurface exhaustive(m, SequenceEnsemble::exhaustive(6, 0.5), w);
    EXPECT_EQ(exhaustive.report(5).ci95, 0.0);

    const auto ensemble = SequenceEnsemble::random(400, 6, 0.5, 77);
    const ErrorSurface sampled(m, ensemble, w);
    const auto r = sampled.report(5);
    // direct: per-sequence averages, their standard error
    std::vector<double> per;
    for (const auto& seq : ensemble.sequences) {
        const ErrorSurface one(m, SequenceEnsemble{{seq}, {1.0}}, w);
        per.push_back(one.average(5));
    }
    double mean = 0.0;
    for (double x : per) mean += x / per.size();
    double ss = 0.0;
    for (double x : per) ss += (x - mean) * (x - mean);
    EXPECT_NEAR(r.average, mean, 1e-12);
    EXPECT_NEAR(r.ci95, 1.96 * std::sqrt(ss / (per.size() - 1) / per.size()), 1e-12);
    EXPECT_GT(r.ci95, 0.0);
    // the exhaustive value lies within a few sampling errors
    EXPECT_NEAR(r.average, exhaustive.average(5), 2.0 * r.ci95);
}
