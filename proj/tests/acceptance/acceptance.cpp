// Acceptance run: one PASS/FAIL line per criterion, INFO lines with the
// measured values. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "molcomm/molcomm.hpp"

using namespace molcomm;

namespace {

int failures = 0;

__attribute__((format(printf, 1, 2))) void info(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    std::printf("  INFO ");
    std::vprintf(fmt, args);
    std::printf("\n");
    std::fflush(stdout);
    va_end(args);
}

void verdict(int id, bool ok, const std::string& what, double seconds) {
    std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++failures;
}

void run_criterion(int id, const std::string& what, const std::function<bool()>& body) {
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
        ok = body();
    } catch (const std::exception& e) {
        info("criterion %d threw: %s", id, e.what());
    }
    verdict(id, ok, what, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

bool round3_equals(double value, double expected) {
    const double scale = std::pow(10.0, std::floor(std::log10(std::abs(expected))) - 2.0);
    return std::llround(value / scale) == std::llround(expected / scale);
}

RunConfig base_run(double bit_interval, int sequence_length, double noise, std::int64_t realizations,
                   std::uint64_t seed) {
    Json user = Json::parse(R"({"receiver": {"distance": 300e-9, "radius": 45e-9},
                                "transmission": {"molecules_per_one": 5000}})");
    user["transmission"]["bit_interval"] = bit_interval;
    user["transmission"]["sequence_length"] = sequence_length;
    user["transmission"]["noise_mean"] = noise;
    user["simulation"] = {{"seed", seed}, {"realizations", realizations}};
    return resolve_config(user);
}

std::vector<DetectorSpec> detectors(int memory) {
    DetectorSpec ml{DetectorKind::ml, memory, {}, std::nullopt};
    DetectorSpec matched{DetectorKind::matched, memory, {}, std::nullopt};
    DetectorSpec equal{DetectorKind::equal, memory, {}, std::nullopt};
    return {ml, matched, equal};
}

using BerTable = std::map<std::pair<int, DetectorKind>, BerPoint>;

BerTable ber_case(const RunConfig& cfg, const std::string& label, std::vector<int> samples, int memory,
                  bool analytic = false) {
    BerSweepOptions opt;
    opt.samples = std::move(samples);
    opt.detectors = detectors(memory);
    opt.min_sample_spacing = 0.0;
    opt.analytic = analytic;
    BerTable out;
    for (auto& p : run_ber_case(cfg, label, opt)) {
        info("%-12s M=%3d %-7s BER=%.5f +- %.5f", label.c_str(), p.samples, to_string(p.detector.kind), p.mc.average,
             p.mc.ci95);
        out.emplace(std::make_pair(p.samples, p.detector.kind), p);
    }
    return out;
}

// ---------------------------------------------------------------- 1

bool impulse_check() {
    const auto cfg = base_run(200e-6, 1, 0.0, 20000, 11);
    const auto model = cfg.model();
    const auto [t_peak, peak] = impulse_peak(model, 200e-6);
    info("analytic peak %.6f molecules at %.4f us", peak, t_peak * 1e6);
    const bool analytic_ok = round3_equals(peak, 5.20) && std::abs(t_peak - 34.36e-6) < 0.005e-6;

    // nearest point of the 0.5 us step grid
    const double t_sim = 34.5e-6;
    TransmissionSpec tx = cfg.tx;
    tx.bit_interval = t_sim;
    tx.sample_offsets = {t_sim};
    const auto matrices = simulate_ensemble(cfg.env, tx, cfg.sim, [](std::uint64_t) { return BitSequence{1}; });
    double sum = 0.0;
    for (const auto& m : matrices) sum += static_cast<double>(m(0, 0));
    const double sim = sum / static_cast<double>(matrices.size());
    const double expected = model.tx.molecules_per_one * p_obs(model, t_sim);
    const double rel = std::abs(sim - expected) / expected;
    info("simulated mean at %.1f us: %.4f (analytic %.4f, relative difference %.4f, %zu realizations)", t_sim * 1e6,
         sim, expected, rel, matrices.size());
    return analytic_ok && rel < 0.05;
}

// ---------------------------------------------------------------- 2

bool p_stay_check() {
    auto plain = EnvironmentSpec::base_case();
    auto enzymes = plain;
    enzymes.reactions.enzyme_total_concentration = micromolar_to_number_density(84.0);
    double worst = 0.0;
    for (const auto* env : {&plain, &enzymes})
        for (double us : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 500.0, 1000.0}) {
            const double t = us * 1e-6;
            worst = std::max(worst, std::abs(p_stay(*env, t) - p_stay_quadrature(*env, t)));
        }
    info("largest |closed form - quadrature| = %.3g", worst);
    return worst <= 1e-9;
}

// ---------------------------------------------------------------- 3

bool mi_check() {
    const auto cfg = base_run(200e-6, 1, 0.0, 1, 13);
    const auto model = cfg.model();
    bool ok = true;
    double worst_tail = 0.0;
    std::vector<double> lags;
    for (double us = 4.0; us <= 200.0; us += 0.5) lags.push_back(us * 1e-6);
    for (double t1 : {10e-6, 20e-6, 50e-6}) {
        for (double lag : lags)
            worst_tail = std::max(worst_tail, mutual_information(SamplePairSpec{t1, t1 + lag, 5000}, model));
    }
    info("largest analytic MI for lags >= 4 us: %.5f bits", worst_tail);
    ok = ok && worst_tail < 0.01;

    const auto points = run_mi_sweep(cfg, {10e-6, 20e-6, 50e-6}, {}, {1e-6, 2e-6}, 100000);
    for (const auto& p : points) {
        if (!p.mi_empirical) continue;
        const double rel = std::abs(*p.mi_empirical - p.mi_analytic) / p.mi_analytic;
        info("t1=%2.0f us lag=%.0f us: analytic %.5f, empirical %.5f bits (relative difference %.3f)", p.t1 * 1e6,
             p.lag * 1e6, p.mi_analytic, *p.mi_empirical, rel);
        ok = ok && rel <= 0.10;
    }
    return ok;
}

// ---------------------------------------------------------------- 4

bool isi_free_check() {
    const std::vector<int> ms{1, 2, 5, 10, 20, 50, 100};
    const auto cfg = base_run(200e-6, 1, 50.0, 20000, 14);
    const auto table = ber_case(cfg, "isi-free", ms, 1);
    bool ok = true;
    for (int m : ms) {
        const auto& ml = table.at({m, DetectorKind::ml}).mc;
        const auto& mf = table.at({m, DetectorKind::matched}).mc;
        const double diff = std::abs(ml.average - mf.average);
        const double bound = std::hypot(ml.ci95, mf.ci95);
        if (diff > bound) {
            info("M=%d: |ML - matched| = %.5f exceeds combined 95%% interval %.5f", m, diff, bound);
            ok = false;
        }
    }
    const double equal = table.at({100, DetectorKind::equal}).mc.average;
    const double matched = table.at({100, DetectorKind::matched}).mc.average;
    info("M=100: equal %.5f (target 0.03), matched %.5f (target 0.017)", equal, matched);
    ok = ok && std::abs(equal - 0.03) <= 0.3 * 0.03 && std::abs(matched - 0.017) <= 0.3 * 0.017;
    return ok;
}

// ---------------------------------------------------------------- 5

double sequence_log_likelihood(const SignalModel& m, const BitSequence& seq, const ObservationMatrix& obs) {
    double ll = 0.0;
    for (int j = 0; j < obs.intervals(); ++j)
        for (int k = 0; k < obs.samples(); ++k) {
            const double lambda = std::max(expected_total_signal(m, seq, m.tx.sample_time(j, k)), 1e-300);
            const double s = static_cast<double>(obs(j, k));
            ll += s * std::log(lambda) - lambda - std::lgamma(s + 1.0);
        }
    return ll;
}

BitSequence exhaustive_ml(const SignalModel& m, const ObservationMatrix& obs) {
    const int b = obs.intervals();
    double best = -std::numeric_limits<double>::infinity();
    BitSequence arg;
    for (std::uint32_t code = 0; code < (1u << b); ++code) {
        std::vector<Bit> bits(static_cast<std::size_t>(b));
        for (int i = 0; i < b; ++i) bits[static_cast<std::size_t>(i)] = (code >> i) & 1u;
        const BitSequence seq(bits);
        const double ll = sequence_log_likelihood(m, seq, obs);
        if (ll > best) best = ll, arg = seq;
    }
    return arg;
}

bool viterbi_check() {
    std::mt19937_64 rng(15);
    std::uniform_int_distribution<int> pick_b(2, 10), pick_m(1, 4);
    std::bernoulli_distribution coin(0.5);
    int full = 0, reduced = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int b = pick_b(rng);
        SignalModel m{EnvironmentSpec::base_case(), TransmissionSpec{}, DegradationMode::strict_bound};
        m.tx.bit_interval = trial % 2 ? 50e-6 : 100e-6;
        m.tx.sequence_length = b;
        m.tx.sample_offsets = uniform_sample_offsets(m.tx.bit_interval, pick_m(rng));
        m.tx.noise.constant = trial % 3 == 0 ? 1.0 : 0.0;
        std::vector<Bit> bits(static_cast<std::size_t>(b));
        for (auto& x : bits) x = coin(rng);
        const BitSequence truth(bits);
        ObservationMatrix obs(b, m.tx.samples_per_interval());
        for (int j = 0; j < b; ++j)
            for (int k = 0; k < obs.samples(); ++k) {
                std::poisson_distribution<std::int64_t> pois(expected_total_signal(m, truth, m.tx.sample_time(j, k)));
                obs(j, k) = pois(rng);
            }
        const auto oracle = exhaustive_ml(m, obs);
        const SequenceModel sm(m, b);
        if (ml_sequence_detect(obs, ViterbiSpec{b}, sm) == oracle) ++full;
        else info("trial %d (B=%d): F=B differs from exhaustive search", trial, b);
        if (b == 1 || ml_sequence_detect(obs, ViterbiSpec{b - 1}, sm) == oracle) ++reduced;
        else info("trial %d (B=%d): F=B-1 differs from exhaustive search", trial, b);
    }
    info("F=B agrees on %d/100, F=B-1 on %d/100", full, reduced);
    return full == 100 && reduced >= 99;
}

// ---------------------------------------------------------------- 6

bool isi_ordering_check() {
    const auto cfg = base_run(200e-6, 100, 0.0, 200, 16);
    const auto table = ber_case(cfg, "isi", {20}, 2);
    const double ml = table.at({20, DetectorKind::ml}).mc.average;
    const double matched = table.at({20, DetectorKind::matched}).mc.average;
    info("M=20: ML(F=2) %.3g, matched %.3g, ratio %.3g", ml, matched, ml > 0 ? matched / ml : INFINITY);
    return matched > 0.0 && ml * 10.0 <= matched;
}

// ---------------------------------------------------------------- 7

bool enzyme_check() {
    const std::vector<int> ms{1, 2, 4, 5, 10, 20};
    auto plain = base_run(100e-6, 100, 0.0, 200, 17);
    const auto no_enz = ber_case(plain, "no-enzymes", ms, 2);
    RunConfig enz = plain;
    enz.env.reactions.enzyme_total_concentration = micromolar_to_number_density(84.0);
    const auto with_enz = ber_case(enz, "enzymes", ms, 2);

    const double floor = std::min(no_enz.at({20, DetectorKind::matched}).mc.average,
                                  no_enz.at({20, DetectorKind::equal}).mc.average);
    info("no-enzyme weighted-sum floor (best at M=20): %.4f (target 0.06 +- 50%%)", floor);
    bool ok = std::abs(floor - 0.06) <= 0.5 * 0.06;
    for (int m : {10, 20})
        for (auto k : {DetectorKind::matched, DetectorKind::equal}) {
            const double ber = with_enz.at({m, k}).mc.average;
            if (!(ber < 0.005)) {
                info("enzymes, M=%d, %s: %.4f is not below 0.005", m, to_string(k), ber);
                ok = false;
            }
        }
    return ok;
}

// ---------------------------------------------------------------- 8

bool flow_check() {
    const std::vector<int> ms{5, 10, 20};
    const auto baseline_cfg = base_run(100e-6, 100, 1.0, 200, 18);
    auto downstream_cfg = baseline_cfg;
    downstream_cfg.env.flow = {0.003, 0.0, 0.0};
    auto perpendicular_cfg = baseline_cfg;
    perpendicular_cfg.env.flow = {0.0, 0.003, 0.0};
    const auto baseline = ber_case(baseline_cfg, "no-flow", ms, 2);
    const auto downstream = ber_case(downstream_cfg, "vx+0.003", ms, 2);
    const auto perpendicular = ber_case(perpendicular_cfg, "vy+0.003", ms, 2);
    bool ok = true;
    for (int m : ms) {
        for (auto k : {DetectorKind::matched, DetectorKind::equal})
            if (!(downstream.at({m, k}).mc.average < baseline.at({m, k}).mc.average)) {
                info("v_x=+0.003, M=%d, %s: no improvement over baseline", m, to_string(k));
                ok = false;
            }
        for (auto k : {DetectorKind::ml, DetectorKind::matched, DetectorKind::equal})
            if (!(perpendicular.at({m, k}).mc.average < baseline.at({m, k}).mc.average)) {
                info("v_y=+0.003, M=%d, %s: no improvement over baseline", m, to_string(k));
                ok = false;
            }
    }
    const double pe = peclet_number(baseline_cfg.env, 0.003);
    info("Peclet number at 0.003 m/s: %.6f", pe);
    return ok && round3_equals(pe, 2.06);
}

// ---------------------------------------------------------------- 9

bool consistency_check() {
    bool ok = true;

    // Poisson CDF methods
    double direct_gamma = 0.0, gaussian_dev = 0.0, gaussian_dev_at = 0.0;
    for (double mean : {0.5, 2.0, 7.75, 30.0, 45.0, 100.0, 300.0}) {
        const auto hi = static_cast<std::int64_t>(mean + 10.0 * std::sqrt(mean) + 10.0);
        for (std::int64_t k = 0; k <= hi; ++k) {
            direct_gamma = std::max(direct_gamma, std::abs(poisson_cdf(k, mean, CdfMethod::direct) -
                                                           poisson_cdf(k, mean, CdfMethod::gamma)));
            if (mean >= 30.0) {
                const double d = std::abs(poisson_cdf(k, mean, CdfMethod::gaussian) - poisson_cdf(k, mean));
                if (d > gaussian_dev) gaussian_dev = d, gaussian_dev_at = mean;
            }
        }
    }
    info("Poisson CDF: direct vs incomplete gamma max difference %.3g (bound 1e-10)", direct_gamma);
    info("Poisson CDF: Gaussian approximation max deviation %.4f at mean %.0f (bound 0.01 for means >= 30)",
         gaussian_dev, gaussian_dev_at);
    ok = ok && direct_gamma <= 1e-10;
    if (gaussian_dev > 0.01) {
        info("sub-check failed: Gaussian Poisson CDF deviation exceeds 0.01 for mean >= 30");
        ok = false;
    }

    // weighted-sum Gaussian CDF against sampling: w = (1, 2), lambda = (4, 9), threshold 22
    {
        const std::vector<double> w{1, 2}, lambda{4, 9};
        const double analytic =
            tail_from_moments(sum_moments(w, lambda), common_weight(w), 22.0, TailMethod::automatic).probability;
        std::mt19937_64 rng(19);
        std::poisson_distribution<int> p1(4.0), p2(9.0);
        std::normal_distribution<double> x1(4.0, 2.0), x2(9.0, 3.0);
        const int n = 1000000;
        int below = 0, below_gauss = 0;
        for (int i = 0; i < n; ++i) {
            if (p1(rng) + 2 * p2(rng) < 22) ++below;
            if (x1(rng) + 2.0 * x2(rng) < 22.0) ++below_gauss;
        }
        const double mc = static_cast<double>(below) / n;
        info("weighted sum: Gaussian CDF %.5f, sampled Poisson counts %.5f, difference %.5f (bound 0.005)", analytic, mc,
             std::abs(analytic - mc));
        info("weighted sum: sampled Gaussian surrogate without continuity offset gives %.5f",
             static_cast<double>(below_gauss) / n);
        if (std::abs(analytic - mc) > 0.005) {
            info("sub-check failed: weighted-sum Gaussian CDF differs from sampled counts by more than 0.005");
            ok = false;
        }
    }

    // displacement moments
    {
        auto env = EnvironmentSpec::base_case();
        env.flow = {0.003, -0.001, 0.0};
        const double dt = 0.5e-6;
        const int steps = 20;
        const std::size_t n = 200000;
        SimState s;
        s.a.assign(n, Vec3{});
        Engine rng = make_engine(20, StreamTag::test, 0);
        for (int k = 0; k < steps; ++k) diffuse_step(s, dt, env, rng);
        const double var_expect = 2.0 * env.diffusion_a() * steps * dt;
        const double drift[3] = {env.flow.x * steps * dt, env.flow.y * steps * dt, env.flow.z * steps * dt};
        double worst = 0.0;
        for (int axis = 0; axis < 3; ++axis) {
            double sum = 0.0, sum2 = 0.0;
            for (const auto& p : s.a) {
                const double x = axis == 0 ? p.x : axis == 1 ? p.y : p.z;
                sum += x;
                sum2 += x * x;
            }
            const double mean = sum / n;
            const double var = (sum2 - n * mean * mean) / (n - 1);
            const double z_mean = std::abs(mean - drift[axis]) / std::sqrt(var_expect / n);
            const double z_var = std::abs(var - var_expect) / (var_expect * std::sqrt(2.0 / (n - 1)));
            worst = std::max({worst, z_mean, z_var});
        }
        info("displacement moments: largest deviation %.2f standard errors (bound 3)", worst);
        ok = ok && worst <= 3.0;
    }

    // joint distribution marginals
    {
        const SignalModel model{EnvironmentSpec::base_case(), TransmissionSpec{}, DegradationMode::strict_bound};
        double worst = 0.0;
        for (double t1 : {10e-6, 34.5e-6}) {
            for (double lag : {0.5e-6, 2e-6, 10e-6}) {
                const SamplePairSpec spec{t1, t1 + lag, 5000};
                const auto joint = joint_count_dist(spec, model);
                const double m1 = 5000 * p_obs(model, t1), m2 = 5000 * p_obs(model, t1 + lag);
                const auto a = joint.marginal_first(), b = joint.marginal_second();
                for (std::int64_t k = 0; k < joint.rows; ++k) worst = std::max(worst, std::abs(a.at(k) - poisson_pmf(k, m1)));
                for (std::int64_t k = 0; k < joint.cols; ++k) worst = std::max(worst, std::abs(b.at(k) - poisson_pmf(k, m2)));
            }
        }
        info("joint distribution marginals: largest deviation from Poisson %.3g (bound 1e-6)", worst);
        ok = ok && worst <= 1e-6;
    }
    return ok;
}

}  // namespace

int main() {
    run_criterion(1, "impulse response peak", impulse_check);
    run_criterion(2, "stay probability closed form vs quadrature", p_stay_check);
    run_criterion(3, "mutual information decay and simulation agreement", mi_check);
    run_criterion(4, "ISI-free detector equivalence and error levels", isi_free_check);
    run_criterion(5, "sequence detector vs exhaustive search", viterbi_check);
    run_criterion(6, "sequence detector beats matched filter under ISI", isi_ordering_check);
    run_criterion(7, "enzyme benefit", enzyme_check);
    run_criterion(8, "flow benefit", flow_check);
    run_criterion(9, "statistical consistency suite", consistency_check);
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
