#ifndef MOLCOMM_MUTUAL_INFO_HPP
#define MOLCOMM_MUTUAL_INFO_HPP

// Dependence between two consecutive receiver observations of a single
// impulse. Observations are made at t1 < t2 with lag t_o = t2 - t1; a
// molecule seen at t1 is assumed uniformly distributed over the receiver.
// Flow is not supported here.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "molcomm/channel.hpp"
#include "molcomm/environment.hpp"
#include "molcomm/errors.hpp"
#include "molcomm/poisson.hpp"

namespace molcomm {

namespace detail {

inline double enzyme_survival(const EnvironmentSpec& env, double t_o, DegradationMode mode) {
    return std::exp(-env.decay_rate(mode) * t_o);
}

/// exp(-(R+r)^2/4a) - exp(-(R-r)^2/4a), written to survive r -> 0.
inline double gaussian_shell_difference(double big_r, double r, double a) {
    const double x = big_r * r / (2.0 * a);
    if (x < 1.0) return -2.0 * std::exp(-(big_r * big_r + r * r) / (4.0 * a)) * std::sinh(x);
    const double plus = big_r + r;
    const double minus = big_r - r;
    return std::exp(-plus * plus / (4.0 * a)) - std::exp(-minus * minus / (4.0 * a));
}

/// Smallest K with Pr(X > K) <= tail for X ~ Poisson(mean).
inline std::int64_t poisson_upper_support(double mean, double tail) {
    if (mean <= 0.0) return 0;
    constexpr std::int64_t cap = 50'000'000;
    std::int64_t k = static_cast<std::int64_t>(mean);
    // Pr(X > k) = 1 - Pr(X < k+1) = P(k+1, mean) (regularized lower gamma).
    while (boost::math::gamma_p(static_cast<double>(k + 1), mean) > tail) {
        k = k < 16 ? k + 1 : k + std::max<std::int64_t>(1, static_cast<std::int64_t>(std::sqrt(mean)));
        if (k > cap) throw NumericError("truncation mass unreachable for Poisson mean " +
                                        std::to_string(mean));
    }
    // Step back to the smallest qualifying K.
    while (k > 0 && boost::math::gamma_p(static_cast<double>(k), mean) <= tail) --k;
    return k;
}

inline double log_binomial_pmf(std::int64_t k, std::int64_t n, double p) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
    const double kn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    return std::lgamma(kn + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(kn - kk + 1.0) +
           kk * std::log(p) + (kn - kk) * std::log1p(-p);
}

inline void require_no_flow(const EnvironmentSpec& env, const char* op) {
    if (env.has_flow())
        throw DomainError(std::string(op) +
                          ": observation dependence is only modelled without flow");
}

}  // namespace detail

/// Concentration at distance r from the receiver centre, t_o after a single
/// molecule was last seen uniformly distributed inside the receiver.
inline double residual_concentration(const EnvironmentSpec& env, double r, double t_o,
                                     DegradationMode mode = DegradationMode::strict_bound) {
    detail::require(t_o > 0.0, "residual_concentration: lag must be positive");
    detail::require(r >= 0.0, "residual_concentration: distance must be non-negative");
    const double big_r = env.receiver_radius;
    const double a = env.diffusion_a() * t_o;
    const double s = 2.0 * std::sqrt(a);
    const double r3 = big_r * big_r * big_r;
    const double erf_part =
        3.0 / (8.0 * std::numbers::pi * r3) * (std::erf((big_r - r) / s) + std::erf((big_r + r) / s));
    double shell_part;
    if (r == 0.0) {
        // limit of difference / r as r -> 0
        shell_part = 3.0 / (4.0 * std::numbers::pi * r3) * std::sqrt(a / std::numbers::pi) *
                     (-big_r / a) * std::exp(-big_r * big_r / (4.0 * a));
    } else {
        shell_part = 3.0 / (4.0 * std::numbers::pi * r3 * r) * std::sqrt(a / std::numbers::pi) *
                     detail::gaussian_shell_difference(big_r, r, a);
    }
    return (erf_part + shell_part) * detail::enzyme_survival(env, t_o, mode);
}

/// Probability that a molecule seen inside the receiver is inside again t_o later.
inline double p_stay(const EnvironmentSpec& env, double t_o,
                     DegradationMode mode = DegradationMode::strict_bound) {
    detail::require(t_o > 0.0, "p_stay: lag must be positive");
    const double big_r = env.receiver_radius;
    const double a = env.diffusion_a() * t_o;
    const double ratio = a / (big_r * big_r);
    const double value =
        std::erf(big_r / std::sqrt(a)) +
        std::sqrt(a / std::numbers::pi) / big_r *
            ((1.0 - 2.0 * ratio) * std::exp(-1.0 / ratio) + 2.0 * ratio - 3.0);
    return value * detail::enzyme_survival(env, t_o, mode);
}

/// Independent route to p_stay: adaptive Gauss-Kronrod integration of the
/// residual concentration over the receiver sphere.
inline double p_stay_quadrature(const EnvironmentSpec& env, double t_o,
                                DegradationMode mode = DegradationMode::strict_bound) {
    detail::require(t_o > 0.0, "p_stay_quadrature: lag must be positive");
    const double big_r = env.receiver_radius;
    // Integrate over u = r / R so the integrand is O(1).
    auto integrand = [&](double u) {
        const double r = u * big_r;
        return 4.0 * std::numbers::pi * residual_concentration(env, r, t_o, DegradationMode::none) *
               r * r * big_r;
    };
    // For short lags the residual only changes in a layer of width ~sqrt(D t)
    // at the surface; integrate that layer separately.
    const double layer = 12.0 * std::sqrt(2.0 * env.diffusion_a() * t_o) / big_r;
    const double split = layer < 0.5 ? 1.0 - layer : 0.0;
    double error = 0.0;
    double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, split, 1.0, 20, 1e-12, &error);
    if (split > 0.0) {
        double inner_error = 0.0;
        value += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, split, 20, 1e-12,
                                                                               &inner_error);
        error += inner_error;
    }
    if (!(error <= 1e-11) || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << "p_stay_quadrature: no convergence at t_o = " << t_o << " s (estimate " << value
            << ", error " << error << ")";
        throw NumericError(msg.str());
    }
    return value * detail::enzyme_survival(env, t_o, mode);
}

/// Probability that a molecule seen inside is outside (and not degraded) t_o later.
inline double p_leave(const EnvironmentSpec& env, double t_o,
                      DegradationMode mode = DegradationMode::strict_bound) {
    return detail::enzyme_survival(env, t_o, mode) - p_stay(env, t_o, mode);
}

/// Unconditional probability that a molecule outside the receiver at t1 is
/// inside at t2. Small negative values from round-off are clamped to zero;
/// anything below -1e-12 means the model quantities are inconsistent.
inline double p_arrive(const SignalModel& model, double t1, double t2) {
    detail::require(t1 > 0.0 && t2 > t1, "p_arrive: need 0 < t1 < t2");
    const double value =
        p_obs(model, t2) - p_obs(model, t1) * p_stay(model.env, t2 - t1, model.degradation_mode);
    if (value < -1e-12) {
        std::ostringstream msg;
        msg << "p_arrive: negative arrival probability " << value << " at t1 = " << t1
            << " s, t2 = " << t2 << " s";
        throw NumericError(msg.str());
    }
    return std::max(value, 0.0);
}

struct SamplePairSpec {
    double t1 = 0.0;
    double t2 = 0.0;
    std::int64_t molecule_count = 5000;     // N_A released at t = 0
    double truncation_mass = 1.0 - 1e-9;    // coverage of each summation range
    bool exact_arrivals = false;            // binomial arrivals over N_A - s1 molecules

    double lag() const noexcept { return t2 - t1; }

    void validate() const {
        detail::require(t1 > 0.0 && t2 > t1, "SamplePairSpec: need 0 < t1 < t2");
        detail::require(molecule_count >= 1, "SamplePairSpec: molecule count must be positive");
        detail::require(truncation_mass > 0.0 && truncation_mass < 1.0,
                        "SamplePairSpec: truncation mass must lie in (0, 1)");
    }
};

/// Probability mass over consecutive counts offset, offset+1, ...
struct CountDistribution {
    std::int64_t offset = 0;
    std::vector<double> masses;

    double at(std::int64_t count) const {
        const auto i = count - offset;
        return (i < 0 || i >= static_cast<std::int64_t>(masses.size())) ? 0.0
                                                                         : masses[static_cast<std::size_t>(i)];
    }
    double total() const {
        double s = 0.0;
        for (double p : masses) s += p;
        return s;
    }
    double mean() const {
        double s = 0.0;
        for (std::size_t i = 0; i < masses.size(); ++i)
            s += masses[i] * static_cast<double>(offset + static_cast<std::int64_t>(i));
        return s;
    }
};

/// Joint mass over (s1, s2) in [0, rows) x [0, cols), row-major.
struct JointCountDistribution {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> masses;

    double operator()(std::int64_t s1, std::int64_t s2) const {
        if (s1 < 0 || s2 < 0 || s1 >= rows || s2 >= cols) return 0.0;
        return masses[static_cast<std::size_t>(s1 * cols + s2)];
    }
    CountDistribution marginal_first() const {
        CountDistribution out{0, std::vector<double>(static_cast<std::size_t>(rows), 0.0)};
        for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t k = 0; k < cols; ++k) out.masses[static_cast<std::size_t>(i)] += (*this)(i, k);
        return out;
    }
    CountDistribution marginal_second() const {
        CountDistribution out{0, std::vector<double>(static_cast<std::size_t>(cols), 0.0)};
        for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t k = 0; k < cols; ++k) out.masses[static_cast<std::size_t>(k)] += (*this)(i, k);
        return out;
    }
};

namespace detail {

struct PairChannel {
    double mean_first = 0.0;   // N_A P_obs(t1)
    double mean_second = 0.0;  // N_A P_obs(t2)
    double stay = 0.0;         // P_stay(t_o), includes enzyme survival
    double arrive = 0.0;       // P_arr(t1, t2)
};

inline PairChannel pair_channel(const SamplePairSpec& spec, const SignalModel& model) {
    spec.validate();
    require_no_flow(model.env, "mutual information");
    PairChannel c;
    SignalModel single = model;
    single.tx.molecules_per_one = 1;
    const double n = static_cast<double>(spec.molecule_count);
    c.mean_first = n * p_obs(single, spec.t1);
    c.mean_second = n * p_obs(single, spec.t2);
    c.stay = p_stay(model.env, spec.lag(), model.degradation_mode);
    c.arrive = p_arrive(single, spec.t1, spec.t2);
    return c;
}

/// Arrival-count mass given s1, truncated so the dropped tail is far below
/// the requested truncation.
inline std::vector<double> arrival_masses(const SamplePairSpec& spec, const PairChannel& c,
                                          std::int64_t s1) {
    const double tail = (1.0 - spec.truncation_mass) * 1e-3;
    std::vector<double> out;
    if (spec.exact_arrivals) {
        const std::int64_t trials = std::max<std::int64_t>(spec.molecule_count - s1, 0);
        const std::int64_t upper =
            std::min(trials, poisson_upper_support(static_cast<double>(trials) * c.arrive, tail) + 8);
        out.resize(static_cast<std::size_t>(upper + 1));
        for (std::int64_t i = 0; i <= upper; ++i)
            out[static_cast<std::size_t>(i)] = std::exp(log_binomial_pmf(i, trials, c.arrive));
    } else {
        const double lambda = static_cast<double>(spec.molecule_count) * c.arrive;
        const std::int64_t upper = poisson_upper_support(lambda, tail);
        out.resize(static_cast<std::size_t>(upper + 1));
        for (std::int64_t i = 0; i <= upper; ++i) out[static_cast<std::size_t>(i)] = poisson_pmf(i, lambda);
    }
    return out;
}

inline CountDistribution conditional_from(const SamplePairSpec& spec, const PairChannel& c,
                                          std::int64_t s1) {
    // s2 = (molecules that stayed) + (arrivals); departures are the complement
    // of staying, so a molecule degraded inside the lag is never counted.
    const std::vector<double> arrivals = arrival_masses(spec, c, s1);
    const auto n_arr = static_cast<std::int64_t>(arrivals.size());
    CountDistribution out{0, std::vector<double>(static_cast<std::size_t>(s1 + n_arr), 0.0)};
    for (std::int64_t kept = 0; kept <= s1; ++kept) {
        const double pk = std::exp(log_binomial_pmf(kept, s1, c.stay));
        if (pk == 0.0) continue;
        for (std::int64_t a = 0; a < n_arr; ++a)
            out.masses[static_cast<std::size_t>(kept + a)] += pk * arrivals[static_cast<std::size_t>(a)];
    }
    return out;
}

}  // namespace detail

/// Distribution of the count at t2 given s1 molecules were counted at t1.
inline CountDistribution conditional_count_dist(const SamplePairSpec& spec, const SignalModel& model,
                                                std::int64_t s1) {
    detail::require(s1 >= 0, "conditional_count_dist: s1 must be non-negative");
    return detail::conditional_from(spec, detail::pair_channel(spec, model), s1);
}

/// Joint distribution of the counts at t1 and t2 over ranges covering at
/// least `truncation_mass` of each Poisson marginal.
inline JointCountDistribution joint_count_dist(const SamplePairSpec& spec, const SignalModel& model) {
    const detail::PairChannel c = detail::pair_channel(spec, model);
    const double tail = 1.0 - spec.truncation_mass;
    const std::int64_t k1 = detail::poisson_upper_support(c.mean_first, tail);
    std::vector<CountDistribution> rows;
    rows.reserve(static_cast<std::size_t>(k1 + 1));
    std::int64_t cols = detail::poisson_upper_support(c.mean_second, tail) + 1;
    for (std::int64_t s1 = 0; s1 <= k1; ++s1) {
        rows.push_back(detail::conditional_from(spec, c, s1));
        cols = std::max<std::int64_t>(cols, static_cast<std::int64_t>(rows.back().masses.size()));
    }
    JointCountDistribution joint{k1 + 1, cols, std::vector<double>(static_cast<std::size_t>((k1 + 1) * cols), 0.0)};
    for (std::int64_t s1 = 0; s1 <= k1; ++s1) {
        const double p1 = poisson_pmf(s1, c.mean_first);
        const auto& cond = rows[static_cast<std::size_t>(s1)].masses;
        for (std::size_t s2 = 0; s2 < cond.size(); ++s2)
            joint.masses[static_cast<std::size_t>(s1 * cols) + s2] = p1 * cond[s2];
    }
    return joint;
}

/// I(X;Y) in bits from a joint table; marginals are taken from the table itself.
inline double mutual_information(const JointCountDistribution& joint) {
    const CountDistribution m1 = joint.marginal_first();
    const CountDistribution m2 = joint.marginal_second();
    double bits = 0.0;
    for (std::int64_t i = 0; i < joint.rows; ++i) {
        for (std::int64_t k = 0; k < joint.cols; ++k) {
            const double p = joint(i, k);
            if (p <= 0.0) continue;
            const double q = m1.masses[static_cast<std::size_t>(i)] * m2.masses[static_cast<std::size_t>(k)];
            bits += p * std::log2(p / q);
        }
    }
    return std::max(bits, 0.0);
}

inline double mutual_information(const SamplePairSpec& spec, const SignalModel& model) {
    return mutual_information(joint_count_dist(spec, model));
}

struct CountPair {
    std::int64_t first = 0;
    std::int64_t second = 0;
};

/// Plug-in estimate (bits) from joint and marginal histograms of observed pairs.
inline double empirical_mutual_information(std::span<const CountPair> samples) {
    if (samples.size() < 2)
        throw DomainError("empirical_mutual_information: need at least two samples");
    std::int64_t lo1 = samples[0].first, hi1 = lo1, lo2 = samples[0].second, hi2 = lo2;
    for (const auto& s : samples) {
        lo1 = std::min(lo1, s.first);
        hi1 = std::max(hi1, s.first);
        lo2 = std::min(lo2, s.second);
        hi2 = std::max(hi2, s.second);
    }
    const std::int64_t rows = hi1 - lo1 + 1;
    const std::int64_t cols = hi2 - lo2 + 1;
    std::vector<double> joint(static_cast<std::size_t>(rows * cols), 0.0);
    std::vector<double> m1(static_cast<std::size_t>(rows), 0.0);
    std::vector<double> m2(static_cast<std::size_t>(cols), 0.0);
    for (const auto& s : samples) {
        const auto i = s.first - lo1;
        const auto k = s.second - lo2;
        joint[static_cast<std::size_t>(i * cols + k)] += 1.0;
        m1[static_cast<std::size_t>(i)] += 1.0;
        m2[static_cast<std::size_t>(k)] += 1.0;
    }
    const double n = static_cast<double>(samples.size());
    double bits = 0.0;
    for (std::int64_t i = 0; i < rows; ++i) {
        for (std::int64_t k = 0; k < cols; ++k) {
            const double c = joint[static_cast<std::size_t>(i * cols + k)];
            if (c == 0.0) continue;
            bits += c / n * std::log2(c * n / (m1[static_cast<std::size_t>(i)] * m2[static_cast<std::size_t>(k)]));
        }
    }
    return std::max(bits, 0.0);
}

}  // namespace molcomm

#endif  // MOLCOMM_MUTUAL_INFO_HPP
