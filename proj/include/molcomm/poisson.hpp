#ifndef MOLCOMM_POISSON_HPP
#define MOLCOMM_POISSON_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "molcomm/errors.hpp"

namespace molcomm {

enum class CdfMethod {
    direct,    ///< term-by-term summation of the Poisson mass
    gamma,     ///< regularized upper incomplete Gamma function
    gaussian,  ///< normal approximation with a -0.5 continuity correction
};

/// log Pr(X = count) for X ~ Poisson(mean). Evaluated in log space so counts
/// past 170 and large means do not overflow.
inline double log_poisson_pmf(std::int64_t count, double mean) {
    if (!(mean >= 0.0)) throw DomainError("poisson_pmf: mean must be non-negative");
    if (count < 0) return -std::numeric_limits<double>::infinity();
    if (mean == 0.0) return count == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    const double k = static_cast<double>(count);
    return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

inline double poisson_pmf(std::int64_t count, double mean) {
    return std::exp(log_poisson_pmf(count, mean));
}

/// Pr(X < count_exclusive) for X ~ Poisson(mean).
inline double poisson_cdf(std::int64_t count_exclusive, double mean,
                          CdfMethod method = CdfMethod::gamma) {
    if (!(mean >= 0.0)) throw DomainError("poisson_cdf: mean must be non-negative");
    if (count_exclusive <= 0) return 0.0;
    if (mean == 0.0) return 1.0;
    switch (method) {
        case CdfMethod::direct: {
            // Terms rise until i ~ mean and fall after; summing smallest-first
            // is unnecessary at double precision for the ranges used here.
            double sum = 0.0;
            const double log_mean = std::log(mean);
            for (std::int64_t i = 0; i < count_exclusive; ++i) {
                const double k = static_cast<double>(i);
                sum += std::exp(k * log_mean - mean - std::lgamma(k + 1.0));
            }
            return std::min(sum, 1.0);
        }
        case CdfMethod::gamma:
            return boost::math::gamma_q(static_cast<double>(count_exclusive), mean);
        case CdfMethod::gaussian:
            return 0.5 * (1.0 + std::erf((static_cast<double>(count_exclusive) - 0.5 - mean) /
                                         std::sqrt(2.0 * mean)));
    }
    throw DomainError("poisson_cdf: unknown method");
}

}  // namespace molcomm

#endif  // MOLCOMM_POISSON_HPP
