#ifndef SEQCDM_NORMAL_HPP
#define SEQCDM_NORMAL_HPP

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace seqcdm::normal {

inline constexpr double log_sqrt_2pi = 0.91893853320467274178032973640562;

/// Standard normal density.
inline double pdf(double x) noexcept {
  return std::exp(-0.5 * x * x - log_sqrt_2pi);
}

/// Standard normal CDF via erfc, accurate in both tails.
inline double cdf(double x) noexcept {
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// Upper tail 1 - Phi(x), without cancellation.
inline double survival(double x) noexcept { return cdf(-x); }

namespace detail {

// log of the Mills ratio Q(t)/phi(t) for t >= 8, evaluated as the
// continued fraction 1/(t + 1/(t + 2/(t + 3/(t + ...)))) from the tail.
inline double log_mills_ratio(double t) noexcept {
  double frac = t;
  for (int n = 120; n >= 1; --n) frac = t + n / frac;
  return -std::log(frac);
}

}  // namespace detail

/// log Phi(x). Switches to a continued-fraction tail for x < -8 so the
/// result stays finite far below the double underflow point of Phi.
inline double log_cdf(double x) noexcept {
  if (std::isnan(x)) return x;
  if (x == -std::numeric_limits<double>::infinity())
    return -std::numeric_limits<double>::infinity();
  if (x < -8.0) return -0.5 * x * x - log_sqrt_2pi + detail::log_mills_ratio(-x);
  if (x > 8.0) return std::log1p(-survival(x));
  return std::log(cdf(x));
}

/// log(1 - Phi(x)).
inline double log_survival(double x) noexcept { return log_cdf(-x); }

/// Phi^{-1}(p) for p in (0,1); returns -inf / +inf at the endpoints.
inline double quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

/// Inverse of the upper tail: returns x with 1 - Phi(x) = q.
inline double survival_quantile(double q) { return -quantile(q); }

}  // namespace seqcdm::normal

#endif  // SEQCDM_NORMAL_HPP
