#ifndef SEQCDM_LOGSPACE_HPP
#define SEQCDM_LOGSPACE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace seqcdm {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)).
inline double log_add_exp(double a, double b) noexcept {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

/// log(sum_i exp(x_i)); -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> x) noexcept {
  if (x.empty()) return neg_inf;
  const double hi = *std::max_element(x.begin(), x.end());
  if (hi == neg_inf) return neg_inf;
  if (std::isinf(hi)) return hi;
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

/// Probability exp(log_a) / (exp(log_a) + exp(log_b)), stable for any magnitudes.
inline double two_way_share(double log_a, double log_b) noexcept {
  if (log_a == neg_inf && log_b == neg_inf) return std::numeric_limits<double>::quiet_NaN();
  if (log_a == neg_inf) return 0.0;
  if (log_b == neg_inf) return 1.0;
  const double d = log_b - log_a;
  if (d > 0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

}  // namespace seqcdm

#endif  // SEQCDM_LOGSPACE_HPP
