#ifndef SEQCDM_DISTRIBUTIONS_HPP
#define SEQCDM_DISTRIBUTIONS_HPP

// Random variates and conjugate posteriors used by the samplers.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include "seqcdm/errors.hpp"
#include "seqcdm/logspace.hpp"
#include "seqcdm/model.hpp"
#include "seqcdm/normal.hpp"
#include "seqcdm/rng.hpp"

namespace seqcdm {

// ---------------------------------------------------------------------------
// Dirichlet / Beta
// ---------------------------------------------------------------------------

/// Normalised log-probabilities of a Dirichlet(delta) draw.
inline std::vector<double> dirichlet_sample_log(RngStream& rng, std::span<const double> delta) {
  if (delta.empty()) throw ConfigError("Dirichlet concentration vector is empty");
  std::vector<double> lg(delta.size());
  for (std::size_t c = 0; c < delta.size(); ++c) {
    if (!(delta[c] > 0.0) || !std::isfinite(delta[c]))
      throw ConfigError("Dirichlet concentration must be positive; entry " + std::to_string(c + 1) +
                        " is " + std::to_string(delta[c]));
    lg[c] = rng.log_gamma_variate(delta[c]);
  }
  const double lse = log_sum_exp(lg);
  for (double& v : lg) v -= lse;
  return lg;
}

/// Probabilities from normalised log-probabilities, renormalised so the sum is 1.
inline PopulationDist probabilities_from_log(std::span<const double> log_probs) {
  std::vector<double> p(log_probs.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) sum += p[c] = std::exp(log_probs[c]);
  for (double& v : p) v /= sum;
  return PopulationDist(std::move(p));
}

inline PopulationDist dirichlet_sample(RngStream& rng, std::span<const double> delta) {
  return probabilities_from_log(dirichlet_sample_log(rng, delta));
}

inline double beta_sample(RngStream& rng, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ConfigError("Beta shapes must be positive (got " + std::to_string(a) + ", " +
                      std::to_string(b) + ")");
  const double la = rng.log_gamma_variate(a);
  const double lb = rng.log_gamma_variate(b);
  return two_way_share(la, lb);
}

/// Beta(a, b) restricted to [0, upper), drawn by inverting the regularised
/// incomplete beta function.
inline double beta_sample_below(RngStream& rng, double a, double b, double upper) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("Beta shapes must be positive");
  if (!(upper > 0.0)) throw ConfigError("truncated Beta needs a positive upper bound");
  if (upper >= 1.0) return beta_sample(rng, a, b);
  const double mass = boost::math::ibeta(a, b, upper);
  if (!(mass > 0.0)) return 0.0;
  double x = boost::math::ibeta_inv(a, b, rng.uniform() * mass);
  if (x >= upper) x = std::nextafter(upper, 0.0);
  return x;
}

// ---------------------------------------------------------------------------
// Univariate truncated normal
// ---------------------------------------------------------------------------

namespace detail {

// Standard normal restricted to [lo, hi] with 0 <= lo: the caller reflects
// intervals lying in the lower half.
inline double std_trunc_normal_upper(RngStream& rng, double lo, double hi) {
  constexpr double tail_switch = 5.0;
  if (lo < tail_switch) {
    const double q_lo = normal::survival(lo);
    const double q_hi = std::isinf(hi) ? 0.0 : normal::survival(hi);
    const double q = q_lo - rng.uniform() * (q_lo - q_hi);
    double x = normal::survival_quantile(q);
    return std::min(std::max(x, lo), hi);
  }
  if (!std::isinf(hi) && hi - lo <= 1.0 / lo) {
    // Narrow window far in the tail: uniform proposal.
    for (;;) {
      const double z = lo + (hi - lo) * rng.uniform();
      if (rng.uniform() <= std::exp(0.5 * (lo * lo - z * z))) return z;
    }
  }
  // Exponential proposal (Robert 1995).
  const double rate = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
  for (;;) {
    const double z = lo + rng.exponential(rate);
    if (z > hi) continue;
    const double d = z - rate;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
  }
}

}  // namespace detail

/// N(mu, sigma^2) restricted to `interval`. Inverse-CDF on the tail side of
/// the interval; exponential rejection once the interval is 5 sigma out.
inline double trunc_normal_sample(RngStream& rng, double mu, double sigma, const Interval& interval) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ConfigError("truncated normal needs a positive finite sigma");
  if (interval.empty()) throw ConfigError("truncated normal interval is empty");
  if (interval.is_unbounded()) return mu + sigma * rng.normal();
  double lo = (interval.lower - mu) / sigma;
  double hi = (interval.upper - mu) / sigma;
  if (lo == hi) return interval.lower;
  if (lo >= 0.0) return mu + sigma * detail::std_trunc_normal_upper(rng, lo, hi);
  if (hi <= 0.0) return mu - sigma * detail::std_trunc_normal_upper(rng, -hi, -lo);
  // Interval straddles the mean.
  const double p_lo = normal::cdf(lo);
  const double p_hi = normal::cdf(hi);
  const double x = normal::quantile(p_lo + rng.uniform() * (p_hi - p_lo));
  return mu + sigma * std::min(std::max(x, lo), hi);
}

// ---------------------------------------------------------------------------
// Multivariate normal: sequential conditionals and truncated draws
// ---------------------------------------------------------------------------

/// X_p | X_1..X_{p-1} = x ~ N(mean + coeffs . (x - mu_prefix), variance).
struct GaussianConditional {
  double mean = 0.0;
  Eigen::VectorXd coeffs;
  double variance = 1.0;

  double conditional_mean(const Eigen::VectorXd& mu, const Eigen::VectorXd& x) const {
    const auto p = coeffs.size();
    if (p == 0) return mean;
    return mean + coeffs.dot(x.head(p) - mu.head(p));
  }
};

inline Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const Eigen::MatrixXd& sigma, const char* what) {
  if (sigma.rows() != sigma.cols()) throw DataError(std::string(what) + " is not square");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw DataError(std::string(what) + " is not positive definite");
  return llt;
}

inline std::vector<GaussianConditional> mvn_chain_conditionals(const Eigen::VectorXd& mu,
                                                               const Eigen::MatrixXd& sigma) {
  if (mu.size() != sigma.rows()) throw DataError("mean and covariance dimensions differ");
  const Eigen::MatrixXd L = checked_cholesky(sigma, "covariance").matrixL();
  const auto P = mu.size();
  std::vector<GaussianConditional> out(static_cast<std::size_t>(P));
  for (Eigen::Index p = 0; p < P; ++p) {
    auto& cond = out[static_cast<std::size_t>(p)];
    cond.mean = mu(p);
    cond.variance = L(p, p) * L(p, p);
    if (p == 0) continue;
    // coeffs' = L[p, :p] * L[:p, :p]^{-1}
    cond.coeffs = L.topLeftCorner(p, p)
                      .transpose()
                      .triangularView<Eigen::Upper>()
                      .solve(L.row(p).head(p).transpose());
  }
  return out;
}

/// Draw X_1 from its truncated marginal, then each X_p from its truncated
/// conditional given the realised prefix. `gibbs_sweeps` > 0 appends that many
/// coordinate-wise Gibbs sweeps on the exact truncated joint.
inline Eigen::VectorXd trunc_mvn_sequential_sample(RngStream& rng, const Eigen::VectorXd& mu,
                                                   const Eigen::MatrixXd& sigma,
                                                   const TruncationSpec& trunc,
                                                   int gibbs_sweeps = 0) {
  const auto P = mu.size();
  if (trunc.intervals.size() != static_cast<std::size_t>(P))
    throw DataError("truncation spec has " + std::to_string(trunc.intervals.size()) +
                    " intervals for a " + std::to_string(P) + "-dimensional normal");
  for (const auto& iv : trunc.intervals)
    if (iv.empty()) throw ConfigError("empty truncation interval");
  const auto conds = mvn_chain_conditionals(mu, sigma);
  Eigen::VectorXd x(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    const auto& c = conds[static_cast<std::size_t>(p)];
    x(p) = trunc_normal_sample(rng, c.conditional_mean(mu, x), std::sqrt(c.variance),
                               trunc.intervals[static_cast<std::size_t>(p)]);
  }
  if (gibbs_sweeps > 0) {
    const Eigen::MatrixXd precision = checked_cholesky(sigma, "covariance").solve(
        Eigen::MatrixXd::Identity(P, P));
    for (int s = 0; s < gibbs_sweeps; ++s) {
      for (Eigen::Index p = 0; p < P; ++p) {
        const double lpp = precision(p, p);
        const double shift = precision.row(p).dot(x - mu) - lpp * (x(p) - mu(p));
        x(p) = trunc_normal_sample(rng, mu(p) - shift / lpp, std::sqrt(1.0 / lpp),
                                   trunc.intervals[static_cast<std::size_t>(p)]);
      }
    }
  }
  return x;
}

/// Unconstrained N(mu, Sigma) draw through the Cholesky factor.
inline Eigen::VectorXd mvn_sample(RngStream& rng, const Eigen::VectorXd& mu,
                                  const Eigen::MatrixXd& chol_lower) {
  Eigen::VectorXd z(mu.size());
  for (Eigen::Index p = 0; p < z.size(); ++p) z(p) = rng.normal();
  return mu + chol_lower.triangularView<Eigen::Lower>() * z;
}

// ---------------------------------------------------------------------------
// Bayesian linear regression with unit noise variance
// ---------------------------------------------------------------------------

struct BlrPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd chol_lower;
};

/// Posterior of beta in Z = X beta + e, e ~ N(0, I), beta ~ N(mu0, Sigma0),
/// from the sufficient statistics X'X and X'Z.
inline BlrPosterior blr_posterior_from_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xtz,
                                            const Eigen::VectorXd& mu0,
                                            const Eigen::MatrixXd& sigma0) {
  const auto P = mu0.size();
  if (gram.rows() != P || gram.cols() != P || xtz.size() != P || sigma0.rows() != P ||
      sigma0.cols() != P)
    throw DataError("regression posterior: inconsistent dimensions");
  const Eigen::MatrixXd prior_precision =
      checked_cholesky(sigma0, "prior covariance").solve(Eigen::MatrixXd::Identity(P, P));
  const Eigen::MatrixXd precision = prior_precision + gram;
  const auto prec_llt = checked_cholesky(precision, "posterior precision");
  BlrPosterior post;
  post.covariance = prec_llt.solve(Eigen::MatrixXd::Identity(P, P));
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose());
  post.mean = prec_llt.solve(xtz + prior_precision * mu0);
  post.chol_lower = checked_cholesky(post.covariance, "posterior covariance").matrixL();
  return post;
}

inline BlrPosterior blr_posterior(const Eigen::MatrixXd& X, const Eigen::VectorXd& Z,
                                  const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0) {
  if (X.rows() != Z.size()) throw DataError("regression posterior: X and Z row counts differ");
  if (X.cols() != mu0.size()) throw DataError("regression posterior: X columns differ from prior");
  return blr_posterior_from_gram(X.transpose() * X, X.transpose() * Z, mu0, sigma0);
}

}  // namespace seqcdm

#endif  // SEQCDM_DISTRIBUTIONS_HPP
