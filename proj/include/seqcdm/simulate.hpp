#ifndef SEQCDM_SIMULATE_HPP
#define SEQCDM_SIMULATE_HPP

// Synthetic data: attribute structures, Q-matrices, item parameters and responses.

#include <cmath>
#include <cstdint>
#include <bit>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "seqcdm/chain.hpp"
#include "seqcdm/errors.hpp"
#include "seqcdm/fixtures.hpp"
#include "seqcdm/model.hpp"
#include "seqcdm/normal.hpp"
#include "seqcdm/rng.hpp"

namespace seqcdm {

enum class Structure { uniform, correlated };
enum class QSource { fixture, generated };

struct SimConfig {
  std::size_t N = 1000;
  std::size_t J = 40;
  int K = 3;
  Structure structure = Structure::uniform;
  double rho = 0.0;
  ModelKind model = ModelKind::dina;
  double guess = 0.2;
  double slip = 0.2;
  /// Explicit GDINA coefficients; generated when empty.
  std::vector<GdinaItemParams> lambda;
  QSource q_source = QSource::fixture;
  /// Leading rows of the fixture are used when J is below its item count.
  std::string q_fixture;  // empty: the simulation design for K
  std::uint64_t seed = 1;

  void validate() const {
    if (N < 1) throw ConfigError("N: must be >= 1");
    if (J < 1) throw ConfigError("J: must be >= 1");
    if (K < 1 || K > max_attributes)
      throw ConfigError("K: must be between 1 and " + std::to_string(max_attributes));
    if (structure == Structure::correlated && !(rho >= 0.0 && rho < 1.0))
      throw ConfigError("rho: must lie in [0, 1)");
    if (model == ModelKind::dina) {
      if (!(guess >= 0.0 && guess <= 1.0)) throw ConfigError("guess: must lie in [0, 1]");
      if (!(slip >= 0.0 && slip <= 1.0)) throw ConfigError("slip: must lie in [0, 1]");
    }
    if (q_source == QSource::generated && J < 2 * static_cast<std::size_t>(K))
      throw ConfigError("J: a generated Q-matrix needs J >= 2K");
    if (!lambda.empty() && lambda.size() != J) throw ConfigError("lambda: expected J items");
  }
};

// ---------------------------------------------------------------------------
// Attributes
// ---------------------------------------------------------------------------

inline AttributeMatrix gen_attributes_uniform(RngStream& rng, std::size_t N, int K) {
  if (K < 1 || K > max_attributes) throw ConfigError("K out of range");
  AttributeMatrix a(N, K);
  for (std::size_t i = 0; i < N; ++i)
    for (int k = 0; k < K; ++k) a(i, k) = rng.bernoulli(0.5) ? 1 : 0;
  return a;
}

/// alpha_k = 1{theta_k > 0}, theta ~ N(0, (1 - rho) I + rho 11').
inline AttributeMatrix gen_attributes_correlated(RngStream& rng, std::size_t N, int K, double rho) {
  if (K < 1 || K > max_attributes) throw ConfigError("K out of range");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho: must lie in [0, 1)");
  const double a = std::sqrt(rho);
  const double b = std::sqrt(1.0 - rho);
  AttributeMatrix out(N, K);
  for (std::size_t i = 0; i < N; ++i) {
    const double u = rng.normal();
    for (int k = 0; k < K; ++k) out(i, k) = a * u + b * rng.normal() > 0.0 ? 1 : 0;
  }
  return out;
}

/// Population class probabilities implied by the structure.
inline PopulationDist structure_population(Structure s, int K, double rho) {
  const std::size_t C = num_classes(K);
  if (s == Structure::uniform || rho == 0.0) return PopulationDist::uniform(K);
  // P(class) depends only on the number of mastered attributes m:
  // integral of phi(u) p(u)^m (1 - p(u))^(K - m), p(u) = Phi(sqrt(rho) u / sqrt(1 - rho)).
  const int steps = 8000;
  const double lo = -12.0, hi = 12.0, h = (hi - lo) / steps;
  const double scale = std::sqrt(rho / (1.0 - rho));
  std::vector<double> by_m(static_cast<std::size_t>(K) + 1, 0.0);
  for (int s_i = 0; s_i <= steps; ++s_i) {
    const double u = lo + h * s_i;
    const double w = (s_i == 0 || s_i == steps) ? 1.0 : (s_i % 2 ? 4.0 : 2.0);
    const double lp = normal::log_cdf(scale * u);
    const double lq = normal::log_survival(scale * u);
    const double lphi = -0.5 * u * u - 0.5 * std::log(2.0 * std::numbers::pi);
    for (int m = 0; m <= K; ++m) by_m[m] += w * std::exp(lphi + m * lp + (K - m) * lq);
  }
  std::vector<double> pi(C);
  double sum = 0.0;
  for (std::size_t c = 0; c < C; ++c) sum += pi[c] = by_m[std::popcount(static_cast<ClassIndex>(c))] * h / 3.0;
  for (double& v : pi) v /= sum;
  return PopulationDist(std::move(pi));
}

// ---------------------------------------------------------------------------
// Q-matrix
// ---------------------------------------------------------------------------

namespace detail {

inline Bits cyclic_row(int K, int start, int width) {
  Bits row(static_cast<std::size_t>(K), 0);
  for (int w = 0; w < width; ++w) row[(start + w) % K] = 1;
  return row;
}

inline double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

/// Uniform over nonzero binary rows with at most three ones.
inline Bits random_sparse_row(RngStream& rng, int K) {
  const int wmax = std::min(3, K);
  double total = 0.0;
  for (int w = 1; w <= wmax; ++w) total += binom(K, w);
  double u = rng.uniform() * total;
  int weight = wmax;
  for (int w = 1; w <= wmax; ++w) {
    if (u < binom(K, w)) {
      weight = w;
      break;
    }
    u -= binom(K, w);
  }
  std::vector<int> idx(static_cast<std::size_t>(K));
  std::iota(idx.begin(), idx.end(), 0);
  Bits row(static_cast<std::size_t>(K), 0);
  for (int w = 0; w < weight; ++w) {
    const auto pick = w + static_cast<int>(rng.uniform() * (K - w));
    std::swap(idx[w], idx[std::min(pick, K - 1)]);
    row[idx[w]] = 1;
  }
  return row;
}

}  // namespace detail

/// Two stacked identities, then cyclic adjacent pairs, cyclic triples and
/// uniformly random nonzero rows of weight <= 3. When a bundled design exists
/// for (K, J) its weight-2 / weight-3 counts are reused; otherwise the rows
/// after the identities are split evenly.
inline QMatrix gen_q_matrix(RngStream& rng, int K, std::size_t J) {
  if (K < 1 || K > max_attributes) throw ConfigError("K out of range");
  if (J < 2 * static_cast<std::size_t>(K)) throw ConfigError("J: a generated Q-matrix needs J >= 2K");
  const std::size_t rest = J - 2 * static_cast<std::size_t>(K);
  std::size_t n2, n3;
  if (fixtures::has_simulation_q(K) && J == fixtures::simulation_q(K).items()) {
    const QMatrix f = fixtures::simulation_q(K);
    n2 = n3 = 0;
    for (std::size_t j = 2 * static_cast<std::size_t>(K); j < f.items(); ++j) {
      if (f.kstar(j) == 2) ++n2;
      if (f.kstar(j) == 3) ++n3;
    }
  } else {
    n2 = (rest + 2) / 3;
    n3 = (rest + 1) / 3;
  }
  if (K < 2) n2 = 0;
  if (K < 3) n3 = 0;
  std::vector<Bits> rows;
  for (int rep = 0; rep < 2; ++rep)
    for (int k = 0; k < K; ++k) rows.push_back(detail::cyclic_row(K, k, 1));
  for (std::size_t t = 0; t < n2; ++t) rows.push_back(detail::cyclic_row(K, static_cast<int>(t % K), 2));
  for (std::size_t t = 0; t < n3; ++t) rows.push_back(detail::cyclic_row(K, static_cast<int>(t % K), 3));
  while (rows.size() < J) rows.push_back(detail::random_sparse_row(rng, K));
  return QMatrix::from_rows(rows);
}

/// First J rows of a bundled Q-matrix.
inline QMatrix fixture_q_matrix(int K, std::size_t J, const std::string& name = "") {
  const QMatrix full = name.empty() ? fixtures::simulation_q(K) : fixtures::by_name(name);
  if (full.attributes() != K)
    throw ConfigError("fixture has " + std::to_string(full.attributes()) + " attributes, K = " + std::to_string(K));
  if (J > full.items())
    throw ConfigError("J: fixture has only " + std::to_string(full.items()) + " items");
  std::vector<Bits> rows;
  for (std::size_t j = 0; j < J; ++j) rows.emplace_back(full.row(j).begin(), full.row(j).end());
  return QMatrix::from_rows(rows);
}

// ---------------------------------------------------------------------------
// Item parameters and responses
// ---------------------------------------------------------------------------

/// Intercept ~ N(-1.2, 0.4^2); a w-way coefficient ~ N(0.9, 0.3^2) / w^2.
inline std::vector<GdinaItemParams> gen_item_params_gdina(RngStream& rng, const QMatrix& q) {
  std::vector<GdinaItemParams> out(q.items());
  for (std::size_t j = 0; j < q.items(); ++j) {
    const auto orders = term_orders(q.kstar(j));
    out[j].coeffs.resize(orders.size());
    for (std::size_t t = 0; t < orders.size(); ++t) {
      const int w = orders[t];
      out[j].coeffs[t] = w == 0 ? -1.2 + 0.4 * rng.normal() : (0.9 + 0.3 * rng.normal()) / (w * w);
    }
  }
  return out;
}

inline ResponseMatrix gen_responses(RngStream& rng, const AttributeMatrix& alpha, const QMatrix& q,
                                    const ItemLogLikTable& table) {
  if (alpha.attributes() != q.attributes()) throw DataError("gen_responses: K differs between alpha and Q");
  ResponseMatrix y(alpha.examinees(), q.items());
  for (std::size_t i = 0; i < alpha.examinees(); ++i) {
    const ClassIndex c = alpha.class_index(i);
    for (std::size_t j = 0; j < q.items(); ++j)
      y(i, j) = rng.uniform() < table.theta(j, q.reduced_index(j, c)) ? 1 : 0;
  }
  return y;
}

inline ResponseMatrix gen_responses(RngStream& rng, const AttributeMatrix& alpha, const QMatrix& q,
                                    std::span<const DinaItemParams> params) {
  return gen_responses(rng, alpha, q, ItemLogLikTable(q, params));
}

inline ResponseMatrix gen_responses(RngStream& rng, const AttributeMatrix& alpha, const QMatrix& q,
                                    std::span<const GdinaItemParams> params) {
  return gen_responses(rng, alpha, q, ItemLogLikTable(q, params));
}

// ---------------------------------------------------------------------------
// Whole dataset
// ---------------------------------------------------------------------------

struct SimulatedData {
  QMatrix q;
  AttributeMatrix alpha;
  ResponseMatrix y;
  PopulationDist pi;
  std::vector<DinaItemParams> dina;
  std::vector<GdinaItemParams> gdina;
};

/// Q from seed.split(0), attributes from split(1), item parameters from
/// split(2), responses from split(3).
inline SimulatedData simulate(const SimConfig& cfg) {
  cfg.validate();
  const RngStream root(cfg.seed);
  SimulatedData d;
  RngStream q_rng = root.split(0);
  d.q = cfg.q_source == QSource::generated ? gen_q_matrix(q_rng, cfg.K, cfg.J)
                                           : fixture_q_matrix(cfg.K, cfg.J, cfg.q_fixture);
  RngStream a_rng = root.split(1);
  d.alpha = cfg.structure == Structure::uniform ? gen_attributes_uniform(a_rng, cfg.N, cfg.K)
                                                : gen_attributes_correlated(a_rng, cfg.N, cfg.K, cfg.rho);
  d.pi = structure_population(cfg.structure, cfg.K, cfg.rho);
  RngStream p_rng = root.split(2);
  RngStream y_rng = root.split(3);
  if (cfg.model == ModelKind::dina) {
    d.dina.assign(cfg.J, DinaItemParams{cfg.guess, cfg.slip});
    d.y = gen_responses(y_rng, d.alpha, d.q, std::span<const DinaItemParams>(d.dina));
  } else {
    d.gdina = cfg.lambda.empty() ? gen_item_params_gdina(p_rng, d.q) : cfg.lambda;
    d.y = gen_responses(y_rng, d.alpha, d.q, std::span<const GdinaItemParams>(d.gdina));
  }
  return d;
}

}  // namespace seqcdm

#endif  // SEQCDM_SIMULATE_HPP
