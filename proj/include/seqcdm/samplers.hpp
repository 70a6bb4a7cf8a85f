#ifndef SEQCDM_SAMPLERS_HPP
#define SEQCDM_SAMPLERS_HPP

// Gibbs samplers for DINA and probit GDINA: sequential (one attribute at a
// time), simultaneous (whole profile over 2^K classes) and independent
// (attribute-wise Bernoulli prior).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "seqcdm/chain.hpp"
#include "seqcdm/distributions.hpp"
#include "seqcdm/errors.hpp"
#include "seqcdm/logspace.hpp"
#include "seqcdm/model.hpp"
#include "seqcdm/prior.hpp"
#include "seqcdm/rng.hpp"

namespace seqcdm {

struct SamplerOptions {
  long iterations = 2000;
  long burn_in = 1000;
  long thin = 1;
  bool random_scan = false;  // random attribute order per sweep
  int workers = 1;
  bool keep_alpha_draws = false;
  std::size_t max_stored_pi_classes = 1024;
  int simultaneous_max_attributes = 20;
  std::function<void(long)> progress;  // called every 100 iterations

  static SamplerOptions defaults_for(ModelKind m) {
    SamplerOptions o;
    if (m == ModelKind::gdina) {
      o.iterations = 3000;
      o.burn_in = 2000;
    }
    return o;
  }
};

/// Optional starting values; anything left empty is drawn from the defaults.
struct ChainInit {
  std::optional<std::vector<ClassIndex>> classes;
  std::optional<std::vector<double>> pi;
  std::optional<std::vector<DinaItemParams>> dina;
  std::optional<std::vector<GdinaItemParams>> gdina;
};

/// Examinees per RNG stream block. Fixed so results do not depend on the
/// number of workers.
inline constexpr std::size_t examinee_block = 64;

// ---------------------------------------------------------------------------
// Prior conditional of one attribute
// ---------------------------------------------------------------------------

/// P(alpha_k = 1 | alpha_{-k}, pi) from the two classes that differ at k.
inline double prior_conditional_prob_log(std::span<const double> log_pi, ClassIndex c, int k) {
  const ClassIndex bit = ClassIndex{1} << k;
  const double p = two_way_share(log_pi[c | bit], log_pi[c & ~bit]);
  if (std::isnan(p)) throw DataError("prior conditional undefined: both compatible classes have zero mass");
  return p;
}

/// alpha_minus_k lists the other K-1 attributes in index order; k is zero-based.
inline double prior_conditional_prob(const PopulationDist& pi, std::span<const std::uint8_t> alpha_minus_k,
                                     int k) {
  const int K = static_cast<int>(alpha_minus_k.size()) + 1;
  if (num_classes(K) != pi.size())
    throw DataError("prior_conditional_prob: pi has " + std::to_string(pi.size()) + " classes, expected " +
                    std::to_string(num_classes(K)));
  if (k < 0 || k >= K) throw DataError("prior_conditional_prob: attribute index out of range");
  ClassIndex c = 0;
  for (int kk = 0, src = 0; kk < K; ++kk) {
    if (kk == k) continue;
    c |= static_cast<ClassIndex>(alpha_minus_k[src++] & 1u) << kk;
  }
  const ClassIndex bit = ClassIndex{1} << k;
  const double denom = pi[c] + pi[c | bit];
  if (!(denom > 0.0)) throw DataError("prior conditional undefined: both compatible classes have zero mass");
  return pi[c | bit] / denom;
}

// ---------------------------------------------------------------------------
// Attribute full conditionals
// ---------------------------------------------------------------------------

/// GDINA: P(alpha_ik = 1 | rest) from the items requiring k. log_prior1 / log_prior0
/// are the log prior weights of alpha_ik = 1 / 0.
inline double attribute_posterior_gdina(std::span<const std::uint8_t> y_row, ClassIndex c, int k,
                                        const QMatrix& q, const ItemLogLikTable& table,
                                        double log_prior1, double log_prior0,
                                        WorkCounters* work = nullptr) {
  double l1 = log_prior1;
  double l0 = log_prior0;
  const auto& items = q.items_requiring(k);
  for (int j : items) {
    const ClassIndex r = q.reduced_index(j, c);
    const ClassIndex b = ClassIndex{1} << q.reduced_position(j, k);
    l1 += table.log_prob(j, r | b, y_row[j]);
    l0 += table.log_prob(j, r & ~b, y_row[j]);
  }
  if (work) work->likelihood_terms += items.size();
  return two_way_share(l1, l0);
}

/// DINA: only items whose other required attributes are all mastered carry
/// information about alpha_ik.
inline double attribute_posterior_dina(std::span<const std::uint8_t> y_row, ClassIndex c, int k,
                                       const QMatrix& q, const ItemLogLikTable& table,
                                       double log_prior1, double log_prior0,
                                       WorkCounters* work = nullptr) {
  const ClassIndex bit = ClassIndex{1} << k;
  double l1 = log_prior1;
  double l0 = log_prior0;
  std::uint64_t used = 0;
  for (int j : q.items_requiring(k)) {
    const ClassIndex mask = q.mask(j);
    if (((c | bit) & mask) != mask) continue;
    const ClassIndex full = static_cast<ClassIndex>(q.reduced_classes(j) - 1);
    const ClassIndex b = ClassIndex{1} << q.reduced_position(j, k);
    l1 += table.log_prob(j, full, y_row[j]);
    l0 += table.log_prob(j, full ^ b, y_row[j]);
    ++used;
  }
  if (work) work->likelihood_terms += used;
  return two_way_share(l1, l0);
}

namespace detail {

inline std::vector<double> log_probs(const PopulationDist& pi) {
  std::vector<double> lp(pi.size());
  for (std::size_t c = 0; c < lp.size(); ++c) lp[c] = pi[c] > 0.0 ? std::log(pi[c]) : neg_inf;
  return lp;
}

inline void check_attribute_args(std::span<const std::uint8_t> y_row, const AttributeProfile& alpha, int k,
                                 const QMatrix& q, const PopulationDist& pi) {
  if (y_row.size() != q.items()) throw DataError("response row length differs from J");
  if (static_cast<int>(alpha.size()) != q.attributes()) throw DataError("profile length differs from K");
  if (k < 0 || k >= q.attributes()) throw DataError("attribute index out of range");
  if (pi.size() != num_classes(q.attributes())) throw DataError("pi length differs from 2^K");
}

}  // namespace detail

inline double attribute_posterior_gdina(std::span<const std::uint8_t> y_row, const AttributeProfile& alpha,
                                        int k, const QMatrix& q, std::span<const GdinaItemParams> params,
                                        const PopulationDist& pi) {
  detail::check_attribute_args(y_row, alpha, k, q, pi);
  const ItemLogLikTable table(q, params);
  const auto lp = detail::log_probs(pi);
  const ClassIndex c = alpha.class_index();
  const ClassIndex bit = ClassIndex{1} << k;
  prior_conditional_prob_log(lp, c, k);
  return attribute_posterior_gdina(y_row, c, k, q, table, lp[c | bit], lp[c & ~bit]);
}

inline double attribute_posterior_dina(std::span<const std::uint8_t> y_row, const AttributeProfile& alpha,
                                       int k, const QMatrix& q, std::span<const DinaItemParams> params,
                                       const PopulationDist& pi) {
  detail::check_attribute_args(y_row, alpha, k, q, pi);
  const ItemLogLikTable table(q, params);
  const auto lp = detail::log_probs(pi);
  const ClassIndex c = alpha.class_index();
  const ClassIndex bit = ClassIndex{1} << k;
  prior_conditional_prob_log(lp, c, k);
  return attribute_posterior_dina(y_row, c, k, q, table, lp[c | bit], lp[c & ~bit]);
}

inline int sample_attribute_gdina(RngStream& rng, std::span<const std::uint8_t> y_row,
                                  const AttributeProfile& alpha, int k, const QMatrix& q,
                                  std::span<const GdinaItemParams> params, const PopulationDist& pi) {
  return rng.uniform() < attribute_posterior_gdina(y_row, alpha, k, q, params, pi) ? 1 : 0;
}

inline int sample_attribute_dina(RngStream& rng, std::span<const std::uint8_t> y_row,
                                 const AttributeProfile& alpha, int k, const QMatrix& q,
                                 std::span<const DinaItemParams> params, const PopulationDist& pi) {
  return rng.uniform() < attribute_posterior_dina(y_row, alpha, k, q, params, pi) ? 1 : 0;
}

/// Unnormalised log posterior weight of every class for one examinee.
inline std::vector<double> profile_log_weights(std::span<const std::uint8_t> y_row, const QMatrix& q,
                                               const ItemLogLikTable& table,
                                               std::span<const double> log_pi) {
  std::vector<double> w(log_pi.begin(), log_pi.end());
  for (ClassIndex c = 0; c < w.size(); ++c) {
    if (w[c] == neg_inf) continue;
    for (std::size_t j = 0; j < q.items(); ++j) w[c] += table.log_prob(j, q.reduced_index(j, c), y_row[j]);
  }
  return w;
}

/// Categorical draw from unnormalised log weights.
inline ClassIndex sample_log_categorical(RngStream& rng, std::span<const double> log_w) {
  const double hi = *std::max_element(log_w.begin(), log_w.end());
  if (!std::isfinite(hi)) throw DataError("categorical weights are all zero or non-finite");
  double total = 0.0;
  for (double v : log_w) total += std::exp(v - hi);
  double u = rng.uniform() * total;
  ClassIndex last = 0;
  for (ClassIndex c = 0; c < log_w.size(); ++c) {
    if (log_w[c] == neg_inf) continue;
    last = c;
    u -= std::exp(log_w[c] - hi);
    if (u <= 0.0) return c;
  }
  return last;
}

// ---------------------------------------------------------------------------
// Augmented data and item parameters
// ---------------------------------------------------------------------------

/// N x J latent probit variables.
class AugmentedData {
 public:
  AugmentedData() = default;
  AugmentedData(std::size_t n, std::size_t j) : n_(n), j_(j), z_(n * j, 0.0) {}
  double operator()(std::size_t i, std::size_t j) const { return z_[i * j_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return z_[i * j_ + j]; }
  std::size_t examinees() const noexcept { return n_; }
  std::size_t items() const noexcept { return j_; }
  Eigen::VectorXd column(std::size_t j) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i) v(static_cast<Eigen::Index>(i)) = z_[i * j_ + j];
    return v;
  }

 private:
  std::size_t n_ = 0, j_ = 0;
  std::vector<double> z_;
};

inline const Interval& response_interval(int y) {
  static const Interval positive{0.0, std::numeric_limits<double>::infinity()};
  static const Interval nonpositive = Interval::nonpositive();
  return y ? positive : nonpositive;
}

inline AugmentedData sample_augmented(RngStream& rng, const ResponseMatrix& y, const AttributeMatrix& alpha,
                                      const QMatrix& q, std::span<const GdinaItemParams> params) {
  check_dims(y, q);
  if (alpha.examinees() != y.examinees() || alpha.attributes() != q.attributes())
    throw DataError("sample_augmented: attribute matrix does not match responses / Q-matrix");
  if (params.size() != q.items()) throw DataError("sample_augmented: item parameter count differs from J");
  std::vector<std::vector<double>> eta(q.items());
  for (std::size_t j = 0; j < q.items(); ++j) eta[j] = gdina_predictor_table(params[j], q.kstar(j));
  AugmentedData z(y.examinees(), y.items());
  for (std::size_t i = 0; i < y.examinees(); ++i) {
    const ClassIndex c = alpha.class_index(i);
    for (std::size_t j = 0; j < q.items(); ++j)
      z(i, j) = trunc_normal_sample(rng, eta[j][q.reduced_index(j, c)], 1.0, response_interval(y(i, j)));
  }
  return z;
}

/// Design matrix X_j (N x 2^K_j*) from the current profiles.
inline Eigen::MatrixXd item_design_matrix(const AttributeMatrix& alpha, const QMatrix& q, std::size_t j) {
  const int kstar = q.kstar(j);
  const auto& terms = canonical_terms(kstar);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(alpha.examinees()), static_cast<Eigen::Index>(terms.size()));
  for (std::size_t i = 0; i < alpha.examinees(); ++i) {
    const ClassIndex r = q.reduced_index(j, alpha.class_index(i));
    for (std::size_t t = 0; t < terms.size(); ++t)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = (r & terms[t]) == terms[t] ? 1.0 : 0.0;
  }
  return X;
}

/// Draw lambda_j from its regression full conditional, restricted to `trunc`
/// by sequential conditionals when it is not unbounded.
inline GdinaItemParams sample_lambda_from_posterior(RngStream& rng, const BlrPosterior& post,
                                                    const TruncationSpec& trunc, int refinement_sweeps = 0) {
  GdinaItemParams out;
  Eigen::VectorXd draw;
  if (trunc.is_unbounded())
    draw = mvn_sample(rng, post.mean, post.chol_lower);
  else
    draw = trunc_mvn_sequential_sample(rng, post.mean, post.covariance, trunc, refinement_sweeps);
  out.coeffs.assign(draw.data(), draw.data() + draw.size());
  return out;
}

inline GdinaItemParams sample_lambda(RngStream& rng, const Eigen::VectorXd& z, const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                                     const TruncationSpec& trunc, int refinement_sweeps = 0) {
  return sample_lambda_from_posterior(rng, blr_posterior(X, z, mu0, sigma0), trunc, refinement_sweeps);
}

/// Dirichlet(delta + class counts).
inline PopulationDist sample_pi(RngStream& rng, std::span<const double> delta,
                                std::span<const ClassIndex> classes) {
  std::vector<double> post(delta.begin(), delta.end());
  for (ClassIndex c : classes) {
    if (c >= post.size()) throw DataError("class index outside the Dirichlet dimension");
    post[c] += 1.0;
  }
  return dirichlet_sample(rng, post);
}

/// Counts of (eta, Y) for one item.
struct DinaItemCounts {
  std::size_t eta0_y1 = 0, eta0_y0 = 0, eta1_y1 = 0, eta1_y0 = 0;
};

inline DinaItemParams sample_dina_item(RngStream& rng, const DinaItemCounts& n, const PriorConfig& prior) {
  DinaItemParams p;
  p.slip = beta_sample(rng, prior.a_s + static_cast<double>(n.eta1_y0), prior.b_s + static_cast<double>(n.eta1_y1));
  const double a = prior.a_g + static_cast<double>(n.eta0_y1);
  const double b = prior.b_g + static_cast<double>(n.eta0_y0);
  p.guess = prior.dina_monotone ? beta_sample_below(rng, a, b, 1.0 - p.slip) : beta_sample(rng, a, b);
  return p;
}

inline std::vector<DinaItemParams> sample_dina_item_params(RngStream& rng, const ResponseMatrix& y,
                                                           const AttributeMatrix& alpha, const QMatrix& q,
                                                           const PriorConfig& prior) {
  check_dims(y, q);
  if (alpha.examinees() != y.examinees() || alpha.attributes() != q.attributes())
    throw DataError("sample_dina_item_params: attribute matrix does not match");
  std::vector<DinaItemCounts> counts(q.items());
  for (std::size_t i = 0; i < y.examinees(); ++i) {
    const ClassIndex c = alpha.class_index(i);
    for (std::size_t j = 0; j < q.items(); ++j) {
      const bool eta = (c & q.mask(j)) == q.mask(j);
      auto& n = counts[j];
      if (eta) (y(i, j) ? n.eta1_y1 : n.eta1_y0)++;
      else (y(i, j) ? n.eta0_y1 : n.eta0_y0)++;
    }
  }
  std::vector<DinaItemParams> out(q.items());
  for (std::size_t j = 0; j < q.items(); ++j) out[j] = sample_dina_item(rng, counts[j], prior);
  return out;
}

// ---------------------------------------------------------------------------
// Chain runner
// ---------------------------------------------------------------------------

namespace detail {

/// Runs fn(block, worker) over blocks [0, blocks) on up to `workers` threads.
/// Each block is handled by exactly one thread, in one call.
template <class Fn>
void parallel_blocks(int workers, std::size_t blocks, Fn&& fn) {
  const std::size_t W = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), blocks);
  if (W <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b, std::size_t{0});
    return;
  }
  std::vector<std::exception_ptr> errors(W);
  std::vector<std::thread> pool;
  pool.reserve(W);
  for (std::size_t w = 0; w < W; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t b = w * blocks / W; b < (w + 1) * blocks / W; ++b) fn(b, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

class Clock {
 public:
  Clock() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

class GibbsEngine {
 public:
  GibbsEngine(const RngStream& rng, const ResponseMatrix& y, const QMatrix& q, const PriorConfig& prior,
              const SamplerOptions& opt, ModelKind model, Method method, const ChainInit& init)
      : y_(y),
        q_(q),
        prior_(prior),
        opt_(opt),
        model_(model),
        method_(method),
        N_(y.examinees()),
        J_(q.items()),
        K_(q.attributes()),
        C_(num_classes(q.attributes())),
        main_(rng.split(0)),
        table_(q) {
    validate();
    const std::size_t blocks = (N_ + examinee_block - 1) / examinee_block;
    for (std::size_t b = 0; b < blocks; ++b) block_rng_.push_back(rng.split(b + 1));
    delta_ = prior_.delta_vector(C_);
    order_.resize(static_cast<std::size_t>(K_));
    std::iota(order_.begin(), order_.end(), 0);
    red_.assign(N_ * J_, 0);
    initialise(init);
  }

  ChainStore run() {
    ChainStore store(model_, method_, q_, N_, opt_.iterations, opt_.burn_in, opt_.thin,
                     C_ <= opt_.max_stored_pi_classes, opt_.keep_alpha_draws);
    Clock total;
    std::vector<double> pi_lin(C_);
    for (long t = 1; t <= opt_.iterations; ++t) {
      iteration_ = t;
      Clock clock;
      if (model_ == ModelKind::gdina) {
        augment();
        times_.augment += clock.lap();
        update_lambda();
        times_.items += clock.lap();
        update_attributes();
        times_.attributes += clock.lap();
      } else {
        update_attributes();
        times_.attributes += clock.lap();
        update_dina_items();
        times_.items += clock.lap();
      }
      update_population();
      times_.population += clock.lap();
      if (store.retains(t)) {
        reported_pi(pi_lin);
        store.record(t, dina_, gdina_, pi_lin, cls_);
      }
      if (opt_.progress && t % 100 == 0) opt_.progress(t);
    }
    times_.total = total.lap();
    store.work = work_;
    store.seconds = times_;
    return store;
  }

 private:
  void validate() {
    prior_.validate();
    check_dims(y_, q_);
    if (N_ < 1) throw DataError("no examinees");
    for (std::uint8_t v : y_.matrix().data())
      if (v > 1) throw DataError("response matrix has a non-binary entry");
    if (opt_.workers < 1) throw ConfigError("workers: must be >= 1");
    if (method_ == Method::simultaneous && K_ > opt_.simultaneous_max_attributes)
      throw ConfigError("simultaneous sampling supports at most " +
                        std::to_string(opt_.simultaneous_max_attributes) + " attributes (K = " +
                        std::to_string(K_) + "); use the sequential method");
    if (model_ == ModelKind::gdina)
      for (std::size_t j = 0; j < J_; ++j)
        if (q_.kstar(j) > max_gdina_item_attributes)
          throw ConfigError("GDINA items may require at most " + std::to_string(max_gdina_item_attributes) +
                            " attributes");
  }

  void initialise(const ChainInit& init) {
    if (init.classes) {
      if (init.classes->size() != N_) throw DataError("initial classes: expected N entries");
      for (ClassIndex c : *init.classes)
        if (c >= C_) throw DataError("initial classes: index out of range");
      cls_ = *init.classes;
    } else {
      cls_.resize(N_);
      for (auto& c : cls_) {
        c = 0;
        for (int k = 0; k < K_; ++k) c |= static_cast<ClassIndex>(main_.bernoulli(0.5)) << k;
      }
    }
    log_pi_.assign(C_, -std::log(static_cast<double>(C_)));
    if (init.pi) {
      if (init.pi->size() != C_) throw DataError("initial pi: expected 2^K entries");
      log_pi_ = log_probs(PopulationDist(*init.pi));
    }
    attr_prob_.assign(static_cast<std::size_t>(K_), 0.5);

    if (model_ == ModelKind::dina) {
      if (init.dina) {
        if (init.dina->size() != J_) throw DataError("initial item parameters: expected J entries");
        dina_ = *init.dina;
      } else {
        dina_.resize(J_);
        for (auto& p : dina_) {
          p.guess = 0.4 * main_.uniform();
          p.slip = 0.4 * main_.uniform();
        }
      }
      for (std::size_t j = 0; j < J_; ++j) table_.set_dina(j, dina_[j]);
    } else {
      prior_mean_.resize(J_);
      prior_cov_.resize(J_);
      trunc_.resize(J_);
      eta_.resize(J_);
      for (std::size_t j = 0; j < J_; ++j) {
        prior_mean_[j] = prior_.lambda_prior_mean(q_.kstar(j));
        prior_cov_[j] = prior_.lambda_prior_cov(q_.kstar(j));
        trunc_[j] = prior_.truncation_for(j, q_.kstar(j));
      }
      if (init.gdina) {
        if (init.gdina->size() != J_) throw DataError("initial item parameters: expected J entries");
        gdina_ = *init.gdina;
      } else {
        gdina_.resize(J_);
        for (std::size_t j = 0; j < J_; ++j) {
          BlrPosterior prior_as_post{prior_mean_[j], prior_cov_[j],
                                     Eigen::MatrixXd(prior_cov_[j].llt().matrixL())};
          gdina_[j] = sample_lambda_from_posterior(main_, prior_as_post, trunc_[j], prior_.refinement_sweeps);
        }
      }
      for (std::size_t j = 0; j < J_; ++j) set_predictors(j);
    }
  }

  void set_predictors(std::size_t j) {
    eta_[j] = gdina_predictor_table(gdina_[j], q_.kstar(j));
    table_.set_gdina_predictors(j, eta_[j]);
  }

  std::size_t blocks() const { return block_rng_.size(); }

  void augment() {
    z_.resize(N_ * J_);
    parallel_blocks(opt_.workers, blocks(), [&](std::size_t b, std::size_t) {
      RngStream& rng = block_rng_[b];
      const std::size_t end = std::min(N_, (b + 1) * examinee_block);
      for (std::size_t i = b * examinee_block; i < end; ++i) {
        const ClassIndex c = cls_[i];
        for (std::size_t j = 0; j < J_; ++j) {
          const ClassIndex r = q_.reduced_index(j, c);
          red_[i * J_ + j] = r;
          z_[i * J_ + j] = trunc_normal_sample(rng, eta_[j][r], 1.0, response_interval(y_(i, j)));
        }
      }
    });
  }

  void update_lambda() {
    for (std::size_t j = 0; j < J_; ++j) {
      const int kstar = q_.kstar(j);
      const std::size_t R = std::size_t{1} << kstar;
      // Superset sums of counts and Z totals give X'X and X'Z directly.
      std::vector<double> n(R, 0.0), s(R, 0.0);
      for (std::size_t i = 0; i < N_; ++i) {
        const ClassIndex r = red_[i * J_ + j];
        n[r] += 1.0;
        s[r] += z_[i * J_ + j];
      }
      for (int b = 0; b < kstar; ++b)
        for (std::size_t r = 0; r < R; ++r)
          if (!(r >> b & 1u)) {
            n[r] += n[r | (std::size_t{1} << b)];
            s[r] += s[r | (std::size_t{1} << b)];
          }
      const auto& terms = canonical_terms(kstar);
      const auto P = static_cast<Eigen::Index>(terms.size());
      Eigen::MatrixXd gram(P, P);
      Eigen::VectorXd xtz(P);
      for (Eigen::Index t = 0; t < P; ++t) {
        xtz(t) = s[terms[static_cast<std::size_t>(t)]];
        for (Eigen::Index u = 0; u < P; ++u)
          gram(t, u) = n[terms[static_cast<std::size_t>(t)] | terms[static_cast<std::size_t>(u)]];
      }
      const auto post = blr_posterior_from_gram(gram, xtz, prior_mean_[j], prior_cov_[j]);
      gdina_[j] = sample_lambda_from_posterior(main_, post, trunc_[j], prior_.refinement_sweeps);
      for (double v : gdina_[j].coeffs)
        if (!std::isfinite(v))
          throw NumericalError("non-finite coefficient drawn for item " + std::to_string(j + 1), iteration_);
      set_predictors(j);
    }
  }

  void update_dina_items() {
    std::vector<DinaItemCounts> counts(J_);
    for (std::size_t i = 0; i < N_; ++i) {
      const ClassIndex c = cls_[i];
      for (std::size_t j = 0; j < J_; ++j) {
        const bool eta = (c & q_.mask(j)) == q_.mask(j);
        auto& n = counts[j];
        if (eta) (y_(i, j) ? n.eta1_y1 : n.eta1_y0)++;
        else (y_(i, j) ? n.eta0_y1 : n.eta0_y0)++;
      }
    }
    for (std::size_t j = 0; j < J_; ++j) {
      dina_[j] = sample_dina_item(main_, counts[j], prior_);
      if (!std::isfinite(dina_[j].guess) || !std::isfinite(dina_[j].slip))
        throw NumericalError("non-finite guess/slip for item " + std::to_string(j + 1), iteration_);
      table_.set_dina(j, dina_[j]);
    }
  }

  void update_attributes() {
    if (opt_.random_scan && method_ != Method::simultaneous)
      for (std::size_t k = order_.size(); k > 1; --k)
        std::swap(order_[k - 1], order_[static_cast<std::size_t>(main_.uniform() * static_cast<double>(k))]);
    std::vector<double> log_p1(static_cast<std::size_t>(K_)), log_p0(static_cast<std::size_t>(K_));
    if (method_ == Method::independent)
      for (int k = 0; k < K_; ++k) {
        log_p1[k] = std::log(attr_prob_[k]);
        log_p0[k] = std::log1p(-attr_prob_[k]);
      }
    const std::size_t W = std::min<std::size_t>(static_cast<std::size_t>(opt_.workers), blocks());
    std::vector<WorkCounters> work(std::max<std::size_t>(W, 1));
    parallel_blocks(opt_.workers, blocks(), [&](std::size_t b, std::size_t w) {
      RngStream& rng = block_rng_[b];
      WorkCounters& wc = work[w];
      std::vector<double> logw;
      const std::size_t end = std::min(N_, (b + 1) * examinee_block);
      for (std::size_t i = b * examinee_block; i < end; ++i) {
        const auto y_row = y_.row(i);
        if (method_ == Method::simultaneous) {
          logw = profile_log_weights(y_row, q_, table_, log_pi_);
          cls_[i] = sample_log_categorical(rng, logw);
          wc.attribute_updates += 1;
          wc.pi_lookups += C_;
          wc.likelihood_terms += C_ * J_;
          continue;
        }
        ClassIndex c = cls_[i];
        for (int k : order_) {
          const ClassIndex bit = ClassIndex{1} << k;
          double l1, l0;
          if (method_ == Method::independent) {
            l1 = log_p1[k];
            l0 = log_p0[k];
          } else {
            l1 = log_pi_[c | bit];
            l0 = log_pi_[c & ~bit];
            wc.pi_lookups += 2;
          }
          const double p = model_ == ModelKind::dina
                               ? attribute_posterior_dina(y_row, c, k, q_, table_, l1, l0, &wc)
                               : attribute_posterior_gdina(y_row, c, k, q_, table_, l1, l0, &wc);
          if (std::isnan(p))
            throw NumericalError("undefined attribute conditional for examinee " + std::to_string(i + 1) +
                                     ", attribute " + std::to_string(k + 1),
                                 iteration_);
          c = rng.uniform() < p ? (c | bit) : (c & ~bit);
          ++wc.attribute_updates;
        }
        cls_[i] = c;
      }
    });
    for (const auto& wc : work) work_ += wc;
  }

  void update_population() {
    if (method_ == Method::independent) {
      for (int k = 0; k < K_; ++k) {
        double m = 0.0;
        for (ClassIndex c : cls_) m += (c >> k) & 1u;
        attr_prob_[k] = beta_sample(main_, 1.0 + m, 1.0 + static_cast<double>(N_) - m);
        if (!(attr_prob_[k] > 0.0 && attr_prob_[k] < 1.0)) {
          // Keep log p and log(1-p) finite.
          attr_prob_[k] = std::min(std::max(attr_prob_[k], 1e-300), 1.0 - 1e-16);
        }
      }
      return;
    }
    std::vector<double> post(delta_);
    for (ClassIndex c : cls_) post[c] += 1.0;
    log_pi_ = dirichlet_sample_log(main_, post);
    for (double v : log_pi_)
      if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
        throw NumericalError("non-finite population draw", iteration_);
  }

  void reported_pi(std::vector<double>& out) const {
    if (method_ == Method::independent) {
      std::fill(out.begin(), out.end(), 0.0);
      for (ClassIndex c : cls_) out[c] += 1.0;
      for (double& v : out) v /= static_cast<double>(N_);
      return;
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < C_; ++c) sum += out[c] = std::exp(log_pi_[c]);
    for (double& v : out) v /= sum;
  }

  const ResponseMatrix& y_;
  const QMatrix& q_;
  PriorConfig prior_;
  SamplerOptions opt_;
  ModelKind model_;
  Method method_;
  std::size_t N_, J_;
  int K_;
  std::size_t C_;
  RngStream main_;
  std::vector<RngStream> block_rng_;
  ItemLogLikTable table_;
  std::vector<double> delta_;
  std::vector<int> order_;
  std::vector<ClassIndex> cls_;
  std::vector<double> log_pi_;
  std::vector<double> attr_prob_;
  std::vector<DinaItemParams> dina_;
  std::vector<GdinaItemParams> gdina_;
  std::vector<Eigen::VectorXd> prior_mean_;
  std::vector<Eigen::MatrixXd> prior_cov_;
  std::vector<TruncationSpec> trunc_;
  std::vector<std::vector<double>> eta_;
  std::vector<double> z_;
  std::vector<ClassIndex> red_;
  WorkCounters work_;
  PhaseTimes times_;
  long iteration_ = 0;
};

}  // namespace detail

/// One chain. All randomness derives from `rng`'s seed: the item, population
/// and initialisation draws use rng.split(0); examinee block b uses rng.split(b + 1).
inline ChainStore run_chain(const RngStream& rng, const ResponseMatrix& y, const QMatrix& q,
                            const PriorConfig& prior, const SamplerOptions& options, ModelKind model,
                            Method method, const ChainInit& init = {}) {
  detail::GibbsEngine engine(rng, y, q, prior, options, model, method, init);
  return engine.run();
}

inline ChainStore run_sequential_gdina(const RngStream& rng, const ResponseMatrix& y, const QMatrix& q,
                                       const PriorConfig& prior, const SamplerOptions& options,
                                       const ChainInit& init = {}) {
  return run_chain(rng, y, q, prior, options, ModelKind::gdina, Method::sequential, init);
}

inline ChainStore run_sequential_dina(const RngStream& rng, const ResponseMatrix& y, const QMatrix& q,
                                      const PriorConfig& prior, const SamplerOptions& options,
                                      const ChainInit& init = {}) {
  return run_chain(rng, y, q, prior, options, ModelKind::dina, Method::sequential, init);
}

inline ChainStore run_simultaneous(const RngStream& rng, const ResponseMatrix& y, const QMatrix& q,
                                   const PriorConfig& prior, const SamplerOptions& options, ModelKind model,
                                   const ChainInit& init = {}) {
  return run_chain(rng, y, q, prior, options, model, Method::simultaneous, init);
}

inline ChainStore run_independent(const RngStream& rng, const ResponseMatrix& y, const QMatrix& q,
                                  const PriorConfig& prior, const SamplerOptions& options, ModelKind model,
                                  const ChainInit& init = {}) {
  return run_chain(rng, y, q, prior, options, model, Method::independent, init);
}

/// Independent chains from one seed; chain c uses RngStream(seed).split(c).
/// Chains run concurrently when `parallel` is set.
inline std::vector<ChainStore> run_chains(std::uint64_t seed, int chains, const ResponseMatrix& y,
                                          const QMatrix& q, const PriorConfig& prior,
                                          const SamplerOptions& options, ModelKind model, Method method,
                                          bool parallel = false) {
  if (chains < 1) throw ConfigError("chains: must be >= 1");
  std::vector<ChainStore> out(static_cast<std::size_t>(chains));
  const RngStream root(seed);
  detail::parallel_blocks(parallel ? chains : 1, out.size(), [&](std::size_t c, std::size_t) {
    out[c] = run_chain(root.split(c), y, q, prior, options, model, method);
  });
  return out;
}

}  // namespace seqcdm

#endif  // SEQCDM_SAMPLERS_HPP
