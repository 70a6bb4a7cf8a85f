#ifndef SEQCDM_CHAIN_HPP
#define SEQCDM_CHAIN_HPP

// Retained MCMC draws with burn-in and thinning bookkeeping.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqcdm/errors.hpp"
#include "seqcdm/model.hpp"

namespace seqcdm {

enum class ModelKind { dina, gdina };
enum class Method { sequential, simultaneous, independent };

inline std::string to_string(ModelKind m) { return m == ModelKind::dina ? "dina" : "gdina"; }
inline std::string to_string(Method m) {
  switch (m) {
    case Method::sequential: return "sequential";
    case Method::simultaneous: return "simultaneous";
    case Method::independent: return "independent";
  }
  return "?";
}
inline ModelKind parse_model(const std::string& s) {
  if (s == "dina") return ModelKind::dina;
  if (s == "gdina") return ModelKind::gdina;
  throw ConfigError("model: expected dina or gdina, got '" + s + "'");
}
inline Method parse_method(const std::string& s) {
  if (s == "sequential") return Method::sequential;
  if (s == "simultaneous") return Method::simultaneous;
  if (s == "independent") return Method::independent;
  throw ConfigError("method: expected sequential, simultaneous or independent, got '" + s + "'");
}

/// Work counters for one chain.
struct WorkCounters {
  std::uint64_t attribute_updates = 0;  // single-attribute (or whole-profile) draws
  std::uint64_t pi_lookups = 0;         // entries of pi read by the attribute step
  std::uint64_t likelihood_terms = 0;   // item likelihood pairs evaluated by the attribute step

  WorkCounters& operator+=(const WorkCounters& o) {
    attribute_updates += o.attribute_updates;
    pi_lookups += o.pi_lookups;
    likelihood_terms += o.likelihood_terms;
    return *this;
  }
};

struct PhaseTimes {
  double augment = 0, items = 0, attributes = 0, population = 0, total = 0;
};

class ChainStore {
 public:
  ChainStore() = default;
  ChainStore(ModelKind model, Method method, const QMatrix& q, std::size_t examinees,
             long iterations, long burn_in, long thin, bool store_pi, bool keep_alpha)
      : model_(model),
        method_(method),
        K_(q.attributes()),
        N_(examinees),
        J_(q.items()),
        iterations_(iterations),
        burn_in_(burn_in),
        thin_(thin),
        store_pi_(store_pi),
        keep_alpha_(keep_alpha) {
    if (iterations < 1) throw ConfigError("iters: must be >= 1");
    if (burn_in < 0 || burn_in >= iterations)
      throw ConfigError("burn_in: must satisfy 0 <= burn_in < iters");
    if (thin < 1) throw ConfigError("thin: must be >= 1");
    lambda_offsets_.assign(J_ + 1, 0);
    for (std::size_t j = 0; j < J_; ++j)
      lambda_offsets_[j + 1] = lambda_offsets_[j] + (model == ModelKind::gdina ? q.reduced_classes(j) : 0);
    const std::size_t C = num_classes(K_);
    pi_sum_.assign(C, 0.0);
    alpha_count_.assign(N_ * static_cast<std::size_t>(K_), 0);
    const auto R = expected_retained();
    if (model == ModelKind::dina) {
      guess_.reserve(R * J_);
      slip_.reserve(R * J_);
    } else {
      lambda_.reserve(R * lambda_offsets_.back());
    }
    if (store_pi_) pi_.reserve(R * C);
    if (keep_alpha_) alpha_.reserve(R * N_);
  }

  /// For rebuilding a chain from files: per-item coefficient counts replace the Q-matrix.
  ChainStore(ModelKind model, Method method, int attributes, std::size_t examinees,
             const std::vector<std::size_t>& lambda_widths, long iterations, long burn_in, long thin,
             bool store_pi)
      : model_(model),
        method_(method),
        K_(attributes),
        N_(examinees),
        J_(lambda_widths.size()),
        iterations_(iterations),
        burn_in_(burn_in),
        thin_(thin),
        store_pi_(store_pi) {
    if (burn_in < 0 || burn_in >= iterations || thin < 1) throw DataError("inconsistent chain lengths");
    lambda_offsets_.assign(J_ + 1, 0);
    for (std::size_t j = 0; j < J_; ++j)
      lambda_offsets_[j + 1] = lambda_offsets_[j] + (model == ModelKind::gdina ? lambda_widths[j] : 0);
    pi_sum_.assign(num_classes(K_), 0.0);
    alpha_count_.assign(N_ * static_cast<std::size_t>(K_), 0);
  }

  /// Appends one retained draw of item parameters (and pi when stored) without touching alpha.
  void append_draw(long t, std::span<const double> guess, std::span<const double> slip,
                   std::span<const double> lambda_flat, std::span<const double> pi) {
    iteration_.push_back(t);
    if (model_ == ModelKind::dina) {
      if (guess.size() != J_ || slip.size() != J_) throw DataError("draw has the wrong number of items");
      guess_.insert(guess_.end(), guess.begin(), guess.end());
      slip_.insert(slip_.end(), slip.begin(), slip.end());
    } else {
      if (lambda_flat.size() != lambda_offsets_.back()) throw DataError("draw has the wrong coefficient count");
      lambda_.insert(lambda_.end(), lambda_flat.begin(), lambda_flat.end());
    }
    if (store_pi_) {
      if (pi.size() != classes()) throw DataError("draw has the wrong number of classes");
      pi_.insert(pi_.end(), pi.begin(), pi.end());
      for (std::size_t c = 0; c < pi.size(); ++c) pi_sum_[c] += pi[c];
    }
  }
  void set_pi_sum(std::vector<double> sum) {
    if (sum.size() != classes()) throw DataError("pi sum has the wrong length");
    pi_sum_ = std::move(sum);
  }
  void set_alpha_counts(std::vector<std::uint32_t> counts) {
    if (counts.size() != alpha_count_.size()) throw DataError("alpha counts have the wrong shape");
    alpha_count_ = std::move(counts);
  }
  void set_alpha_draws(std::vector<ClassIndex> draws) {
    if (draws.size() != retained() * N_) throw DataError("alpha draws have the wrong shape");
    alpha_ = std::move(draws);
    keep_alpha_ = true;
  }

  /// 1-based iteration t is retained iff t > burn_in and (t - burn_in) % thin == 0.
  bool retains(long t) const noexcept { return t > burn_in_ && (t - burn_in_) % thin_ == 0; }
  std::size_t expected_retained() const noexcept {
    return static_cast<std::size_t>((iterations_ - burn_in_) / thin_);
  }

  void record(long t, std::span<const DinaItemParams> dina, std::span<const GdinaItemParams> gdina,
              std::span<const double> pi, std::span<const ClassIndex> classes) {
    iteration_.push_back(t);
    if (model_ == ModelKind::dina) {
      for (const auto& p : dina) {
        guess_.push_back(p.guess);
        slip_.push_back(p.slip);
      }
    } else {
      for (const auto& p : gdina) lambda_.insert(lambda_.end(), p.coeffs.begin(), p.coeffs.end());
    }
    for (std::size_t c = 0; c < pi.size(); ++c) pi_sum_[c] += pi[c];
    if (store_pi_) pi_.insert(pi_.end(), pi.begin(), pi.end());
    for (std::size_t i = 0; i < classes.size(); ++i)
      for (int k = 0; k < K_; ++k) alpha_count_[i * K_ + k] += (classes[i] >> k) & 1u;
    if (keep_alpha_) alpha_.insert(alpha_.end(), classes.begin(), classes.end());
  }

  ModelKind model() const noexcept { return model_; }
  Method method() const noexcept { return method_; }
  int attributes() const noexcept { return K_; }
  std::size_t examinees() const noexcept { return N_; }
  std::size_t items() const noexcept { return J_; }
  std::size_t classes() const noexcept { return num_classes(K_); }
  long iterations() const noexcept { return iterations_; }
  long burn_in() const noexcept { return burn_in_; }
  long thin() const noexcept { return thin_; }
  std::size_t retained() const noexcept { return iteration_.size(); }
  const std::vector<long>& retained_iterations() const noexcept { return iteration_; }

  double guess(std::size_t d, std::size_t j) const { return guess_[d * J_ + j]; }
  double slip(std::size_t d, std::size_t j) const { return slip_[d * J_ + j]; }
  std::span<const double> lambda(std::size_t d, std::size_t j) const {
    const std::size_t width = lambda_offsets_.back();
    return {lambda_.data() + d * width + lambda_offsets_[j],
            lambda_offsets_[j + 1] - lambda_offsets_[j]};
  }
  std::size_t lambda_width(std::size_t j) const { return lambda_offsets_[j + 1] - lambda_offsets_[j]; }

  bool has_pi_draws() const noexcept { return store_pi_; }
  std::span<const double> pi(std::size_t d) const {
    if (!store_pi_) throw DataError("pi draws were not stored for this chain");
    return {pi_.data() + d * classes(), classes()};
  }
  const std::vector<double>& pi_sum() const noexcept { return pi_sum_; }

  bool has_alpha_draws() const noexcept { return keep_alpha_; }
  std::span<const ClassIndex> alpha_draw(std::size_t d) const {
    if (!keep_alpha_) throw DataError("alpha draws were not stored for this chain");
    return {alpha_.data() + d * N_, N_};
  }
  /// Number of retained draws with alpha_ik = 1.
  std::uint32_t alpha_count(std::size_t i, int k) const { return alpha_count_[i * K_ + k]; }

  WorkCounters work;
  PhaseTimes seconds;

 private:
  ModelKind model_ = ModelKind::dina;
  Method method_ = Method::sequential;
  int K_ = 0;
  std::size_t N_ = 0, J_ = 0;
  long iterations_ = 0, burn_in_ = 0, thin_ = 1;
  bool store_pi_ = true, keep_alpha_ = false;
  std::vector<long> iteration_;
  std::vector<double> guess_, slip_, lambda_;
  std::vector<std::size_t> lambda_offsets_;
  std::vector<double> pi_, pi_sum_;
  std::vector<std::uint32_t> alpha_count_;
  std::vector<ClassIndex> alpha_;
};

}  // namespace seqcdm

#endif  // SEQCDM_CHAIN_HPP
