#ifndef SEQCDM_MODEL_HPP
#define SEQCDM_MODEL_HPP

// Measurement model for DINA and probit-GDINA: Q-matrix bookkeeping,
// attribute profiles and class indices, ideal responses, design vectors,
// response probabilities and (conditional / marginal) log-likelihoods.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqcdm/errors.hpp"
#include "seqcdm/logspace.hpp"
#include "seqcdm/normal.hpp"

namespace seqcdm {

using Bits = std::vector<std::uint8_t>;
using ClassIndex = std::uint32_t;

inline constexpr int max_attributes = 30;
/// Largest K_j* for which GDINA coefficient vectors are materialised.
inline constexpr int max_gdina_item_attributes = 16;

// ---------------------------------------------------------------------------
// Binary matrices
// ---------------------------------------------------------------------------

class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(std::size_t rows, std::size_t cols, std::uint8_t fill = 0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static BinaryMatrix from_rows(const std::vector<Bits>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    BinaryMatrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols)
        throw DataError("ragged binary matrix: row " + std::to_string(r + 1) + " has " +
                        std::to_string(rows[r].size()) + " entries, expected " +
                        std::to_string(cols));
      for (std::size_t c = 0; c < cols; ++c) {
        if (rows[r][c] > 1)
          throw DataError("non-binary entry at row " + std::to_string(r + 1) + ", column " +
                          std::to_string(c + 1));
        m(r, c) = rows[r][c];
      }
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::uint8_t& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::uint8_t operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const std::uint8_t> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<std::uint8_t> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  const std::vector<std::uint8_t>& data() const noexcept { return data_; }

  friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> data_;
};

// ---------------------------------------------------------------------------
// Class indexing: c = sum_k alpha_k 2^(k-1), held zero-based.
// ---------------------------------------------------------------------------

inline ClassIndex encode_profile(std::span<const std::uint8_t> bits) {
  if (bits.size() > static_cast<std::size_t>(max_attributes))
    throw DataError("attribute profile longer than " + std::to_string(max_attributes));
  ClassIndex c = 0;
  for (std::size_t k = 0; k < bits.size(); ++k) c |= static_cast<ClassIndex>(bits[k] & 1u) << k;
  return c;
}

inline Bits decode_profile(ClassIndex c, int num_attributes) {
  Bits bits(static_cast<std::size_t>(num_attributes));
  for (int k = 0; k < num_attributes; ++k) bits[k] = static_cast<std::uint8_t>((c >> k) & 1u);
  return bits;
}

inline std::size_t num_classes(int num_attributes) {
  return std::size_t{1} << num_attributes;
}

class AttributeProfile {
 public:
  explicit AttributeProfile(Bits bits) : bits_(std::move(bits)) {
    for (auto b : bits_)
      if (b > 1) throw DataError("attribute profile entries must be 0 or 1");
  }
  static AttributeProfile from_class(ClassIndex c, int num_attributes) {
    return AttributeProfile(decode_profile(c, num_attributes));
  }

  ClassIndex class_index() const { return encode_profile(bits_); }
  /// One-based class number as used in reports.
  std::size_t class_number() const { return std::size_t{class_index()} + 1; }

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t operator[](std::size_t k) const { return bits_[k]; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  friend bool operator==(const AttributeProfile&, const AttributeProfile&) = default;

 private:
  Bits bits_;
};

/// N x K attribute profiles.
class AttributeMatrix {
 public:
  AttributeMatrix() = default;
  AttributeMatrix(std::size_t examinees, int num_attributes)
      : bits_(examinees, static_cast<std::size_t>(num_attributes)) {}
  explicit AttributeMatrix(BinaryMatrix bits) : bits_(std::move(bits)) {}

  static AttributeMatrix from_classes(std::span<const ClassIndex> classes, int num_attributes) {
    AttributeMatrix a(classes.size(), num_attributes);
    for (std::size_t i = 0; i < classes.size(); ++i)
      for (int k = 0; k < num_attributes; ++k)
        a.bits_(i, k) = static_cast<std::uint8_t>((classes[i] >> k) & 1u);
    return a;
  }

  std::size_t examinees() const noexcept { return bits_.rows(); }
  int attributes() const noexcept { return static_cast<int>(bits_.cols()); }

  std::uint8_t operator()(std::size_t i, int k) const { return bits_(i, k); }
  std::uint8_t& operator()(std::size_t i, int k) { return bits_(i, k); }
  std::span<const std::uint8_t> row(std::size_t i) const { return bits_.row(i); }
  ClassIndex class_index(std::size_t i) const { return encode_profile(bits_.row(i)); }

  std::vector<ClassIndex> classes() const {
    std::vector<ClassIndex> out(examinees());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = class_index(i);
    return out;
  }

  const BinaryMatrix& matrix() const noexcept { return bits_; }
  friend bool operator==(const AttributeMatrix&, const AttributeMatrix&) = default;

 private:
  BinaryMatrix bits_;
};

/// N x J binary responses.
class ResponseMatrix {
 public:
  ResponseMatrix() = default;
  ResponseMatrix(std::size_t examinees, std::size_t items) : y_(examinees, items) {}
  explicit ResponseMatrix(BinaryMatrix y) : y_(std::move(y)) {}

  std::size_t examinees() const noexcept { return y_.rows(); }
  std::size_t items() const noexcept { return y_.cols(); }
  std::uint8_t operator()(std::size_t i, std::size_t j) const { return y_(i, j); }
  std::uint8_t& operator()(std::size_t i, std::size_t j) { return y_(i, j); }
  std::span<const std::uint8_t> row(std::size_t i) const { return y_.row(i); }

  const BinaryMatrix& matrix() const noexcept { return y_; }
  friend bool operator==(const ResponseMatrix&, const ResponseMatrix&) = default;

 private:
  BinaryMatrix y_;
};

// ---------------------------------------------------------------------------
// Q-matrix
// ---------------------------------------------------------------------------

class QMatrix {
 public:
  QMatrix() = default;

  explicit QMatrix(BinaryMatrix entries) : q_(std::move(entries)) {
    const std::size_t J = q_.rows();
    const std::size_t K = q_.cols();
    if (J < 1 || K < 1) throw DataError("Q-matrix needs at least one item and one attribute");
    if (K > static_cast<std::size_t>(max_attributes))
      throw DataError("Q-matrix has " + std::to_string(K) + " attributes; at most " +
                      std::to_string(max_attributes) + " are supported");
    required_.resize(J);
    requiring_.resize(K);
    masks_.resize(J, 0);
    position_.assign(J * K, -1);
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t k = 0; k < K; ++k) {
        const auto v = q_(j, k);
        if (v > 1)
          throw DataError("Q-matrix entry (" + std::to_string(j + 1) + "," +
                          std::to_string(k + 1) + ") is not binary");
        if (v) {
          position_[j * K + k] = static_cast<int>(required_[j].size());
          required_[j].push_back(static_cast<int>(k));
          requiring_[k].push_back(static_cast<int>(j));
          masks_[j] |= ClassIndex{1} << k;
        }
      }
      if (required_[j].empty())
        throw DataError("Q-matrix row " + std::to_string(j + 1) +
                        " is all zero; every item must require an attribute");
    }
  }

  static QMatrix from_rows(const std::vector<Bits>& rows) {
    return QMatrix(BinaryMatrix::from_rows(rows));
  }

  std::size_t items() const noexcept { return q_.rows(); }
  int attributes() const noexcept { return static_cast<int>(q_.cols()); }

  std::uint8_t operator()(std::size_t j, int k) const { return q_(j, k); }
  std::span<const std::uint8_t> row(std::size_t j) const { return q_.row(j); }

  /// Attributes required by item j, increasing.
  const std::vector<int>& required(std::size_t j) const { return required_[j]; }
  /// Items requiring attribute k (the set Omega-hat_k), increasing.
  const std::vector<int>& items_requiring(int k) const { return requiring_[k]; }
  int kstar(std::size_t j) const { return static_cast<int>(required_[j].size()); }
  ClassIndex mask(std::size_t j) const { return masks_[j]; }
  /// Position of attribute k inside item j's reduced profile, or -1.
  int reduced_position(std::size_t j, int k) const { return position_[j * q_.cols() + k]; }
  std::size_t reduced_classes(std::size_t j) const { return std::size_t{1} << kstar(j); }

  /// Reduced class index of a full class for item j (bit p = p-th required attribute).
  ClassIndex reduced_index(std::size_t j, ClassIndex full_class) const {
    ClassIndex r = 0;
    const auto& req = required_[j];
    for (std::size_t p = 0; p < req.size(); ++p) r |= ((full_class >> req[p]) & 1u) << p;
    return r;
  }

  std::size_t total_ones() const {
    std::size_t n = 0;
    for (const auto& r : required_) n += r.size();
    return n;
  }

  const BinaryMatrix& matrix() const noexcept { return q_; }
  friend bool operator==(const QMatrix& a, const QMatrix& b) { return a.q_ == b.q_; }

 private:
  BinaryMatrix q_;
  std::vector<std::vector<int>> required_;
  std::vector<std::vector<int>> requiring_;
  std::vector<ClassIndex> masks_;
  std::vector<int> position_;
};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

class PopulationDist {
 public:
  PopulationDist() = default;
  explicit PopulationDist(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw DataError("population distribution is empty");
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw DataError("population distribution has a negative or non-finite entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw DataError("population distribution sums to " + std::to_string(sum));
  }
  static PopulationDist uniform(int num_attributes) {
    const auto C = num_classes(num_attributes);
    return PopulationDist(std::vector<double>(C, 1.0 / static_cast<double>(C)));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t c) const { return probs_[c]; }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  std::vector<double> probs_;
};

struct DinaItemParams {
  double guess = 0.2;
  double slip = 0.2;
};

enum class Link { probit };

/// Coefficients in canonical term order: intercept, main effects, two-way
/// interactions (lexicographic), ..., full K_j*-way interaction.
struct GdinaItemParams {
  std::vector<double> coeffs;
  Link link = Link::probit;
};

struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  static Interval unbounded() { return {}; }
  static Interval nonpositive() { return {-std::numeric_limits<double>::infinity(), 0.0}; }
  static Interval nonnegative() { return {0.0, std::numeric_limits<double>::infinity()}; }

  bool empty() const noexcept { return !(lower <= upper) || (lower == upper && std::isinf(lower)); }
  bool contains(double x) const noexcept { return x >= lower && x <= upper; }
  bool is_unbounded() const noexcept { return std::isinf(lower) && lower < 0 && std::isinf(upper) && upper > 0; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Per-coefficient admissible intervals of one item's lambda vector.
struct TruncationSpec {
  std::vector<Interval> intervals;

  static TruncationSpec unbounded(std::size_t n) { return {std::vector<Interval>(n)}; }
  /// Intercept (-inf, 0], every other coefficient [0, inf).
  static TruncationSpec monotone(std::size_t n) {
    TruncationSpec t{std::vector<Interval>(n, Interval::nonnegative())};
    if (n > 0) t.intervals[0] = Interval::nonpositive();
    return t;
  }

  bool is_unbounded() const {
    return std::all_of(intervals.begin(), intervals.end(),
                       [](const Interval& i) { return i.is_unbounded(); });
  }
  bool admits(std::span<const double> x) const {
    if (x.size() != intervals.size()) return false;
    for (std::size_t p = 0; p < x.size(); ++p)
      if (!intervals[p].contains(x[p])) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------
// Canonical GDINA term order
// ---------------------------------------------------------------------------

namespace detail {

inline void append_combinations(int n, int w, int start, ClassIndex acc,
                                std::vector<ClassIndex>& out) {
  if (w == 0) {
    out.push_back(acc);
    return;
  }
  for (int p = start; p <= n - w; ++p)
    append_combinations(n, w - 1, p + 1, acc | (ClassIndex{1} << p), out);
}

}  // namespace detail

/// Subset masks (over reduced positions) in canonical term order for K_j* = kstar.
inline const std::vector<ClassIndex>& canonical_terms(int kstar) {
  if (kstar < 0 || kstar > max_gdina_item_attributes)
    throw DataError("GDINA items may require at most " +
                    std::to_string(max_gdina_item_attributes) + " attributes");
  static std::array<std::vector<ClassIndex>, max_gdina_item_attributes + 1> cache;
  static std::array<std::once_flag, max_gdina_item_attributes + 1> once;
  std::call_once(once[kstar], [kstar] {
    auto& out = cache[kstar];
    out.reserve(std::size_t{1} << kstar);
    for (int w = 0; w <= kstar; ++w) detail::append_combinations(kstar, w, 0, 0, out);
  });
  return cache[kstar];
}

/// Interaction order (number of attributes) of each canonical term.
inline std::vector<int> term_orders(int kstar) {
  const auto& terms = canonical_terms(kstar);
  std::vector<int> w(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) w[t] = std::popcount(terms[t]);
  return w;
}

// ---------------------------------------------------------------------------
// Pure model functions
// ---------------------------------------------------------------------------

inline int ideal_response(std::span<const std::uint8_t> alpha, std::span<const std::uint8_t> q_row) {
  if (alpha.size() != q_row.size())
    throw DataError("ideal_response: profile has " + std::to_string(alpha.size()) +
                    " attributes but Q-row has " + std::to_string(q_row.size()));
  for (std::size_t k = 0; k < alpha.size(); ++k)
    if (q_row[k] && !alpha[k]) return 0;
  return 1;
}

inline double dina_response_prob(int eta, const DinaItemParams& p) noexcept {
  return eta ? 1.0 - p.slip : p.guess;
}

inline Bits reduce_profile(std::span<const std::uint8_t> alpha, std::span<const std::uint8_t> q_row) {
  if (alpha.size() != q_row.size()) throw DataError("reduce_profile: length mismatch");
  Bits out;
  for (std::size_t k = 0; k < alpha.size(); ++k)
    if (q_row[k]) out.push_back(alpha[k]);
  if (out.empty()) throw DataError("reduce_profile: Q-row requires no attribute");
  return out;
}

inline std::vector<double> design_vector(std::span<const std::uint8_t> alpha_reduced) {
  const int kstar = static_cast<int>(alpha_reduced.size());
  const ClassIndex r = encode_profile(alpha_reduced);
  const auto& terms = canonical_terms(kstar);
  std::vector<double> x(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) x[t] = (r & terms[t]) == terms[t] ? 1.0 : 0.0;
  return x;
}

/// X' lambda for a reduced class index r.
inline double gdina_linear_predictor(const GdinaItemParams& params, int kstar, ClassIndex r) {
  const auto& terms = canonical_terms(kstar);
  if (params.coeffs.size() != terms.size())
    throw DataError("GDINA item has " + std::to_string(params.coeffs.size()) +
                    " coefficients; expected " + std::to_string(terms.size()));
  double eta = 0.0;
  for (std::size_t t = 0; t < terms.size(); ++t)
    if ((r & terms[t]) == terms[t]) eta += params.coeffs[t];
  return eta;
}

/// X' lambda for every reduced class r = 0..2^kstar - 1 (subset-sum transform).
inline std::vector<double> gdina_predictor_table(const GdinaItemParams& params, int kstar) {
  const auto& terms = canonical_terms(kstar);
  if (params.coeffs.size() != terms.size())
    throw DataError("GDINA item has " + std::to_string(params.coeffs.size()) +
                    " coefficients; expected " + std::to_string(terms.size()));
  std::vector<double> eta(terms.size(), 0.0);
  for (std::size_t t = 0; t < terms.size(); ++t) eta[terms[t]] = params.coeffs[t];
  for (int b = 0; b < kstar; ++b)
    for (std::size_t r = 0; r < eta.size(); ++r)
      if (r >> b & 1u) eta[r] += eta[r ^ (std::size_t{1} << b)];
  return eta;
}

inline double gdina_response_prob(const GdinaItemParams& params,
                                  std::span<const std::uint8_t> alpha_reduced) {
  const int kstar = static_cast<int>(alpha_reduced.size());
  return normal::cdf(gdina_linear_predictor(params, kstar, encode_profile(alpha_reduced)));
}

/// Split X'lambda = T0 + alpha_k T1 around the reduced position `pos`.
inline std::pair<double, double> t0_t1_decompose(const GdinaItemParams& params,
                                                 std::span<const std::uint8_t> alpha_reduced,
                                                 int pos) {
  const int kstar = static_cast<int>(alpha_reduced.size());
  if (pos < 0 || pos >= kstar)
    throw DataError("t0_t1_decompose: attribute position " + std::to_string(pos) +
                    " is not required by the item");
  const auto& terms = canonical_terms(kstar);
  if (params.coeffs.size() != terms.size()) throw DataError("t0_t1_decompose: dimension mismatch");
  const ClassIndex bit = ClassIndex{1} << pos;
  const ClassIndex others = encode_profile(alpha_reduced) | bit;
  double t0 = 0.0;
  double t1 = 0.0;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    if ((others & terms[t]) != terms[t]) continue;
    (terms[t] & bit ? t1 : t0) += params.coeffs[t];
  }
  return {t0, t1};
}

/// Full-profile overload: k is an attribute index (0-based) in the full profile.
inline std::pair<double, double> t0_t1_decompose(const GdinaItemParams& params,
                                                 std::span<const std::uint8_t> alpha,
                                                 std::span<const std::uint8_t> q_row, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= q_row.size() || !q_row[k])
    throw DataError("t0_t1_decompose: attribute " + std::to_string(k + 1) +
                    " is not required by the item");
  int pos = 0;
  for (int kk = 0; kk < k; ++kk) pos += q_row[kk];
  return t0_t1_decompose(params, reduce_profile(alpha, q_row), pos);
}

// ---------------------------------------------------------------------------
// Log-likelihood tables
// ---------------------------------------------------------------------------

/// log P(Y=y | theta) with a contradicting degenerate theta mapped to -inf and
/// other probabilities clamped to [1e-300, 1 - 1e-16].
inline double log_bernoulli(double theta, int y) noexcept {
  if (y) {
    if (theta <= 0.0) return neg_inf;
    return std::log(std::min(std::max(theta, 1e-300), 1.0 - 1e-16));
  }
  if (theta >= 1.0) return neg_inf;
  return std::log1p(-std::min(std::max(theta, 1e-300), 1.0 - 1e-16));
}

/// Per item and reduced class: theta, log(1-theta), log(theta).
class ItemLogLikTable {
 public:
  ItemLogLikTable() = default;
  explicit ItemLogLikTable(const QMatrix& q) { layout(q); }

  ItemLogLikTable(const QMatrix& q, std::span<const DinaItemParams> params) {
    layout(q);
    if (params.size() != q.items()) throw DataError("item parameter count differs from J");
    for (std::size_t j = 0; j < q.items(); ++j) set_dina(j, params[j]);
  }

  ItemLogLikTable(const QMatrix& q, std::span<const GdinaItemParams> params) {
    layout(q);
    if (params.size() != q.items()) throw DataError("item parameter count differs from J");
    for (std::size_t j = 0; j < q.items(); ++j) set_gdina(j, params[j]);
  }

  void set_dina(std::size_t j, const DinaItemParams& p) {
    const std::size_t n = classes(j);
    for (std::size_t r = 0; r < n; ++r) {
      const double theta = dina_response_prob(r + 1 == n ? 1 : 0, p);
      store(j, r, theta, log_bernoulli(theta, 0), log_bernoulli(theta, 1));
    }
  }

  void set_gdina(std::size_t j, const GdinaItemParams& p) {
    const int kstar = kstar_[j];
    const auto& terms = canonical_terms(kstar);
    if (p.coeffs.size() != terms.size())
      throw DataError("item " + std::to_string(j + 1) + " has " + std::to_string(p.coeffs.size()) +
                      " GDINA coefficients; expected " + std::to_string(terms.size()));
    set_gdina_predictors(j, gdina_predictor_table(p, kstar));
  }

  /// Fill item j from precomputed linear predictors, one per reduced class.
  void set_gdina_predictors(std::size_t j, std::span<const double> eta) {
    if (eta.size() != classes(j)) throw DataError("predictor table size differs from 2^K_j*");
    for (std::size_t r = 0; r < eta.size(); ++r)
      store(j, r, normal::cdf(eta[r]), normal::log_survival(eta[r]), normal::log_cdf(eta[r]));
  }

  double log_prob(std::size_t j, ClassIndex r, int y) const {
    return log_[2 * (offset_[j] + r) + (y ? 1 : 0)];
  }
  double theta(std::size_t j, ClassIndex r) const { return theta_[offset_[j] + r]; }
  std::size_t classes(std::size_t j) const { return std::size_t{1} << kstar_[j]; }
  std::size_t items() const noexcept { return kstar_.size(); }

 private:
  void layout(const QMatrix& q) {
    kstar_.resize(q.items());
    offset_.resize(q.items());
    std::size_t total = 0;
    for (std::size_t j = 0; j < q.items(); ++j) {
      kstar_[j] = q.kstar(j);
      offset_[j] = total;
      total += std::size_t{1} << kstar_[j];
    }
    theta_.assign(total, 0.0);
    log_.assign(2 * total, 0.0);
  }
  void store(std::size_t j, std::size_t r, double theta, double log0, double log1) {
    theta_[offset_[j] + r] = theta;
    log_[2 * (offset_[j] + r)] = log0;
    log_[2 * (offset_[j] + r) + 1] = log1;
  }

  std::vector<int> kstar_;
  std::vector<std::size_t> offset_;
  std::vector<double> theta_;
  std::vector<double> log_;
};

inline void check_dims(const ResponseMatrix& y, const QMatrix& q) {
  if (y.items() != q.items())
    throw DataError("response matrix has " + std::to_string(y.items()) +
                    " items but Q-matrix has " + std::to_string(q.items()));
}

/// log p(Y | alpha, item parameters).
inline double conditional_loglik(const ResponseMatrix& y, const AttributeMatrix& alpha,
                                 const QMatrix& q, const ItemLogLikTable& table) {
  check_dims(y, q);
  if (alpha.examinees() != y.examinees() || alpha.attributes() != q.attributes())
    throw DataError("attribute matrix dimensions do not match responses / Q-matrix");
  double ll = 0.0;
  for (std::size_t i = 0; i < y.examinees(); ++i) {
    const ClassIndex c = alpha.class_index(i);
    for (std::size_t j = 0; j < q.items(); ++j) ll += table.log_prob(j, q.reduced_index(j, c), y(i, j));
  }
  return ll;
}

template <class Params>
double conditional_loglik(const ResponseMatrix& y, const AttributeMatrix& alpha, const QMatrix& q,
                          std::span<const Params> params) {
  return conditional_loglik(y, alpha, q, ItemLogLikTable(q, params));
}

/// log p(Y | pi, item parameters), summing out each examinee's class.
inline double marginal_loglik(const ResponseMatrix& y, const PopulationDist& pi, const QMatrix& q,
                              const ItemLogLikTable& table) {
  check_dims(y, q);
  const std::size_t C = num_classes(q.attributes());
  if (pi.size() != C) throw DataError("population distribution length differs from 2^K");
  std::vector<std::vector<ClassIndex>> reduced(q.items(), std::vector<ClassIndex>(C));
  for (std::size_t j = 0; j < q.items(); ++j)
    for (ClassIndex c = 0; c < C; ++c) reduced[j][c] = q.reduced_index(j, c);
  std::vector<double> terms(C);
  double ll = 0.0;
  for (std::size_t i = 0; i < y.examinees(); ++i) {
    for (ClassIndex c = 0; c < C; ++c) {
      if (pi[c] <= 0.0) {
        terms[c] = neg_inf;
        continue;
      }
      double t = std::log(pi[c]);
      for (std::size_t j = 0; j < q.items(); ++j) t += table.log_prob(j, reduced[j][c], y(i, j));
      terms[c] = t;
    }
    ll += log_sum_exp(terms);
  }
  return ll;
}

template <class Params>
double marginal_loglik(const ResponseMatrix& y, const PopulationDist& pi, const QMatrix& q,
                       std::span<const Params> params) {
  return marginal_loglik(y, pi, q, ItemLogLikTable(q, params));
}

}  // namespace seqcdm

#endif  // SEQCDM_MODEL_HPP
