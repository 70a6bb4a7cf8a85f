#ifndef SEQCDM_PRIOR_HPP
#define SEQCDM_PRIOR_HPP

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seqcdm/errors.hpp"
#include "seqcdm/model.hpp"

namespace seqcdm {

enum class TruncationMode { none, monotone, custom };

struct PriorConfig {
  /// Dirichlet concentration: one value (broadcast) or one per class.
  std::vector<double> delta{1.0};

  // GDINA: intercept ~ N(intercept_mean, intercept_sd^2); a w-way term
  // ~ N(effect_mean / w, (effect_sd / w)^2).
  double intercept_mean = -1.2;
  double intercept_sd = 0.4;
  double effect_mean = 0.9;
  double effect_sd = 0.3;

  TruncationMode truncation = TruncationMode::monotone;
  /// Custom mode: interval per interaction order (index 0 = intercept).
  std::vector<Interval> order_intervals;
  /// When non-empty, overrides everything above per item.
  std::vector<TruncationSpec> item_truncation;
  /// Extra coordinate-wise Gibbs sweeps after the sequential truncated draw.
  int refinement_sweeps = 0;

  // DINA Beta priors.
  double a_g = 1.0, b_g = 1.0, a_s = 1.0, b_s = 1.0;
  bool dina_monotone = true;

  void validate() const {
    if (delta.empty()) throw ConfigError("delta: must not be empty");
    for (double d : delta)
      if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("delta: entries must be positive");
    if (!(intercept_sd > 0.0) || !(effect_sd > 0.0))
      throw ConfigError("prior standard deviations must be positive");
    if (!std::isfinite(intercept_mean) || !std::isfinite(effect_mean))
      throw ConfigError("prior means must be finite");
    for (double v : {a_g, b_g, a_s, b_s})
      if (!(v > 0.0)) throw ConfigError("Beta prior shapes must be positive");
    if (refinement_sweeps < 0) throw ConfigError("refinement_sweeps: must be >= 0");
    for (const auto& iv : order_intervals)
      if (iv.empty()) throw ConfigError("truncation: empty interval");
    for (const auto& spec : item_truncation)
      for (const auto& iv : spec.intervals)
        if (iv.empty()) throw ConfigError("truncation: empty interval");
  }

  std::vector<double> delta_vector(std::size_t num_classes_) const {
    if (delta.size() == 1) return std::vector<double>(num_classes_, delta.front());
    if (delta.size() != num_classes_)
      throw ConfigError("delta: expected 1 or " + std::to_string(num_classes_) + " values, got " +
                        std::to_string(delta.size()));
    return delta;
  }

  Eigen::VectorXd lambda_prior_mean(int kstar) const {
    const auto orders = term_orders(kstar);
    Eigen::VectorXd mu(static_cast<Eigen::Index>(orders.size()));
    for (std::size_t t = 0; t < orders.size(); ++t)
      mu(static_cast<Eigen::Index>(t)) = orders[t] == 0 ? intercept_mean : effect_mean / orders[t];
    return mu;
  }

  Eigen::MatrixXd lambda_prior_cov(int kstar) const {
    const auto orders = term_orders(kstar);
    Eigen::VectorXd var(static_cast<Eigen::Index>(orders.size()));
    for (std::size_t t = 0; t < orders.size(); ++t) {
      const double sd = orders[t] == 0 ? intercept_sd : effect_sd / orders[t];
      var(static_cast<Eigen::Index>(t)) = sd * sd;
    }
    return var.asDiagonal();
  }

  TruncationSpec truncation_for(std::size_t item, int kstar) const {
    const std::size_t P = std::size_t{1} << kstar;
    if (!item_truncation.empty()) {
      if (item >= item_truncation.size())
        throw ConfigError("truncation: no entry for item " + std::to_string(item + 1));
      if (item_truncation[item].intervals.size() != P)
        throw ConfigError("truncation: item " + std::to_string(item + 1) + " needs " +
                          std::to_string(P) + " intervals");
      return item_truncation[item];
    }
    switch (truncation) {
      case TruncationMode::none:
        return TruncationSpec::unbounded(P);
      case TruncationMode::monotone:
        return TruncationSpec::monotone(P);
      case TruncationMode::custom: {
        const auto orders = term_orders(kstar);
        TruncationSpec spec;
        for (int w : orders) {
          if (static_cast<std::size_t>(w) >= order_intervals.size())
            throw ConfigError("truncation: no interval given for interaction order " +
                              std::to_string(w));
          spec.intervals.push_back(order_intervals[static_cast<std::size_t>(w)]);
        }
        return spec;
      }
    }
    return TruncationSpec::unbounded(P);
  }
};

}  // namespace seqcdm

#endif  // SEQCDM_PRIOR_HPP
