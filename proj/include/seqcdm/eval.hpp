#ifndef SEQCDM_EVAL_HPP
#define SEQCDM_EVAL_HPP

// Point estimates, recovery metrics and Gelman-Rubin diagnostics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "seqcdm/chain.hpp"
#include "seqcdm/errors.hpp"
#include "seqcdm/model.hpp"

namespace seqcdm {

// ---------------------------------------------------------------------------
// Point estimates
// ---------------------------------------------------------------------------

struct Estimates {
  ModelKind model = ModelKind::dina;
  std::vector<DinaItemParams> dina;
  std::vector<GdinaItemParams> gdina;
  std::vector<double> pi;
  std::vector<double> alpha_mean;  // N x K marginal posterior means
  AttributeMatrix alpha_hat;       // 1{alpha_mean >= 0.5}
};

inline Estimates point_estimates(const ChainStore& chain) {
  const std::size_t R = chain.retained();
  if (R == 0) throw DataError("chain has no retained draws");
  const double inv = 1.0 / static_cast<double>(R);
  Estimates e;
  e.model = chain.model();
  const std::size_t J = chain.items();
  if (chain.model() == ModelKind::dina) {
    e.dina.assign(J, DinaItemParams{0.0, 0.0});
    for (std::size_t d = 0; d < R; ++d)
      for (std::size_t j = 0; j < J; ++j) {
        e.dina[j].guess += chain.guess(d, j);
        e.dina[j].slip += chain.slip(d, j);
      }
    for (auto& p : e.dina) {
      p.guess *= inv;
      p.slip *= inv;
    }
  } else {
    e.gdina.resize(J);
    for (std::size_t j = 0; j < J; ++j) e.gdina[j].coeffs.assign(chain.lambda_width(j), 0.0);
    for (std::size_t d = 0; d < R; ++d)
      for (std::size_t j = 0; j < J; ++j) {
        const auto draw = chain.lambda(d, j);
        for (std::size_t t = 0; t < draw.size(); ++t) e.gdina[j].coeffs[t] += draw[t];
      }
    for (auto& p : e.gdina)
      for (double& v : p.coeffs) v *= inv;
  }
  e.pi = chain.pi_sum();
  for (double& v : e.pi) v *= inv;
  const int K = chain.attributes();
  const std::size_t N = chain.examinees();
  e.alpha_mean.resize(N * static_cast<std::size_t>(K));
  e.alpha_hat = AttributeMatrix(N, K);
  for (std::size_t i = 0; i < N; ++i)
    for (int k = 0; k < K; ++k) {
      const double m = chain.alpha_count(i, k) * inv;
      e.alpha_mean[i * K + k] = m;
      e.alpha_hat(i, k) = m >= 0.5 ? 1 : 0;
    }
  return e;
}

// ---------------------------------------------------------------------------
// Recovery metrics
// ---------------------------------------------------------------------------

struct ParameterSet {
  std::string family;
  std::vector<double> estimate;
  std::vector<double> truth;
};

/// One replication: estimates next to the truth that generated the data.
struct Replication {
  std::vector<ParameterSet> families;
  std::vector<double> pi_estimate, pi_truth;
  AttributeMatrix alpha_estimate, alpha_truth;
};

inline Replication make_replication(const Estimates& est, std::span<const DinaItemParams> true_dina,
                                    std::span<const GdinaItemParams> true_gdina, std::span<const double> true_pi,
                                    const AttributeMatrix& true_alpha) {
  Replication r;
  if (est.model == ModelKind::dina) {
    if (true_dina.size() != est.dina.size()) throw DataError("truth has a different number of items");
    ParameterSet g{"g", {}, {}}, s{"s", {}, {}};
    for (std::size_t j = 0; j < est.dina.size(); ++j) {
      g.estimate.push_back(est.dina[j].guess);
      g.truth.push_back(true_dina[j].guess);
      s.estimate.push_back(est.dina[j].slip);
      s.truth.push_back(true_dina[j].slip);
    }
    r.families = {g, s};
  } else {
    if (true_gdina.size() != est.gdina.size()) throw DataError("truth has a different number of items");
    ParameterSet l{"lambda", {}, {}};
    for (std::size_t j = 0; j < est.gdina.size(); ++j) {
      if (true_gdina[j].coeffs.size() != est.gdina[j].coeffs.size())
        throw DataError("truth item " + std::to_string(j + 1) + " has a different coefficient count");
      l.estimate.insert(l.estimate.end(), est.gdina[j].coeffs.begin(), est.gdina[j].coeffs.end());
      l.truth.insert(l.truth.end(), true_gdina[j].coeffs.begin(), true_gdina[j].coeffs.end());
    }
    r.families = {l};
  }
  r.pi_estimate = est.pi;
  r.pi_truth.assign(true_pi.begin(), true_pi.end());
  r.alpha_estimate = est.alpha_hat;
  r.alpha_truth = true_alpha;
  return r;
}

struct FamilyMetrics {
  std::string family;
  std::size_t H = 0;
  double bias = 0, rmse = 0, mse = 0, mae = 0;
};

struct RecoveryReport {
  std::vector<FamilyMetrics> families;
  double mn_pi = 0;
  double aar = 0;
  std::vector<double> par;  // par[n] = PARn, n = 0..K
  std::size_t replications = 0;
  int attributes = 0;

  const FamilyMetrics& family(const std::string& name) const {
    for (const auto& f : families)
      if (f.family == name) return f;
    throw DataError("no metrics for parameter family '" + name + "'");
  }
};

inline RecoveryReport recovery_metrics(std::span<const Replication> reps) {
  if (reps.empty()) throw DataError("recovery_metrics: need at least one replication");
  const std::size_t R = reps.size();
  const auto& first = reps.front();
  RecoveryReport out;
  out.replications = R;
  out.attributes = first.alpha_truth.attributes();
  for (const auto& rep : reps) {
    if (rep.families.size() != first.families.size()) throw DataError("replications differ in parameter families");
    if (rep.pi_estimate.size() != rep.pi_truth.size() || rep.pi_truth.size() != first.pi_truth.size())
      throw DataError("pi estimate and truth differ in length");
    if (rep.alpha_estimate.examinees() != rep.alpha_truth.examinees() ||
        rep.alpha_estimate.attributes() != rep.alpha_truth.attributes() ||
        rep.alpha_truth.attributes() != out.attributes)
      throw DataError("attribute estimate and truth differ in shape");
  }
  for (std::size_t f = 0; f < first.families.size(); ++f) {
    FamilyMetrics m;
    m.family = first.families[f].family;
    m.H = first.families[f].truth.size();
    if (m.H == 0) throw DataError("parameter family '" + m.family + "' is empty");
    for (std::size_t h = 0; h < m.H; ++h) {
      double bias = 0, sq = 0, abs_err = 0;
      for (const auto& rep : reps) {
        const auto& ps = rep.families[f];
        if (ps.family != m.family || ps.truth.size() != m.H || ps.estimate.size() != m.H)
          throw DataError("shape mismatch in parameter family '" + m.family + "'");
        const double e = ps.estimate[h] - ps.truth[h];
        bias += e;
        sq += e * e;
        abs_err += std::abs(e);
      }
      m.bias += bias / R;
      m.rmse += std::sqrt(sq / R);
      m.mse += sq / R;
      m.mae += abs_err / R;
    }
    m.bias /= m.H;
    m.rmse /= m.H;
    m.mse /= m.H;
    m.mae /= m.H;
    out.families.push_back(m);
  }
  const int K = out.attributes;
  std::vector<double> within(static_cast<std::size_t>(K) + 1, 0.0);
  double agree = 0, cells = 0, patterns = 0;
  for (const auto& rep : reps) {
    double mn = 0;
    for (std::size_t c = 0; c < rep.pi_truth.size(); ++c)
      mn = std::max(mn, std::abs(rep.pi_truth[c] - rep.pi_estimate[c]));
    out.mn_pi += mn / R;
    for (std::size_t i = 0; i < rep.alpha_truth.examinees(); ++i) {
      int wrong = 0;
      for (int k = 0; k < K; ++k) wrong += rep.alpha_truth(i, k) != rep.alpha_estimate(i, k);
      agree += K - wrong;
      cells += K;
      patterns += 1;
      for (int n = wrong; n <= K; ++n) within[n] += 1;
    }
  }
  out.aar = cells > 0 ? agree / cells : 1.0;
  out.par.resize(within.size());
  for (std::size_t n = 0; n < within.size(); ++n) out.par[n] = patterns > 0 ? within[n] / patterns : 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Gelman-Rubin
// ---------------------------------------------------------------------------

/// Classic R-hat^(1/2) for one scalar over m chains of equal length n:
/// V = (n-1)/n W + B/n, sqrt(V / W).
inline double psrf_scalar(std::span<const std::vector<double>> chains, std::size_t begin, std::size_t end) {
  const std::size_t m = chains.size();
  const std::size_t n = end - begin;
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    double s = 0;
    for (std::size_t t = begin; t < end; ++t) s += chains[c][t];
    means[c] = s / n;
    double v = 0;
    for (std::size_t t = begin; t < end; ++t) v += (chains[c][t] - means[c]) * (chains[c][t] - means[c]);
    vars[c] = v / (n - 1);
  }
  double grand = 0;
  for (double x : means) grand += x;
  grand /= m;
  double B = 0;
  for (double x : means) B += (x - grand) * (x - grand);
  B *= static_cast<double>(n) / (m - 1);
  double W = 0;
  for (double v : vars) W += v;
  W /= m;
  const double V = (n - 1.0) / n * W + B / n;
  if (W <= 0.0) return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return std::sqrt(V / W);
}

/// Per-parameter traces from several chains: param_draws[c][p] is the draw
/// sequence of parameter p in chain c.
struct ChainTraces {
  std::vector<std::string> names;
  std::vector<std::vector<std::vector<double>>> draws;  // [chain][param][t]
};

inline ChainTraces psrf_traces(std::span<const ChainStore> chains) {
  ChainTraces tr;
  if (chains.empty()) return tr;
  const auto& ref = chains.front();
  const std::size_t J = ref.items();
  if (ref.model() == ModelKind::dina) {
    for (std::size_t j = 0; j < J; ++j) tr.names.push_back("g" + std::to_string(j + 1));
    for (std::size_t j = 0; j < J; ++j) tr.names.push_back("s" + std::to_string(j + 1));
  } else {
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t t = 0; t < ref.lambda_width(j); ++t)
        tr.names.push_back("lambda" + std::to_string(j + 1) + "_" + std::to_string(t + 1));
  }
  if (ref.has_pi_draws())
    for (std::size_t c = 0; c < ref.classes(); ++c) tr.names.push_back("pi" + std::to_string(c + 1));
  for (const auto& ch : chains) {
    if (ch.model() != ref.model() || ch.items() != J || ch.attributes() != ref.attributes() ||
        ch.has_pi_draws() != ref.has_pi_draws())
      throw DataError("chains are not compatible");
    const std::size_t R = ch.retained();
    std::vector<std::vector<double>> p(tr.names.size(), std::vector<double>(R));
    for (std::size_t d = 0; d < R; ++d) {
      std::size_t idx = 0;
      if (ch.model() == ModelKind::dina) {
        for (std::size_t j = 0; j < J; ++j) p[idx++][d] = ch.guess(d, j);
        for (std::size_t j = 0; j < J; ++j) p[idx++][d] = ch.slip(d, j);
      } else {
        for (std::size_t j = 0; j < J; ++j)
          for (double v : ch.lambda(d, j)) p[idx++][d] = v;
      }
      if (ch.has_pi_draws())
        for (double v : ch.pi(d)) p[idx++][d] = v;
    }
    tr.draws.push_back(std::move(p));
  }
  return tr;
}

struct PsrfReport {
  std::vector<std::string> names;
  std::vector<double> rhat;
  double max_rhat = 0;
  std::string max_name;
  std::size_t chains = 0;
  std::size_t length = 0;
  // Max R-hat over parameters by prefix length (second half of each prefix).
  std::vector<std::size_t> trace_length;
  std::vector<double> trace_max;
};

inline PsrfReport psrf(const ChainTraces& tr, std::size_t trace_step = 50) {
  const std::size_t m = tr.draws.size();
  if (m < 2) throw DataError("psrf needs at least two chains");
  const std::size_t n = tr.draws.front().empty() ? 0 : tr.draws.front().front().size();
  for (const auto& c : tr.draws) {
    if (c.size() != tr.names.size()) throw DataError("chains have different parameter sets");
    for (const auto& p : c)
      if (p.size() != n) throw DataError("chains have different retained lengths");
  }
  if (n < 10) throw DataError("psrf needs at least 10 retained draws per chain");
  PsrfReport r;
  r.names = tr.names;
  r.chains = m;
  r.length = n;
  std::vector<std::vector<double>> per(m);
  r.max_rhat = 0;
  for (std::size_t p = 0; p < tr.names.size(); ++p) {
    for (std::size_t c = 0; c < m; ++c) per[c] = tr.draws[c][p];
    const double v = psrf_scalar(per, 0, n);
    r.rhat.push_back(v);
    if (v > r.max_rhat || r.max_name.empty()) {
      r.max_rhat = v;
      r.max_name = tr.names[p];
    }
  }
  if (trace_step > 0) {
    for (std::size_t L = trace_step; L <= n; L += trace_step) {
      if (L / 2 < 2 || L - L / 2 < 2) continue;
      double mx = 0;
      for (std::size_t p = 0; p < tr.names.size(); ++p) {
        for (std::size_t c = 0; c < m; ++c) per[c] = tr.draws[c][p];
        mx = std::max(mx, psrf_scalar(per, L / 2, L));
      }
      r.trace_length.push_back(L);
      r.trace_max.push_back(mx);
    }
  }
  return r;
}

inline PsrfReport psrf(std::span<const ChainStore> chains, std::size_t trace_step = 50) {
  if (chains.size() < 2) throw DataError("psrf needs at least two chains");
  return psrf(psrf_traces(chains), trace_step);
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const RecoveryReport& r) {
  nlohmann::ordered_json j;
  j["replications"] = r.replications;
  j["attributes"] = r.attributes;
  auto fam = nlohmann::ordered_json::array();
  for (const auto& f : r.families)
    fam.push_back({{"family", f.family}, {"H", f.H}, {"bias", f.bias}, {"rmse", f.rmse}, {"mse", f.mse},
                   {"mae", f.mae}});
  j["families"] = fam;
  j["mn_pi"] = r.mn_pi;
  j["aar"] = r.aar;
  auto par = nlohmann::ordered_json::object();
  for (std::size_t n = 0; n < r.par.size(); ++n) par["PAR" + std::to_string(n)] = r.par[n];
  j["par"] = par;
  return j;
}

/// One row per metric: metric,family,value.
inline void write_csv(std::ostream& os, const RecoveryReport& r) {
  os.precision(17);
  os << "metric,family,value\n";
  for (const auto& f : r.families) {
    os << "bias," << f.family << ',' << f.bias << '\n';
    os << "rmse," << f.family << ',' << f.rmse << '\n';
    os << "mse," << f.family << ',' << f.mse << '\n';
    os << "mae," << f.family << ',' << f.mae << '\n';
  }
  os << "mn,pi," << r.mn_pi << '\n';
  os << "aar,alpha," << r.aar << '\n';
  for (std::size_t n = 0; n < r.par.size(); ++n) os << "par" << n << ",alpha," << r.par[n] << '\n';
}

inline nlohmann::ordered_json to_json(const PsrfReport& r) {
  nlohmann::ordered_json j;
  j["chains"] = r.chains;
  j["length"] = r.length;
  j["max_rhat"] = r.max_rhat;
  j["max_parameter"] = r.max_name;
  j["below_1_1"] = r.max_rhat < 1.1;
  j["below_1_2"] = r.max_rhat < 1.2;
  auto per = nlohmann::ordered_json::object();
  for (std::size_t p = 0; p < r.names.size(); ++p) per[r.names[p]] = r.rhat[p];
  j["rhat"] = per;
  return j;
}

inline void write_csv(std::ostream& os, const PsrfReport& r) {
  os.precision(17);
  os << "parameter,rhat\n";
  for (std::size_t p = 0; p < r.names.size(); ++p) os << r.names[p] << ',' << r.rhat[p] << '\n';
}

inline void write_trace_csv(std::ostream& os, const PsrfReport& r) {
  os.precision(17);
  os << "iterations,max_rhat,line_1_1,line_1_2\n";
  for (std::size_t t = 0; t < r.trace_length.size(); ++t)
    os << r.trace_length[t] << ',' << r.trace_max[t] << ",1.1,1.2\n";
}

}  // namespace seqcdm

#endif  // SEQCDM_EVAL_HPP
