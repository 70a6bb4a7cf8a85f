#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "seqcdm/eval.hpp"
#include "seqcdm/rng.hpp"

using namespace seqcdm;

namespace {

ChainStore dina_chain(const std::vector<std::vector<double>>& g, const std::vector<std::vector<double>>& s, int K = 1,
                      std::size_t N = 1) {
  const std::size_t J = g.front().size();
  ChainStore ch(ModelKind::dina, Method::sequential, K, N, std::vector<std::size_t>(J, 0),
                static_cast<long>(g.size()) + 1, 1, 1, true);
  std::vector<double> pi(num_classes(K), 1.0 / num_classes(K));
  for (std::size_t d = 0; d < g.size(); ++d) ch.append_draw(static_cast<long>(d) + 2, g[d], s[d], {}, pi);
  return ch;
}

Replication make_rep(std::vector<double> est, std::vector<double> truth, std::vector<double> pi_est,
                     std::vector<double> pi_truth, const AttributeMatrix& a_est, const AttributeMatrix& a_truth) {
  Replication r;
  r.families = {{"g", std::move(est), std::move(truth)}};
  r.pi_estimate = std::move(pi_est);
  r.pi_truth = std::move(pi_truth);
  r.alpha_estimate = a_est;
  r.alpha_truth = a_truth;
  return r;
}

}  // namespace

TEST(PointEstimates, ConstantAndTwoDrawChains) {
  const auto c = dina_chain({{0.2, 0.3}, {0.2, 0.3}}, {{0.1, 0.4}, {0.1, 0.4}});
  const auto e = point_estimates(c);
  EXPECT_DOUBLE_EQ(e.dina[0].guess, 0.2);
  EXPECT_DOUBLE_EQ(e.dina[1].slip, 0.4);
  const auto c2 = dina_chain({{0.1}, {0.4}}, {{0.2}, {0.3}});
  const auto e2 = point_estimates(c2);
  EXPECT_DOUBLE_EQ(e2.dina[0].guess, 0.25);
  EXPECT_DOUBLE_EQ(e2.dina[0].slip, 0.25);
}

TEST(PointEstimates, AttributeTieGoesToMastery) {
  auto c = dina_chain({{0.1}, {0.4}}, {{0.2}, {0.3}}, 2, 3);
  c.set_alpha_counts({1, 0, 2, 1, 0, 2});  // examinee-major, 2 draws
  const auto e = point_estimates(c);
  EXPECT_EQ(e.alpha_hat(0, 0), 1);
  EXPECT_EQ(e.alpha_hat(0, 1), 0);
  EXPECT_EQ(e.alpha_hat(1, 0), 1);
  EXPECT_EQ(e.alpha_hat(1, 1), 1);
  EXPECT_EQ(e.alpha_hat(2, 0), 0);
  EXPECT_DOUBLE_EQ(e.alpha_mean[0], 0.5);
  EXPECT_NEAR(e.pi[3], 0.25, 1e-15);
}

TEST(PointEstimates, EmptyChainRejected) {
  ChainStore ch(ModelKind::dina, Method::sequential, 1, 1, {0}, 10, 5, 1, true);
  EXPECT_THROW(point_estimates(ch), DataError);
}

TEST(Recovery, PerfectRecovery) {
  const auto a = AttributeMatrix::from_classes(std::vector<ClassIndex>{0, 3, 5, 7}, 3);
  const std::vector<double> pi(8, 0.125);
  const auto r = make_rep({0.1, 0.2}, {0.1, 0.2}, pi, pi, a, a);
  const auto m = recovery_metrics(std::vector<Replication>{r});
  EXPECT_EQ(m.family("g").bias, 0);
  EXPECT_EQ(m.family("g").rmse, 0);
  EXPECT_EQ(m.family("g").mse, 0);
  EXPECT_EQ(m.mn_pi, 0);
  EXPECT_EQ(m.aar, 1);
  for (double p : m.par) EXPECT_EQ(p, 1);
}

TEST(Recovery, OneWrongAttribute) {
  const auto truth = AttributeMatrix::from_classes(std::vector<ClassIndex>{5}, 3);
  const auto est = AttributeMatrix::from_classes(std::vector<ClassIndex>{4}, 3);
  const std::vector<double> pi(8, 0.125);
  const auto m = recovery_metrics(std::vector<Replication>{make_rep({0}, {0}, pi, pi, est, truth)});
  EXPECT_NEAR(m.aar, 2.0 / 3, 1e-15);
  EXPECT_EQ(m.par[0], 0);
  EXPECT_EQ(m.par[1], 1);
  EXPECT_EQ(m.par[3], 1);
}

TEST(Recovery, HandComputedTwoReplications) {
  // errors: rep 1 (0.1, -0.2), rep 2 (0.3, 0.0)
  const auto t1 = AttributeMatrix::from_classes(std::vector<ClassIndex>{0, 3}, 2);
  const auto e1 = AttributeMatrix::from_classes(std::vector<ClassIndex>{0, 0}, 2);  // 2 wrong for examinee 2
  const auto t2 = AttributeMatrix::from_classes(std::vector<ClassIndex>{1, 2}, 2);
  const auto e2 = AttributeMatrix::from_classes(std::vector<ClassIndex>{1, 3}, 2);  // 1 wrong for examinee 2
  const std::vector<Replication> reps{
      make_rep({0.6, 0.3}, {0.5, 0.5}, {0.3, 0.2, 0.2, 0.3}, {0.25, 0.25, 0.25, 0.25}, e1, t1),
      make_rep({0.8, 0.1}, {0.5, 0.1}, {0.25, 0.25, 0.1, 0.4}, {0.25, 0.25, 0.25, 0.25}, e2, t2)};
  const auto m = recovery_metrics(reps);
  const auto& g = m.family("g");
  EXPECT_EQ(g.H, 2u);
  EXPECT_NEAR(g.bias, (0.2 + -0.1) / 2, 1e-12);
  EXPECT_NEAR(g.rmse, (std::sqrt(0.05) + std::sqrt(0.02)) / 2, 1e-12);
  EXPECT_NEAR(g.mse, (0.05 + 0.02) / 2, 1e-12);
  EXPECT_NEAR(g.mae, (0.2 + 0.1) / 2, 1e-12);
  EXPECT_NEAR(m.mn_pi, (0.05 + 0.15) / 2, 1e-12);
  EXPECT_NEAR(m.aar, 5.0 / 8, 1e-12);
  EXPECT_NEAR(m.par[0], 2.0 / 4, 1e-12);
  EXPECT_NEAR(m.par[1], 3.0 / 4, 1e-12);
  EXPECT_NEAR(m.par[2], 1.0, 1e-12);
}

TEST(Recovery, InvariantUnderParameterPermutation) {
  const auto a = AttributeMatrix::from_classes(std::vector<ClassIndex>{0, 1}, 1);
  const std::vector<double> pi{0.5, 0.5};
  const auto m1 = recovery_metrics(std::vector<Replication>{make_rep({0.1, 0.5, 0.9}, {0.2, 0.2, 0.7}, pi, pi, a, a)});
  const auto m2 = recovery_metrics(std::vector<Replication>{make_rep({0.9, 0.1, 0.5}, {0.7, 0.2, 0.2}, pi, pi, a, a)});
  EXPECT_NEAR(m1.family("g").rmse, m2.family("g").rmse, 1e-15);
  EXPECT_NEAR(m1.family("g").bias, m2.family("g").bias, 1e-15);
}

TEST(Recovery, PropertiesOnRandomCases) {
  RngStream rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 1 + trial % 5;
    std::vector<ClassIndex> tc(30), ec(30);
    for (int i = 0; i < 30; ++i) {
      tc[i] = static_cast<ClassIndex>(rng() % num_classes(K));
      ec[i] = static_cast<ClassIndex>(rng() % num_classes(K));
    }
    std::vector<double> est(5), tru(5);
    for (int h = 0; h < 5; ++h) {
      est[h] = rng.uniform();
      tru[h] = rng.uniform();
    }
    const std::vector<double> pi(num_classes(K), 1.0 / num_classes(K));
    const auto m = recovery_metrics(std::vector<Replication>{
        make_rep(est, tru, pi, pi, AttributeMatrix::from_classes(ec, K), AttributeMatrix::from_classes(tc, K))});
    double max_sq = 0;
    for (int h = 0; h < 5; ++h) max_sq = std::max(max_sq, std::pow(est[h] - tru[h], 2));
    EXPECT_LE(m.family("g").mse, max_sq + 1e-15);
    EXPECT_GE(m.aar, 0);
    EXPECT_LE(m.aar, 1);
    for (std::size_t n = 1; n < m.par.size(); ++n) EXPECT_LE(m.par[n - 1], m.par[n]);
    EXPECT_EQ(m.par.back(), 1.0);
  }
}

TEST(Recovery, ShapeMismatchRejected) {
  const auto a = AttributeMatrix::from_classes(std::vector<ClassIndex>{0, 1}, 1);
  const auto b = AttributeMatrix::from_classes(std::vector<ClassIndex>{0}, 1);
  const std::vector<double> pi{0.5, 0.5};
  EXPECT_THROW(recovery_metrics(std::vector<Replication>{make_rep({0.1}, {0.1}, pi, pi, a, b)}), DataError);
  EXPECT_THROW(recovery_metrics(std::vector<Replication>{make_rep({0.1}, {0.1, 0.2}, pi, pi, a, a)}), DataError);
  EXPECT_THROW(recovery_metrics(std::vector<Replication>{}), DataError);
}

TEST(Psrf, IdenticalChains) {
  std::vector<double> x(100);
  RngStream rng(1);
  for (auto& v : x) v = rng.normal();
  const std::vector<std::vector<double>> chains{x, x, x};
  EXPECT_NEAR(psrf_scalar(chains, 0, 100), std::sqrt(99.0 / 100), 1e-12);
}

TEST(Psrf, DisjointConstantChains) {
  const std::vector<std::vector<double>> chains{std::vector<double>(20, 0.0), std::vector<double>(20, 1.0)};
  EXPECT_GT(psrf_scalar(chains, 0, 20), 2.0);
  std::vector<double> a(20), b(20);
  for (int t = 0; t < 20; ++t) {
    a[t] = (t % 2) * 0.1;
    b[t] = 5 + (t % 2) * 0.1;
  }
  EXPECT_GT(psrf_scalar(std::vector<std::vector<double>>{a, b}, 0, 20), 2.0);
}

TEST(Psrf, ManualFormula) {
  const std::vector<std::vector<double>> c{{1, 2, 3, 4}, {2, 4, 6, 8}};
  // means 2.5, 5; vars 5/3, 20/3; W = 25/6; B = 4 * (1.25^2 * 2) / 1 = 12.5
  const double W = 25.0 / 6, B = 12.5, n = 4;
  const double V = (n - 1) / n * W + B / n;
  EXPECT_NEAR(psrf_scalar(c, 0, 4), std::sqrt(V / W), 1e-12);
}

TEST(Psrf, IidChainsCalibration) {
  // 5 chains of 2000 iid N(0,1) draws, 40 parameters: max R-hat stays under 1.1
  for (int seed = 0; seed < 5; ++seed) {
    RngStream rng(100 + seed);
    ChainTraces tr;
    for (int p = 0; p < 40; ++p) tr.names.push_back("p" + std::to_string(p));
    tr.draws.assign(5, std::vector<std::vector<double>>(40, std::vector<double>(2000)));
    for (auto& c : tr.draws)
      for (auto& p : c)
        for (auto& v : p) v = rng.normal();
    const auto r = psrf(tr, 0);
    EXPECT_LT(r.max_rhat, 1.1);
    for (double v : r.rhat) EXPECT_GE(v, 1 - 1e-3);
  }
}

TEST(Psrf, TraceUsesSecondHalfOfPrefixes) {
  ChainTraces tr;
  tr.names = {"x"};
  tr.draws.assign(2, std::vector<std::vector<double>>(1, std::vector<double>(200)));
  RngStream rng(3);
  for (int t = 0; t < 200; ++t) {
    // chains disagree only during the first 100 draws
    tr.draws[0][0][t] = rng.normal() + (t < 100 ? 10 : 0);
    tr.draws[1][0][t] = rng.normal();
  }
  const auto r = psrf(tr, 50);
  ASSERT_EQ(r.trace_length, (std::vector<std::size_t>{50, 100, 150, 200}));
  EXPECT_GT(r.trace_max[0], 2.0);
  EXPECT_LT(r.trace_max[3], 1.1);
}

TEST(Psrf, NeedsTwoChainsAndEqualLengths) {
  ChainTraces tr;
  tr.names = {"x"};
  tr.draws.assign(1, std::vector<std::vector<double>>(1, std::vector<double>(50, 0.0)));
  EXPECT_THROW(psrf(tr), DataError);
  tr.draws.push_back(std::vector<std::vector<double>>(1, std::vector<double>(40, 0.0)));
  EXPECT_THROW(psrf(tr), DataError);
}

TEST(Psrf, ChainStoreParameterNames) {
  const auto a = dina_chain(std::vector<std::vector<double>>(12, {0.1, 0.2}),
                            std::vector<std::vector<double>>(12, {0.3, 0.4}));
  const std::vector<ChainStore> chains{a, a};
  const auto tr = psrf_traces(chains);
  EXPECT_EQ(tr.names, (std::vector<std::string>{"g1", "g2", "s1", "s2", "pi1", "pi2"}));
}

TEST(Reports, CsvAndJsonLayout) {
  const auto a = AttributeMatrix::from_classes(std::vector<ClassIndex>{0, 1}, 1);
  const std::vector<double> pi{0.5, 0.5};
  const auto m = recovery_metrics(std::vector<Replication>{make_rep({0.1}, {0.1}, pi, pi, a, a)});
  std::ostringstream os;
  write_csv(os, m);
  EXPECT_EQ(os.str().substr(0, 19), "metric,family,value");
  EXPECT_NE(os.str().find("par1,alpha,1"), std::string::npos);
  const auto j = to_json(m);
  EXPECT_EQ(j["par"]["PAR0"], 1.0);
  EXPECT_EQ(j["families"][0]["family"], "g");
}
