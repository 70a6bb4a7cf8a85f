#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "seqcdm/samplers.hpp"
#include "seqcdm/simulate.hpp"

using namespace seqcdm;

namespace {

std::vector<GdinaItemParams> random_gdina(std::mt19937_64& gen, const QMatrix& q) {
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<GdinaItemParams> out(q.items());
  for (std::size_t j = 0; j < q.items(); ++j) {
    out[j].coeffs.resize(q.reduced_classes(j));
    for (auto& v : out[j].coeffs) v = nd(gen);
  }
  return out;
}

std::vector<DinaItemParams> random_dina(std::mt19937_64& gen, std::size_t J) {
  std::uniform_real_distribution<double> u(0.01, 0.45);
  std::vector<DinaItemParams> out(J);
  for (auto& p : out) p = {u(gen), u(gen)};
  return out;
}

SimulatedData small_dina(std::uint64_t seed, std::size_t N = 300) {
  SimConfig c;
  c.N = N;
  c.J = 20;
  c.K = 3;
  c.seed = seed;
  return simulate(c);
}

}  // namespace

// pi indexed one-based in the worked example: pi_1 ... pi_8
TEST(PriorConditional, WorkedThreeAttributeExample) {
  const std::vector<double> w{0.05, 0.10, 0.15, 0.20, 0.08, 0.12, 0.14, 0.16};
  const PopulationDist pi(w);
  // alpha_1 given alpha_2 = alpha_3 = 0: pi_2 / (pi_1 + pi_2)
  EXPECT_NEAR(prior_conditional_prob(pi, Bits{0, 0}, 0), w[1] / (w[0] + w[1]), 1e-15);
  // alpha_2 given alpha_1 = 1, alpha_3 = 0: pi_4 / (pi_2 + pi_4)
  EXPECT_NEAR(prior_conditional_prob(pi, Bits{1, 0}, 1), w[3] / (w[1] + w[3]), 1e-15);
  // alpha_3 given alpha_1 = 1, alpha_2 = 0: pi_6 / (pi_2 + pi_6)
  EXPECT_NEAR(prior_conditional_prob(pi, Bits{1, 0}, 2), w[5] / (w[1] + w[5]), 1e-15);
}

TEST(PriorConditional, LogRouteMatchesLinearRoute) {
  std::mt19937_64 gen(1);
  for (int K = 1; K <= 5; ++K) {
    const auto w = oracle::random_pi(gen, num_classes(K));
    const PopulationDist pi(w);
    std::vector<double> lp(w.size());
    for (std::size_t c = 0; c < w.size(); ++c) lp[c] = std::log(w[c]);
    for (ClassIndex c = 0; c < w.size(); ++c)
      for (int k = 0; k < K; ++k) {
        Bits rest;
        for (int kk = 0; kk < K; ++kk)
          if (kk != k) rest.push_back((c >> kk) & 1u);
        EXPECT_NEAR(prior_conditional_prob_log(lp, c, k), prior_conditional_prob(pi, rest, k), 1e-14);
      }
  }
}

TEST(PriorConditional, ZeroMassThrows) {
  const PopulationDist pi({0.5, 0.5, 0.0, 0.0});
  EXPECT_THROW(prior_conditional_prob(pi, Bits{1}, 0), DataError);
  EXPECT_NO_THROW(prior_conditional_prob(pi, Bits{0}, 0));
}

TEST(AttributeConditional, MatchesTwoProfileBruteForce) {
  std::mt19937_64 gen(2024);
  std::bernoulli_distribution bern(0.5);
  std::uniform_int_distribution<int> kdist(2, 4);
  std::uniform_int_distribution<int> jdist(1, 8);
  double worst = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int K = kdist(gen);
    const auto J = static_cast<std::size_t>(jdist(gen));
    const QMatrix q = oracle::random_q(gen, K, J);
    const auto w = oracle::random_pi(gen, num_classes(K));
    const PopulationDist pi(w);
    Bits y(J), alpha(K);
    for (auto& v : y) v = bern(gen);
    for (auto& v : alpha) v = bern(gen);
    const auto gd = random_gdina(gen, q);
    const auto di = random_dina(gen, J);
    for (int k = 0; k < K; ++k) {
      const double pg = attribute_posterior_gdina(y, AttributeProfile(alpha), k, q,
                                                  std::span<const GdinaItemParams>(gd), pi);
      const double pd = attribute_posterior_dina(y, AttributeProfile(alpha), k, q,
                                                 std::span<const DinaItemParams>(di), pi);
      const double og = oracle::two_profile_posterior(q, gd, w, alpha, k, y);
      const double od = oracle::two_profile_posterior(q, di, w, alpha, k, y);
      worst = std::max({worst, std::abs(pg - og), std::abs(pd - od)});
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(AttributeConditional, ArgumentChecks) {
  const QMatrix q = QMatrix::from_rows({{1, 0}, {0, 1}});
  std::vector<DinaItemParams> p(2);
  const PopulationDist pi = PopulationDist::uniform(2);
  const std::span<const DinaItemParams> ps(p);
  EXPECT_THROW(attribute_posterior_dina(Bits{1}, AttributeProfile(Bits{0, 0}), 0, q, ps, pi), DataError);
  EXPECT_THROW(attribute_posterior_dina(Bits{1, 0}, AttributeProfile(Bits{0, 0}), 2, q, ps, pi), DataError);
  EXPECT_THROW(attribute_posterior_dina(Bits{1, 0}, AttributeProfile(Bits{0, 0}), 0, q, ps,
                                        PopulationDist::uniform(3)),
               DataError);
}

TEST(AttributeConditional, DinaUsesOnlyInformativeItems) {
  // item 2 requires a1 and a2; with a2 = 0 it says nothing about a1
  const QMatrix q = QMatrix::from_rows({{1, 0}, {1, 1}, {0, 1}});
  std::vector<DinaItemParams> p{{0.2, 0.1}, {0.05, 0.05}, {0.3, 0.3}};
  ItemLogLikTable t(q, std::span<const DinaItemParams>(p));
  WorkCounters wc;
  attribute_posterior_dina(Bits{1, 1, 0}, 0, 0, q, t, 0.0, 0.0, &wc);
  EXPECT_EQ(wc.likelihood_terms, 1u);
  attribute_posterior_dina(Bits{1, 1, 0}, 2, 0, q, t, 0.0, 0.0, &wc);
  EXPECT_EQ(wc.likelihood_terms, 3u);
}

TEST(SimultaneousWeights, MatchBruteForce) {
  std::mt19937_64 gen(8);
  const QMatrix q = oracle::random_q(gen, 3, 6);
  const auto gd = random_gdina(gen, q);
  const auto w = oracle::random_pi(gen, 8);
  std::vector<double> lp(8);
  for (int c = 0; c < 8; ++c) lp[c] = std::log(w[c]);
  const Bits y{1, 0, 1, 1, 0, 0};
  const auto lw = profile_log_weights(y, q, ItemLogLikTable(q, std::span<const GdinaItemParams>(gd)), lp);
  double total = 0;
  for (int c = 0; c < 8; ++c) total += oracle::joint_weight(q, gd, w, decode_profile(c, 3), y);
  const double lt = log_sum_exp(lw);
  for (int c = 0; c < 8; ++c)
    EXPECT_NEAR(std::exp(lw[c] - lt), oracle::joint_weight(q, gd, w, decode_profile(c, 3), y) / total, 1e-12);
}

TEST(SimultaneousWeights, CategoricalFrequencies) {
  const std::vector<double> p{0.1, 0.0, 0.4, 0.2, 0.3};
  std::vector<double> lw(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) lw[c] = p[c] > 0 ? std::log(p[c]) + 5.0 : neg_inf;
  RngStream rng(4);
  std::vector<int> n(p.size(), 0);
  const int draws = 50000;
  for (int s = 0; s < draws; ++s) n[sample_log_categorical(rng, lw)]++;
  EXPECT_EQ(n[1], 0);
  double chi2 = 0;
  for (std::size_t c = 0; c < p.size(); ++c)
    if (p[c] > 0) chi2 += std::pow(n[c] - draws * p[c], 2) / (draws * p[c]);
  EXPECT_LT(chi2, 16.27);  // chi-square 3 df, p = 0.001
}

TEST(Population, DirichletPosteriorMean) {
  const std::vector<double> delta(4, 0.5);
  const std::vector<ClassIndex> cls{0, 0, 1, 3, 3, 3, 3, 2, 0, 3};
  RngStream rng(6);
  std::vector<double> mean(4, 0.0);
  const int draws = 20000;
  for (int s = 0; s < draws; ++s) {
    const auto p = sample_pi(rng, delta, cls);
    for (int c = 0; c < 4; ++c) mean[c] += p[c] / draws;
  }
  const double a0 = 2.0 + 10.0;
  const std::vector<double> counts{3, 1, 1, 5};
  for (int c = 0; c < 4; ++c) {
    const double m = (0.5 + counts[c]) / a0;
    EXPECT_NEAR(mean[c], m, 4 * std::sqrt(m * (1 - m) / (a0 + 1) / draws));
  }
  EXPECT_THROW(sample_pi(rng, delta, std::vector<ClassIndex>{4}), DataError);
}

TEST(DinaItems, ConjugateBetaMoments) {
  PriorConfig prior;
  prior.dina_monotone = false;
  prior.a_g = 2;
  prior.b_g = 3;
  const DinaItemCounts n{7, 30, 50, 4};  // eta0_y1, eta0_y0, eta1_y1, eta1_y0
  RngStream rng(12);
  double gs = 0, ss = 0;
  const int draws = 40000;
  for (int s = 0; s < draws; ++s) {
    const auto p = sample_dina_item(rng, n, prior);
    gs += p.guess;
    ss += p.slip;
  }
  const double ag = 2 + 7, bg = 3 + 30, as = 1 + 4, bs = 1 + 50;
  const double mg = ag / (ag + bg), ms = as / (as + bs);
  EXPECT_NEAR(gs / draws, mg, 4 * std::sqrt(mg * (1 - mg) / (ag + bg + 1) / draws));
  EXPECT_NEAR(ss / draws, ms, 4 * std::sqrt(ms * (1 - ms) / (as + bs + 1) / draws));
}

TEST(DinaItems, MonotoneConstraintHolds) {
  PriorConfig prior;
  const DinaItemCounts n{40, 2, 3, 40};  // data push g up and s up
  RngStream rng(1);
  for (int s = 0; s < 5000; ++s) {
    const auto p = sample_dina_item(rng, n, prior);
    ASSERT_LT(p.guess, 1 - p.slip);
  }
}

TEST(DinaItems, CountsFromData) {
  const QMatrix q = QMatrix::from_rows({{1, 1}});
  ResponseMatrix y(4, 1);
  y(0, 0) = 1;
  y(1, 0) = 0;
  y(2, 0) = 1;
  y(3, 0) = 1;
  const AttributeMatrix a = AttributeMatrix::from_classes(std::vector<ClassIndex>{3, 3, 1, 0}, 2);
  PriorConfig prior;
  prior.dina_monotone = false;
  RngStream r1(5), r2(5);
  const auto p = sample_dina_item_params(r1, y, a, q, prior);
  const auto expect = sample_dina_item(r2, DinaItemCounts{2, 0, 1, 1}, prior);
  EXPECT_EQ(p[0].guess, expect.guess);
  EXPECT_EQ(p[0].slip, expect.slip);
}

TEST(Augmentation, SignsFollowResponses) {
  const auto d = small_dina(3, 100);
  std::vector<GdinaItemParams> params;
  for (std::size_t j = 0; j < d.q.items(); ++j)
    params.push_back({std::vector<double>(d.q.reduced_classes(j), 0.1)});
  RngStream rng(2);
  const auto z = sample_augmented(rng, d.y, d.alpha, d.q, params);
  for (std::size_t i = 0; i < d.y.examinees(); ++i)
    for (std::size_t j = 0; j < d.q.items(); ++j) {
      if (d.y(i, j)) EXPECT_GE(z(i, j), 0.0);
      else EXPECT_LE(z(i, j), 0.0);
    }
}

TEST(ItemDesign, RowsAreDesignVectors) {
  const auto d = small_dina(4, 50);
  for (std::size_t j = 0; j < d.q.items(); ++j) {
    const auto X = item_design_matrix(d.alpha, d.q, j);
    for (std::size_t i = 0; i < 50; ++i) {
      const auto x = design_vector(reduce_profile(d.alpha.row(i), d.q.row(j)));
      for (std::size_t t = 0; t < x.size(); ++t) ASSERT_EQ(X(i, t), x[t]);
    }
  }
}

TEST(LambdaDraw, RespectsMonotoneTruncation) {
  const auto d = small_dina(5, 200);
  const std::size_t j = 6;  // two-attribute item in the design
  ASSERT_EQ(d.q.kstar(j), 2);
  const auto X = item_design_matrix(d.alpha, d.q, j);
  Eigen::VectorXd z(200);
  RngStream rng(1);
  for (int i = 0; i < 200; ++i) z(i) = rng.normal();
  PriorConfig prior;
  for (int s = 0; s < 500; ++s) {
    const auto p = sample_lambda(rng, z, X, prior.lambda_prior_mean(2), prior.lambda_prior_cov(2),
                                 TruncationSpec::monotone(4));
    ASSERT_LE(p.coeffs[0], 0.0);
    for (int t = 1; t < 4; ++t) ASSERT_GE(p.coeffs[t], 0.0);
  }
}

TEST(Chain, RetainedCountFollowsBurnInAndThinning) {
  const auto d = small_dina(6);
  SamplerOptions o;
  o.iterations = 103;
  o.burn_in = 20;
  o.thin = 4;
  const auto ch = run_sequential_dina(RngStream(1), d.y, d.q, PriorConfig{}, o);
  EXPECT_EQ(ch.retained(), 20u);
  EXPECT_EQ(ch.retained_iterations().front(), 24);
  EXPECT_EQ(ch.retained_iterations().back(), 100);
  EXPECT_EQ(ch.expected_retained(), 20u);
}

TEST(Chain, InvalidLengthsRejected) {
  const auto d = small_dina(6, 10);
  SamplerOptions o;
  o.iterations = 10;
  o.burn_in = 10;
  EXPECT_THROW(run_sequential_dina(RngStream(1), d.y, d.q, PriorConfig{}, o), ConfigError);
  o.burn_in = 2;
  o.thin = 0;
  EXPECT_THROW(run_sequential_dina(RngStream(1), d.y, d.q, PriorConfig{}, o), ConfigError);
}

TEST(Chain, DeterministicAndWorkerInvariant) {
  const auto d = small_dina(7, 500);
  SamplerOptions o;
  o.iterations = 60;
  o.burn_in = 10;
  o.keep_alpha_draws = true;
  for (ModelKind m : {ModelKind::dina, ModelKind::gdina})
    for (Method meth : {Method::sequential, Method::simultaneous, Method::independent}) {
      o.workers = 1;
      const auto a = run_chain(RngStream(9), d.y, d.q, PriorConfig{}, o, m, meth);
      const auto b = run_chain(RngStream(9), d.y, d.q, PriorConfig{}, o, m, meth);
      o.workers = 4;
      const auto c = run_chain(RngStream(9), d.y, d.q, PriorConfig{}, o, m, meth);
      for (std::size_t t = 0; t < a.retained(); ++t) {
        ASSERT_EQ(std::vector<double>(a.pi(t).begin(), a.pi(t).end()),
                  std::vector<double>(b.pi(t).begin(), b.pi(t).end()));
        ASSERT_EQ(std::vector<double>(a.pi(t).begin(), a.pi(t).end()),
                  std::vector<double>(c.pi(t).begin(), c.pi(t).end()));
        ASSERT_TRUE(std::equal(a.alpha_draw(t).begin(), a.alpha_draw(t).end(), c.alpha_draw(t).begin()));
        for (std::size_t j = 0; j < d.q.items(); ++j) {
          if (m == ModelKind::dina) {
            ASSERT_EQ(a.guess(t, j), c.guess(t, j));
            ASSERT_EQ(a.slip(t, j), c.slip(t, j));
          } else {
            ASSERT_TRUE(std::equal(a.lambda(t, j).begin(), a.lambda(t, j).end(), c.lambda(t, j).begin()));
          }
        }
      }
      EXPECT_EQ(a.work.likelihood_terms, c.work.likelihood_terms);
    }
}

TEST(Chain, DifferentSeedsDiffer) {
  const auto d = small_dina(8, 100);
  SamplerOptions o;
  o.iterations = 20;
  o.burn_in = 10;
  const auto a = run_sequential_dina(RngStream(1), d.y, d.q, PriorConfig{}, o);
  const auto b = run_sequential_dina(RngStream(2), d.y, d.q, PriorConfig{}, o);
  EXPECT_NE(a.guess(0, 0), b.guess(0, 0));
}

TEST(Chain, SimultaneousCapEnforced) {
  SimConfig c;
  c.N = 20;
  c.J = 42;
  c.K = 21;
  c.q_source = QSource::generated;
  const auto d = simulate(c);
  SamplerOptions o;
  o.iterations = 2;
  o.burn_in = 1;
  EXPECT_THROW(run_simultaneous(RngStream(1), d.y, d.q, PriorConfig{}, o, ModelKind::dina), ConfigError);
  EXPECT_NO_THROW(run_sequential_dina(RngStream(1), d.y, d.q, PriorConfig{}, o));
}

TEST(Chain, InputValidation) {
  auto d = small_dina(9, 30);
  SamplerOptions o;
  o.iterations = 2;
  o.burn_in = 1;
  ChainInit bad;
  bad.pi = std::vector<double>(3, 1.0 / 3);
  EXPECT_THROW(run_sequential_dina(RngStream(1), d.y, d.q, PriorConfig{}, o, bad), DataError);
  ResponseMatrix y = d.y;
  y(0, 0) = 2;
  EXPECT_THROW(run_sequential_dina(RngStream(1), y, d.q, PriorConfig{}, o), DataError);
  const QMatrix q_short = fixture_q_matrix(3, 10);
  EXPECT_THROW(run_sequential_dina(RngStream(1), d.y, q_short, PriorConfig{}, o), DataError);
  PriorConfig p;
  p.delta = {0.0};
  EXPECT_THROW(run_sequential_dina(RngStream(1), d.y, d.q, p, o), ConfigError);
}

TEST(Chain, GdinaDrawsSatisfyTruncation) {
  const auto d = small_dina(10, 300);
  SamplerOptions o;
  o.iterations = 40;
  o.burn_in = 0;
  const auto ch = run_sequential_gdina(RngStream(3), d.y, d.q, PriorConfig{}, o);
  for (std::size_t t = 0; t < ch.retained(); ++t)
    for (std::size_t j = 0; j < d.q.items(); ++j) {
      const auto l = ch.lambda(t, j);
      ASSERT_LE(l[0], 0.0);
      for (std::size_t u = 1; u < l.size(); ++u) ASSERT_GE(l[u], 0.0);
    }
}

TEST(Chain, IndependentReportsClassHistogram) {
  const auto d = small_dina(11, 200);
  SamplerOptions o;
  o.iterations = 10;
  o.burn_in = 5;
  o.keep_alpha_draws = true;
  const auto ch = run_independent(RngStream(3), d.y, d.q, PriorConfig{}, o, ModelKind::dina);
  for (std::size_t t = 0; t < ch.retained(); ++t) {
    std::vector<double> h(8, 0.0);
    for (ClassIndex c : ch.alpha_draw(t)) h[c] += 1.0 / 200;
    for (int c = 0; c < 8; ++c) EXPECT_NEAR(ch.pi(t)[c], h[c], 1e-12);
  }
}

TEST(Chain, SequentialUsesTwoPiLookupsPerUpdate) {
  const auto d = small_dina(12, 128);
  SamplerOptions o;
  o.iterations = 3;
  o.burn_in = 1;
  const auto ch = run_sequential_dina(RngStream(3), d.y, d.q, PriorConfig{}, o);
  EXPECT_EQ(ch.work.attribute_updates, 3u * 128u * 3u);
  EXPECT_EQ(ch.work.pi_lookups, 2 * ch.work.attribute_updates);
  const auto sim = run_simultaneous(RngStream(3), d.y, d.q, PriorConfig{}, o, ModelKind::dina);
  EXPECT_EQ(sim.work.pi_lookups, 3u * 128u * 8u);
}
