#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "seqcdm/eval.hpp"
#include "seqcdm/io.hpp"
#include "seqcdm/samplers.hpp"
#include "seqcdm/simulate.hpp"

using namespace seqcdm;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / ("seqcdm_io_" + std::string(info->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  void put(const std::string& name, const std::string& content) { std::ofstream(dir / name) << content; }

  fs::path dir;
};

void expect_same_chain(const ChainStore& a, const ChainStore& b) {
  ASSERT_EQ(a.model(), b.model());
  EXPECT_EQ(a.method(), b.method());
  EXPECT_EQ(a.attributes(), b.attributes());
  EXPECT_EQ(a.examinees(), b.examinees());
  ASSERT_EQ(a.items(), b.items());
  EXPECT_EQ(a.iterations(), b.iterations());
  EXPECT_EQ(a.burn_in(), b.burn_in());
  EXPECT_EQ(a.thin(), b.thin());
  ASSERT_EQ(a.retained(), b.retained());
  EXPECT_EQ(a.retained_iterations(), b.retained_iterations());
  EXPECT_EQ(a.has_pi_draws(), b.has_pi_draws());
  EXPECT_EQ(a.has_alpha_draws(), b.has_alpha_draws());
  for (std::size_t d = 0; d < a.retained(); ++d) {
    for (std::size_t j = 0; j < a.items(); ++j) {
      if (a.model() == ModelKind::dina) {
        EXPECT_EQ(a.guess(d, j), b.guess(d, j));
        EXPECT_EQ(a.slip(d, j), b.slip(d, j));
      } else {
        const auto x = a.lambda(d, j), y = b.lambda(d, j);
        EXPECT_EQ(std::vector<double>(x.begin(), x.end()), std::vector<double>(y.begin(), y.end()));
      }
    }
    if (a.has_pi_draws()) {
      const auto x = a.pi(d), y = b.pi(d);
      EXPECT_EQ(std::vector<double>(x.begin(), x.end()), std::vector<double>(y.begin(), y.end()));
    }
    if (a.has_alpha_draws()) {
      const auto x = a.alpha_draw(d), y = b.alpha_draw(d);
      EXPECT_EQ(std::vector<ClassIndex>(x.begin(), x.end()), std::vector<ClassIndex>(y.begin(), y.end()));
    }
  }
  for (std::size_t c = 0; c < a.classes(); ++c) EXPECT_NEAR(a.pi_sum()[c], b.pi_sum()[c], 1e-12);
  for (std::size_t i = 0; i < a.examinees(); ++i)
    for (int k = 0; k < a.attributes(); ++k) EXPECT_EQ(a.alpha_count(i, k), b.alpha_count(i, k));
}

SimulatedData small_data(ModelKind m, int K = 3) {
  SimConfig c;
  c.N = 70;
  c.K = K;
  c.model = m;
  c.seed = 21;
  return simulate(c);
}

ChainStore small_chain(const SimulatedData& d, ModelKind m, Method method, bool keep_alpha,
                       std::size_t max_pi = 1024) {
  SamplerOptions o;
  o.iterations = 40;
  o.burn_in = 10;
  o.thin = 3;
  o.keep_alpha_draws = keep_alpha;
  o.max_stored_pi_classes = max_pi;
  return run_chain(RngStream(5), d.y, d.q, PriorConfig{}, o, m, method);
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3, 1e-300, -2.5e17, 0.0, 5e-324}) EXPECT_EQ(io::parse_double(io::fmt(v), "t"), v);
  EXPECT_EQ(io::parse_double("inf", "t"), std::numeric_limits<double>::infinity());
  EXPECT_EQ(io::parse_double("-inf", "t"), -std::numeric_limits<double>::infinity());
  EXPECT_THROW(io::parse_double("1.5x", "t"), DataError);
  EXPECT_THROW(io::parse_double("", "t"), DataError);
}

TEST_F(TempDir, BinaryMatricesRoundTrip) {
  const auto d = small_data(ModelKind::dina);
  io::write_q(dir / "Q.csv", d.q);
  io::write_y(dir / "Y.csv", d.y);
  io::write_alpha(dir / "alpha.csv", d.alpha);
  EXPECT_EQ(io::read_q(dir / "Q.csv"), d.q);
  EXPECT_EQ(io::read_y(dir / "Y.csv"), d.y);
  EXPECT_EQ(io::read_alpha(dir / "alpha.csv"), d.alpha);
  std::ifstream in(dir / "Q.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "a1,a2,a3");
}

TEST_F(TempDir, MalformedBinaryFilesRejected) {
  put("bad_header.csv", "a1,b2\n0,1\n");
  EXPECT_THROW(io::read_q(dir / "bad_header.csv"), DataError);
  put("bad_value.csv", "a1,a2\n0,2\n");
  EXPECT_THROW(io::read_q(dir / "bad_value.csv"), DataError);
  put("short_row.csv", "item1,item2\n0\n");
  EXPECT_THROW(io::read_y(dir / "short_row.csv"), DataError);
  put("zero_row.csv", "a1,a2\n0,0\n");
  EXPECT_THROW(io::read_q(dir / "zero_row.csv"), DataError);
  EXPECT_THROW(io::read_q(dir / "missing.csv"), DataError);
}

TEST_F(TempDir, DatasetMismatchRejected) {
  put("Q.csv", "a1,a2\n1,0\n0,1\n");
  put("Y.csv", "item1,item2,item3\n0,1,1\n");
  EXPECT_THROW(io::read_dataset(dir), DataError);
}

TEST_F(TempDir, TruthFilesRoundTrip) {
  for (ModelKind m : {ModelKind::dina, ModelKind::gdina}) {
    const auto d = small_data(m, 5);
    const auto sub = dir / to_string(m);
    io::write_dataset(sub, d);
    const auto ds = io::read_dataset(sub);
    EXPECT_EQ(ds.q, d.q);
    EXPECT_EQ(ds.y, d.y);
    const auto t = io::read_truth(sub);
    EXPECT_EQ(t.alpha, d.alpha);
    ASSERT_EQ(t.pi.size(), 32u);
    for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(t.pi[c], d.pi.probs()[c]);
    ASSERT_EQ(t.dina.size(), d.dina.size());
    for (std::size_t j = 0; j < d.dina.size(); ++j) {
      EXPECT_EQ(t.dina[j].guess, d.dina[j].guess);
      EXPECT_EQ(t.dina[j].slip, d.dina[j].slip);
    }
    ASSERT_EQ(t.gdina.size(), d.gdina.size());
    for (std::size_t j = 0; j < d.gdina.size(); ++j) EXPECT_EQ(t.gdina[j].coeffs, d.gdina[j].coeffs);
  }
}

TEST_F(TempDir, LambdaFileChecksTermOrder) {
  put("lambda.csv", "item,term,order,value\n1,1,0,-1\n1,3,1,0.5\n");
  EXPECT_THROW(io::read_lambda(dir / "lambda.csv"), DataError);
}

TEST_F(TempDir, AlphaDrawBinaryLayout) {
  ChainStore ch(ModelKind::dina, Method::sequential, 3, 3, {0}, 3, 1, 1, false);
  ch.append_draw(2, std::vector<double>{0.1}, std::vector<double>{0.2}, {}, {});
  ch.append_draw(3, std::vector<double>{0.1}, std::vector<double>{0.2}, {}, {});
  ch.set_alpha_draws({1, 6, 7, 0, 2, 4});
  const auto s = io::alpha_draws_binary(ch);
  ASSERT_EQ(s.size(), 20u + 2 * 2);
  EXPECT_EQ(s.substr(0, 4), "SQAB");
  EXPECT_EQ(static_cast<unsigned char>(s[4]), 1);
  EXPECT_EQ(static_cast<unsigned char>(s[8]), 3);
  EXPECT_EQ(static_cast<unsigned char>(s[12]), 3);
  EXPECT_EQ(static_cast<unsigned char>(s[16]), 2);
  // draw 1 bits i*3+k: 1 -> bit 0; 6 -> bits 4,5; 7 -> bits 6,7,8
  EXPECT_EQ(static_cast<unsigned char>(s[20]), 0b11110001);
  EXPECT_EQ(static_cast<unsigned char>(s[21]), 0b00000001);
  io::write_atomic(dir / "a.bin", s);
  std::size_t N = 0, draws = 0;
  int K = 0;
  EXPECT_EQ(io::read_alpha_draws(dir / "a.bin", N, K, draws), (std::vector<ClassIndex>{1, 6, 7, 0, 2, 4}));
  EXPECT_EQ(N, 3u);
  EXPECT_EQ(K, 3);
  EXPECT_EQ(draws, 2u);
  io::write_atomic(dir / "cut.bin", s.substr(0, s.size() - 1));
  EXPECT_THROW(io::read_alpha_draws(dir / "cut.bin", N, K, draws), DataError);
  io::write_atomic(dir / "magic.bin", "XXXX" + s.substr(4));
  EXPECT_THROW(io::read_alpha_draws(dir / "magic.bin", N, K, draws), DataError);
}

TEST_F(TempDir, ChainRoundTripAllModelsAndMethods) {
  for (ModelKind m : {ModelKind::dina, ModelKind::gdina}) {
    const auto d = small_data(m);
    for (Method method : {Method::sequential, Method::simultaneous, Method::independent}) {
      const auto ch = small_chain(d, m, method, true);
      const auto sub = dir / (to_string(m) + "_" + to_string(method));
      io::write_chain(sub, ch);
      expect_same_chain(ch, io::read_chain(sub));
    }
  }
}

TEST_F(TempDir, ChainRoundTripWithoutPiOrAlphaDraws) {
  const auto d = small_data(ModelKind::dina);
  const auto ch = small_chain(d, ModelKind::dina, Method::sequential, false, 4);
  ASSERT_FALSE(ch.has_pi_draws());
  const auto files = io::write_chain(dir, ch);
  EXPECT_FALSE(fs::exists(dir / "chain_pi.csv"));
  EXPECT_FALSE(fs::exists(dir / "alpha_draws.bin"));
  const auto back = io::read_chain(dir);
  expect_same_chain(ch, back);
  const auto e1 = point_estimates(ch), e2 = point_estimates(back);
  EXPECT_EQ(e1.alpha_hat, e2.alpha_hat);
  for (std::size_t c = 0; c < e1.pi.size(); ++c) EXPECT_NEAR(e1.pi[c], e2.pi[c], 1e-14);
}

TEST_F(TempDir, ChainFilesMustAgree) {
  const auto d = small_data(ModelKind::dina);
  io::write_chain(dir, small_chain(d, ModelKind::dina, Method::sequential, false));
  std::string s;
  {
    std::ifstream in(dir / "chain_s.csv");
    s.assign(std::istreambuf_iterator<char>(in), {});
  }
  s.replace(s.find("\n13,"), 4, "\n14,");
  io::write_atomic(dir / "chain_s.csv", s);
  EXPECT_THROW(io::read_chain(dir), DataError);
}

TEST_F(TempDir, EstimatesFiles) {
  const auto d = small_data(ModelKind::gdina);
  const auto e = point_estimates(small_chain(d, ModelKind::gdina, Method::sequential, false));
  const auto files = io::write_estimates(dir, e);
  EXPECT_EQ(files, (std::vector<std::string>{"alpha_hat.csv", "pi_hat.csv", "lambda_hat.csv"}));
  EXPECT_EQ(io::read_alpha(dir / "alpha_hat.csv"), e.alpha_hat);
  const auto l = io::read_lambda(dir / "lambda_hat.csv");
  ASSERT_EQ(l.size(), e.gdina.size());
  for (std::size_t j = 0; j < l.size(); ++j) EXPECT_EQ(l[j].coeffs, e.gdina[j].coeffs);
}

TEST(Config, PriorRoundTripAndErrors) {
  PriorConfig p;
  p.delta = {0.5, 0.25};
  p.truncation = TruncationMode::custom;
  p.order_intervals = {Interval::unbounded(), Interval::nonnegative(), Interval{-1.0, 2.0}};
  p.refinement_sweeps = 3;
  p.a_g = 2;
  const auto back = io::prior_from_json(io::to_json(p));
  EXPECT_EQ(back.delta, p.delta);
  EXPECT_EQ(back.truncation, TruncationMode::custom);
  ASSERT_EQ(back.order_intervals.size(), 3u);
  EXPECT_EQ(back.order_intervals[0].lower, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(back.order_intervals[1].lower, 0.0);
  EXPECT_EQ(back.order_intervals[2].upper, 2.0);
  EXPECT_EQ(back.refinement_sweeps, 3);
  EXPECT_EQ(back.a_g, 2.0);

  EXPECT_THROW(io::prior_from_json(io::json{{"deltta", 1.0}}), ConfigError);
  EXPECT_THROW(io::prior_from_json(io::json{{"delta", "one"}}), ConfigError);
  EXPECT_THROW(io::prior_from_json(io::json{{"a_g", "x"}}), ConfigError);
  EXPECT_THROW(io::prior_from_json(io::json{{"delta", -1.0}}), ConfigError);
  EXPECT_THROW(io::prior_from_json(io::json{{"truncation", "custom"}}), ConfigError);
  EXPECT_THROW(io::prior_from_json(io::json{{"truncation", "custom"}, {"order_intervals", {{1.0, 0.0}}}}),
               ConfigError);
}

TEST(Config, SimulateRoundTripAndErrors) {
  SimConfig c;
  c.N = 17;
  c.K = 5;
  c.structure = Structure::correlated;
  c.rho = 0.4;
  c.model = ModelKind::gdina;
  c.seed = 99;
  const auto b = io::sim_config_from_json(io::to_json(c));
  EXPECT_EQ(b.N, 17u);
  EXPECT_EQ(b.K, 5);
  EXPECT_EQ(b.structure, Structure::correlated);
  EXPECT_EQ(b.rho, 0.4);
  EXPECT_EQ(b.model, ModelKind::gdina);
  EXPECT_EQ(b.seed, 99u);
  EXPECT_THROW(io::sim_config_from_json(io::json{{"N", 0}}), ConfigError);
  EXPECT_THROW(io::sim_config_from_json(io::json{{"N", -3}}), ConfigError);
  EXPECT_THROW(io::sim_config_from_json(io::json{{"n", 10}}), ConfigError);
  EXPECT_THROW(io::sim_config_from_json(io::json{{"K", "three"}}), ConfigError);
  EXPECT_THROW(io::sim_config_from_json(io::json{{"structure", "flat"}}), ConfigError);
  EXPECT_THROW(io::sim_config_from_json(io::json::array()), ConfigError);
}

TEST_F(TempDir, TruncationFile) {
  put("t.csv", "order,lower,upper\n0,-inf,inf\n1,0,inf\n2,-0.5,1\n");
  const auto v = io::read_truncation_file(dir / "t.csv");
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[1].lower, 0.0);
  EXPECT_EQ(v[2].lower, -0.5);
  put("skip.csv", "order,lower,upper\n0,-inf,inf\n2,0,inf\n");
  EXPECT_THROW(io::read_truncation_file(dir / "skip.csv"), ConfigError);
  put("empty.csv", "order,lower,upper\n0,1,0\n");
  EXPECT_THROW(io::read_truncation_file(dir / "empty.csv"), ConfigError);
}

TEST_F(TempDir, ReadJsonErrors) {
  put("bad.json", "{ \"N\": ");
  EXPECT_THROW(io::read_json(dir / "bad.json"), ConfigError);
  EXPECT_THROW(io::read_json(dir / "none.json"), ConfigError);
}

TEST_F(TempDir, AtomicWriteReplacesContent) {
  io::write_atomic(dir / "f.txt", "first");
  io::write_atomic(dir / "f.txt", "second");
  std::ifstream in(dir / "f.txt");
  std::string s((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(s, "second");
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_EQ(e.path().filename(), "f.txt");
}
