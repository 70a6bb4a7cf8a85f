#ifndef SEQCDM_IO_HPP
#define SEQCDM_IO_HPP

// CSV / JSON / binary file formats for datasets, truths, chains and reports.

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "seqcdm/chain.hpp"
#include "seqcdm/errors.hpp"
#include "seqcdm/eval.hpp"
#include "seqcdm/model.hpp"
#include "seqcdm/prior.hpp"
#include "seqcdm/samplers.hpp"
#include "seqcdm/simulate.hpp"

namespace seqcdm::io {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Shortest decimal that round-trips to the same double.
inline std::string fmt(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(where + ": '" + std::string(s) + "' is not a number");
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  t.header = split_csv(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv(line);
    if (fields.size() != t.header.size())
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
  }
  return t;
}

/// Write to a temporary file in the same directory, then rename over the target.
inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string numbered_header(const std::string& prefix, std::size_t n) {
  std::string h;
  for (std::size_t k = 0; k < n; ++k) h += (k ? "," : "") + prefix + std::to_string(k + 1);
  return h;
}

// ---------------------------------------------------------------------------
// Binary matrices: Q.csv (a1..aK), Y.csv (item1..itemJ), alpha.csv (a1..aK)
// ---------------------------------------------------------------------------

inline std::string binary_csv(const BinaryMatrix& m, const std::string& prefix) {
  std::string s = numbered_header(prefix, m.cols()) + "\n";
  s.reserve(s.size() + m.rows() * (2 * m.cols() + 1));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) s.push_back(',');
      s.push_back(static_cast<char>('0' + m(r, c)));
    }
    s.push_back('\n');
  }
  return s;
}

inline BinaryMatrix read_binary_csv(const fs::path& path, const std::string& prefix) {
  const auto t = read_csv(path);
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] != prefix + std::to_string(c + 1))
      throw DataError(path.string() + ": header column " + std::to_string(c + 1) + " should be '" + prefix +
                      std::to_string(c + 1) + "', found '" + t.header[c] + "'");
  BinaryMatrix m(t.rows.size(), t.header.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      const auto& f = t.rows[r][c];
      if (f != "0" && f != "1")
        throw DataError(path.string() + ": row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) +
                        " is '" + f + "', expected 0 or 1");
      m(r, c) = static_cast<std::uint8_t>(f[0] - '0');
    }
  return m;
}

inline void write_q(const fs::path& p, const QMatrix& q) { write_atomic(p, binary_csv(q.matrix(), "a")); }
inline QMatrix read_q(const fs::path& p) { return QMatrix(read_binary_csv(p, "a")); }
inline void write_y(const fs::path& p, const ResponseMatrix& y) { write_atomic(p, binary_csv(y.matrix(), "item")); }
inline ResponseMatrix read_y(const fs::path& p) { return ResponseMatrix(read_binary_csv(p, "item")); }
inline void write_alpha(const fs::path& p, const AttributeMatrix& a) { write_atomic(p, binary_csv(a.matrix(), "a")); }
inline AttributeMatrix read_alpha(const fs::path& p) { return AttributeMatrix(read_binary_csv(p, "a")); }

// ---------------------------------------------------------------------------
// Truth / estimate files
// ---------------------------------------------------------------------------

/// class,pi with one-based class numbers.
inline void write_pi(const fs::path& p, std::span<const double> pi) {
  std::string s = "class,pi\n";
  for (std::size_t c = 0; c < pi.size(); ++c) s += std::to_string(c + 1) + "," + fmt(pi[c]) + "\n";
  write_atomic(p, s);
}

inline std::vector<double> read_pi(const fs::path& p) {
  const auto t = read_csv(p);
  if (t.header != std::vector<std::string>{"class", "pi"}) throw DataError(p.string() + ": expected header class,pi");
  std::vector<double> pi;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r][0] != std::to_string(r + 1)) throw DataError(p.string() + ": classes must be listed 1..C in order");
    pi.push_back(parse_double(t.rows[r][1], p.string()));
  }
  return pi;
}

/// item,guess,slip
inline void write_dina_items(const fs::path& p, std::span<const DinaItemParams> items) {
  std::string s = "item,guess,slip\n";
  for (std::size_t j = 0; j < items.size(); ++j)
    s += std::to_string(j + 1) + "," + fmt(items[j].guess) + "," + fmt(items[j].slip) + "\n";
  write_atomic(p, s);
}

inline std::vector<DinaItemParams> read_dina_items(const fs::path& p) {
  const auto t = read_csv(p);
  if (t.header != std::vector<std::string>{"item", "guess", "slip"})
    throw DataError(p.string() + ": expected header item,guess,slip");
  std::vector<DinaItemParams> out;
  for (const auto& r : t.rows) out.push_back({parse_double(r[1], p.string()), parse_double(r[2], p.string())});
  return out;
}

/// Long format item,term,order,value; term is the one-based canonical position.
inline void write_lambda(const fs::path& p, std::span<const GdinaItemParams> items) {
  std::string s = "item,term,order,value\n";
  for (std::size_t j = 0; j < items.size(); ++j) {
    const int kstar = std::countr_zero(items[j].coeffs.size());
    const auto orders = term_orders(kstar);
    for (std::size_t t = 0; t < items[j].coeffs.size(); ++t)
      s += std::to_string(j + 1) + "," + std::to_string(t + 1) + "," + std::to_string(orders[t]) + "," +
           fmt(items[j].coeffs[t]) + "\n";
  }
  write_atomic(p, s);
}

inline std::vector<GdinaItemParams> read_lambda(const fs::path& p) {
  const auto t = read_csv(p);
  if (t.header != std::vector<std::string>{"item", "term", "order", "value"})
    throw DataError(p.string() + ": expected header item,term,order,value");
  std::vector<GdinaItemParams> out;
  for (const auto& r : t.rows) {
    const auto j = static_cast<std::size_t>(parse_double(r[0], p.string()));
    const auto term = static_cast<std::size_t>(parse_double(r[1], p.string()));
    if (j < 1) throw DataError(p.string() + ": item numbers start at 1");
    if (j > out.size()) out.resize(j);
    if (term != out[j - 1].coeffs.size() + 1) throw DataError(p.string() + ": terms must be listed in order");
    out[j - 1].coeffs.push_back(parse_double(r[3], p.string()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (auto k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(where + ": unknown field '" + it.key() + "'");
  }
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(key) + ": wrong type");
  }
}

}  // namespace detail

inline json interval_json(const Interval& iv) {
  auto bound = [](double v) -> json {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    return v;
  };
  return json::array({bound(iv.lower), bound(iv.upper)});
}

inline Interval interval_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": interval must be [lower, upper]");
  auto bound = [&](const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_double(v.get<std::string>(), where);
    throw ConfigError(where + ": interval bound must be a number or \"inf\"/\"-inf\"");
  };
  Interval iv{bound(j[0]), bound(j[1])};
  if (iv.empty()) throw ConfigError(where + ": empty interval");
  return iv;
}

inline std::string to_string(TruncationMode m) {
  switch (m) {
    case TruncationMode::none: return "none";
    case TruncationMode::monotone: return "monotone";
    case TruncationMode::custom: return "custom";
  }
  return "?";
}

/// Custom truncation file: CSV with header order,lower,upper (one row per interaction order).
inline std::vector<Interval> read_truncation_file(const fs::path& p) {
  const auto t = read_csv(p);
  if (t.header != std::vector<std::string>{"order", "lower", "upper"})
    throw ConfigError(p.string() + ": expected header order,lower,upper");
  std::vector<Interval> out;
  for (const auto& r : t.rows) {
    const auto w = static_cast<std::size_t>(parse_double(r[0], p.string()));
    if (w != out.size()) throw ConfigError(p.string() + ": orders must be listed 0,1,2,... in sequence");
    Interval iv{parse_double(r[1], p.string()), parse_double(r[2], p.string())};
    if (iv.empty()) throw ConfigError(p.string() + ": empty interval for order " + std::to_string(w));
    out.push_back(iv);
  }
  return out;
}

inline json to_json(const PriorConfig& p) {
  json j;
  j["delta"] = p.delta.size() == 1 ? json(p.delta.front()) : json(p.delta);
  j["intercept_mean"] = p.intercept_mean;
  j["intercept_sd"] = p.intercept_sd;
  j["effect_mean"] = p.effect_mean;
  j["effect_sd"] = p.effect_sd;
  j["truncation"] = to_string(p.truncation);
  if (p.truncation == TruncationMode::custom) {
    auto arr = json::array();
    for (const auto& iv : p.order_intervals) arr.push_back(interval_json(iv));
    j["order_intervals"] = arr;
  }
  j["refinement_sweeps"] = p.refinement_sweeps;
  j["a_g"] = p.a_g;
  j["b_g"] = p.b_g;
  j["a_s"] = p.a_s;
  j["b_s"] = p.b_s;
  j["dina_monotone"] = p.dina_monotone;
  return j;
}

inline PriorConfig prior_from_json(const json& j) {
  detail::reject_unknown(j,
                         {"delta", "intercept_mean", "intercept_sd", "effect_mean", "effect_sd", "truncation",
                          "order_intervals", "refinement_sweeps", "a_g", "b_g", "a_s", "b_s", "dina_monotone"},
                         "prior");
  PriorConfig p;
  if (j.contains("delta")) {
    const auto& d = j["delta"];
    if (d.is_number()) p.delta = {d.get<double>()};
    else if (d.is_array()) detail::get(j, "delta", p.delta);
    else throw ConfigError("delta: expected a number or an array");
  }
  detail::get(j, "intercept_mean", p.intercept_mean);
  detail::get(j, "intercept_sd", p.intercept_sd);
  detail::get(j, "effect_mean", p.effect_mean);
  detail::get(j, "effect_sd", p.effect_sd);
  if (j.contains("truncation")) {
    std::string t;
    detail::get(j, "truncation", t);
    if (t == "none") p.truncation = TruncationMode::none;
    else if (t == "monotone") p.truncation = TruncationMode::monotone;
    else if (t == "custom") p.truncation = TruncationMode::custom;
    else throw ConfigError("truncation: expected none, monotone or custom");
  }
  if (j.contains("order_intervals")) {
    if (!j["order_intervals"].is_array()) throw ConfigError("order_intervals: expected an array");
    for (const auto& iv : j["order_intervals"]) p.order_intervals.push_back(interval_from_json(iv, "order_intervals"));
  }
  detail::get(j, "refinement_sweeps", p.refinement_sweeps);
  detail::get(j, "a_g", p.a_g);
  detail::get(j, "b_g", p.b_g);
  detail::get(j, "a_s", p.a_s);
  detail::get(j, "b_s", p.b_s);
  detail::get(j, "dina_monotone", p.dina_monotone);
  if (p.truncation == TruncationMode::custom && p.order_intervals.empty())
    throw ConfigError("order_intervals: required when truncation is custom");
  p.validate();
  return p;
}

inline std::string to_string(Structure s) { return s == Structure::uniform ? "uniform" : "correlated"; }
inline std::string to_string(QSource s) { return s == QSource::fixture ? "fixture" : "generated"; }

inline json to_json(const SimConfig& c) {
  json j;
  j["N"] = c.N;
  j["J"] = c.J;
  j["K"] = c.K;
  j["structure"] = to_string(c.structure);
  j["rho"] = c.rho;
  j["model"] = seqcdm::to_string(c.model);
  j["guess"] = c.guess;
  j["slip"] = c.slip;
  j["q_source"] = to_string(c.q_source);
  j["q_fixture"] = c.q_fixture;
  j["seed"] = c.seed;
  return j;
}

inline SimConfig sim_config_from_json(const json& j) {
  detail::reject_unknown(j, {"N", "J", "K", "structure", "rho", "model", "guess", "slip", "q_source", "q_fixture", "seed"},
                         "simulate config");
  SimConfig c;
  long long N = static_cast<long long>(c.N), J = static_cast<long long>(c.J);
  detail::get(j, "N", N);
  detail::get(j, "J", J);
  if (N < 1) throw ConfigError("N: must be >= 1");
  if (J < 1) throw ConfigError("J: must be >= 1");
  c.N = static_cast<std::size_t>(N);
  c.J = static_cast<std::size_t>(J);
  detail::get(j, "K", c.K);
  std::string s;
  if (j.contains("structure")) {
    detail::get(j, "structure", s);
    if (s == "uniform") c.structure = Structure::uniform;
    else if (s == "correlated") c.structure = Structure::correlated;
    else throw ConfigError("structure: expected uniform or correlated");
  }
  detail::get(j, "rho", c.rho);
  if (j.contains("model")) {
    detail::get(j, "model", s);
    c.model = parse_model(s);
  }
  detail::get(j, "guess", c.guess);
  detail::get(j, "slip", c.slip);
  if (j.contains("q_source")) {
    detail::get(j, "q_source", s);
    if (s == "fixture") c.q_source = QSource::fixture;
    else if (s == "generated") c.q_source = QSource::generated;
    else throw ConfigError("q_source: expected fixture or generated");
  }
  detail::get(j, "q_fixture", c.q_fixture);
  detail::get(j, "seed", c.seed);
  c.validate();
  return c;
}

inline json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open config " + p.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// Writes Q.csv, Y.csv and truth files (alpha.csv, pi.csv, items.csv or lambda.csv).
inline std::vector<std::string> write_dataset(const fs::path& dir, const SimulatedData& d) {
  fs::create_directories(dir);
  std::vector<std::string> files{"Q.csv", "Y.csv", "alpha.csv", "pi.csv"};
  write_q(dir / "Q.csv", d.q);
  write_y(dir / "Y.csv", d.y);
  write_alpha(dir / "alpha.csv", d.alpha);
  write_pi(dir / "pi.csv", d.pi.probs());
  if (!d.dina.empty()) {
    write_dina_items(dir / "items.csv", d.dina);
    files.push_back("items.csv");
  }
  if (!d.gdina.empty()) {
    write_lambda(dir / "lambda.csv", d.gdina);
    files.push_back("lambda.csv");
  }
  return files;
}

struct Dataset {
  QMatrix q;
  ResponseMatrix y;
};

inline Dataset read_dataset(const fs::path& dir) {
  Dataset d{read_q(dir / "Q.csv"), read_y(dir / "Y.csv")};
  check_dims(d.y, d.q);
  return d;
}

struct Truth {
  AttributeMatrix alpha;
  std::vector<double> pi;
  std::vector<DinaItemParams> dina;
  std::vector<GdinaItemParams> gdina;
};

inline Truth read_truth(const fs::path& dir) {
  Truth t;
  t.alpha = read_alpha(dir / "alpha.csv");
  t.pi = read_pi(dir / "pi.csv");
  if (fs::exists(dir / "items.csv")) t.dina = read_dina_items(dir / "items.csv");
  if (fs::exists(dir / "lambda.csv")) t.gdina = read_lambda(dir / "lambda.csv");
  return t;
}

// ---------------------------------------------------------------------------
// Chains
// ---------------------------------------------------------------------------

inline constexpr std::array<char, 4> alpha_magic{'S', 'Q', 'A', 'B'};
inline constexpr std::uint32_t alpha_format_version = 1;

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) s.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}
inline std::uint32_t get_u32(const std::string& s, std::size_t at) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + b])) << (8 * b);
  return v;
}

}  // namespace detail

/// Binary alpha draws: "SQAB", u32 version, u32 N, u32 K, u32 draws (little-endian),
/// then for each draw the N x K bits row-major, packed LSB-first into bytes;
/// bit index within a draw is i*K + k and each draw starts on a byte boundary.
inline std::string alpha_draws_binary(const ChainStore& ch) {
  std::string s(alpha_magic.begin(), alpha_magic.end());
  const std::size_t N = ch.examinees();
  const auto K = static_cast<std::size_t>(ch.attributes());
  detail::put_u32(s, alpha_format_version);
  detail::put_u32(s, static_cast<std::uint32_t>(N));
  detail::put_u32(s, static_cast<std::uint32_t>(K));
  detail::put_u32(s, static_cast<std::uint32_t>(ch.retained()));
  const std::size_t bytes = (N * K + 7) / 8;
  for (std::size_t d = 0; d < ch.retained(); ++d) {
    std::string packed(bytes, '\0');
    const auto draw = ch.alpha_draw(d);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < K; ++k)
        if ((draw[i] >> k) & 1u) {
          const std::size_t bit = i * K + k;
          packed[bit / 8] = static_cast<char>(packed[bit / 8] | (1u << (bit % 8)));
        }
    s += packed;
  }
  return s;
}

/// Returns draws x N class indices.
inline std::vector<ClassIndex> read_alpha_draws(const fs::path& p, std::size_t& N, int& K, std::size_t& draws) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  const std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (s.size() < 20 || !std::equal(alpha_magic.begin(), alpha_magic.end(), s.begin()))
    throw DataError(p.string() + ": not an alpha draw file");
  if (detail::get_u32(s, 4) != alpha_format_version) throw DataError(p.string() + ": unsupported version");
  N = detail::get_u32(s, 8);
  K = static_cast<int>(detail::get_u32(s, 12));
  draws = detail::get_u32(s, 16);
  const std::size_t bytes = (N * K + 7) / 8;
  if (s.size() != 20 + draws * bytes) throw DataError(p.string() + ": truncated file");
  std::vector<ClassIndex> out(draws * N, 0);
  for (std::size_t d = 0; d < draws; ++d)
    for (std::size_t i = 0; i < N; ++i)
      for (int k = 0; k < K; ++k) {
        const std::size_t bit = i * K + k;
        const auto byte = static_cast<unsigned char>(s[20 + d * bytes + bit / 8]);
        out[d * N + i] |= static_cast<ClassIndex>((byte >> (bit % 8)) & 1u) << k;
      }
  return out;
}

inline json chain_meta(const ChainStore& ch) {
  json j;
  j["model"] = seqcdm::to_string(ch.model());
  j["method"] = seqcdm::to_string(ch.method());
  j["K"] = ch.attributes();
  j["N"] = ch.examinees();
  j["J"] = ch.items();
  j["iterations"] = ch.iterations();
  j["burn_in"] = ch.burn_in();
  j["thin"] = ch.thin();
  j["retained"] = ch.retained();
  j["pi_draws"] = ch.has_pi_draws();
  j["alpha_draws"] = ch.has_alpha_draws();
  if (ch.model() == ModelKind::gdina) {
    auto w = json::array();
    for (std::size_t j2 = 0; j2 < ch.items(); ++j2) w.push_back(ch.lambda_width(j2));
    j["lambda_widths"] = w;
  }
  j["work"] = {{"attribute_updates", ch.work.attribute_updates},
               {"pi_lookups", ch.work.pi_lookups},
               {"likelihood_terms", ch.work.likelihood_terms}};
  return j;
}

/// Writes one chain directory; returns the file names written.
inline std::vector<std::string> write_chain(const fs::path& dir, const ChainStore& ch) {
  fs::create_directories(dir);
  std::vector<std::string> files;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_atomic(dir / name, content);
    files.push_back(name);
  };
  emit("chain.json", chain_meta(ch).dump(2) + "\n");
  const std::size_t R = ch.retained();
  const std::size_t J = ch.items();
  if (ch.model() == ModelKind::dina) {
    std::string g = "iteration," + numbered_header("g", J) + "\n";
    std::string s = "iteration," + numbered_header("s", J) + "\n";
    for (std::size_t d = 0; d < R; ++d) {
      g += std::to_string(ch.retained_iterations()[d]);
      s += std::to_string(ch.retained_iterations()[d]);
      for (std::size_t j = 0; j < J; ++j) {
        g += "," + fmt(ch.guess(d, j));
        s += "," + fmt(ch.slip(d, j));
      }
      g += "\n";
      s += "\n";
    }
    emit("chain_g.csv", g);
    emit("chain_s.csv", s);
  } else {
    std::string l = "iteration";
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t t = 0; t < ch.lambda_width(j); ++t)
        l += ",lambda" + std::to_string(j + 1) + "_" + std::to_string(t + 1);
    l += "\n";
    for (std::size_t d = 0; d < R; ++d) {
      l += std::to_string(ch.retained_iterations()[d]);
      for (std::size_t j = 0; j < J; ++j)
        for (double v : ch.lambda(d, j)) l += "," + fmt(v);
      l += "\n";
    }
    emit("chain_lambda.csv", l);
  }
  if (ch.has_pi_draws()) {
    std::string p = "iteration," + numbered_header("pi", ch.classes()) + "\n";
    for (std::size_t d = 0; d < R; ++d) {
      p += std::to_string(ch.retained_iterations()[d]);
      for (double v : ch.pi(d)) p += "," + fmt(v);
      p += "\n";
    }
    emit("chain_pi.csv", p);
  }
  {
    std::string p = "class,pi\n";
    for (std::size_t c = 0; c < ch.classes(); ++c)
      p += std::to_string(c + 1) + "," + fmt(ch.pi_sum()[c] / static_cast<double>(R)) + "\n";
    emit("pi_mean.csv", p);
  }
  {
    const int K = ch.attributes();
    std::string a = numbered_header("a", static_cast<std::size_t>(K)) + "\n";
    for (std::size_t i = 0; i < ch.examinees(); ++i) {
      for (int k = 0; k < K; ++k)
        a += (k ? "," : "") + fmt(static_cast<double>(ch.alpha_count(i, k)) / static_cast<double>(R));
      a += "\n";
    }
    emit("alpha_mean.csv", a);
  }
  if (ch.has_alpha_draws()) emit("alpha_draws.bin", alpha_draws_binary(ch));
  return files;
}

inline ChainStore read_chain(const fs::path& dir) {
  const json meta = read_json(dir / "chain.json");
  ChainStore ch;
  try {
    const ModelKind model = parse_model(meta.at("model").get<std::string>());
    const Method method = parse_method(meta.at("method").get<std::string>());
    const int K = meta.at("K").get<int>();
    const auto N = meta.at("N").get<std::size_t>();
    const auto J = meta.at("J").get<std::size_t>();
    std::vector<std::size_t> widths(J, 0);
    if (model == ModelKind::gdina) widths = meta.at("lambda_widths").get<std::vector<std::size_t>>();
    ch = ChainStore(model, method, K, N, widths, meta.at("iterations").get<long>(), meta.at("burn_in").get<long>(),
                    meta.at("thin").get<long>(), meta.at("pi_draws").get<bool>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / "chain.json").string() + ": " + e.what());
  }
  auto numbers = [&](const CsvTable& t, std::size_t r, const std::string& where) {
    std::vector<double> v;
    for (std::size_t c = 1; c < t.rows[r].size(); ++c) v.push_back(parse_double(t.rows[r][c], where));
    return v;
  };
  std::vector<long> iters;
  std::vector<std::vector<double>> g, s, l, p;
  auto load = [&](const std::string& name, std::vector<std::vector<double>>& out) {
    const auto t = read_csv(dir / name);
    std::vector<long> it;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      it.push_back(static_cast<long>(parse_double(t.rows[r][0], name)));
      out.push_back(numbers(t, r, name));
    }
    if (iters.empty()) iters = it;
    else if (iters != it) throw DataError(dir.string() + ": " + name + " lists different iterations");
  };
  if (ch.model() == ModelKind::dina) {
    load("chain_g.csv", g);
    load("chain_s.csv", s);
  } else {
    load("chain_lambda.csv", l);
  }
  if (ch.has_pi_draws()) load("chain_pi.csv", p);
  static const std::vector<double> none;
  for (std::size_t d = 0; d < iters.size(); ++d)
    ch.append_draw(iters[d], g.empty() ? none : g[d], s.empty() ? none : s[d], l.empty() ? none : l[d],
                   p.empty() ? none : p[d]);
  const double R = static_cast<double>(ch.retained());
  if (!ch.has_pi_draws()) {
    auto mean = read_pi(dir / "pi_mean.csv");
    for (double& v : mean) v *= R;
    ch.set_pi_sum(std::move(mean));
  }
  const auto a = read_csv(dir / "alpha_mean.csv");
  if (a.rows.size() != ch.examinees() || a.header.size() != static_cast<std::size_t>(ch.attributes()))
    throw DataError(dir.string() + ": alpha_mean.csv has the wrong shape");
  std::vector<std::uint32_t> counts;
  for (const auto& row : a.rows)
    for (const auto& f : row) counts.push_back(static_cast<std::uint32_t>(std::llround(parse_double(f, "alpha_mean.csv") * R)));
  ch.set_alpha_counts(std::move(counts));
  if (fs::exists(dir / "alpha_draws.bin")) {
    std::size_t N = 0, draws = 0;
    int K = 0;
    auto cls = read_alpha_draws(dir / "alpha_draws.bin", N, K, draws);
    if (N != ch.examinees() || K != ch.attributes() || draws != ch.retained())
      throw DataError(dir.string() + ": alpha_draws.bin does not match chain.json");
    ch.set_alpha_draws(std::move(cls));
  }
  return ch;
}

/// Point estimates in the truth-file layout.
inline std::vector<std::string> write_estimates(const fs::path& dir, const Estimates& e) {
  fs::create_directories(dir);
  std::vector<std::string> files{"alpha_hat.csv", "pi_hat.csv"};
  write_alpha(dir / "alpha_hat.csv", e.alpha_hat);
  write_pi(dir / "pi_hat.csv", e.pi);
  if (e.model == ModelKind::dina) {
    write_dina_items(dir / "items_hat.csv", e.dina);
    files.push_back("items_hat.csv");
  } else {
    write_lambda(dir / "lambda_hat.csv", e.gdina);
    files.push_back("lambda_hat.csv");
  }
  return files;
}

}  // namespace seqcdm::io

#endif  // SEQCDM_IO_HPP
