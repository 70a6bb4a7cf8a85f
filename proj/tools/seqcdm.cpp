// seqcdm command-line tool: simulate, fit, diagnose, evaluate, bench, replay.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqcdm/eval.hpp"
#include "seqcdm/io.hpp"
#include "seqcdm/samplers.hpp"
#include "seqcdm/simulate.hpp"

#ifndef SEQCDM_VERSION
#define SEQCDM_VERSION "dev"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace seqcdm;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_data = 3;
constexpr int exit_numerical = 4;

bool quiet = false;

void log_line(const std::string& s) {
  static std::mutex mu;
  if (quiet) return;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << s << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// manifest.json: the config snapshot is enough to rerun the command with `replay`.
void write_manifest(const fs::path& out, const std::string& command, const json& config, std::uint64_t seed,
                    const json& timing, const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["version"] = SEQCDM_VERSION;
  m["seed"] = seed;
  m["config"] = config;
  m["seconds"] = timing;
  m["outputs"] = outputs;
  io::write_atomic(out / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  SimConfig sim;
  fs::path out;
};

json to_json(const SimulateArgs& a) {
  json j = io::to_json(a.sim);
  if (!a.sim.lambda.empty()) throw ConfigError("lambda: explicit coefficients are not supported in configs");
  return j;
}

int run_simulate(const SimulateArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const SimulatedData d = simulate(a.sim);
  const double gen = seconds_since(t0);
  auto files = io::write_dataset(a.out, d);
  write_manifest(a.out, "simulate", to_json(a), a.sim.seed, {{"simulate", gen}, {"total", seconds_since(t0)}}, files);
  log_line("wrote " + a.out.string() + " (N=" + std::to_string(d.y.examinees()) + ", J=" +
           std::to_string(d.q.items()) + ", K=" + std::to_string(d.q.attributes()) + ")");
  return exit_ok;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
  fs::path data;
  fs::path out;
  ModelKind model = ModelKind::dina;
  Method method = Method::sequential;
  PriorConfig prior;
  SamplerOptions sampler;
  int chains = 1;
  std::uint64_t seed = 1;
};

json sampler_json(const SamplerOptions& o) {
  return {{"iters", o.iterations},         {"burn_in", o.burn_in},
          {"thin", o.thin},                {"workers", o.workers},
          {"random_scan", o.random_scan},  {"keep_alpha_draws", o.keep_alpha_draws},
          {"max_stored_pi_classes", o.max_stored_pi_classes}};
}

SamplerOptions sampler_from_json(const json& j, SamplerOptions o) {
  io::detail::reject_unknown(j, {"iters", "burn_in", "thin", "workers", "random_scan", "keep_alpha_draws",
                                 "max_stored_pi_classes"},
                             "sampler");
  io::detail::get(j, "iters", o.iterations);
  io::detail::get(j, "burn_in", o.burn_in);
  io::detail::get(j, "thin", o.thin);
  io::detail::get(j, "workers", o.workers);
  io::detail::get(j, "random_scan", o.random_scan);
  io::detail::get(j, "keep_alpha_draws", o.keep_alpha_draws);
  io::detail::get(j, "max_stored_pi_classes", o.max_stored_pi_classes);
  return o;
}

json to_json(const FitArgs& a) {
  return {{"data", a.data.string()},
          {"model", to_string(a.model)},
          {"method", to_string(a.method)},
          {"chains", a.chains},
          {"seed", a.seed},
          {"prior", io::to_json(a.prior)},
          {"sampler", sampler_json(a.sampler)}};
}

int run_fit(const FitArgs& a) {
  if (a.chains < 1) throw ConfigError("chains: must be >= 1");
  if (a.sampler.workers < 1) throw ConfigError("workers: must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const io::Dataset d = io::read_dataset(a.data);
  if (a.method == Method::simultaneous && d.q.attributes() > a.sampler.simultaneous_max_attributes)
    throw ConfigError("method: simultaneous sampling is limited to K <= " +
                      std::to_string(a.sampler.simultaneous_max_attributes) + " (K = " +
                      std::to_string(d.q.attributes()) + "); use --method sequential");
  const double read_s = seconds_since(t0);

  std::vector<ChainStore> chains(static_cast<std::size_t>(a.chains));
  const RngStream root(a.seed);
  const auto t1 = std::chrono::steady_clock::now();
  detail::parallel_blocks(a.chains, chains.size(), [&](std::size_t c, std::size_t) {
    SamplerOptions o = a.sampler;
    const long M = o.iterations;
    o.progress = [c, M](long t) {
      log_line("chain " + std::to_string(c + 1) + ": iteration " + std::to_string(t) + "/" + std::to_string(M));
    };
    chains[c] = run_chain(root.split(c), d.y, d.q, a.prior, o, a.model, a.method);
  });
  const double sample_s = seconds_since(t1);

  std::vector<std::string> outputs;
  json per_chain = json::array();
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const std::string name = "chain_" + std::to_string(c + 1);
    for (const auto& f : io::write_chain(a.out / name, chains[c])) outputs.push_back(name + "/" + f);
    for (const auto& f : io::write_estimates(a.out / name, point_estimates(chains[c])))
      outputs.push_back(name + "/" + f);
    const auto& s = chains[c].seconds;
    per_chain.push_back({{"augment", s.augment},
                         {"items", s.items},
                         {"attributes", s.attributes},
                         {"population", s.population},
                         {"total", s.total}});
  }
  write_manifest(a.out, "fit", to_json(a), a.seed,
                 {{"read", read_s}, {"sample", sample_s}, {"chains", per_chain}, {"total", seconds_since(t0)}},
                 outputs);
  log_line("wrote " + std::to_string(chains.size()) + " chain(s) to " + a.out.string());
  return exit_ok;
}

// ---------------------------------------------------------------------------
// diagnose / evaluate
// ---------------------------------------------------------------------------

/// Expands a single root directory holding chain_* subdirectories.
std::vector<fs::path> chain_dirs(const std::vector<std::string>& given) {
  std::vector<fs::path> out;
  for (const auto& g : given) {
    const fs::path p(g);
    if (fs::exists(p / "chain.json")) {
      out.push_back(p);
      continue;
    }
    if (!fs::is_directory(p)) throw DataError(g + ": not a chain directory");
    std::vector<fs::path> sub;
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_directory() && e.path().filename().string().rfind("chain_", 0) == 0 &&
          fs::exists(e.path() / "chain.json"))
        sub.push_back(e.path());
    if (sub.empty()) throw DataError(g + ": no chain.json and no chain_* subdirectories");
    std::sort(sub.begin(), sub.end(), [](const fs::path& x, const fs::path& y) {
      const auto nx = x.filename().string(), ny = y.filename().string();
      return nx.size() != ny.size() ? nx.size() < ny.size() : nx < ny;
    });
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

std::string to_file(const fs::path& p, auto&& writer) {
  std::ostringstream os;
  writer(os);
  io::write_atomic(p, os.str());
  return p.filename().string();
}

struct DiagnoseArgs {
  std::vector<std::string> chains;
  fs::path out;
  std::size_t step = 50;
};

int run_diagnose(const DiagnoseArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dirs = chain_dirs(a.chains);
  if (dirs.size() < 2) throw DataError("diagnose needs at least two chains, found " + std::to_string(dirs.size()));
  std::vector<ChainStore> chains;
  for (const auto& d : dirs) chains.push_back(io::read_chain(d));
  const PsrfReport r = psrf(std::span<const ChainStore>(chains), a.step);
  std::vector<std::string> outputs;
  outputs.push_back(to_file(a.out / "psrf.json", [&](std::ostream& os) { os << to_json(r).dump(2) << '\n'; }));
  outputs.push_back(to_file(a.out / "psrf.csv", [&](std::ostream& os) { write_csv(os, r); }));
  outputs.push_back(to_file(a.out / "psrf_trace.csv", [&](std::ostream& os) { write_trace_csv(os, r); }));
  json cfg{{"chains", json::array()}, {"step", a.step}};
  for (const auto& d : dirs) cfg["chains"].push_back(d.string());
  write_manifest(a.out, "diagnose", cfg, 0, {{"total", seconds_since(t0)}}, outputs);
  std::printf("chains %zu  retained %zu  max R-hat %.4f (%s)  %s 1.1\n", r.chains, r.length, r.max_rhat,
              r.max_name.c_str(), r.max_rhat < 1.1 ? "below" : "above");
  return exit_ok;
}

struct EvaluateArgs {
  std::vector<std::string> chains;
  std::vector<std::string> truth;
  fs::path out;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dirs = chain_dirs(a.chains);
  if (a.truth.empty()) throw ConfigError("truth: at least one truth directory is required");
  if (a.truth.size() != 1 && a.truth.size() != dirs.size())
    throw ConfigError("truth: give one directory, or one per chain (" + std::to_string(dirs.size()) + ")");
  std::vector<Replication> reps;
  std::map<std::string, io::Truth> cache;
  for (std::size_t c = 0; c < dirs.size(); ++c) {
    const std::string& t = a.truth.size() == 1 ? a.truth.front() : a.truth[c];
    if (!cache.count(t)) cache.emplace(t, io::read_truth(t));
    const io::Truth& tr = cache.at(t);
    const Estimates e = point_estimates(io::read_chain(dirs[c]));
    reps.push_back(make_replication(e, tr.dina, tr.gdina, tr.pi, tr.alpha));
  }
  const RecoveryReport r = recovery_metrics(reps);
  std::vector<std::string> outputs;
  outputs.push_back(to_file(a.out / "recovery.json", [&](std::ostream& os) { os << to_json(r).dump(2) << '\n'; }));
  outputs.push_back(to_file(a.out / "recovery.csv", [&](std::ostream& os) { write_csv(os, r); }));
  json cfg{{"chains", json::array()}, {"truth", a.truth}};
  for (const auto& d : dirs) cfg["chains"].push_back(d.string());
  write_manifest(a.out, "evaluate", cfg, 0, {{"total", seconds_since(t0)}}, outputs);
  for (const auto& f : r.families)
    std::printf("%-7s bias %+.4f  rmse %.4f  mae %.4f\n", f.family.c_str(), f.bias, f.rmse, f.mae);
  std::printf("MN(pi) %.4f  AAR %.4f", r.mn_pi, r.aar);
  for (std::size_t n = 0; n < r.par.size(); ++n) std::printf("  PAR%zu %.4f", n, r.par[n]);
  std::printf("\n");
  return exit_ok;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::vector<int> K{3, 7};
  std::size_t N = 1000;
  std::size_t J = 40;
  std::vector<std::string> methods{"sequential", "simultaneous", "independent"};
  ModelKind model = ModelKind::dina;
  long iterations = 200;
  PriorConfig prior;
  int workers = 1;
  std::uint64_t seed = 1;
  fs::path out;
};

json to_json(const BenchArgs& a) {
  return {{"K", a.K},       {"N", a.N},       {"J", a.J},
          {"methods", a.methods}, {"model", to_string(a.model)}, {"iters", a.iterations},
          {"prior", io::to_json(a.prior)}, {"workers", a.workers}, {"seed", a.seed}};
}

struct BenchRow {
  std::string method;
  int K = 0;
  double total = 0, attributes = 0, per_1000 = 0, ratio = 0;
  WorkCounters work;
};

int run_bench(const BenchArgs& a) {
  if (a.K.empty()) throw ConfigError("K: at least one value is required");
  if (a.iterations < 2) throw ConfigError("iters: must be >= 2");
  std::vector<Method> methods;
  for (const auto& m : a.methods) methods.push_back(parse_method(m));
  for (Method m : methods)
    for (int K : a.K)
      if (m == Method::simultaneous && K > SamplerOptions{}.simultaneous_max_attributes)
        throw ConfigError("K: simultaneous sampling is limited to K <= 20");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<BenchRow> rows;
  for (std::size_t ki = 0; ki < a.K.size(); ++ki) {
    SimConfig sc;
    sc.N = a.N;
    sc.J = a.J;
    sc.K = a.K[ki];
    sc.model = a.model;
    sc.seed = a.seed + ki;
    sc.q_source = fixtures::has_simulation_q(sc.K) && sc.J <= fixtures::simulation_q(sc.K).items()
                      ? QSource::fixture
                      : QSource::generated;
    const SimulatedData d = simulate(sc);
    for (Method m : methods) {
      SamplerOptions o;
      o.iterations = a.iterations;
      o.burn_in = a.iterations / 2;
      o.workers = a.workers;
      o.keep_alpha_draws = false;
      const ChainStore ch = run_chain(RngStream(a.seed).split(ki), d.y, d.q, a.prior, o, a.model, m);
      BenchRow r;
      r.method = to_string(m);
      r.K = sc.K;
      r.total = ch.seconds.total;
      r.attributes = ch.seconds.attributes;
      r.per_1000 = ch.seconds.total * 1000.0 / static_cast<double>(a.iterations);
      r.work = ch.work;
      rows.push_back(r);
      log_line(r.method + " K=" + std::to_string(r.K) + ": " + std::to_string(r.per_1000) + " s / 1000 iterations");
    }
  }
  for (auto& r : rows)
    for (const auto& base : rows)
      if (base.method == r.method && base.K == a.K.front()) r.ratio = r.per_1000 / base.per_1000;

  std::ostringstream os;
  os << "method,K,seconds,attribute_seconds,seconds_per_1000,ratio_to_K" << a.K.front()
     << ",attribute_updates,pi_lookups,likelihood_terms,pi_lookups_per_update,likelihood_terms_per_update\n";
  for (const auto& r : rows) {
    const double upd = static_cast<double>(std::max<std::uint64_t>(r.work.attribute_updates, 1));
    os << r.method << ',' << r.K << ',' << io::fmt(r.total) << ',' << io::fmt(r.attributes) << ','
       << io::fmt(r.per_1000) << ',' << io::fmt(r.ratio) << ',' << r.work.attribute_updates << ','
       << r.work.pi_lookups << ',' << r.work.likelihood_terms << ','
       << io::fmt(static_cast<double>(r.work.pi_lookups) / upd) << ','
       << io::fmt(static_cast<double>(r.work.likelihood_terms) / upd) << '\n';
  }
  std::cout << os.str();
  if (!a.out.empty()) {
    io::write_atomic(a.out / "bench.csv", os.str());
    write_manifest(a.out, "bench", to_json(a), a.seed, {{"total", seconds_since(t0)}}, {"bench.csv"});
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------
// Command-line parsing
// ---------------------------------------------------------------------------

/// Applies --truncation {none,monotone,custom:<file>}.
void apply_truncation(PriorConfig& p, const std::string& spec) {
  if (spec.empty()) return;
  if (spec == "none") {
    p.truncation = TruncationMode::none;
  } else if (spec == "monotone") {
    p.truncation = TruncationMode::monotone;
  } else if (spec.rfind("custom:", 0) == 0) {
    p.truncation = TruncationMode::custom;
    p.order_intervals = io::read_truncation_file(spec.substr(7));
  } else {
    throw ConfigError("truncation: expected none, monotone or custom:<file>, got '" + spec + "'");
  }
}

template <class T>
CLI::Option* env_opt(CLI::App* app, const std::string& flag, T& target, const std::string& help,
                     const std::string& env) {
  return app->add_option(flag, target, help)->envname("SEQCDM_" + env);
}

int dispatch_replay(const fs::path& manifest, const fs::path& out_override);

int run_cli(int argc, char** argv) {
  CLI::App app{"Bayesian estimation of DINA and GDINA diagnosis models with sequential Gibbs sampling"};
  app.set_version_flag("--version", SEQCDM_VERSION);
  app.require_subcommand(1);
  app.add_flag("-q,--quiet", quiet, "Suppress progress output")->envname("SEQCDM_QUIET");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset with its true parameters");
  std::string sim_config, sim_out, sim_structure, sim_model, sim_qsource, sim_fixture;
  std::uint64_t sim_seed = 0;
  long long sim_N = -1, sim_J = -1;
  int sim_K = -1;
  double sim_rho = -1, sim_guess = -1, sim_slip = -1;
  sim->add_option("--config", sim_config, "JSON config with SimConfig fields")->envname("SEQCDM_CONFIG");
  env_opt(sim, "--out", sim_out, "Output directory", "OUT")->required();
  env_opt(sim, "--seed", sim_seed, "Random seed", "SEED");
  sim->add_option("-N,--examinees", sim_N, "Number of examinees");
  sim->add_option("-J,--items", sim_J, "Number of items");
  sim->add_option("-K,--attributes", sim_K, "Number of attributes");
  sim->add_option("--structure", sim_structure, "uniform or correlated");
  sim->add_option("--rho", sim_rho, "Attribute correlation for the correlated structure");
  env_opt(sim, "--model", sim_model, "dina or gdina", "MODEL");
  sim->add_option("--guess", sim_guess, "DINA guessing parameter");
  sim->add_option("--slip", sim_slip, "DINA slipping parameter");
  sim->add_option("--q-source", sim_qsource, "fixture or generated");
  sim->add_option("--q-fixture", sim_fixture, "Named Q-matrix fixture");

  // fit
  auto* fit = app.add_subcommand("fit", "Run one or more MCMC chains on a dataset directory");
  std::string fit_data, fit_out, fit_config, fit_model = "dina", fit_method = "sequential", fit_trunc;
  std::uint64_t fit_seed = 1;
  long fit_iters = -1, fit_burn = -1, fit_thin = -1;
  double fit_delta = -1;
  int fit_chains = 1, fit_workers = 1;
  bool fit_keep_alpha = false, fit_random_scan = false;
  fit->add_option("--data", fit_data, "Directory with Q.csv and Y.csv")->required()->envname("SEQCDM_DATA");
  env_opt(fit, "--out", fit_out, "Output directory", "OUT")->required();
  fit->add_option("--config", fit_config, "JSON config with optional 'prior' and 'sampler' objects")
      ->envname("SEQCDM_CONFIG");
  env_opt(fit, "--seed", fit_seed, "Random seed", "SEED");
  env_opt(fit, "--model", fit_model, "dina or gdina", "MODEL");
  env_opt(fit, "--method", fit_method, "sequential, simultaneous or independent", "METHOD");
  env_opt(fit, "--iters", fit_iters, "Total iterations M", "ITERS");
  env_opt(fit, "--burn-in", fit_burn, "Burn-in B", "BURN_IN");
  env_opt(fit, "--thin", fit_thin, "Thinning interval", "THIN");
  env_opt(fit, "--delta", fit_delta, "Dirichlet concentration (broadcast to every class)", "DELTA");
  env_opt(fit, "--truncation", fit_trunc, "none, monotone or custom:<file>", "TRUNCATION");
  env_opt(fit, "--chains", fit_chains, "Independent chains, run concurrently", "CHAINS");
  env_opt(fit, "--workers", fit_workers, "Examinee-parallel workers per chain", "WORKERS");
  fit->add_flag("--keep-alpha", fit_keep_alpha, "Store attribute draws in alpha_draws.bin");
  fit->add_flag("--random-scan", fit_random_scan, "Update attributes in random order");

  // diagnose
  auto* dia = app.add_subcommand("diagnose", "Potential scale reduction factors across chains");
  DiagnoseArgs dargs;
  std::string dia_out;
  dia->add_option("chains", dargs.chains, "Chain directories, or a fit output directory")->required();
  env_opt(dia, "--out", dia_out, "Output directory", "OUT")->required();
  dia->add_option("--step", dargs.step, "Prefix step for the R-hat trace");

  // evaluate
  auto* eva = app.add_subcommand("evaluate", "Recovery metrics against the generating truth");
  EvaluateArgs eargs;
  std::string eva_out;
  eva->add_option("chains", eargs.chains, "Chain directories, or fit output directories")->required();
  eva->add_option("--truth", eargs.truth, "Dataset directory with truth files (one, or one per chain)")
      ->required();
  env_opt(eva, "--out", eva_out, "Output directory", "OUT")->required();

  // bench
  auto* ben = app.add_subcommand("bench", "Wall-clock scaling of the samplers in K");
  BenchArgs bargs;
  std::string ben_out, ben_model = "dina";
  double ben_delta = -1;
  ben->add_option("-K,--attributes", bargs.K, "Attribute counts")->delimiter(',');
  ben->add_option("-N,--examinees", bargs.N, "Number of examinees");
  ben->add_option("-J,--items", bargs.J, "Number of items");
  ben->add_option("--methods", bargs.methods, "Samplers to time")->delimiter(',');
  env_opt(ben, "--model", ben_model, "dina or gdina", "MODEL");
  env_opt(ben, "--iters", bargs.iterations, "Iterations per run", "ITERS");
  env_opt(ben, "--delta", ben_delta, "Dirichlet concentration", "DELTA");
  env_opt(ben, "--workers", bargs.workers, "Examinee-parallel workers", "WORKERS");
  env_opt(ben, "--seed", bargs.seed, "Random seed", "SEED");
  env_opt(ben, "--out", ben_out, "Output directory for bench.csv", "OUT");

  // replay
  auto* rep = app.add_subcommand("replay", "Rerun the command recorded in a manifest.json");
  std::string rep_manifest, rep_out;
  rep->add_option("manifest", rep_manifest, "manifest.json")->required();
  rep->add_option("--out", rep_out, "Write to this directory instead of the original one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  if (*sim) {
    SimulateArgs a;
    if (!sim_config.empty()) a.sim = io::sim_config_from_json(io::read_json(sim_config));
    if (sim->count("--seed") || std::getenv("SEQCDM_SEED")) a.sim.seed = sim_seed;
    if (sim_N != -1) {
      if (sim_N < 1) throw ConfigError("N: must be >= 1");
      a.sim.N = static_cast<std::size_t>(sim_N);
    }
    if (sim_J != -1) {
      if (sim_J < 1) throw ConfigError("J: must be >= 1");
      a.sim.J = static_cast<std::size_t>(sim_J);
    }
    if (sim_K != -1) a.sim.K = sim_K;
    if (!sim_structure.empty()) {
      if (sim_structure == "uniform") a.sim.structure = Structure::uniform;
      else if (sim_structure == "correlated") a.sim.structure = Structure::correlated;
      else throw ConfigError("structure: expected uniform or correlated");
    }
    if (sim_rho != -1) a.sim.rho = sim_rho;
    if (!sim_model.empty()) a.sim.model = parse_model(sim_model);
    if (sim_guess != -1) a.sim.guess = sim_guess;
    if (sim_slip != -1) a.sim.slip = sim_slip;
    if (!sim_qsource.empty()) {
      if (sim_qsource == "fixture") a.sim.q_source = QSource::fixture;
      else if (sim_qsource == "generated") a.sim.q_source = QSource::generated;
      else throw ConfigError("q_source: expected fixture or generated");
    }
    if (!sim_fixture.empty()) a.sim.q_fixture = sim_fixture;
    a.sim.validate();
    a.out = sim_out;
    return run_simulate(a);
  }
  if (*fit) {
    FitArgs a;
    a.model = parse_model(fit_model);
    a.method = parse_method(fit_method);
    a.sampler = SamplerOptions::defaults_for(a.model);
    if (!fit_config.empty()) {
      const json cfg = io::read_json(fit_config);
      io::detail::reject_unknown(cfg, {"prior", "sampler"}, "fit config");
      if (cfg.contains("prior")) a.prior = io::prior_from_json(cfg["prior"]);
      if (cfg.contains("sampler")) a.sampler = sampler_from_json(cfg["sampler"], a.sampler);
    }
    if (fit_iters != -1) a.sampler.iterations = fit_iters;
    if (fit_burn != -1) a.sampler.burn_in = fit_burn;
    if (fit_thin != -1) a.sampler.thin = fit_thin;
    if (fit->count("--workers") || std::getenv("SEQCDM_WORKERS")) a.sampler.workers = fit_workers;
    if (fit_keep_alpha) a.sampler.keep_alpha_draws = true;
    if (fit_random_scan) a.sampler.random_scan = true;
    if (fit_delta != -1) {
      if (!(fit_delta > 0)) throw ConfigError("delta: must be > 0");
      a.prior.delta = {fit_delta};
    }
    apply_truncation(a.prior, fit_trunc);
    a.prior.validate();
    if (a.sampler.burn_in >= a.sampler.iterations)
      throw ConfigError("burn_in: must be smaller than iters (" + std::to_string(a.sampler.iterations) + ")");
    a.chains = fit_chains;
    a.seed = fit_seed;
    a.data = fit_data;
    a.out = fit_out;
    return run_fit(a);
  }
  if (*dia) {
    dargs.out = dia_out;
    return run_diagnose(dargs);
  }
  if (*eva) {
    eargs.out = eva_out;
    return run_evaluate(eargs);
  }
  if (*ben) {
    bargs.model = parse_model(ben_model);
    if (ben_delta != -1) {
      if (!(ben_delta > 0)) throw ConfigError("delta: must be > 0");
      bargs.prior.delta = {ben_delta};
    }
    bargs.out = ben_out;
    return run_bench(bargs);
  }
  if (*rep) return dispatch_replay(rep_manifest, rep_out);
  return exit_config;
}

int dispatch_replay(const fs::path& manifest, const fs::path& out_override) {
  const json m = io::read_json(manifest);
  if (!m.contains("command") || !m.contains("config")) throw ConfigError("manifest: missing command or config");
  const std::string cmd = m["command"].get<std::string>();
  const json& c = m["config"];
  const fs::path out = out_override.empty() ? manifest.parent_path() : out_override;
  if (cmd == "simulate") {
    SimulateArgs a{io::sim_config_from_json(c), out};
    return run_simulate(a);
  }
  if (cmd == "fit") {
    FitArgs a;
    a.data = c.at("data").get<std::string>();
    a.model = parse_model(c.at("model").get<std::string>());
    a.method = parse_method(c.at("method").get<std::string>());
    a.chains = c.at("chains").get<int>();
    a.seed = c.at("seed").get<std::uint64_t>();
    a.prior = io::prior_from_json(c.at("prior"));
    a.sampler = sampler_from_json(c.at("sampler"), SamplerOptions::defaults_for(a.model));
    a.out = out;
    return run_fit(a);
  }
  if (cmd == "diagnose") {
    DiagnoseArgs a{c.at("chains").get<std::vector<std::string>>(), out, c.at("step").get<std::size_t>()};
    return run_diagnose(a);
  }
  if (cmd == "evaluate") {
    EvaluateArgs a{c.at("chains").get<std::vector<std::string>>(), c.at("truth").get<std::vector<std::string>>(),
                   out};
    return run_evaluate(a);
  }
  if (cmd == "bench") {
    BenchArgs a;
    a.K = c.at("K").get<std::vector<int>>();
    a.N = c.at("N").get<std::size_t>();
    a.J = c.at("J").get<std::size_t>();
    a.methods = c.at("methods").get<std::vector<std::string>>();
    a.model = parse_model(c.at("model").get<std::string>());
    a.iterations = c.at("iters").get<long>();
    a.prior = io::prior_from_json(c.at("prior"));
    a.workers = c.at("workers").get<int>();
    a.seed = c.at("seed").get<std::uint64_t>();
    a.out = out;
    return run_bench(a);
  }
  throw ConfigError("manifest: unknown command '" + cmd + "'");
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return exit_data;
  }
}
