// tndve: estimation, sensitivity analysis and simulation studies for
// test-negative and symptom-triggered cohort data.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "manifest.hpp"
#include "tndve/config.hpp"
#include "tndve/data.hpp"
#include "tndve/errors.hpp"
#include "tndve/estimate.hpp"
#include "tndve/inference.hpp"
#include "tndve/montecarlo.hpp"
#include "tndve/sensitivity.hpp"
#include "tndve/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tndve::cli {
namespace {

constexpr std::uint64_t kDefaultSeed = 20240501;
constexpr int kUsageExit = 2;
constexpr int kReplayMismatchExit = 3;

// flag > config file > TNDVE_SEED > built-in
std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t flag_value, std::optional<std::uint64_t> from_config) {
  if (flag->count() > 0) return flag_value;
  if (from_config) return *from_config;
  if (const char* env = std::getenv("TNDVE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::Config, std::string("TNDVE_SEED is not an unsigned integer: ") + env);
  }
  return kDefaultSeed;
}

// the recorded argument list: any --seed dropped, the resolved one appended
std::vector<std::string> resolved_argv(const std::vector<std::string>& args, std::uint64_t seed) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--seed") {
      ++k;
      continue;
    }
    if (args[k].rfind("--seed=", 0) == 0) continue;
    out.push_back(args[k]);
  }
  out.push_back("--seed");
  out.push_back(std::to_string(seed));
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::File, "cannot write " + path.string());
  return f;
}

struct DataArgs {
  std::string path;
  std::string design = "tnd";
  std::string col_v = "v";
  std::string col_y;
  std::vector<std::string> cols_x;
  bool drop_missing = false;

  void add(CLI::App* cmd) {
    cmd->add_option("data", path, "input CSV")->required();
    cmd->add_option("--design", design, "tnd (tested subjects, outcome 0/1) or cohort (outcome 0/1/2)")
        ->check(CLI::IsMember({"tnd", "cohort"}));
    cmd->add_option("--col-v", col_v, "vaccination column");
    cmd->add_option("--col-y", col_y, "outcome column (default y_star for tnd, y for cohort)");
    cmd->add_option("--cols-x", cols_x, "covariate columns, comma separated (default: all others)")->delimiter(',');
    cmd->add_flag("--drop-missing", drop_missing, "drop rows with missing values instead of failing");
  }

  CsvSchema schema() const {
    CsvSchema s;
    s.vaccination = col_v;
    s.outcome = col_y.empty() ? (design == "tnd" ? "y_star" : "y") : col_y;
    s.drop_missing = drop_missing;
    s.covariates = cols_x;
    if (s.covariates.empty())
      for (const auto& h : read_csv_header(path))
        if (h != s.vaccination && h != s.outcome) s.covariates.push_back(h);
    return s;
  }
};

struct InferenceArgs {
  std::string ci = "sandwich";
  int boot_b = 1000;
  double level = 0.95;
  bool log_ci = false;
  std::uint64_t seed = kDefaultSeed;
  unsigned workers = 1;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App* cmd) {
    cmd->add_option("--ci", ci, "none, sandwich or bootstrap")->check(CLI::IsMember({"none", "sandwich", "bootstrap"}));
    cmd->add_option("--boot-b", boot_b, "bootstrap replicates")->check(CLI::PositiveNumber);
    cmd->add_option("--level", level, "confidence level")->check(CLI::Range(0.5, 0.9999));
    cmd->add_flag("--log-ci", log_ci, "interval on the log scale");
    seed_opt = cmd->add_option("--seed", seed, "RNG seed (default: TNDVE_SEED, then 20240501)");
    cmd->add_option("--workers", workers, "worker threads, 0 = all cores");
  }

  CiScale scale() const { return log_ci ? CiScale::Log : CiScale::Natural; }
  BootstrapOptions bootstrap(std::uint64_t resolved_seed) const {
    BootstrapOptions b;
    b.replicates = boot_b;
    b.seed = resolved_seed;
    b.workers = workers;
    b.level = level;
    b.scale = scale();
    return b;
  }
};

void print_diagnostics(const EstimateResult& r) {
  for (const auto& d : r.diagnostics)
    std::cout << "  " << d.model << ": " << (d.converged ? "converged" : "NOT converged") << ", " << d.iterations
              << " iterations, residual " << num(d.residual) << '\n';
}

// ----------------------------------------------------------------- estimate

struct EstimateArgs {
  DataArgs data;
  InferenceArgs inf;
  std::string estimator = "om";
  bool multinomial = false;
  std::string out;
};

int cmd_estimate(const EstimateArgs& a, const std::vector<std::string>& args) {
  RunManifest m;
  m.started = utc_now();
  m.command = "estimate";
  m.seed = resolve_seed(a.inf.seed_opt, a.inf.seed, std::nullopt);
  Estimator e = parse_estimator(a.estimator);
  CsvSchema schema = a.data.schema();
  LoadReport load;
  CiMethod ci = parse_ci_method(a.inf.ci);
  EstimateResult r;
  std::optional<CiReport> rep;
  CohortOptions copts;
  copts.multinomial_ratio = a.multinomial;
  std::vector<std::string> names;

  if (a.data.design == "tnd") {
    if (!is_tnd_estimator(e))
      throw Error(ErrorCode::Config, "estimator '" + a.estimator + "' needs --design cohort");
    TndDataset d = load_tnd_csv(a.data.path, schema, &load);
    names = d.covariate_names();
    DesignSpec spec = default_design(e, d.covariate_dim());
    r = estimate(d, e, spec);
    if (ci == CiMethod::Sandwich) rep = sandwich_ci(d, e, spec, a.inf.level, a.inf.scale());
    if (ci == CiMethod::Bootstrap) rep = bootstrap_ci(d, e, spec, a.inf.bootstrap(m.seed));
  } else {
    CohortDataset d = load_cohort_csv(a.data.path, schema, &load);
    names = d.covariate_names();
    DesignSpec spec = default_design(e, d.covariate_dim());
    r = estimate(d, e, spec, copts);
    if (ci == CiMethod::Sandwich) rep = sandwich_ci(d, e, spec, a.inf.level, a.inf.scale(), copts);
    if (ci == CiMethod::Bootstrap) rep = bootstrap_ci(d, e, spec, a.inf.bootstrap(m.seed), copts);
  }
  if (rep) {
    r.se = rep->se;
    r.ci = rep->ci;
  }

  std::cout << "estimator   " << r.method << " (" << a.data.design << " data)\n";
  std::cout << "covariates  " << (names.empty() ? std::string("(none)") : "") ;
  for (std::size_t k = 0; k < names.size(); ++k) std::cout << (k ? ", " : "") << names[k];
  std::cout << "\nn           " << r.n;
  if (load.rows_dropped) std::cout << " (" << load.rows_dropped << " rows dropped)";
  std::cout << "\npsi         " << num(r.psi) << "\nve          " << num(r.ve) << '\n';
  if (rep) {
    std::cout << "se          " << num(rep->se) << " (" << ci_method_label(rep->method);
    if (rep->method == CiMethod::Bootstrap)
      std::cout << ", B = " << rep->replicates << ", " << rep->failures << " failed";
    std::cout << ")\n";
    std::cout << "ci " << num(100 * a.inf.level) << "%" << (a.inf.log_ci ? " (log)" : "") << "  [" << num(rep->ci.lower)
              << ", " << num(rep->ci.upper) << "]   ve [" << num(1 - rep->ci.upper) << ", " << num(1 - rep->ci.lower)
              << "]\n";
  }
  std::cout << "diagnostics\n";
  print_diagnostics(r);

  if (!a.out.empty()) {
    fs::path out(a.out);
    {
      std::ofstream f = open_out(out);
      f << "design,estimator,n,psi,ve,se,ci_lower,ci_upper,ci_method,ci_scale,level\n";
      f << a.data.design << ',' << a.estimator << ',' << r.n << ',' << format_double(r.psi) << ','
        << format_double(r.ve) << ',' << (r.se ? format_double(*r.se) : "") << ','
        << (r.ci ? format_double(r.ci->lower) : "") << ',' << (r.ci ? format_double(r.ci->upper) : "") << ','
        << a.inf.ci << ',' << (a.inf.log_ci ? "log" : "natural") << ',' << format_double(a.inf.level) << '\n';
    }
    m.argv = resolved_argv(args, m.seed);
    m.config = {{"estimator", a.estimator}, {"design", a.data.design},      {"outcome", schema.outcome},
                {"vaccination", schema.vaccination}, {"covariates", schema.covariates},
                {"drop_missing", schema.drop_missing}, {"ci", a.inf.ci},     {"level", a.inf.level},
                {"log_ci", a.inf.log_ci},         {"boot_b", a.inf.boot_b}, {"multinomial", a.multinomial}};
    m.inputs = {a.data.path};
    m.outputs = {out};
    m.finished = utc_now();
    m.write(out.string() + ".manifest.json", out.parent_path().empty() ? fs::path(".") : out.parent_path());
  }
  return 0;
}

// -------------------------------------------------------------- sensitivity

struct SensitivityArgs {
  DataArgs data;
  InferenceArgs inf;
  double omega = 1.0;
  int points = 41;
  std::string q_col;
  std::string out;
};

int cmd_sensitivity(const SensitivityArgs& a, const std::vector<std::string>& args) {
  RunManifest m;
  m.started = utc_now();
  m.command = "sensitivity";
  m.seed = resolve_seed(a.inf.seed_opt, a.inf.seed, std::nullopt);
  CsvSchema schema = a.data.schema();
  TndDataset d = a.data.design == "tnd" ? load_tnd_csv(a.data.path, schema)
                                        : restrict_to_tested(load_cohort_csv(a.data.path, schema));
  TiltSpec tilt;
  tilt.q = a.q_col.empty() ? TiltFunction::constant_value(1.0) : TiltFunction::covariate(d, a.q_col);
  tilt.grid = tilt_grid(a.omega, a.points);
  CurveOptions opts;
  opts.ci = parse_ci_method(a.inf.ci);
  opts.level = a.inf.level;
  opts.scale = a.inf.scale();
  opts.bootstrap = a.inf.bootstrap(m.seed);
  opts.workers = a.inf.workers;
  DesignSpec spec = default_design(Estimator::TndOm, d.covariate_dim());
  auto curve = sensitivity_curve(d, spec, tilt, opts);

  std::ostringstream csv;
  csv << "eta,psi,ve,ci_lower,ci_upper,se,error\n";
  for (const auto& p : curve) {
    csv << format_double(p.eta) << ',';
    if (p.result) {
      const auto& r = *p.result;
      csv << format_double(r.psi) << ',' << format_double(r.ve) << ',' << (r.ci ? format_double(r.ci->lower) : "")
          << ',' << (r.ci ? format_double(r.ci->upper) : "") << ',' << (r.se ? format_double(*r.se) : "") << ",\n";
    } else {
      csv << ",,,,,\"" << p.error << "\"\n";
    }
  }
  if (a.out.empty()) {
    std::cout << csv.str();
    return 0;
  }
  fs::path out(a.out);
  {
    std::ofstream f = open_out(out);
    f << csv.str();
  }
  std::cout << "wrote " << curve.size() << " grid points (q = " << tilt.q.describe() << ") to " << out.string() << '\n';
  m.argv = resolved_argv(args, m.seed);
  m.config = {{"omega", a.omega},       {"points", a.points}, {"q", tilt.q.describe()}, {"ci", a.inf.ci},
              {"level", a.inf.level},   {"log_ci", a.inf.log_ci}, {"boot_b", a.inf.boot_b},
              {"covariates", schema.covariates}, {"design", a.data.design}};
  m.inputs = {a.data.path};
  m.outputs = {out};
  m.finished = utc_now();
  m.write(out.string() + ".manifest.json", out.parent_path().empty() ? fs::path(".") : out.parent_path());
  return 0;
}

// ------------------------------------------------------ simulate / reproduce

struct StudyArgs {
  std::vector<int> scenarios;
  std::string misspec = "none";
  std::string config;
  int reps = 0;
  std::uint64_t seed = kDefaultSeed;
  unsigned workers = 1;
  std::vector<std::string> estimators, ci_estimators;
  std::string ci;
  double level = 0.95;
  std::size_t population = 0;
  std::string out;
  std::string table;  // reproduce only
  CLI::Option *seed_opt = nullptr, *level_opt = nullptr, *workers_opt = nullptr;
};

void write_study(const StudyResult& result, const fs::path& dir, RunManifest& m,
                 const std::vector<ReferenceCell>* reference) {
  fs::create_directories(dir);
  auto emit = [&](const char* name, auto&& writer) {
    fs::path p = dir / name;
    std::ofstream f = open_out(p);
    writer(f);
    m.outputs.push_back(p);
  };
  emit("replicates.csv", [&](std::ostream& f) { write_replicates_csv(f, result); });
  emit("summary.csv", [&](std::ostream& f) { write_summary_csv(f, result.summaries); });
  emit("summary.md", [&](std::ostream& f) { write_summary_markdown(f, result.summaries); });
  write_summary_markdown(std::cout, result.summaries);
  if (reference) {
    auto cmp = compare_to_reference(result.summaries, *reference);
    emit("comparison.csv", [&](std::ostream& f) { write_comparison(f, cmp); });
    int checks = 0, passed = 0;
    for (const auto& c : cmp) {
      checks += 3;
      passed += int(c.bias_ok) + int(c.se_ok) + int(c.coverage_ok);
    }
    std::cout << "comparison with the published table: " << passed << " of " << checks
              << " bias/SE/coverage checks within tolerance (see comparison.csv)\n";
  }
  m.finished = utc_now();
  m.write(dir / "manifest.json", dir);
}

int cmd_study(const StudyArgs& a, const std::vector<std::string>& args, bool reproduce) {
  RunManifest m;
  m.started = utc_now();
  m.command = reproduce ? "reproduce" : "simulate";
  StudyConfig c;
  std::optional<std::uint64_t> config_seed;
  std::vector<ReferenceCell> reference;
  if (reproduce) {
    if (a.table == "etable3") {
      for (int s = 1; s <= kScenarioCount; ++s) c.cells.push_back({s, Misspec::None, std::nullopt});
      c.replicates = 1000;
      reference = reference_etable3();
    } else {
      for (Misspec mm : {Misspec::None, Misspec::Ps, Misspec::Om, Misspec::Both}) c.cells.push_back({8, mm, std::nullopt});
      c.replicates = 2000;
      reference = reference_etable4();
    }
  } else if (!a.config.empty()) {
    json j = read_json_file(a.config);
    c = study_from_json(j);
    if (j.contains("seed")) config_seed = c.seed;
    m.inputs.push_back(a.config);
  }
  if (!a.scenarios.empty()) {
    c.cells.clear();
    Misspec mm = parse_misspec(a.misspec);
    for (int s : a.scenarios) c.cells.push_back({s, mm, std::nullopt});
  }
  if (c.cells.empty()) throw Error(ErrorCode::Config, "no scenarios given (--scenario or --config)");
  if (a.reps > 0) c.replicates = a.reps;
  if (!a.estimators.empty()) c.estimators = a.estimators;
  if (!a.ci_estimators.empty()) c.ci_estimators = a.ci_estimators;
  if (!a.ci.empty()) c.ci = parse_ci_method(a.ci);
  if (a.level_opt->count()) c.level = a.level;
  if (a.workers_opt->count()) c.workers = a.workers;
  if (a.population > 0) c.population = a.population;
  c.seed = resolve_seed(a.seed_opt, a.seed, config_seed);
  c.validate();
  m.seed = c.seed;

  StudyResult result = run_study(c);
  m.argv = resolved_argv(args, c.seed);
  m.config = study_to_json(c);
  write_study(result, a.out, m, reproduce ? &reference : nullptr);
  return 0;
}

// ----------------------------------------------------------------- gen-data

struct GenArgs {
  int scenario = 1;
  std::string misspec = "none";
  std::string config;
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t replicate = 0;
  std::size_t n = 0;
  bool latent = false, tested = false;
  std::string out;
  CLI::Option *seed_opt = nullptr, *scenario_opt = nullptr;
};

int cmd_gen_data(const GenArgs& a, const std::vector<std::string>& args) {
  RunManifest m;
  m.started = utc_now();
  m.command = "gen-data";
  ScenarioParams p;
  if (!a.config.empty()) {
    json j = read_json_file(a.config);
    if (a.scenario_opt->count()) j["scenario"] = a.scenario;
    p = scenario_from_json(j);
    m.inputs.push_back(a.config);
  } else {
    p = scenario_params(a.scenario, parse_misspec(a.misspec));
  }
  if (a.n > 0) p.n = a.n;
  m.seed = resolve_seed(a.seed_opt, a.seed, std::nullopt);
  if (a.latent && a.tested) throw Error(ErrorCode::Config, "--latent and --tested cannot be combined");
  GeneratedCohort g = generate_cohort(p, m.seed, a.replicate);

  fs::path out(a.out);
  if (a.tested) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_csv(out, restrict_to_tested(g.observed()));
  } else if (a.latent) {
    std::ofstream f = open_out(out);
    f << "x,u,v,i,t,y,y0,y1\n";
    for (std::size_t k = 0; k < g.size(); ++k)
      f << format_double(g.x[k]) << ',' << format_double(g.u[k]) << ',' << g.v[k] << ',' << g.i[k] << ',' << g.t[k]
        << ',' << g.y[k] << ',' << g.y0[k] << ',' << g.y1[k] << '\n';
  } else {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_csv(out, g.observed());
  }
  std::cout << "wrote " << (a.tested ? restrict_to_tested(g.observed()).size() : g.size()) << " records to "
            << out.string() << " (tested fraction " << num(g.tested_fraction()) << ")\n";
  m.argv = resolved_argv(args, m.seed);
  m.config = scenario_to_json(p);
  m.config["replicate"] = a.replicate;
  m.outputs = {out};
  m.finished = utc_now();
  m.write(out.string() + ".manifest.json", out.parent_path().empty() ? fs::path(".") : out.parent_path());
  return 0;
}

// ------------------------------------------------------------------- replay

int run(std::vector<std::string> args);

fs::path manifest_location(const std::string& command, const fs::path& out) {
  if (command == "simulate" || command == "reproduce") return out / "manifest.json";
  return out.string() + ".manifest.json";
}

int cmd_replay(const std::string& manifest_path, const std::string& out_arg) {
  json old = read_json_file(manifest_path);
  const std::string out = fs::absolute(out_arg).string();
  // relative paths in the recorded arguments resolve against the original directory
  if (old.contains("cwd") && fs::is_directory(old["cwd"].get<std::string>())) fs::current_path(old["cwd"].get<std::string>());
  std::vector<std::string> argv;
  std::string command;
  try {
    argv = old.at("argv").get<std::vector<std::string>>();
    command = old.at("command").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, manifest_path + ": not a run manifest (" + e.what() + ")");
  }
  bool replaced = false;
  for (std::size_t k = 0; k < argv.size(); ++k) {
    if (argv[k] == "--out" && k + 1 < argv.size()) {
      argv[k + 1] = out;
      replaced = true;
    } else if (argv[k].rfind("--out=", 0) == 0) {
      argv[k] = "--out=" + out;
      replaced = true;
    }
  }
  if (!replaced) throw Error(ErrorCode::Config, manifest_path + ": recorded run has no --out");
  if (old.value("version", "") != kVersion)
    std::cerr << "warning: manifest written by version " << old.value("version", "?") << ", this is " << kVersion
              << '\n';
  for (const auto& in : old.value("inputs", json::array())) {
    std::string path = in.at("path");
    if (sha256_file(path) != in.at("sha256").get<std::string>())
      throw Error(ErrorCode::File, "input " + path + " changed since the recorded run");
  }
  int code = run(argv);
  if (code != 0) return code;
  json now = read_json_file(manifest_location(command, out).string());
  int same = 0, differ = 0;
  // outputs are listed in write order, which the rerun repeats; a single
  // output file is renamed by --out, so match by position
  const json& fresh = now.at("outputs");
  for (std::size_t k = 0; k < old.at("outputs").size(); ++k) {
    const json& o = old.at("outputs")[k];
    bool match = k < fresh.size() && fresh[k].at("sha256") == o.at("sha256");
    (match ? same : differ)++;
    if (!match) std::cerr << "replay: " << o.at("path").get<std::string>() << " differs\n";
  }
  std::cout << "replay: " << same << " of " << same + differ << " outputs bit-identical\n";
  return differ == 0 ? 0 : kReplayMismatchExit;
}

// --------------------------------------------------------------------- main

int run(std::vector<std::string> args) {
  CLI::App app{"Vaccine effectiveness from test-negative and symptom-triggered cohort data"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "estimate the risk ratio among the vaccinated and VE = 1 - psi");
  est.data.add(c_est);
  est.inf.add(c_est);
  c_est->add_option("--estimator", est.estimator, "logit|om|ipw|dr (tnd); did-om|did-ipw|standardized|udid-dr (cohort)");
  c_est->add_flag("--multinomial", est.multinomial, "did-om: outcome ratio from a multinomial fit");
  c_est->add_option("--out", est.out, "write the result row to this CSV");

  SensitivityArgs sen;
  auto* c_sen = app.add_subcommand("sensitivity", "tilted outcome-model estimates over a grid of eta");
  sen.data.add(c_sen);
  sen.inf.add(c_sen);
  c_sen->add_option("--omega", sen.omega, "grid runs from -omega to omega")->check(CLI::NonNegativeNumber);
  c_sen->add_option("--points", sen.points, "grid size")->check(CLI::PositiveNumber);
  c_sen->add_option("--q-col", sen.q_col, "covariate used as q(X) (default q = 1)");
  c_sen->add_option("--out", sen.out, "output CSV (default stdout)");

  StudyArgs sim;
  auto add_study = [](CLI::App* cmd, StudyArgs& s) {
    cmd->add_option("--reps", s.reps, "replicates per scenario")->check(CLI::PositiveNumber);
    s.seed_opt = cmd->add_option("--seed", s.seed, "RNG seed (default: config, TNDVE_SEED, then 20240501)");
    s.workers_opt = cmd->add_option("--workers", s.workers, "worker threads, 0 = all cores");
    cmd->add_option("--ci-estimators", s.ci_estimators, "compute CIs only for these columns")->delimiter(',');
    s.level_opt = cmd->add_option("--level", s.level, "confidence level")->check(CLI::Range(0.5, 0.9999));
    cmd->add_option("--population", s.population, "override the population size N")->check(CLI::PositiveNumber);
  };
  auto* c_sim = app.add_subcommand("simulate", "Monte Carlo study over simulation scenarios");
  add_study(c_sim, sim);
  c_sim->add_option("--scenario", sim.scenarios, "scenario ids 1-8")->delimiter(',');
  c_sim->add_option("--misspec", sim.misspec, "none|ps|om|both (scenario 8)");
  c_sim->add_option("--config", sim.config, "study JSON");
  c_sim->add_option("--estimators", sim.estimators, "columns, comma separated")->delimiter(',');
  c_sim->add_option("--ci", sim.ci, "sandwich or none")->check(CLI::IsMember({"none", "sandwich"}));
  c_sim->add_option("--out", sim.out, "output directory")->required();

  StudyArgs rep;
  auto* c_rep = app.add_subcommand("reproduce", "rerun a published simulation table and compare");
  add_study(c_rep, rep);
  c_rep->add_option("table", rep.table, "etable3 or etable4")->required()->check(CLI::IsMember({"etable3", "etable4"}));
  c_rep->add_option("--out", rep.out, "output directory")->required();

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen-data", "write one simulated population to CSV");
  gen.scenario_opt = c_gen->add_option("--scenario", gen.scenario, "scenario id 1-8");
  c_gen->add_option("--misspec", gen.misspec, "none|ps|om|both (scenario 8)");
  c_gen->add_option("--config", gen.config, "scenario JSON (coefficients override the preset)");
  gen.seed_opt = c_gen->add_option("--seed", gen.seed, "RNG seed (default: TNDVE_SEED, then 20240501)");
  c_gen->add_option("--replicate", gen.replicate, "replicate index");
  c_gen->add_option("--n", gen.n, "population size")->check(CLI::PositiveNumber);
  c_gen->add_flag("--latent", gen.latent, "include u, i, t and the potential outcomes");
  c_gen->add_flag("--tested", gen.tested, "write the tested subjects only (y_star file)");
  c_gen->add_option("--out", gen.out, "output CSV")->required();

  std::string replay_manifest, replay_out;
  auto* c_replay = app.add_subcommand("replay", "rerun a recorded run and check its outputs are identical");
  c_replay->add_option("manifest", replay_manifest, "manifest JSON")->required();
  c_replay->add_option("--out", replay_out, "where the rerun writes its outputs")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    if (c_est->parsed()) return cmd_estimate(est, args);
    if (c_sen->parsed()) return cmd_sensitivity(sen, args);
    if (c_sim->parsed()) return cmd_study(sim, args, false);
    if (c_rep->parsed()) return cmd_study(rep, args, true);
    if (c_gen->parsed()) return cmd_gen_data(gen, args);
    if (c_replay->parsed()) return cmd_replay(replay_manifest, replay_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsageExit;
}

}  // namespace
}  // namespace tndve::cli

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tndve::cli::run(std::move(args));
}
