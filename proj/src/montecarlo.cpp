#include "tndve/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "tndve/errors.hpp"
#include "tndve/parallel.hpp"

namespace tndve {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  std::string out = s.str();
  if (out == "-0.000") out = "0.000";
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s) { return s.empty() ? kNaN : std::stod(s); }

bool in_ci_set(const StudyConfig& config, const std::string& label) {
  if (config.ci == CiMethod::None) return false;
  if (!config.ci_estimators) return true;
  const auto& set = *config.ci_estimators;
  return std::find(set.begin(), set.end(), label) != set.end();
}

}  // namespace

StudyColumn study_column(const std::string& label) {
  static const std::map<std::string, StudyColumn> columns{
      {"tnd-logit", {"tnd-logit", Estimator::TndLogit, false}},
      {"tnd-om", {"tnd-om", Estimator::TndOm, false}},
      {"tnd-ipw", {"tnd-ipw", Estimator::TndIpw, false}},
      {"tnd-dr", {"tnd-dr", Estimator::TndDr, false}},
      {"did-om", {"did-om", Estimator::DidOm, false}},
      {"did-ipw", {"did-ipw", Estimator::DidIpw, false}},
      {"udid-dr", {"udid-dr", Estimator::UdidDr, false}},
      {"cohort-u", {"cohort-u", Estimator::Standardized, true}},
      {"cohort", {"cohort", Estimator::Standardized, false}},
  };
  auto it = columns.find(label);
  if (it == columns.end()) throw Error(ErrorCode::Config, "unknown study estimator '" + label + "'");
  return it->second;
}

std::vector<std::string> default_study_columns() {
  return {"tnd-logit", "tnd-om", "tnd-ipw", "tnd-dr", "did-om", "cohort-u", "cohort"};
}

DesignSpec column_design(const StudyColumn& column) {
  if (column.with_confounder)
    return DesignSpec({{TermKind::Intercept, 0},
                       {TermKind::Treatment, 0},
                       {TermKind::Covariate, 0},
                       {TermKind::Interaction, 0},
                       {TermKind::Covariate, 1}});
  return default_design(column.estimator, 1);
}

void StudyConfig::validate() const {
  if (cells.empty()) throw Error(ErrorCode::Config, "study has no scenarios");
  if (replicates < 1) throw Error(ErrorCode::Config, "replicate count must be at least 1");
  if (estimators.empty()) throw Error(ErrorCode::Config, "study has no estimators");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::Config, "confidence level must lie in (0, 1)");
  if (ci == CiMethod::Bootstrap) throw Error(ErrorCode::Config, "simulation studies support sandwich or no CIs");
  for (const auto& e : estimators) study_column(e);
  if (ci_estimators)
    for (const auto& e : *ci_estimators) study_column(e);
  for (const auto& c : cells) cell_params(c);
  if (population && *population == 0) throw Error(ErrorCode::Config, "population size must be positive");
}

ScenarioParams cell_params(const StudyCell& cell) {
  if (!cell.custom) return scenario_params(cell.scenario, cell.misspec);
  validate_params(*cell.custom);
  return *cell.custom;
}

TruthValues cell_truth(const StudyCell& cell) {
  ScenarioParams p = cell_params(cell);
  auto frozen = cell.custom ? std::nullopt : frozen_truth(cell.scenario, cell.misspec);
  if (!frozen) return true_psi(p);
  TruthValues t = true_psi(p, TruthOptions{1, 0});
  t.psi = *frozen;
  t.psi_se = 2e-5;
  return t;
}

std::uint64_t cell_seed(std::uint64_t seed, const StudyCell& cell) {
  std::uint64_t code = static_cast<std::uint64_t>(cell.scenario) * 8 + static_cast<std::uint64_t>(cell.misspec);
  return seed ^ (code * 0x9E3779B97F4A7C15ull);
}

std::vector<ReplicateEstimate> estimate_replicate(const GeneratedCohort& cohort, const StudyConfig& config,
                                                  std::size_t cell, int replicate) {
  CohortDataset full = cohort.observed();
  std::optional<CohortDataset> full_u;
  TndDataset tested = restrict_to_tested(full);
  std::vector<ReplicateEstimate> out;
  for (const auto& label : config.estimators) {
    StudyColumn col = study_column(label);
    DesignSpec spec = column_design(col);
    ReplicateEstimate r;
    r.cell = cell;
    r.replicate = replicate;
    r.label = label;
    try {
      bool ci = in_ci_set(config, label);
      if (is_tnd_estimator(col.estimator)) {
        if (ci) {
          CiReport rep = sandwich_ci(tested, col.estimator, spec, config.level);
          r.psi = rep.psi;
          r.se = rep.se;
          r.ci = rep.ci;
        } else {
          r.psi = estimate(tested, col.estimator, spec).psi;
        }
      } else {
        if (col.with_confounder && !full_u) full_u = cohort.observed_with_confounder();
        const CohortDataset& d = col.with_confounder ? *full_u : full;
        if (ci) {
          CiReport rep = sandwich_ci(d, col.estimator, spec, config.level);
          r.psi = rep.psi;
          r.se = rep.se;
          r.ci = rep.ci;
        } else {
          r.psi = estimate(d, col.estimator, spec).psi;
        }
      }
    } catch (const Error& e) {
      r.psi = kNaN;
      r.se.reset();
      r.ci.reset();
      r.error = std::string(error_name(e.code()));
    }
    out.push_back(std::move(r));
  }
  return out;
}

StudyResult run_study(const StudyConfig& config) {
  config.validate();
  StudyResult result;
  result.config = config;
  for (const auto& c : config.cells) result.truths.push_back({c, cell_truth(c)});

  const std::size_t per_cell = static_cast<std::size_t>(config.replicates);
  const std::size_t jobs = config.cells.size() * per_cell;
  std::vector<std::vector<ReplicateEstimate>> slots(jobs);
  parallel_for(jobs, config.workers, [&](std::size_t job) {
    std::size_t cell = job / per_cell;
    int rep = static_cast<int>(job % per_cell);
    ScenarioParams p = cell_params(config.cells[cell]);
    if (config.population) p.n = *config.population;
    GeneratedCohort g = generate_cohort(p, cell_seed(config.seed, config.cells[cell]), static_cast<std::uint64_t>(rep));
    slots[job] = estimate_replicate(g, config, cell, rep);
  });
  for (auto& s : slots)
    for (auto& e : s) result.estimates.push_back(std::move(e));
  result.summaries = summarize(config, result.truths, result.estimates);
  return result;
}

std::vector<McSummary> summarize(const StudyConfig& config, const std::vector<CellTruth>& truths,
                                 const std::vector<ReplicateEstimate>& estimates) {
  std::vector<McSummary> out;
  for (std::size_t c = 0; c < truths.size(); ++c) {
    const TruthValues& t = truths[c].truth;
    for (const auto& label : config.estimators) {
      McSummary s;
      s.scenario = truths[c].cell.scenario;
      s.misspec = truths[c].cell.misspec;
      s.label = label;
      s.truth = t.psi;
      std::vector<double> psi;
      int with_ci = 0, covered = 0;
      for (const auto& e : estimates) {
        if (e.cell != c || e.label != label) continue;
        if (!std::isfinite(e.psi)) {
          ++s.failures;
          continue;
        }
        psi.push_back(e.psi);
        if (e.ci) {
          ++with_ci;
          covered += (e.ci->lower <= t.psi && t.psi <= e.ci->upper) ? 1 : 0;
        }
      }
      s.successes = static_cast<int>(psi.size());
      if (!psi.empty()) {
        double mean = 0.0;
        for (double v : psi) mean += v;
        mean /= static_cast<double>(psi.size());
        double ss = 0.0;
        for (double v : psi) ss += (v - mean) * (v - mean);
        s.mean_psi = mean;
        s.bias = mean - t.psi;
        s.mc_se = psi.size() > 1 ? std::sqrt(ss / static_cast<double>(psi.size() - 1)) : 0.0;
        s.bias_symptomatic = mean - t.symptomatic;
        s.bias_ratio = mean - t.ratio_estimand;
      } else {
        s.mean_psi = s.bias = s.mc_se = s.bias_symptomatic = s.bias_ratio = kNaN;
      }
      if (with_ci > 0) s.coverage = static_cast<double>(covered) / with_ci;
      out.push_back(std::move(s));
    }
  }
  return out;
}

void write_replicates_csv(std::ostream& out, const StudyResult& result) {
  out << "scenario,misspec,replicate,estimator,psi,se,ci_lower,ci_upper,error\n";
  for (const auto& e : result.estimates) {
    const StudyCell& cell = result.truths[e.cell].cell;
    out << cell.scenario << ',' << misspec_label(cell.misspec) << ',' << e.replicate << ',' << e.label << ','
        << (std::isfinite(e.psi) ? format_double(e.psi) : "") << ',' << (e.se ? format_double(*e.se) : "") << ','
        << (e.ci ? format_double(e.ci->lower) : "") << ',' << (e.ci ? format_double(e.ci->upper) : "") << ','
        << e.error << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<McSummary>& summaries) {
  out << "scenario,misspec,estimator,truth,mean_psi,bias,mc_se,coverage,successes,failures,bias_symptomatic,"
         "bias_ratio\n";
  for (const auto& s : summaries) {
    out << s.scenario << ',' << misspec_label(s.misspec) << ',' << s.label << ',' << format_double(s.truth) << ','
        << format_double(s.mean_psi) << ',' << format_double(s.bias) << ',' << format_double(s.mc_se) << ','
        << (s.coverage ? format_double(*s.coverage) : "") << ',' << s.successes << ',' << s.failures << ','
        << format_double(s.bias_symptomatic) << ',' << format_double(s.bias_ratio) << '\n';
  }
}

std::vector<McSummary> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Schema, "summary CSV is empty");
  std::vector<McSummary> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != 12) throw Error(ErrorCode::Schema, "summary CSV row has " + std::to_string(f.size()) + " fields");
    McSummary s;
    s.scenario = std::stoi(f[0]);
    s.misspec = parse_misspec(f[1]);
    s.label = f[2];
    s.truth = to_double(f[3]);
    s.mean_psi = to_double(f[4]);
    s.bias = to_double(f[5]);
    s.mc_se = to_double(f[6]);
    if (!f[7].empty()) s.coverage = to_double(f[7]);
    s.successes = std::stoi(f[8]);
    s.failures = std::stoi(f[9]);
    s.bias_symptomatic = to_double(f[10]);
    s.bias_ratio = to_double(f[11]);
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary_markdown(std::ostream& out, const std::vector<McSummary>& summaries) {
  std::size_t k = 0;
  while (k < summaries.size()) {
    std::size_t end = k;
    while (end < summaries.size() && summaries[end].scenario == summaries[k].scenario &&
           summaries[end].misspec == summaries[k].misspec)
      ++end;
    const McSummary& head = summaries[k];
    out << "### scenario " << head.scenario;
    if (head.misspec != Misspec::None) out << " (" << misspec_label(head.misspec) << " misspecified)";
    out << ", truth " << fixed(head.truth, 4) << "\n\n| Statistic |";
    for (std::size_t j = k; j < end; ++j) out << ' ' << summaries[j].label << " |";
    out << "\n|---|";
    for (std::size_t j = k; j < end; ++j) out << "---:|";
    out << "\n| Bias |";
    for (std::size_t j = k; j < end; ++j) out << ' ' << fixed(summaries[j].bias) << " |";
    out << "\n| SE |";
    for (std::size_t j = k; j < end; ++j) out << ' ' << fixed(summaries[j].mc_se) << " |";
    out << "\n| Coverage |";
    for (std::size_t j = k; j < end; ++j)
      out << ' ' << (summaries[j].coverage ? fixed(*summaries[j].coverage) : std::string("-")) << " |";
    out << "\n| Failures |";
    for (std::size_t j = k; j < end; ++j) out << ' ' << summaries[j].failures << " |";
    out << "\n\n";
    k = end;
  }
}

namespace {

std::vector<ReferenceCell> expand(int scenario, Misspec m, const double (&bias)[7], const double (&se)[7],
                                  const double (&cov)[7]) {
  auto labels = default_study_columns();
  std::vector<ReferenceCell> out;
  for (std::size_t j = 0; j < 7; ++j) out.push_back({scenario, m, labels[j], bias[j], se[j], cov[j]});
  return out;
}

void append(std::vector<ReferenceCell>& to, std::vector<ReferenceCell> from) {
  to.insert(to.end(), from.begin(), from.end());
}

}  // namespace

std::vector<ReferenceCell> reference_etable3() {
  std::vector<ReferenceCell> t;
  const auto none = Misspec::None;
  append(t, expand(1, none, {0.004, 0.004, 0.004, 0.004, 0.004, 0.002, 0.002},
                   {0.051, 0.051, 0.051, 0.051, 0.051, 0.040, 0.040},
                   {0.945, 0.944, 0.943, 0.944, 0.944, 0.947, 0.950}));
  append(t, expand(2, none, {0.000, 0.000, 0.000, 0.000, 0.001, 0.000, 0.078},
                   {0.036, 0.036, 0.036, 0.036, 0.036, 0.029, 0.085},
                   {0.964, 0.957, 0.958, 0.957, 0.965, 0.949, 0.308}));
  append(t, expand(3, none, {0.040, 0.039, 0.039, 0.039, 0.040, -0.001, 0.077},
                   {0.057, 0.057, 0.057, 0.057, 0.058, 0.030, 0.085},
                   {0.838, 0.844, 0.844, 0.843, 0.839, 0.943, 0.342}));
  append(t, expand(4, none, {0.047, 0.046, 0.046, 0.046, 0.047, 0.001, 0.079},
                   {0.066, 0.066, 0.066, 0.066, 0.066, 0.029, 0.087},
                   {0.831, 0.836, 0.837, 0.836, 0.833, 0.955, 0.308}));
  append(t, expand(5, none, {-0.097, -0.097, -0.097, -0.097, -0.097, 0.001, -0.040},
                   {0.105, 0.106, 0.106, 0.106, 0.105, 0.052, 0.061},
                   {0.476, 0.474, 0.479, 0.479, 0.477, 0.954, 0.880}));
  append(t, expand(6, none, {0.000, -0.001, -0.001, -0.001, 0.000, -0.082, -0.021},
                   {0.039, 0.040, 0.040, 0.040, 0.039, 0.086, 0.036},
                   {0.957, 0.957, 0.957, 0.958, 0.959, 0.151, 0.909}));
  append(t, expand(7, none, {0.106, 0.105, 0.105, 0.105, 0.106, 0.000, 0.078},
                   {0.117, 0.116, 0.116, 0.116, 0.117, 0.030, 0.086},
                   {0.339, 0.348, 0.350, 0.350, 0.332, 0.951, 0.314}));
  append(t, expand(8, none, {-0.042, -0.002, -0.002, -0.002, -0.039, -0.001, 0.226},
                   {0.097, 0.097, 0.097, 0.097, 0.095, 0.074, 0.073},
                   {0.923, 0.944, 0.944, 0.944, 0.923, 0.938, 0.133}));
  return t;
}

std::vector<ReferenceCell> reference_etable4() {
  std::vector<ReferenceCell> t;
  append(t, expand(8, Misspec::None, {-0.042, -0.002, -0.002, -0.002, -0.039, -0.001, 0.226},
                   {0.097, 0.097, 0.097, 0.097, 0.095, 0.074, 0.073},
                   {0.923, 0.944, 0.944, 0.944, 0.923, 0.938, 0.133}));
  append(t, expand(8, Misspec::Ps, {-0.037, -0.001, -0.012, -0.001, -0.038, 0.000, 0.215},
                   {0.102, 0.101, 0.101, 0.101, 0.098, 0.076, 0.075},
                   {0.941, 0.954, 0.954, 0.954, 0.942, 0.953, 0.198}));
  append(t, expand(8, Misspec::Om, {-0.062, 0.022, -0.004, 0.004, -0.023, 0.028, 0.256},
                   {0.093, 0.093, 0.095, 0.094, 0.090, 0.071, 0.069},
                   {0.911, 0.949, 0.957, 0.958, 0.944, 0.942, 0.052}));
  append(t, expand(8, Misspec::Both, {-0.097, 0.018, -0.091, -0.023, -0.046, 0.025, 0.285},
                   {0.096, 0.096, 0.113, 0.099, 0.090, 0.075, 0.070},
                   {0.829, 0.947, 0.894, 0.950, 0.930, 0.933, 0.028}));
  return t;
}

std::vector<Comparison> compare_to_reference(const std::vector<McSummary>& summaries,
                                             const std::vector<ReferenceCell>& reference) {
  std::vector<Comparison> out;
  for (const auto& ref : reference) {
    auto it = std::find_if(summaries.begin(), summaries.end(), [&](const McSummary& s) {
      return s.scenario == ref.scenario && s.misspec == ref.misspec && s.label == ref.label;
    });
    if (it == summaries.end()) continue;
    Comparison c;
    c.reference = ref;
    c.observed = *it;
    c.observed_bias = ref.scenario == 6 ? it->bias_symptomatic : it->bias;
    double r = std::max(1, it->successes);
    c.bias_ok = std::abs(c.observed_bias - ref.bias) <= 0.015 + 3.0 * it->mc_se / std::sqrt(r);
    c.se_ok = std::abs(it->mc_se - ref.se) <= 0.25 * ref.se;
    if (it->coverage) {
      double binom = std::sqrt(ref.coverage * (1.0 - ref.coverage) / r);
      c.coverage_ok = std::abs(*it->coverage - ref.coverage) <= 0.04 + 2.0 * binom;
    } else {
      c.coverage_ok = true;
    }
    out.push_back(std::move(c));
  }
  return out;
}

void write_comparison(std::ostream& out, const std::vector<Comparison>& comparisons) {
  out << "scenario,misspec,estimator,bias_ref,bias_obs,se_ref,se_obs,coverage_ref,coverage_obs,bias_ok,se_ok,"
         "coverage_ok\n";
  for (const auto& c : comparisons) {
    out << c.reference.scenario << ',' << misspec_label(c.reference.misspec) << ',' << c.reference.label << ','
        << fixed(c.reference.bias) << ',' << fixed(c.observed_bias) << ',' << fixed(c.reference.se) << ','
        << fixed(c.observed.mc_se) << ',' << fixed(c.reference.coverage) << ','
        << (c.observed.coverage ? fixed(*c.observed.coverage) : std::string()) << ','
        << (c.bias_ok ? "pass" : "FAIL") << ',' << (c.se_ok ? "pass" : "FAIL") << ','
        << (c.coverage_ok ? "pass" : "FAIL") << '\n';
  }
}

}  // namespace tndve
