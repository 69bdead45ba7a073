#include "tndve/config.hpp"

#include <fstream>
#include <utility>

#include "tndve/errors.hpp"

namespace tndve {

using nlohmann::json;

namespace {

using Field = std::pair<const char*, double ScenarioParams::*>;

const Field kFields[] = {
    {"alpha0", &ScenarioParams::alpha0}, {"alphaX", &ScenarioParams::alphaX},   {"alphaU", &ScenarioParams::alphaU},
    {"beta10", &ScenarioParams::beta10}, {"beta1V", &ScenarioParams::beta1V},   {"beta1X", &ScenarioParams::beta1X},
    {"beta1VX", &ScenarioParams::beta1VX}, {"beta1U", &ScenarioParams::beta1U}, {"beta20", &ScenarioParams::beta20},
    {"beta2V", &ScenarioParams::beta2V}, {"beta2X", &ScenarioParams::beta2X},   {"beta2VX", &ScenarioParams::beta2VX},
    {"beta2U", &ScenarioParams::beta2U}, {"tau1", &ScenarioParams::tau1},       {"tau2", &ScenarioParams::tau2},
    {"tau1V", &ScenarioParams::tau1V},   {"tau2V", &ScenarioParams::tau2V},     {"tauX", &ScenarioParams::tauX},
    {"tauU", &ScenarioParams::tauU},     {"tau2U", &ScenarioParams::tau2U},
};

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::Config, what); }

template <class T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(std::string("config key '") + key + "': " + e.what());
  }
}

std::vector<std::string> string_list(const json& j, const char* key) { return get<std::vector<std::string>>(j, key); }

StudyCell cell_from_json(const json& j) {
  if (j.is_number_integer()) return {j.get<int>(), Misspec::None, std::nullopt};
  if (!j.is_object()) bad("study cell must be a scenario id or an object");
  StudyCell c;
  if (j.contains("params")) {
    c.scenario = j.contains("scenario") ? get<int>(j, "scenario") : 0;
    c.custom = scenario_from_json(j.at("params"));
    c.misspec = c.custom->misspec;
    return c;
  }
  for (const auto& [key, _] : j.items())
    if (key != "scenario" && key != "misspec") bad("unknown study cell key '" + key + "'");
  c.scenario = get<int>(j, "scenario");
  if (j.contains("misspec")) c.misspec = parse_misspec(get<std::string>(j, "misspec"));
  return c;
}

}  // namespace

ScenarioParams scenario_from_json(const json& j) {
  if (!j.is_object()) bad("scenario config must be an object");
  ScenarioParams p;
  Misspec m = j.contains("misspec") ? parse_misspec(get<std::string>(j, "misspec")) : Misspec::None;
  if (j.contains("scenario")) {
    p = scenario_params(get<int>(j, "scenario"), m);
  } else {
    p.misspec = m;
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "scenario" || key == "misspec") continue;
    if (key == "n") {
      auto n = get<long long>(j, "n");
      if (n <= 0) bad("population size must be positive");
      p.n = static_cast<std::size_t>(n);
      continue;
    }
    bool known = false;
    for (const auto& [name, member] : kFields) {
      if (key != name) continue;
      p.*member = get<double>(j, name);
      known = true;
    }
    if (!known) bad("unknown scenario key '" + key + "'");
  }
  validate_params(p);
  return p;
}

json scenario_to_json(const ScenarioParams& p) {
  json j = json::object();
  for (const auto& [name, member] : kFields) j[name] = p.*member;
  j["n"] = p.n;
  j["misspec"] = std::string(misspec_label(p.misspec));
  return j;
}

StudyConfig study_from_json(const json& j, StudyConfig base) {
  if (!j.is_object()) bad("study config must be an object");
  static const char* known[] = {"scenarios", "cells",  "replicates", "estimators", "ci_estimators",
                                "seed",      "ci",     "level",      "workers",    "population"};
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) bad("unknown study key '" + key + "'");
  }
  if (j.contains("scenarios") && j.contains("cells")) bad("give either 'scenarios' or 'cells', not both");
  if (j.contains("scenarios")) {
    base.cells.clear();
    for (int id : get<std::vector<int>>(j, "scenarios")) base.cells.push_back({id, Misspec::None, std::nullopt});
  }
  if (j.contains("cells")) {
    if (!j.at("cells").is_array()) bad("'cells' must be an array");
    base.cells.clear();
    for (const auto& c : j.at("cells")) base.cells.push_back(cell_from_json(c));
  }
  if (j.contains("replicates")) base.replicates = get<int>(j, "replicates");
  if (j.contains("estimators")) base.estimators = string_list(j, "estimators");
  if (j.contains("ci_estimators")) base.ci_estimators = string_list(j, "ci_estimators");
  if (j.contains("seed")) base.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("ci")) base.ci = parse_ci_method(get<std::string>(j, "ci"));
  if (j.contains("level")) base.level = get<double>(j, "level");
  if (j.contains("workers")) base.workers = get<unsigned>(j, "workers");
  if (j.contains("population")) {
    auto n = get<long long>(j, "population");
    if (n <= 0) bad("population size must be positive");
    base.population = static_cast<std::size_t>(n);
  }
  return base;
}

json study_to_json(const StudyConfig& c) {
  json cells = json::array();
  for (const auto& cell : c.cells) {
    json e = {{"scenario", cell.scenario}, {"misspec", std::string(misspec_label(cell.misspec))}};
    if (cell.custom) e["params"] = scenario_to_json(*cell.custom);
    cells.push_back(e);
  }
  json j = {{"cells", cells},
            {"replicates", c.replicates},
            {"estimators", c.estimators},
            {"seed", c.seed},
            {"ci", std::string(ci_method_label(c.ci))},
            {"level", c.level},
            {"workers", c.workers}};
  if (c.ci_estimators) j["ci_estimators"] = *c.ci_estimators;
  if (c.population) j["population"] = *c.population;
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::File, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
}

}  // namespace tndve
