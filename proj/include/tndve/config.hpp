#pragma once

#include <json.hpp>
#include <string>

#include "tndve/montecarlo.hpp"
#include "tndve/simulation.hpp"

namespace tndve {

// Scenario JSON: {"scenario": 1..8, "misspec": "none", ...coefficient
// overrides, "n": N}. Without "scenario" the defaults of ScenarioParams are
// the base. Unknown keys are a Config error.
ScenarioParams scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioParams& p);

// Study JSON:
//   {"scenarios": [1, 2] | "cells": [{"scenario": 8, "misspec": "ps"} | {"params": {...}}],
//    "replicates": 1000, "estimators": [...], "ci_estimators": [...],
//    "seed": 1, "ci": "sandwich", "level": 0.95, "workers": 1, "population": 15000}
// Keys absent from j keep the values already in `base`.
StudyConfig study_from_json(const nlohmann::json& j, StudyConfig base = {});
nlohmann::json study_to_json(const StudyConfig& c);

nlohmann::json read_json_file(const std::string& path);

}  // namespace tndve
