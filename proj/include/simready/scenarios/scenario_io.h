#pragma once

#include <string>

#include <json.hpp>

#include "simready/scenarios/scenario.h"

namespace simready::scenarios {

// Tagged record: {"type": "drop", "height": 0.5}. Absent fields keep their
// defaults; unknown fields throw ConfigError.
nlohmann::json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& j);

// Compact JSON with sorted keys; stable across runs.
std::string canonical_scenario(const ScenarioSpec& spec);

}  // namespace simready::scenarios
