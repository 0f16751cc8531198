#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "simready/mpm/types.h"

namespace simready::mpm {

std::vector<std::string> check_config(const SimConfig& config);
// Throws ValidationError listing every failure.
void validate_config(const SimConfig& config);

nlohmann::json config_to_json(const SimConfig& config);
// Applies the keys present in `j` on top of `base`. Unknown keys and
// mistyped values throw ConfigError naming the key.
SimConfig config_from_json(const nlohmann::json& j, const SimConfig& base = {});

// Hex digest of the canonical JSON, excluding `workers` because it does not
// change deterministic results.
std::string config_hash(const SimConfig& config);

}  // namespace simready::mpm
