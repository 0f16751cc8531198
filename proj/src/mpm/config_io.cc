#include "simready/mpm/config_io.h"

#include <cmath>
#include <set>

#include "simready/common/binary_io.h"
#include "simready/common/error.h"

namespace simready::mpm {
namespace {

using nlohmann::json;

json vec_to_json(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vector3 vec_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(key + ": expected an array of 3 numbers");
  Vector3 v;
  for (int a = 0; a < 3; ++a) {
    if (!j[a].is_number()) throw ConfigError(key + ": expected an array of 3 numbers");
    v[a] = j[a].get<double>();
  }
  return v;
}

template <typename T>
T get_as(const json& j, const std::string& key) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw ConfigError(key + ": expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ConfigError(key + ": expected an integer");
  } else {
    if (!j.is_number()) throw ConfigError(key + ": expected a number");
  }
  return j.get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError(where + key + ": unknown configuration key");
  }
}

}  // namespace

std::vector<std::string> check_config(const SimConfig& c) {
  std::vector<std::string> out;
  if (c.grid_resolution < 8 || c.grid_resolution > 1024) {
    out.push_back("grid_resolution must lie in [8, 1024]");
  }
  if (!(std::isfinite(c.domain_size) && c.domain_size > 0.0)) out.push_back("domain_size must be > 0");
  if (!(std::isfinite(c.dt) && c.dt > 0.0)) out.push_back("dt must be > 0");
  if (!(c.cfl > 0.0 && c.cfl <= 1.0)) out.push_back("cfl must lie in (0, 1]");
  if (!c.gravity.allFinite()) out.push_back("gravity must be finite");
  if (!std::isfinite(c.ground.height)) out.push_back("ground.height must be finite");
  if (!(std::isfinite(c.ground.friction) && c.ground.friction >= 0.0)) {
    out.push_back("ground.friction must be >= 0");
  }
  if (!(c.ground.normal.allFinite() && c.ground.normal.norm() > 0.0)) {
    out.push_back("ground.normal must be a nonzero vector");
  }
  if (!(std::isfinite(c.fps) && c.fps > 0.0)) out.push_back("fps must be > 0");
  if (!(std::isfinite(c.duration) && c.duration > 0.0)) out.push_back("duration must be > 0");
  if (c.workers < 0) out.push_back("workers must be >= 0");
  if (!(c.softening_rate >= 0.0)) out.push_back("softening_rate must be >= 0");
  if (!(c.softening_min_ratio > 0.0 && c.softening_min_ratio <= 1.0)) {
    out.push_back("softening_min_ratio must lie in (0, 1]");
  }
  if (!(c.min_singular_value > 0.0 && c.min_singular_value <= 1.0 &&
        c.max_singular_value >= 1.0 && std::isfinite(c.max_singular_value))) {
    out.push_back("singular value bounds must satisfy 0 < min <= 1 <= max");
  }
  return out;
}

void validate_config(const SimConfig& config) {
  if (auto failures = check_config(config); !failures.empty()) throw ValidationError(failures);
}

json config_to_json(const SimConfig& c) {
  return json{{"grid_resolution", c.grid_resolution},
              {"domain_size", c.domain_size},
              {"dt", c.dt},
              {"adaptive_dt", c.adaptive_dt},
              {"cfl", c.cfl},
              {"gravity", vec_to_json(c.gravity)},
              {"ground",
               {{"enabled", c.ground.enabled},
                {"height", c.ground.height},
                {"normal", vec_to_json(c.ground.normal)},
                {"friction", c.ground.friction}}},
              {"walls", c.walls},
              {"fps", c.fps},
              {"duration", c.duration},
              {"deterministic", c.deterministic},
              {"workers", c.workers},
              {"softening_rate", c.softening_rate},
              {"softening_min_ratio", c.softening_min_ratio},
              {"min_singular_value", c.min_singular_value},
              {"max_singular_value", c.max_singular_value}};
}

SimConfig config_from_json(const json& j, const SimConfig& base) {
  if (!j.is_object()) throw ConfigError("simulation config must be a JSON object");
  reject_unknown(j,
                 {"grid_resolution", "domain_size", "dt", "adaptive_dt", "cfl", "gravity",
                  "ground", "walls", "fps", "duration", "deterministic", "workers",
                  "softening_rate", "softening_min_ratio", "min_singular_value",
                  "max_singular_value"},
                 "");
  SimConfig c = base;
  auto num = [&](const char* key, double& field) {
    if (j.contains(key)) field = get_as<double>(j.at(key), key);
  };
  auto flag = [&](const char* key, bool& field) {
    if (j.contains(key)) field = get_as<bool>(j.at(key), key);
  };
  if (j.contains("grid_resolution")) {
    c.grid_resolution = get_as<int>(j.at("grid_resolution"), "grid_resolution");
  }
  if (j.contains("workers")) c.workers = get_as<int>(j.at("workers"), "workers");
  num("domain_size", c.domain_size);
  num("dt", c.dt);
  flag("adaptive_dt", c.adaptive_dt);
  num("cfl", c.cfl);
  if (j.contains("gravity")) c.gravity = vec_from_json(j.at("gravity"), "gravity");
  if (j.contains("ground")) {
    const json& g = j.at("ground");
    if (!g.is_object()) throw ConfigError("ground: expected an object");
    reject_unknown(g, {"enabled", "height", "normal", "friction"}, "ground.");
    if (g.contains("enabled")) c.ground.enabled = get_as<bool>(g.at("enabled"), "ground.enabled");
    if (g.contains("height")) c.ground.height = get_as<double>(g.at("height"), "ground.height");
    if (g.contains("normal")) c.ground.normal = vec_from_json(g.at("normal"), "ground.normal");
    if (g.contains("friction")) {
      c.ground.friction = get_as<double>(g.at("friction"), "ground.friction");
    }
  }
  flag("walls", c.walls);
  num("fps", c.fps);
  num("duration", c.duration);
  flag("deterministic", c.deterministic);
  num("softening_rate", c.softening_rate);
  num("softening_min_ratio", c.softening_min_ratio);
  num("min_singular_value", c.min_singular_value);
  num("max_singular_value", c.max_singular_value);
  return c;
}

std::string config_hash(const SimConfig& config) {
  json j = config_to_json(config);
  j.erase("workers");
  io::Fnv1a h;
  h.update(j.dump());
  return io::to_hex(h.digest());
}

}  // namespace simready::mpm
