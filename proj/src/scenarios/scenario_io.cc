#include "simready/scenarios/scenario_io.h"

#include <set>

#include "simready/common/error.h"

namespace simready::scenarios {
namespace {

using nlohmann::json;

json vec(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

class Reader {
 public:
  Reader(const json& j, std::set<std::string> known) : j_(j) {
    known.insert("type");
    for (const auto& [key, _] : j.items()) {
      if (!known.contains(key)) throw ConfigError("scenario." + key + ": unknown field");
    }
  }

  void number(const char* key, double& out) const {
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_number()) throw ConfigError(std::string("scenario.") + key + ": expected a number");
    out = j_.at(key).get<double>();
  }

  void vector(const char* key, Vector3& out) const {
    if (!j_.contains(key)) return;
    out = parse_vec(j_.at(key), std::string("scenario.") + key);
  }

  static Vector3 parse_vec(const json& v, const std::string& name) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(name + ": expected an array of 3 numbers");
    Vector3 out;
    for (int a = 0; a < 3; ++a) {
      if (!v[a].is_number()) throw ConfigError(name + ": expected an array of 3 numbers");
      out[a] = v[a].get<double>();
    }
    return out;
  }

 private:
  const json& j_;
};

}  // namespace

json scenario_to_json(const ScenarioSpec& spec) {
  json j{{"type", std::string(scenario_name(spec))}};
  if (const auto* s = std::get_if<Drop>(&spec)) {
    j["height"] = s->height;
  } else if (const auto* s = std::get_if<Throw>(&spec)) {
    j["velocity"] = vec(s->velocity);
    j["height"] = s->height;
  } else if (const auto* s = std::get_if<Tilt>(&spec)) {
    j["angle"] = s->angle;
  } else if (const auto* s = std::get_if<Drag>(&spec)) {
    if (s->handle) j["handle"] = {{"lo", vec(s->handle->lo)}, {"hi", vec(s->handle->hi)}};
    j["velocity"] = vec(s->velocity);
    j["duration"] = s->duration;
  } else if (const auto* s = std::get_if<Wind>(&spec)) {
    j["peak_acceleration"] = vec(s->peak_acceleration);
    j["duration"] = s->duration;
  }
  return j;
}

ScenarioSpec scenario_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw ConfigError("scenario.type: expected one of drop, throw, tilt, drag, wind");
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "drop") {
    Drop s;
    Reader(j, {"height"}).number("height", s.height);
    return s;
  }
  if (type == "throw") {
    Throw s;
    Reader r(j, {"velocity", "height"});
    r.vector("velocity", s.velocity);
    r.number("height", s.height);
    return s;
  }
  if (type == "tilt") {
    Tilt s;
    Reader(j, {"angle"}).number("angle", s.angle);
    return s;
  }
  if (type == "drag") {
    Drag s;
    Reader r(j, {"handle", "velocity", "duration"});
    r.vector("velocity", s.velocity);
    r.number("duration", s.duration);
    if (j.contains("handle")) {
      const json& h = j.at("handle");
      if (!h.is_object() || !h.contains("lo") || !h.contains("hi")) {
        throw ConfigError("scenario.handle: expected {\"lo\": [..], \"hi\": [..]}");
      }
      s.handle = HandleBox{Reader::parse_vec(h.at("lo"), "scenario.handle.lo"),
                           Reader::parse_vec(h.at("hi"), "scenario.handle.hi")};
    }
    return s;
  }
  if (type == "wind") {
    Wind s;
    Reader r(j, {"peak_acceleration", "duration"});
    r.vector("peak_acceleration", s.peak_acceleration);
    r.number("duration", s.duration);
    return s;
  }
  throw ConfigError("scenario.type: unknown scenario '" + type + "'");
}

std::string canonical_scenario(const ScenarioSpec& spec) { return scenario_to_json(spec).dump(); }

}  // namespace simready::scenarios
