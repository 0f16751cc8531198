#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "simready/assets/asset.h"
#include "simready/mpm/types.h"

namespace simready::scenarios {

using mpm::Vector3;

// Axis-aligned box in normalized object coordinates.
struct HandleBox {
  Vector3 lo = Vector3::Zero();
  Vector3 hi = Vector3::Ones();
  bool contains(const Vector3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  friend bool operator==(const HandleBox&, const HandleBox&) = default;
};

struct Drop {
  double height = 0.5;  // m between the lowest point and the ground
  friend bool operator==(const Drop&, const Drop&) = default;
};

struct Throw {
  Vector3 velocity = Vector3(1.0, 1.5, 0.0);  // m/s
  double height = 0.3;                        // m
  friend bool operator==(const Throw&, const Throw&) = default;
};

struct Tilt {
  double angle = 20.0 * std::numbers::pi / 180.0;  // rad, ground rotated about +x
  friend bool operator==(const Tilt&, const Tilt&) = default;
};

struct Drag {
  std::optional<HandleBox> handle;  // default: top 10% of the object's height
  Vector3 velocity = Vector3(0.5, 0.0, 0.0);
  double duration = 0.5;
  friend bool operator==(const Drag&, const Drag&) = default;
};

struct Wind {
  Vector3 peak_acceleration = Vector3(3.0, 0.0, 0.0);  // m/s^2
  double duration = 0.5;
  friend bool operator==(const Wind&, const Wind&) = default;
};

using ScenarioSpec = std::variant<Drop, Throw, Tilt, Drag, Wind>;

// "drop", "throw", "tilt", "drag" or "wind".
std::string_view scenario_name(const ScenarioSpec& spec);
// Phrase completing "when the object ... in the simulator".
std::string scenario_description(const ScenarioSpec& spec);

std::vector<std::string> check_scenario(const ScenarioSpec& spec);

HandleBox default_drag_handle(const assets::SimReadyAsset& asset);

struct InitialState {
  std::vector<mpm::ParticleState> particles;
  mpm::Boundaries boundaries;
};

// Places the object for the scenario. Only positions, velocities, boundary
// configuration and handle flags depend on the scenario.
InitialState init_state_for_scenario(const assets::SimReadyAsset& asset,
                                     const ScenarioSpec& spec, const mpm::SimConfig& config);

// Wind: peak * sin(pi t / duration) while t < duration; zero otherwise.
Vector3 external_acceleration(const ScenarioSpec& spec, double t);

// Drag handle particles move with the drag velocity until `duration`.
std::optional<Vector3> kinematic_override(const ScenarioSpec& spec, double t,
                                          const mpm::ParticleState& particle);

mpm::Forcing forcing_for(const ScenarioSpec& spec);

}  // namespace simready::scenarios
