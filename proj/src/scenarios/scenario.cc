#include "simready/scenarios/scenario.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "simready/common/error.h"
#include "simready/mpm/simulation.h"

namespace simready::scenarios {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void check_finite(const Vector3& v, const char* name, std::vector<std::string>& out) {
  if (!v.allFinite()) out.push_back(std::string(name) + " must be finite");
}

void check_height(double h, std::vector<std::string>& out) {
  if (!(std::isfinite(h) && h >= 0.0)) out.push_back("height must be finite and >= 0");
}

void check_duration(double d, std::vector<std::string>& out) {
  if (!(std::isfinite(d) && d > 0.0)) out.push_back("duration must be finite and > 0");
}

// Object-space points translated so the x/z bounding-box center sits at the
// domain center and the lowest point has y = 0.
std::vector<Vector3> centered_points(const std::vector<mpm::ParticleState>& particles,
                                     double domain_size) {
  Vector3 lo = Vector3::Constant(std::numeric_limits<double>::infinity());
  Vector3 hi = -lo;
  for (const auto& p : particles) {
    lo = lo.cwiseMin(p.x);
    hi = hi.cwiseMax(p.x);
  }
  const Vector3 shift(0.5 * domain_size - 0.5 * (lo.x() + hi.x()), -lo.y(),
                      0.5 * domain_size - 0.5 * (lo.z() + hi.z()));
  std::vector<Vector3> out;
  out.reserve(particles.size());
  for (const auto& p : particles) out.push_back(p.x + shift);
  return out;
}

}  // namespace

std::string_view scenario_name(const ScenarioSpec& spec) {
  return std::visit(Overloaded{[](const Drop&) { return std::string_view("drop"); },
                               [](const Throw&) { return std::string_view("throw"); },
                               [](const Tilt&) { return std::string_view("tilt"); },
                               [](const Drag&) { return std::string_view("drag"); },
                               [](const Wind&) { return std::string_view("wind"); }},
                    spec);
}

std::string scenario_description(const ScenarioSpec& spec) {
  return std::visit(
      Overloaded{[](const Drop&) { return std::string("is dropped from a certain height"); },
                 [](const Throw&) { return std::string("is thrown in a certain direction"); },
                 [](const Tilt&) { return std::string("is tilted"); },
                 [](const Drag&) { return std::string("is dragged"); },
                 [](const Wind&) {
                   return std::string(
                       "is subjected to a short-term, time-variant force (e.g., wind)");
                 }},
      spec);
}

std::vector<std::string> check_scenario(const ScenarioSpec& spec) {
  std::vector<std::string> out;
  std::visit(Overloaded{[&](const Drop& s) { check_height(s.height, out); },
                        [&](const Throw& s) {
                          check_height(s.height, out);
                          check_finite(s.velocity, "velocity", out);
                        },
                        [&](const Tilt& s) {
                          if (!(std::isfinite(s.angle) &&
                                std::abs(s.angle) < 0.5 * std::numbers::pi)) {
                            out.push_back("tilt angle must lie in (-pi/2, pi/2)");
                          }
                        },
                        [&](const Drag& s) {
                          check_finite(s.velocity, "velocity", out);
                          check_duration(s.duration, out);
                          if (s.handle) {
                            check_finite(s.handle->lo, "handle.lo", out);
                            check_finite(s.handle->hi, "handle.hi", out);
                            if ((s.handle->lo.array() > s.handle->hi.array()).any()) {
                              out.push_back("handle box has lo > hi");
                            }
                          }
                        },
                        [&](const Wind& s) {
                          check_finite(s.peak_acceleration, "peak_acceleration", out);
                          check_duration(s.duration, out);
                        }},
             spec);
  return out;
}

HandleBox default_drag_handle(const assets::SimReadyAsset& asset) {
  if (asset.points.empty()) throw ValidationError({"asset has no points"});
  Vector3 lo = asset.points.front(), hi = lo;
  for (const auto& p : asset.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  HandleBox box{lo, hi};
  box.lo.y() = hi.y() - 0.1 * (hi.y() - lo.y());
  return box;
}

InitialState init_state_for_scenario(const assets::SimReadyAsset& asset,
                                     const ScenarioSpec& spec, const mpm::SimConfig& config) {
  if (auto failures = check_scenario(spec); !failures.empty()) throw ValidationError(failures);

  InitialState state;
  state.particles = mpm::initialize_particles(asset, config);
  state.boundaries.ground = config.ground;
  state.boundaries.walls = config.walls;
  const double ground_y = config.ground.height;
  const std::vector<Vector3> base = centered_points(state.particles, config.domain_size);

  auto place = [&](double clearance, const Vector3& velocity) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      state.particles[i].x = base[i] + Vector3(0.0, ground_y + clearance, 0.0);
      state.particles[i].v = velocity;
    }
  };

  std::visit(
      Overloaded{[&](const Drop& s) { place(s.height, Vector3::Zero()); },
                 [&](const Throw& s) { place(s.height, s.velocity); },
                 [&](const Tilt& s) {
                   const Vector3 n(0.0, std::cos(s.angle), std::sin(s.angle));
                   state.boundaries.ground.normal = n;
                   const Vector3 anchor(0.5 * config.domain_size, ground_y,
                                        0.5 * config.domain_size);
                   double min_d = std::numeric_limits<double>::infinity();
                   for (const auto& x : base) min_d = std::min(min_d, n.dot(x - anchor));
                   // A vertical shift dy changes every signed distance by dy * n.y.
                   const double dy = -min_d / n.y();
                   for (std::size_t i = 0; i < base.size(); ++i) {
                     state.particles[i].x = base[i] + Vector3(0.0, dy, 0.0);
                     state.particles[i].v.setZero();
                   }
                 },
                 [&](const Drag& s) {
                   place(0.0, Vector3::Zero());
                   const HandleBox box = s.handle.value_or(default_drag_handle(asset));
                   std::size_t selected = 0;
                   for (std::size_t i = 0; i < asset.points.size(); ++i) {
                     state.particles[i].handle = box.contains(asset.points[i]);
                     selected += state.particles[i].handle ? 1 : 0;
                   }
                   if (selected == 0) throw ValidationError({"drag handle selects no particles"});
                 },
                 [&](const Wind&) { place(0.0, Vector3::Zero()); }},
      spec);
  return state;
}

Vector3 external_acceleration(const ScenarioSpec& spec, double t) {
  const auto* wind = std::get_if<Wind>(&spec);
  if (!wind || t < 0.0 || t >= wind->duration) return Vector3::Zero();
  return wind->peak_acceleration * std::sin(std::numbers::pi * t / wind->duration);
}

std::optional<Vector3> kinematic_override(const ScenarioSpec& spec, double t,
                                          const mpm::ParticleState& particle) {
  const auto* drag = std::get_if<Drag>(&spec);
  if (!drag || !particle.handle || t >= drag->duration) return std::nullopt;
  return drag->velocity;
}

mpm::Forcing forcing_for(const ScenarioSpec& spec) {
  mpm::Forcing forcing;
  if (std::holds_alternative<Wind>(spec)) {
    forcing.external_acceleration = [spec](double t) { return external_acceleration(spec, t); };
  }
  if (std::holds_alternative<Drag>(spec)) {
    forcing.kinematic_velocity = [spec](double t, const mpm::ParticleState& p) {
      return kinematic_override(spec, t, p);
    };
  }
  return forcing;
}

}  // namespace simready::scenarios
