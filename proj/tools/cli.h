#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "simready/mpm/types.h"
#include "simready/scenarios/scenario.h"

namespace simready::cli {

// Everything `simulate` needs. Relative paths in a config file resolve against
// the file's directory; paths given as flags resolve against the working
// directory.
struct RunConfig {
  std::filesystem::path asset;
  scenarios::ScenarioSpec scenario = scenarios::Drop{};
  mpm::SimConfig sim;
  std::filesystem::path trajectory = "trajectory.trj";
  std::filesystem::path frames_dir;  // PNG frames when set
  bool record_velocities = false;
};

// {"asset", "scenario": {"type", ...}, "sim": {...}, "output": {"trajectory",
// "frames_dir", "velocities"}}. Absent keys keep the values of `base`.
RunConfig run_config_from_json(const nlohmann::json& j, const RunConfig& base = {},
                               const std::filesystem::path& relative_to = {});
nlohmann::json run_config_to_json(const RunConfig& c);

// Ground truth and prediction may both be .trj (trajectory metrics) or both
// .sra (geometry and material metrics).
struct MetricsOptions {
  double fscore_tau = 0.02;
  int iou_resolution = 64;
};

// Entry point behind the `simready` executable. Returns the process exit code;
// diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace simready::cli
