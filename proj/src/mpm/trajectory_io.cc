#include "simready/mpm/trajectory_io.h"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "simready/common/binary_io.h"
#include "simready/common/error.h"

namespace simready::mpm {
namespace {

constexpr const char* kMagic = "SRTRJ 1";

void write_block(std::ostream& os, const std::vector<Vector3>& values) {
  for (const auto& v : values) {
    for (int a = 0; a < 3; ++a) io::write_le(os, static_cast<float>(v[a]));
  }
}

std::vector<Vector3> read_block(std::istream& is, std::size_t n, const char* field) {
  std::vector<Vector3> out(n);
  for (auto& v : out) {
    for (int a = 0; a < 3; ++a) {
      float f;
      if (!io::read_le(is, f)) throw ParseError(field, "truncated frame data");
      v[a] = f;
    }
  }
  return out;
}

}  // namespace

void write_trajectory(std::ostream& os, const Trajectory& t) {
  const std::size_t n = t.particle_count();
  const bool has_velocities = !t.frames.empty() && !t.frames.front().velocities.empty();
  for (std::size_t k = 0; k < t.frames.size(); ++k) {
    const Frame& f = t.frames[k];
    if (f.positions.size() != n) throw ValidationError({"frames differ in particle count"});
    if (has_velocities && f.velocities.size() != n) {
      throw ValidationError({"velocity block missing in frame " + std::to_string(k)});
    }
    if (k > 0 && !(f.time > t.frames[k - 1].time)) {
      throw ValidationError({"frame times must be strictly increasing"});
    }
  }
  nlohmann::json scenario =
      t.scenario.empty() ? nlohmann::json() : nlohmann::json::parse(t.scenario);
  nlohmann::json header{{"asset_id", t.asset_id},
                        {"scenario", scenario},
                        {"config_hash", t.config_hash},
                        {"fps", t.fps},
                        {"frame_count", t.frames.size()},
                        {"particle_count", n},
                        {"has_velocities", has_velocities}};
  os << kMagic << '\n' << header.dump() << '\n';
  for (const Frame& f : t.frames) {
    io::write_le(os, f.time);
    write_block(os, f.positions);
    if (has_velocities) write_block(os, f.velocities);
  }
  if (!os) throw Error("failed to write trajectory");
}

Trajectory read_trajectory(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMagic) throw ParseError("magic", "not a .trj stream");
  if (!std::getline(is, line)) throw ParseError("header", "missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("header", e.what());
  }
  Trajectory t;
  std::size_t frame_count = 0, n = 0;
  bool has_velocities = false;
  try {
    t.asset_id = header.at("asset_id").get<std::string>();
    t.scenario = header.at("scenario").is_null() ? "" : header.at("scenario").dump();
    t.config_hash = header.at("config_hash").get<std::string>();
    t.fps = header.at("fps").get<double>();
    frame_count = header.at("frame_count").get<std::size_t>();
    n = header.at("particle_count").get<std::size_t>();
    has_velocities = header.value("has_velocities", false);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("header", e.what());
  }
  t.frames.resize(frame_count);
  for (std::size_t k = 0; k < frame_count; ++k) {
    Frame& f = t.frames[k];
    if (!io::read_le(is, f.time)) throw ParseError("time", "truncated frame data");
    if (k > 0 && !(f.time > t.frames[k - 1].time)) {
      throw ParseError("time", "frame times must be strictly increasing");
    }
    f.positions = read_block(is, n, "positions");
    if (has_velocities) f.velocities = read_block(is, n, "velocities");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw ParseError("frames", "trailing bytes");
  return t;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_trajectory(os, trajectory);
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return read_trajectory(is);
}

}  // namespace simready::mpm
