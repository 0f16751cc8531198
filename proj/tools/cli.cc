#include "cli.h"

#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "simready/annotation/chat_client.h"
#include "simready/annotation/session.h"
#include "simready/assets/asset_io.h"
#include "simready/common/binary_io.h"
#include "simready/common/error.h"
#include "simready/metrics/metrics.h"
#include "simready/mpm/config_io.h"
#include "simready/mpm/simulation.h"
#include "simready/mpm/trajectory_io.h"
#include "simready/scenarios/scenario_io.h"
#include "simready/service/render.h"
#include "simready/service/review_service.h"
// Last: pulls in resolv.h, whose _res macro breaks Eigen headers parsed later.
#include "simready/service/http_server.h"

namespace simready::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUpstream = 3;

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? std::string(v) : std::move(fallback);
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j = json::parse(in, nullptr, false, true);
  if (j.is_discarded()) throw ParseError(path.string(), "not valid JSON");
  return j;
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  io::Fnv1a h;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) h.update(buf, static_cast<std::size_t>(in.gcount()));
  return io::to_hex(h.digest());
}

// Bare name ("drop") or a tagged JSON record.
scenarios::ScenarioSpec parse_scenario_flag(const std::string& text) {
  const json j = json::parse(text, nullptr, false);
  if (!j.is_discarded() && j.is_object()) return scenarios::scenario_from_json(j);
  return scenarios::scenario_from_json({{"type", text}});
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  std::string config;
  std::optional<std::string> asset, scenario, out, frames;
  std::optional<int> resolution, workers;
  std::optional<double> dt, duration, fps;
  bool deterministic = false;
  bool fast = false;
  bool velocities = false;
  bool print_config = false;
};

RunConfig resolve_run_config(const SimulateFlags& f) {
  RunConfig c;
  if (!f.config.empty()) {
    const fs::path path = f.config;
    c = run_config_from_json(read_json_file(path), c, path.parent_path());
  }
  if (f.asset) c.asset = *f.asset;
  if (f.scenario) c.scenario = parse_scenario_flag(*f.scenario);
  if (f.out) c.trajectory = *f.out;
  if (f.frames) c.frames_dir = *f.frames;
  if (f.resolution) c.sim.grid_resolution = *f.resolution;
  if (f.workers) c.sim.workers = *f.workers;
  if (f.dt) c.sim.dt = *f.dt;
  if (f.duration) c.sim.duration = *f.duration;
  if (f.fps) c.sim.fps = *f.fps;
  if (f.deterministic && f.fast) throw ConfigError("--deterministic and --fast are exclusive");
  if (f.deterministic) c.sim.deterministic = true;
  if (f.fast) c.sim.deterministic = false;
  if (f.velocities) c.record_velocities = true;

  if (c.asset.empty()) throw ConfigError("no asset given (--asset or \"asset\" in the config)");
  if (!fs::is_regular_file(c.asset)) throw Error("asset not found: " + c.asset.string());
  mpm::validate_config(c.sim);
  if (const auto problems = scenarios::check_scenario(c.scenario); !problems.empty()) {
    throw ValidationError(problems);
  }
  return c;
}

int cmd_simulate(const SimulateFlags& f, std::ostream& out) {
  const RunConfig c = resolve_run_config(f);
  if (f.print_config) {
    out << run_config_to_json(c).dump(2) << "\n";
    return 0;
  }
  const auto asset = assets::load_asset(c.asset);
  mpm::RunStats stats;
  mpm::RunOptions options;
  options.record_velocities = c.record_velocities;
  options.stats = &stats;
  const auto trj = mpm::run_simulation(asset, c.scenario, c.sim, options);

  if (c.trajectory.has_parent_path()) fs::create_directories(c.trajectory.parent_path());
  mpm::save_trajectory(c.trajectory, trj);
  if (!c.frames_dir.empty()) {
    fs::create_directories(c.frames_dir);
    service::Camera camera;
    camera.center = Eigen::Vector3d::Constant(0.5 * c.sim.domain_size);
    camera.extent = c.sim.domain_size;
    for (std::size_t k = 0; k < trj.frames.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "%05zu.png", k);
      std::ofstream png(c.frames_dir / name, std::ios::binary);
      png << service::encode_png(
          service::render_particles(trj.frames[k].positions, asset.colors, camera));
      if (!png) throw Error("cannot write " + (c.frames_dir / name).string());
    }
  }

  out << "asset: " << c.asset.string() << " (" << asset.size() << " particles)\n"
      << "scenario: " << scenarios::canonical_scenario(c.scenario) << "\n"
      << "config hash: " << trj.config_hash << "\n"
      << "mode: " << (c.sim.deterministic ? "deterministic" : "fast") << "\n"
      << "frames: " << trj.frames.size() << "\n"
      << "steps: " << stats.steps << "\n"
      << "clamps triggered: " << stats.singular_value_clamps << "\n"
      << "min dt: " << fmt(stats.min_dt) << " s\n"
      << "wall time: " << fmt(stats.wall_seconds) << " s\n"
      << "trajectory: " << c.trajectory.string() << " (fnv1a64 " << file_hash(c.trajectory) << ")\n";
  if (!c.frames_dir.empty()) out << "frames dir: " << c.frames_dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- metrics

struct MetricsFlags {
  std::string pred, truth, out;
  MetricsOptions options;
  bool json_output = false;
};

bool is_trajectory(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  char magic[3] = {};
  in.read(magic, 3);
  // Assets start with "SRA"; everything else is treated as a trajectory.
  return std::string_view(magic, 3) != "SRA";
}

metrics::MetricsReport asset_metrics(const assets::SimReadyAsset& pred,
                                     const assets::SimReadyAsset& truth,
                                     const MetricsOptions& o) {
  metrics::MetricsReport r;
  r.set("CD", metrics::chamfer_distance(pred.points, truth.points));
  r.set("F-Score", metrics::f_score(pred.points, truth.points, o.fscore_tau));
  r.set("IoU", metrics::occupancy_iou(metrics::voxelize(pred.points, o.iou_resolution),
                                      metrics::voxelize(truth.points, o.iou_resolution)));
  if (pred.size() != truth.size()) {
    throw ValidationError({"material metrics compare point-wise: prediction has " +
                           std::to_string(pred.size()) + " points, ground truth " +
                           std::to_string(truth.size())});
  }
  r.add_material(metrics::material_report(pred.materials, truth.materials, pred.colors, truth.colors));
  return r;
}

int cmd_metrics(const MetricsFlags& f, std::ostream& out) {
  const bool pt = is_trajectory(f.pred);
  if (pt != is_trajectory(f.truth)) {
    throw ValidationError({"prediction and ground truth must both be trajectories or both assets"});
  }
  metrics::MetricsReport report;
  if (pt) {
    report.set("Sim-CD", metrics::sim_cd(mpm::load_trajectory(f.pred), mpm::load_trajectory(f.truth)));
  } else {
    report = asset_metrics(assets::load_asset(f.pred), assets::load_asset(f.truth), f.options);
  }
  const json record = {{"pred", f.pred},
                       {"truth", f.truth},
                       {"kind", pt ? "trajectory" : "asset"},
                       {"fscore_tau", f.options.fscore_tau},
                       {"iou_resolution", f.options.iou_resolution},
                       {"metrics", report.to_json()}};
  out << (f.json_output ? record.dump(2) + "\n" : report.to_text());
  if (!f.out.empty()) {
    std::ofstream file(f.out);
    file << record.dump(2) << "\n";
    if (!file) throw Error("cannot write " + f.out);
  }
  return 0;
}

// ---------------------------------------------------------------- annotate

struct AnnotateFlags {
  std::string description;
  std::string mock_dir;
  std::vector<std::string> images;
  std::string mode = "strict";
  std::string id;
  std::string out;
  std::string data_dir;
};

std::shared_ptr<annotation::ChatClient> make_client(const std::string& mock_dir) {
  if (!mock_dir.empty()) {
    auto mock = std::make_shared<annotation::MockChatClient>();
    mock->load_directory(mock_dir);
    return mock;
  }
  return std::make_shared<annotation::HttpChatClient>(annotation::http_options_from_env());
}

annotation::ValidationMode parse_mode(const std::string& mode) {
  if (mode == "strict") return annotation::ValidationMode::kStrict;
  if (mode == "lenient") return annotation::ValidationMode::kLenient;
  throw ConfigError("--mode: expected strict or lenient, got '" + mode + "'");
}

void print_summary(const annotation::AnnotationSession& s, std::ostream& out) {
  out << "session: " << s.id << "\n"
      << "state: " << annotation::to_string(s.state) << "\n"
      << "iterations: " << s.iterations.size() << "\n";
  const auto* it = s.latest();
  if (it == nullptr) return;
  for (const auto& round : it->fine_rounds) {
    for (const auto& [part, fine] : round.assigned) out << "fine material: " << part << " = " << fine << "\n";
    for (const auto& e : round.errors) out << "fine material error: " << e << "\n";
  }
  if (!it->parse_error.empty()) {
    out << "parse error: " << it->parse_error << "\n"
        << "result: re-queryable (response could not be parsed)\n";
    return;
  }
  for (const auto& v : it->validation.errors) out << "error: " << v.message() << "\n";
  for (const auto& v : it->validation.clamps) out << "clamped: " << v.message() << "\n";
  for (const auto& n : it->validation.notes) out << "note: " << n << "\n";
  if (!it->valid()) {
    out << "result: re-queryable (" << it->validation.errors.size() << " validation errors)\n";
    return;
  }
  for (const auto& [part, m] : it->validation.materials) {
    out << "part " << part << ": " << assets::to_string(m.behavior) << " E=" << fmt(m.youngs_modulus)
        << " nu=" << fmt(m.poisson_ratio) << " rho=" << fmt(m.density);
    if (m.yield_stress) out << " sigma_y=" << fmt(*m.yield_stress);
    if (m.friction_angle) out << " phi=" << fmt(*m.friction_angle);
    out << "\n";
  }
  out << "result: proposal valid\n";
}

int cmd_annotate(const AnnotateFlags& f, std::ostream& out, std::ostream& err) {
  json desc_json = read_json_file(f.description);
  auto desc = annotation::description_from_json(desc_json);
  for (const auto& img : f.images) desc.images.push_back(img);
  const std::string id = f.id.empty() ? fs::path(f.description).stem().string() : f.id;
  auto session = annotation::make_session(id, std::move(desc), parse_mode(f.mode));
  auto client = make_client(f.mock_dir);

  auto save = [&] {
    if (!f.out.empty()) {
      const fs::path path = f.out;
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      std::ofstream file(path);
      file << annotation::session_to_json(session).dump(2) << "\n";
      if (!file) throw Error("cannot write " + path.string());
      out << "session record: " << path.string() << "\n";
    } else {
      const fs::path dir = fs::path(f.data_dir) / "sessions";
      annotation::save_session(session, dir);
      out << "session record: " << (dir / (session.id + ".json")).string() << "\n";
    }
  };

  try {
    annotation::run_annotation_round(session, *client);
  } catch (const TransportError& e) {
    save();
    print_summary(session, out);
    err << "error: VLM transport failed after retries: " << e.what() << "\n";
    return kExitUpstream;
  }
  save();
  print_summary(session, out);
  return 0;
}

// ---------------------------------------------------------------- serve

struct ServeFlags {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
  std::string static_dir;
  std::string mock_dir;
  std::string config;
  int job_workers = 2;
  std::optional<int> resolution;
  std::optional<double> duration;
};

int cmd_serve(const ServeFlags& f, std::ostream& out, std::ostream& err) {
  service::ServiceOptions options;
  options.data_dir = f.data_dir;
  options.job_workers = f.job_workers;
  if (!f.config.empty()) options.base_config = mpm::config_from_json(read_json_file(f.config));
  if (f.resolution) options.base_config.grid_resolution = *f.resolution;
  if (f.duration) options.base_config.duration = *f.duration;
  mpm::validate_config(options.base_config);
  try {
    options.client = make_client(f.mock_dir);
  } catch (const ConfigError& e) {
    err << "warning: " << e.what() << "; annotate and requery will fail\n";
  }

  // Signals are taken synchronously by one thread; every thread started
  // below inherits the blocked mask.
  sigset_t signals, previous;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, &previous);
  struct RestoreMask {
    sigset_t* mask;
    ~RestoreMask() { pthread_sigmask(SIG_SETMASK, mask, nullptr); }
  } restore{&previous};

  service::ReviewService svc(options);
  service::HttpServer server(svc, {f.host, f.port, f.static_dir});
  int port = 0;
  try {
    port = server.bind();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  out << "data dir: " << f.data_dir << "\n"
      << "listening on http://" << f.host << ":" << port << std::endl;

  std::atomic<bool> listening_done{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    // stop() is a no-op until listen() is running, so repeat until it returns.
    while (!listening_done.load()) {
      server.stop();
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });
  server.listen();
  listening_done = true;
  pthread_kill(waiter.native_handle(), SIGTERM);  // no-op wake when already signalled
  waiter.join();
  svc.shutdown();
  out << "stopped; jobs flushed" << std::endl;
  return 0;
}

// ---------------------------------------------------------------- convert

int cmd_convert(const std::string& in, const std::string& out_path, const std::string& to,
                std::ostream& out) {
  const auto asset = assets::load_asset(in);
  assets::AssetEncoding encoding;
  if (to.empty()) {
    encoding = assets::detect_asset_encoding(in) == assets::AssetEncoding::kBinary
                   ? assets::AssetEncoding::kText
                   : assets::AssetEncoding::kBinary;
  } else if (to == "text") {
    encoding = assets::AssetEncoding::kText;
  } else if (to == "binary") {
    encoding = assets::AssetEncoding::kBinary;
  } else {
    throw ConfigError("--to: expected text or binary, got '" + to + "'");
  }
  assets::save_asset(out_path, asset, encoding);
  out << "wrote " << out_path << " (" << (encoding == assets::AssetEncoding::kText ? "text" : "binary")
      << ", " << asset.size() << " points)\n";
  return 0;
}

}  // namespace

RunConfig run_config_from_json(const json& j, const RunConfig& base, const fs::path& relative_to) {
  if (!j.is_object()) throw ConfigError("run config: expected an object");
  RunConfig c = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "asset") {
      c.asset = resolve(value.get<std::string>(), relative_to);
    } else if (key == "scenario") {
      c.scenario = scenarios::scenario_from_json(value);
    } else if (key == "sim") {
      c.sim = mpm::config_from_json(value, c.sim);
    } else if (key == "output") {
      if (!value.is_object()) throw ConfigError("output: expected an object");
      for (const auto& [k, v] : value.items()) {
        if (k == "trajectory") {
          c.trajectory = resolve(v.get<std::string>(), relative_to);
        } else if (k == "frames_dir") {
          c.frames_dir = resolve(v.get<std::string>(), relative_to);
        } else if (k == "velocities") {
          c.record_velocities = v.get<bool>();
        } else {
          throw ConfigError("output." + k + ": unknown field");
        }
      }
    } else {
      throw ConfigError(key + ": unknown field");
    }
  }
  return c;
}

json run_config_to_json(const RunConfig& c) {
  json output = {{"trajectory", c.trajectory.string()}, {"velocities", c.record_velocities}};
  if (!c.frames_dir.empty()) output["frames_dir"] = c.frames_dir.string();
  return {{"asset", c.asset.string()},
          {"scenario", scenarios::scenario_to_json(c.scenario)},
          {"sim", mpm::config_to_json(c.sim)},
          {"output", std::move(output)}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"SimReady asset tools: simulation, metrics, annotation and review service"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "simready 1.0.0");

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario on an asset and write a .trj");
  simulate->add_option("-c,--config", sim.config, "Run config JSON (flags override its fields)")
      ->check(CLI::ExistingFile);
  simulate->add_option("-a,--asset", sim.asset, "Asset file (.sra)");
  simulate->add_option("-s,--scenario", sim.scenario,
                       "Scenario name (drop, throw, tilt, drag, wind) or tagged JSON record");
  simulate->add_option("-o,--out", sim.out, "Trajectory output path");
  simulate->add_option("--frames", sim.frames, "Directory for rendered PNG frames");
  simulate->add_option("--resolution", sim.resolution, "Grid nodes per axis");
  simulate->add_option("--dt", sim.dt, "Upper bound on the time step [s]");
  simulate->add_option("--duration", sim.duration, "Simulated time [s]");
  simulate->add_option("--fps", sim.fps, "Output frames per second");
  simulate->add_option("--workers", sim.workers, "Worker threads (0: all cores)");
  simulate->add_flag("--deterministic", sim.deterministic, "Bit-reproducible transfers");
  simulate->add_flag("--fast", sim.fast, "Atomic scatter; not bit-reproducible");
  simulate->add_flag("--velocities", sim.velocities, "Store per-frame velocities");
  simulate->add_flag("--print-config", sim.print_config, "Print the resolved config and exit");

  MetricsFlags met;
  auto* metrics_cmd = app.add_subcommand("metrics", "Compare a prediction with ground truth");
  metrics_cmd->add_option("pred", met.pred, "Predicted .trj or .sra")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("truth", met.truth, "Ground-truth .trj or .sra")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("-o,--out", met.out, "Write the JSON record here");
  metrics_cmd->add_option("--tau", met.options.fscore_tau, "F-score distance threshold")
      ->capture_default_str()->check(CLI::PositiveNumber);
  metrics_cmd->add_option("--iou-resolution", met.options.iou_resolution, "Voxels per axis for IoU")
      ->capture_default_str()->check(CLI::Range(1, 1024));
  metrics_cmd->add_flag("--json", met.json_output, "Print the JSON record instead of text");

  AnnotateFlags ann;
  ann.data_dir = env_or("SIMREADY_DATA_DIR", "simready-data");
  auto* annotate = app.add_subcommand("annotate", "Run the two-round material query for an object");
  annotate->add_option("description", ann.description, "Object description JSON")
      ->required()->check(CLI::ExistingFile);
  annotate->add_option("--mock", ann.mock_dir, "Canned responses directory instead of the live VLM")
      ->check(CLI::ExistingDirectory);
  annotate->add_option("--image", ann.images, "Rendered view to attach (repeatable)");
  annotate->add_option("--mode", ann.mode, "Validation mode: strict or lenient")->capture_default_str();
  annotate->add_option("--id", ann.id, "Session id (default: description file stem)");
  annotate->add_option("-o,--out", ann.out, "Session record path (default: <data-dir>/sessions/<id>.json)");
  annotate->add_option("--data-dir", ann.data_dir, "Data directory [$SIMREADY_DATA_DIR]")->capture_default_str();

  ServeFlags srv;
  srv.data_dir = env_or("SIMREADY_DATA_DIR", "simready-data");
  auto* serve = app.add_subcommand("serve", "Host the review API and the workbench bundle");
  serve->add_option("--host", srv.host, "Bind address")->capture_default_str();
  serve->add_option("-p,--port", srv.port, "Port (0: any free port)")->capture_default_str();
  serve->add_option("--data-dir", srv.data_dir, "Data directory [$SIMREADY_DATA_DIR]")->capture_default_str();
  serve->add_option("--static", srv.static_dir, "Workbench bundle served at /")->check(CLI::ExistingDirectory);
  serve->add_option("--mock", srv.mock_dir, "Canned responses directory instead of the live VLM")
      ->check(CLI::ExistingDirectory);
  serve->add_option("-c,--config", srv.config, "Base simulation config JSON")->check(CLI::ExistingFile);
  serve->add_option("--job-workers", srv.job_workers, "Concurrent simulation jobs")
      ->capture_default_str()->check(CLI::Range(1, 64));
  serve->add_option("--resolution", srv.resolution, "Grid nodes per axis for review jobs");
  serve->add_option("--duration", srv.duration, "Simulated time of review jobs [s]");

  std::string conv_in, conv_out, conv_to;
  auto* convert = app.add_subcommand("convert", "Re-encode an asset between text and binary");
  convert->add_option("input", conv_in, "Source .sra")->required()->check(CLI::ExistingFile);
  convert->add_option("output", conv_out, "Destination .sra")->required();
  convert->add_option("--to", conv_to, "text or binary (default: the other encoding)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*metrics_cmd) return cmd_metrics(met, out);
    if (*annotate) return cmd_annotate(ann, out, err);
    if (*serve) return cmd_serve(srv, out, err);
    if (*convert) return cmd_convert(conv_in, conv_out, conv_to, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace simready::cli
