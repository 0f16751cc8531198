#include "simready/service/review_service.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "simready/assets/asset_io.h"
#include "simready/common/error.h"
#include "simready/mpm/config_io.h"
#include "simready/mpm/simulation.h"
#include "simready/mpm/trajectory_io.h"
#include "simready/scenarios/scenario_io.h"

namespace simready::service {

namespace fs = std::filesystem;
using annotation::AnnotationSession;
using nlohmann::json;

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "unknown";
}

namespace {

JobStatus job_status_from_string(std::string_view s) {
  for (JobStatus st : {JobStatus::kQueued, JobStatus::kRunning, JobStatus::kDone, JobStatus::kFailed}) {
    if (to_string(st) == s) return st;
  }
  throw ParseError("status", "unknown job status '" + std::string(s) + "'");
}

std::string_view view_name(View v) {
  switch (v) {
    case View::kFront: return "front";
    case View::kSide: return "side";
    case View::kTop: return "top";
  }
  return "front";
}

json camera_to_json(const Camera& c) {
  return {{"view", view_name(c.view)},
          {"center", {c.center.x(), c.center.y(), c.center.z()}},
          {"extent", c.extent},
          {"particle_radius", c.particle_radius},
          {"width", c.width},
          {"height", c.height}};
}

Camera camera_from_json(const json& j, Camera c) {
  for (const auto& [key, v] : j.items()) {
    if (key == "view") {
      const std::string name = v.get<std::string>();
      if (name == "front") {
        c.view = View::kFront;
      } else if (name == "side") {
        c.view = View::kSide;
      } else if (name == "top") {
        c.view = View::kTop;
      } else {
        throw ConfigError("camera.view: expected front, side or top");
      }
    } else if (key == "center") {
      const auto a = v.get<std::vector<double>>();
      if (a.size() != 3) throw ConfigError("camera.center: expected 3 numbers");
      c.center = {a[0], a[1], a[2]};
    } else if (key == "extent") {
      c.extent = v.get<double>();
    } else if (key == "particle_radius") {
      c.particle_radius = v.get<double>();
    } else if (key == "width") {
      c.width = v.get<int>();
    } else if (key == "height") {
      c.height = v.get<int>();
    } else {
      throw ConfigError("camera." + key + ": unknown field");
    }
  }
  if (c.width <= 0 || c.height <= 0 || c.width > 4096 || c.height > 4096) {
    throw ConfigError("camera size must lie in [1, 4096]");
  }
  if (!(c.extent > 0.0) || !(c.particle_radius > 0.0)) {
    throw ConfigError("camera extent and particle_radius must be > 0");
  }
  return c;
}

void write_atomically(const fs::path& path, const std::string& bytes) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("missing file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t id_number(const std::string& id) {
  if (id.size() < 2) return 0;
  std::uint64_t n = 0;
  for (char c : id.substr(1)) {
    if (c < '0' || c > '9') return 0;
    n = n * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return n;
}

}  // namespace

json job_to_json(const ReviewJob& job) {
  return {{"id", job.id},
          {"session_id", job.session_id},
          {"iteration", job.iteration},
          {"scenario", job.scenario},
          {"config", job.config},
          {"camera", camera_to_json(job.camera)},
          {"status", to_string(job.status)},
          {"error", job.error},
          {"frame_count", job.frame_count},
          {"fps", job.config.value("fps", 24.0)},
          {"steps", job.steps},
          {"clamps", job.clamps},
          {"wall_seconds", job.wall_seconds},
          {"created_at", job.created_at},
          {"finished_at", job.finished_at}};
}

ReviewJob job_from_json(const json& j) {
  try {
    ReviewJob job;
    job.id = j.at("id").get<std::string>();
    job.session_id = j.at("session_id").get<std::string>();
    job.iteration = j.at("iteration").get<std::size_t>();
    job.scenario = j.at("scenario");
    job.config = j.at("config");
    job.camera = camera_from_json(j.at("camera"), Camera{});
    job.status = job_status_from_string(j.at("status").get<std::string>());
    job.error = j.at("error").get<std::string>();
    job.frame_count = j.at("frame_count").get<std::size_t>();
    job.steps = j.at("steps").get<std::uint64_t>();
    job.clamps = j.at("clamps").get<std::uint64_t>();
    job.wall_seconds = j.at("wall_seconds").get<double>();
    job.created_at = j.at("created_at").get<std::string>();
    job.finished_at = j.at("finished_at").get<std::string>();
    return job;
  } catch (const json::exception& e) {
    throw ParseError("job", e.what());
  }
}

Eigen::Vector3d color_from_word(std::string_view word) {
  static const std::map<std::string, Eigen::Vector3d, std::less<>> table = {
      {"black", {0.08, 0.08, 0.08}}, {"white", {0.95, 0.95, 0.95}}, {"grey", {0.5, 0.5, 0.5}},
      {"gray", {0.5, 0.5, 0.5}},     {"silver", {0.75, 0.75, 0.78}}, {"gold", {0.83, 0.69, 0.22}},
      {"red", {0.8, 0.15, 0.15}},    {"green", {0.2, 0.6, 0.25}},   {"blue", {0.2, 0.3, 0.8}},
      {"yellow", {0.9, 0.85, 0.2}},  {"orange", {0.95, 0.55, 0.15}}, {"purple", {0.5, 0.25, 0.6}},
      {"pink", {0.95, 0.6, 0.7}},    {"brown", {0.45, 0.3, 0.18}},  {"beige", {0.85, 0.78, 0.62}},
  };
  auto it = table.find(word);
  return it == table.end() ? Eigen::Vector3d(0.6, 0.6, 0.6) : it->second;
}

assets::SimReadyAsset proxy_asset(const annotation::ObjectDescription& desc, double world_scale) {
  annotation::validate_description(desc);
  constexpr int kSide = 10;
  const int parts = static_cast<int>(desc.parts.size());
  const int layers = std::max(2, (kSide + parts - 1) / parts);
  const double h = 1.0 / (kSide - 1);

  assets::SimReadyAsset a;
  std::vector<Eigen::Vector3d> raw;
  for (int p = 0; p < parts; ++p) {
    const Eigen::Vector3d color = color_from_word(desc.parts[p].color);
    for (int l = 0; l < layers; ++l) {
      for (int i = 0; i < kSide; ++i) {
        for (int k = 0; k < kSide; ++k) {
          raw.emplace_back(i * h, (p * layers + l) * h, k * h);
          a.colors.push_back(color);
          a.part_labels.push_back(p);
        }
      }
    }
  }
  auto [points, transform] = assets::normalize_to_unit_box(raw);
  a.points = std::move(points);
  a.transform = transform;
  a.materials.assign(a.points.size(), assets::MaterialParams{});
  a.metadata.asset_id = desc.shape_name + "-proxy";
  a.metadata.category = desc.shape_name;
  for (const auto& p : desc.parts) a.metadata.parts.push_back({p.name, p.coarse_material, p.fine_material});
  a.metadata.world_scale = world_scale;
  assets::validate_asset(a);
  return a;
}

ReviewService::ReviewService(ServiceOptions options) : options_(std::move(options)) {
  mpm::validate_config(options_.base_config);
  if (options_.job_workers < 1) throw ConfigError("job_workers must be >= 1");
  fs::create_directories(sessions_dir());
  fs::create_directories(jobs_dir());
  load_store();
  for (int i = 0; i < options_.job_workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

ReviewService::~ReviewService() { shutdown(); }

void ReviewService::load_store() {
  for (const auto& f : fs::directory_iterator(sessions_dir())) {
    if (f.path().extension() != ".json") continue;
    auto e = std::make_shared<SessionEntry>();
    e->session = annotation::load_session(f.path());
    e->has_asset = fs::exists(asset_path(e->session.id));
    counter_ = std::max(counter_, id_number(e->session.id));
    sessions_.emplace(e->session.id, std::move(e));
  }
  for (const auto& f : fs::directory_iterator(jobs_dir())) {
    if (f.path().extension() != ".json") continue;
    ReviewJob job = job_from_json(json::parse(read_bytes(f.path())));
    if (job.status == JobStatus::kQueued || job.status == JobStatus::kRunning) {
      // The previous process stopped before finishing it.
      job.status = JobStatus::kFailed;
      job.error = "interrupted before completion";
      persist(job);
    }
    counter_ = std::max(counter_, id_number(job.id));
    jobs_.emplace(job.id, std::move(job));
  }
}

std::string ReviewService::next_id(char prefix) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%06llu", prefix, static_cast<unsigned long long>(++counter_));
  return buf;
}

fs::path ReviewService::asset_path(const std::string& session_id) const {
  return sessions_dir() / (session_id + ".sra");
}

fs::path ReviewService::frame_path(const std::string& job_id, std::size_t k) const {
  char name[32];
  std::snprintf(name, sizeof name, "%05zu.png", k);
  return jobs_dir() / job_id / name;
}

void ReviewService::persist(const AnnotationSession& s) const {
  annotation::save_session(s, sessions_dir());
}

void ReviewService::persist(const ReviewJob& job) const {
  write_atomically(jobs_dir() / (job.id + ".json"), job_to_json(job).dump(2) + "\n");
}

std::shared_ptr<ReviewService::SessionEntry> ReviewService::entry(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session " + id);
  return it->second;
}

annotation::ChatClient& ReviewService::client() const {
  if (!options_.client) throw TransportError("no VLM client configured");
  return *options_.client;
}

json ReviewService::session_view(const SessionEntry& e) const {
  json view = annotation::session_to_json(e.session);
  view["has_asset"] = e.has_asset;
  json jobs = json::array();
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, job] : jobs_) {
      if (job.session_id == e.session.id) jobs.push_back(job_to_json(job));
    }
  }
  view["jobs"] = std::move(jobs);
  return view;
}

json ReviewService::list_sessions() const {
  std::vector<std::shared_ptr<SessionEntry>> entries;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, e] : sessions_) entries.push_back(e);
  }
  json out = json::array();
  for (const auto& e : entries) {
    std::lock_guard lock(e->mutex);
    const auto& s = e->session;
    out.push_back({{"id", s.id},
                   {"shape_name", s.description.shape_name},
                   {"state", annotation::to_string(s.state)},
                   {"rectification_count", s.rectification_count()},
                   {"iterations", s.iterations.size()},
                   {"updated_at", s.updated_at}});
  }
  return out;
}

json ReviewService::create_session(const json& body) {
  if (!body.is_object()) throw ParseError("body", "expected an object");
  json desc_json = body;
  std::optional<fs::path> source;
  if (auto it = desc_json.find("asset_path"); it != desc_json.end()) {
    if (!it->is_string()) throw ParseError("asset_path", "expected a string");
    source = it->get<std::string>();
    desc_json.erase("asset_path");
  }
  annotation::ValidationMode mode = annotation::ValidationMode::kStrict;
  if (auto it = desc_json.find("mode"); it != desc_json.end()) {
    const std::string m = it->is_string() ? it->get<std::string>() : "";
    if (m != "strict" && m != "lenient") throw ParseError("mode", "expected strict or lenient");
    mode = m == "strict" ? annotation::ValidationMode::kStrict : annotation::ValidationMode::kLenient;
    desc_json.erase("mode");
  }
  annotation::ObjectDescription desc = annotation::description_from_json(desc_json);

  std::optional<assets::SimReadyAsset> asset;
  if (source) {
    asset = assets::load_asset(*source);
    std::set<std::string> asset_parts, desc_parts;
    for (const auto& p : asset->metadata.parts) asset_parts.insert(p.name);
    for (const auto& p : desc.parts) desc_parts.insert(p.name);
    if (asset_parts != desc_parts) {
      throw ValidationError({"asset part names do not match the description's parts"});
    }
  }

  auto e = std::make_shared<SessionEntry>();
  {
    std::lock_guard lock(mutex_);
    e->session = annotation::make_session(next_id('s'), std::move(desc), mode);
  }
  if (options_.round.now) {
    e->session.created_at = e->session.updated_at = options_.round.now();
  }
  if (asset) {
    assets::save_asset(asset_path(e->session.id), *asset);
    e->has_asset = true;
  }
  persist(e->session);
  {
    std::lock_guard lock(mutex_);
    sessions_.emplace(e->session.id, e);
  }
  std::lock_guard lock(e->mutex);
  return session_view(*e);
}

json ReviewService::get_session(const std::string& id) const {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  return session_view(*e);
}

json ReviewService::annotate(const std::string& id) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  try {
    annotation::run_annotation_round(e->session, client(), options_.round);
  } catch (const TransportError&) {
    persist(e->session);
    throw;
  }
  persist(e->session);
  return session_view(*e);
}

json ReviewService::simulate(const std::string& id, const json& body) {
  if (!body.is_object() && !body.is_null()) throw ParseError("body", "expected an object");
  const json scenario_json = body.is_object() && body.contains("scenario")
                                 ? body.at("scenario")
                                 : scenarios::scenario_to_json(scenarios::Drop{});
  const scenarios::ScenarioSpec spec = scenarios::scenario_from_json(scenario_json);
  const auto scenario_errors = scenarios::check_scenario(spec);
  if (!scenario_errors.empty()) throw ValidationError(scenario_errors);
  mpm::SimConfig config = options_.base_config;
  if (body.is_object() && body.contains("config")) {
    config = mpm::config_from_json(body.at("config"), options_.base_config);
  }
  mpm::validate_config(config);
  Camera camera = options_.camera;
  camera.center = Eigen::Vector3d::Constant(0.5 * config.domain_size);
  camera.extent = config.domain_size;
  if (body.is_object() && body.contains("camera")) camera = camera_from_json(body.at("camera"), camera);

  auto e = entry(id);
  std::lock_guard session_lock(e->mutex);
  const AnnotationSession& s = e->session;
  if (!annotation::next_state(s.state, annotation::SessionEvent::kSimulate)) {
    throw ConflictError("cannot simulate a session in state " +
                        std::string(annotation::to_string(s.state)));
  }
  if (s.validated_materials() == nullptr) {
    throw ConflictError("session " + id + " has no validated proposal");
  }

  ReviewJob job;
  job.session_id = id;
  job.iteration = s.iterations.size() - 1;
  job.scenario = scenarios::scenario_to_json(spec);
  job.config = mpm::config_to_json(config);
  job.camera = camera;
  job.created_at = options_.round.now ? options_.round.now() : annotation::utc_timestamp();
  {
    std::lock_guard lock(mutex_);
    if (stopping_) throw ConflictError("service is shutting down");
    job.id = next_id('j');
    persist(job);
    jobs_.emplace(job.id, job);
    queue_.push_back(job.id);
  }
  work_cv_.notify_one();
  return job_to_json(job);
}

json ReviewService::get_job(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw NotFoundError("no job " + id);
  return job_to_json(it->second);
}

std::string ReviewService::frame_png(const std::string& job_id, std::size_t k) const {
  std::size_t frames = 0;
  {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw NotFoundError("no job " + job_id);
    if (it->second.status != JobStatus::kDone) throw ConflictError("job " + job_id + " is not done");
    frames = it->second.frame_count;
  }
  if (k >= frames) {
    throw NotFoundError("frame " + std::to_string(k) + " out of range [0, " +
                        std::to_string(frames) + ")");
  }
  return read_bytes(frame_path(job_id, k));
}

fs::path ReviewService::trajectory_path(const std::string& job_id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw NotFoundError("no job " + job_id);
  if (it->second.status != JobStatus::kDone) throw ConflictError("job " + job_id + " is not done");
  return jobs_dir() / (job_id + ".trj");
}

json ReviewService::record_verdict(const std::string& id, const json& body) {
  if (!body.is_object()) throw ParseError("body", "expected an object");
  annotation::VerdictRecord v;
  try {
    v.job_id = body.at("job_id").get<std::string>();
    const std::string decision = body.at("decision").get<std::string>();
    if (decision == "plausible") {
      v.decision = annotation::Verdict::kPlausible;
    } else if (decision == "implausible") {
      v.decision = annotation::Verdict::kImplausible;
    } else {
      throw ValidationError({"decision must be plausible or implausible"});
    }
    for (const auto& c : body.value("comments", json::array())) {
      v.comments.push_back({c.value("part", ""), c.at("text").get<std::string>()});
    }
    v.reviewer = body.value("reviewer", "");
  } catch (const json::exception& e) {
    throw ParseError("verdict", e.what());
  }

  json scenario;
  {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(v.job_id);
    if (it == jobs_.end()) throw NotFoundError("no job " + v.job_id);
    if (it->second.session_id != id) throw ConflictError("job " + v.job_id + " belongs to another session");
    if (it->second.status != JobStatus::kDone) throw ConflictError("job " + v.job_id + " is not done");
    scenario = it->second.scenario;
  }
  const auto spec = scenarios::scenario_from_json(scenario);
  v.scenario = scenarios::canonical_scenario(spec);
  v.test_case_description = scenarios::scenario_description(spec);

  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  annotation::record_verdict(e->session, std::move(v), options_.round);
  persist(e->session);
  return session_view(*e);
}

json ReviewService::requery(const std::string& id) {
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  if (e->session.state != annotation::SessionState::kAwaitingRequery) {
    throw ConflictError("session " + id + " is not awaiting a re-query (state " +
                        std::string(annotation::to_string(e->session.state)) + ")");
  }
  try {
    annotation::run_annotation_round(e->session, client(), options_.round);
  } catch (const TransportError&) {
    persist(e->session);
    throw;
  }
  persist(e->session);
  return session_view(*e);
}

json ReviewService::override_parameters(const std::string& id, const json& body) {
  if (!body.is_object() || !body.contains("parts") || !body.at("parts").is_object()) {
    throw ParseError("parts", "expected an object of part proposals");
  }
  const auto proposal = annotation::parse_parameter_response(body.at("parts").dump());
  auto e = entry(id);
  std::lock_guard lock(e->mutex);
  annotation::apply_override(e->session, proposal, options_.round);
  persist(e->session);
  return session_view(*e);
}

void ReviewService::wait_idle() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && running_ == 0; });
}

void ReviewService::shutdown() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    stopping_ = true;
    cancel_ = true;
    for (const auto& id : queue_) {
      ReviewJob& job = jobs_.at(id);
      job.status = JobStatus::kFailed;
      job.error = "service shut down before the job started";
      job.finished_at = annotation::utc_timestamp();
      persist(job);
    }
    queue_.clear();
  }
  work_cv_.notify_all();
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
  idle_cv_.notify_all();
}

void ReviewService::worker_loop() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(mutex_);
      work_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
      ++running_;
      ReviewJob& job = jobs_.at(id);
      job.status = JobStatus::kRunning;
      persist(job);
    }
    run_job(id);
    {
      std::lock_guard lock(mutex_);
      --running_;
    }
    idle_cv_.notify_all();
  }
}

assets::SimReadyAsset ReviewService::build_asset(const SessionEntry& e, std::size_t iteration) const {
  const AnnotationSession& s = e.session;
  assets::SimReadyAsset asset = e.has_asset ? assets::load_asset(asset_path(s.id))
                                            : proxy_asset(s.description, options_.proxy_world_scale);
  const auto& materials = s.iterations.at(iteration).validation.materials;
  for (std::size_t i = 0; i < asset.size(); ++i) {
    const std::string& part = asset.metadata.parts.at(asset.part_labels[i]).name;
    asset.materials[i] = materials.at(part);
  }
  return asset;
}

void ReviewService::run_job(const std::string& job_id) {
  ReviewJob job;
  {
    std::lock_guard lock(mutex_);
    job = jobs_.at(job_id);
  }
  try {
    auto e = entry(job.session_id);
    assets::SimReadyAsset asset;
    {
      std::lock_guard lock(e->mutex);
      asset = build_asset(*e, job.iteration);
    }
    const auto spec = scenarios::scenario_from_json(job.scenario);
    const auto config = mpm::config_from_json(job.config, options_.base_config);
    mpm::RunStats stats;
    mpm::RunOptions run;
    run.stats = &stats;
    run.cancel = &cancel_;
    const mpm::Trajectory trj = mpm::run_simulation(asset, spec, config, run);
    mpm::save_trajectory(jobs_dir() / (job.id + ".trj"), trj);

    for (std::size_t k = 0; k < trj.frames.size(); ++k) {
      const Image img = render_particles(trj.frames[k].positions, asset.colors, job.camera);
      write_atomically(frame_path(job.id, k), encode_png(img));
    }
    job.status = JobStatus::kDone;
    job.frame_count = trj.frames.size();
    job.steps = stats.steps;
    job.clamps = stats.singular_value_clamps;
    job.wall_seconds = stats.wall_seconds;
  } catch (const std::exception& ex) {
    job.status = JobStatus::kFailed;
    job.error = ex.what();
  }
  job.finished_at = options_.round.now ? options_.round.now() : annotation::utc_timestamp();
  {
    std::lock_guard lock(mutex_);
    jobs_[job.id] = job;
    persist(job);
  }
  if (job.status != JobStatus::kDone) return;

  // Only a job for the session's current proposal moves it to simulated.
  try {
    auto e = entry(job.session_id);
    std::lock_guard lock(e->mutex);
    AnnotationSession& s = e->session;
    if (job.iteration + 1 == s.iterations.size() &&
        annotation::next_state(s.state, annotation::SessionEvent::kSimulate)) {
      annotation::mark_simulated(s, job.id, options_.round);
      persist(s);
    }
  } catch (const Error&) {
    // The session moved on while the job ran; the job itself stays done.
  }
}

}  // namespace simready::service
