#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "simready/annotation/session.h"
#include "simready/assets/asset.h"
#include "simready/mpm/types.h"
#include "simready/scenarios/scenario.h"
#include "simready/service/render.h"

namespace simready::service {

enum class JobStatus { kQueued, kRunning, kDone, kFailed };
std::string_view to_string(JobStatus s);

struct ReviewJob {
  std::string id;
  std::string session_id;
  std::size_t iteration = 0;  // session iteration whose materials are simulated
  nlohmann::json scenario;    // tagged scenario record
  nlohmann::json config;      // fully resolved SimConfig
  Camera camera;
  JobStatus status = JobStatus::kQueued;
  std::string error;
  std::size_t frame_count = 0;
  std::uint64_t steps = 0;
  std::uint64_t clamps = 0;
  double wall_seconds = 0.0;
  std::string created_at;
  std::string finished_at;
};

nlohmann::json job_to_json(const ReviewJob& job);
ReviewJob job_from_json(const nlohmann::json& j);

struct ServiceOptions {
  std::filesystem::path data_dir = "simready-data";
  int job_workers = 2;  // concurrent simulations
  mpm::SimConfig base_config;
  Camera camera;  // default; center and extent follow the domain when unset
  annotation::RoundOptions round;
  std::shared_ptr<annotation::ChatClient> client;  // required for annotate/requery
  double proxy_world_scale = 0.3;  // m, size of generated geometry
};

// Stand-in geometry for sessions without an uploaded asset: one horizontal
// lattice slab per part, stacked bottom to top in part order, colored by the
// part's color word.
assets::SimReadyAsset proxy_asset(const annotation::ObjectDescription& desc, double world_scale);

// Approximate RGB in [0, 1] for a color word; grey when unknown.
Eigen::Vector3d color_from_word(std::string_view word);

// Programmatic half of the review loop. Thread-safe: mutations of one
// session are serialized, jobs run on a bounded pool, everything is persisted
// under data_dir so a restart preserves sessions and jobs.
class ReviewService {
 public:
  explicit ReviewService(ServiceOptions options);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  nlohmann::json list_sessions() const;
  // Body: ObjectDescription fields plus optional "asset_path" (.sra whose part
  // names match the description) and "mode" ("strict" | "lenient").
  nlohmann::json create_session(const nlohmann::json& body);
  nlohmann::json get_session(const std::string& id) const;
  nlohmann::json annotate(const std::string& id);
  // Body: {"scenario": {...}, "config": {...}, "camera": {...}}; all optional.
  nlohmann::json simulate(const std::string& id, const nlohmann::json& body);
  nlohmann::json get_job(const std::string& id) const;
  std::string frame_png(const std::string& job_id, std::size_t k) const;
  std::filesystem::path trajectory_path(const std::string& job_id) const;
  // Body: {"job_id", "decision", "comments": [{"part", "text"}], "reviewer"}.
  nlohmann::json record_verdict(const std::string& id, const nlohmann::json& body);
  nlohmann::json requery(const std::string& id);
  // Body: {"parts": {name: {"CID", "E", ...}}}.
  nlohmann::json override_parameters(const std::string& id, const nlohmann::json& body);

  // Blocks until no job is queued or running.
  void wait_idle();
  // Stops accepting jobs, cancels running ones and persists every job as
  // done or failed. Idempotent.
  void shutdown();

  const ServiceOptions& options() const { return options_; }

 private:
  struct SessionEntry {
    mutable std::mutex mutex;
    annotation::AnnotationSession session;
    bool has_asset = false;
  };

  std::shared_ptr<SessionEntry> entry(const std::string& id) const;
  std::filesystem::path sessions_dir() const { return options_.data_dir / "sessions"; }
  std::filesystem::path jobs_dir() const { return options_.data_dir / "jobs"; }
  std::filesystem::path asset_path(const std::string& session_id) const;
  std::filesystem::path frame_path(const std::string& job_id, std::size_t k) const;
  void persist(const annotation::AnnotationSession& s) const;
  void persist(const ReviewJob& job) const;
  nlohmann::json session_view(const SessionEntry& e) const;
  annotation::ChatClient& client() const;
  std::string next_id(char prefix);
  void load_store();
  void worker_loop();
  void run_job(const std::string& job_id);
  assets::SimReadyAsset build_asset(const SessionEntry& e, std::size_t iteration) const;

  ServiceOptions options_;
  mutable std::mutex mutex_;  // guards the maps, queue and counters below
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;
  std::map<std::string, ReviewJob> jobs_;
  std::deque<std::string> queue_;
  std::size_t running_ = 0;
  std::uint64_t counter_ = 0;
  bool stopping_ = false;
  std::condition_variable work_cv_;
  std::condition_variable idle_cv_;
  std::atomic<bool> cancel_{false};
  std::vector<std::thread> workers_;
};

}  // namespace simready::service
