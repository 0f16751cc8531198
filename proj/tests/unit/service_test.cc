#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "simready/common/error.h"
#include "simready/mpm/trajectory_io.h"
#include "simready/service/http_server.h"
#include "simready/service/review_service.h"

// After Eigen: resolv.h, pulled in here, defines a _res macro.
#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>
#include <zlib.h>

namespace simready::service {
namespace {

namespace fs = std::filesystem;
using annotation::MockChatClient;
using annotation::RequestKind;
using annotation::SessionState;
using nlohmann::json;

const json kDescription = json::parse(R"({
  "shape_name": "cushion",
  "parts": [
    {"name": "cover", "coarse_material": "fabric", "color": "red"},
    {"name": "core", "coarse_material": "plastic", "color": "white"}
  ]
})");

constexpr const char* kSoftResponse =
    R"({"cover": {"CID": "M0", "E": 2e5, "nu": 0.3, "rho": 300},
        "core": {"CID": "M1", "E": 5e5, "nu": 0.3, "sigma_y": 2e4, "rho": 200}})";

std::shared_ptr<MockChatClient> soft_client() {
  auto c = std::make_shared<MockChatClient>();
  c->push(RequestKind::kFineMaterial, R"({"cover": "cotton"})");
  c->push(RequestKind::kFineMaterial, R"({"core": "polyurethane"})");
  c->push(RequestKind::kParameters, kSoftResponse);
  c->push(RequestKind::kFeedback, kSoftResponse);
  return c;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("simready_service_" + std::string(::testing::UnitTest::GetInstance()
                                                  ->current_test_info()
                                                  ->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  ServiceOptions options(std::shared_ptr<annotation::ChatClient> client = soft_client()) const {
    ServiceOptions o;
    o.data_dir = dir_;
    o.base_config.grid_resolution = 32;
    o.base_config.duration = 0.5;
    o.base_config.workers = 1;
    o.camera.width = 64;
    o.camera.height = 64;
    o.round.retry.sleep = [](std::chrono::milliseconds) {};
    o.client = std::move(client);
    return o;
  }

  fs::path dir_;
};

TEST(Render, EmptyRegionIsBackgroundOnly) {
  Camera cam;
  cam.width = cam.height = 32;
  cam.center = {100, 100, 100};
  std::vector<Eigen::Vector3d> pts = {{0, 0, 0}, {1, 1, 1}};
  std::vector<Eigen::Vector3d> cols = {{1, 0, 0}, {0, 1, 0}};
  const Image img = render_particles(pts, cols, cam);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) EXPECT_EQ(img.at(x, y), cam.background);
  }
}

TEST(Render, CenteredParticleIsADiscAtTheCenter) {
  Camera cam;
  cam.width = cam.height = 64;
  cam.center = {0.5, 0.5, 0.5};
  cam.extent = 1.0;
  cam.particle_radius = 0.1;  // 6.4 px
  std::vector<Eigen::Vector3d> pts = {{0.5, 0.5, 0.5}};
  std::vector<Eigen::Vector3d> cols = {{1, 0, 0}};
  const Image img = render_particles(pts, cols, cam);
  const std::array<std::uint8_t, 3> red = {255, 0, 0};
  EXPECT_EQ(img.at(31, 31), red);
  EXPECT_EQ(img.at(32, 32), red);
  EXPECT_EQ(img.at(32 + 5, 32), red);
  EXPECT_EQ(img.at(32 + 8, 32), cam.background);
  EXPECT_EQ(img.at(0, 0), cam.background);
  // Symmetric about the center.
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) EXPECT_EQ(img.at(x, y), img.at(63 - x, 63 - y));
  }
}

TEST(Render, NearerParticleIsPaintedLast) {
  Camera cam;
  cam.width = cam.height = 16;
  cam.center = {0, 0, 0};
  cam.extent = 1.0;
  cam.particle_radius = 0.2;
  std::vector<Eigen::Vector3d> pts = {{0, 0, 0.1}, {0, 0, -0.1}};
  std::vector<Eigen::Vector3d> cols = {{0, 1, 0}, {0, 0, 1}};
  const std::array<std::uint8_t, 3> green = {0, 255, 0};
  EXPECT_EQ(render_particles(pts, cols, cam).at(8, 8), green);
  std::swap(pts[0], pts[1]);
  std::swap(cols[0], cols[1]);
  EXPECT_EQ(render_particles(pts, cols, cam).at(8, 8), green);
  cam.view = View::kTop;  // now y decides; equal depth keeps index order
  EXPECT_EQ(render_particles(pts, cols, cam).at(8, 8), green);
}

std::uint32_t be32(const std::string& s, std::size_t at) {
  return (std::uint32_t(std::uint8_t(s[at])) << 24) | (std::uint32_t(std::uint8_t(s[at + 1])) << 16) |
         (std::uint32_t(std::uint8_t(s[at + 2])) << 8) | std::uint32_t(std::uint8_t(s[at + 3]));
}

TEST(Render, PngDecodesToTheImage) {
  Camera cam;
  cam.width = 20;
  cam.height = 12;
  cam.center = {0, 0, 0};
  cam.extent = 1.0;
  cam.particle_radius = 0.15;
  std::vector<Eigen::Vector3d> pts = {{0.1, 0.05, 0}, {-0.2, 0, 0}};
  std::vector<Eigen::Vector3d> cols = {{0.2, 0.4, 0.6}, {1, 1, 0}};
  const Image img = render_particles(pts, cols, cam);
  const std::string png = encode_png(img);
  EXPECT_EQ(png, encode_png(render_particles(pts, cols, cam)));
  ASSERT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n"));

  std::string idat;
  std::size_t at = 8;
  while (at < png.size()) {
    const std::uint32_t len = be32(png, at);
    const std::string type = png.substr(at + 4, 4);
    const std::string data = png.substr(at + 8, len);
    const std::string typed = type + data;
    EXPECT_EQ(be32(png, at + 8 + len),
              crc32(0, reinterpret_cast<const Bytef*>(typed.data()), typed.size()));
    if (type == "IHDR") {
      EXPECT_EQ(be32(data, 0), 20u);
      EXPECT_EQ(be32(data, 4), 12u);
    }
    if (type == "IDAT") idat += data;
    at += 12 + len;
  }
  uLongf raw_size = (3 * 20 + 1) * 12;
  std::string raw(raw_size, '\0');
  ASSERT_EQ(uncompress(reinterpret_cast<Bytef*>(raw.data()), &raw_size,
                       reinterpret_cast<const Bytef*>(idat.data()), idat.size()),
            Z_OK);
  for (int y = 0; y < 12; ++y) {
    EXPECT_EQ(raw[y * 61], '\0');
    EXPECT_EQ(0, std::memcmp(raw.data() + y * 61 + 1, img.rgb.data() + y * 60, 60));
  }
}

TEST(Proxy, OneSlabPerPart) {
  const auto desc = annotation::description_from_json(kDescription);
  const auto a = proxy_asset(desc, 0.3);
  EXPECT_TRUE(assets::check_asset(a).empty());
  EXPECT_EQ(a.size(), 2u * 5u * 100u);
  EXPECT_EQ(a.metadata.parts.size(), 2u);
  EXPECT_EQ(a.colors.front(), color_from_word("red"));
  EXPECT_EQ(a.colors.back(), color_from_word("white"));
  EXPECT_EQ(color_from_word("mauve"), Eigen::Vector3d(0.6, 0.6, 0.6));
}

json done_job(ReviewService& svc, const std::string& session, const json& body = json::object()) {
  const json job = svc.simulate(session, body);
  svc.wait_idle();
  return svc.get_job(job["id"]);
}

TEST_F(ServiceTest, DropJobProducesFramesAndMarksSimulated) {
  ReviewService svc(options());
  EXPECT_EQ(svc.list_sessions(), json::array());
  const std::string id = svc.create_session(kDescription)["id"];
  EXPECT_THROW(svc.simulate(id, {}), ConflictError);  // nothing proposed yet
  const json s = svc.annotate(id);
  EXPECT_EQ(s["state"], "proposed");
  EXPECT_EQ(s["description"]["parts"][0]["fine_material"], "cotton");

  const json job = done_job(svc, id);
  ASSERT_EQ(job["status"], "done") << job["error"];
  EXPECT_EQ(job["frame_count"], 12);  // 24 fps * 0.5 s
  EXPECT_EQ(svc.get_session(id)["state"], "simulated");
  const std::string png = svc.frame_png(job["id"], 11);
  EXPECT_EQ(png.substr(1, 3), "PNG");
  EXPECT_THROW(svc.frame_png(job["id"], 12), NotFoundError);
  const auto trj = mpm::load_trajectory(svc.trajectory_path(job["id"]));
  EXPECT_EQ(trj.frames.size(), 12u);
  EXPECT_EQ(trj.particle_count(), 1000u);
}

TEST_F(ServiceTest, DeterministicJobsAreBitIdentical) {
  ReviewService svc(options());
  const std::string id = svc.create_session(kDescription)["id"];
  svc.annotate(id);
  const json a = done_job(svc, id);
  const json b = done_job(svc, id, {{"config", {{"workers", 2}}}});
  ASSERT_EQ(a["status"], "done");
  ASSERT_EQ(b["status"], "done");
  const auto ta = mpm::load_trajectory(svc.trajectory_path(a["id"]));
  const auto tb = mpm::load_trajectory(svc.trajectory_path(b["id"]));
  ASSERT_EQ(ta.frames.size(), tb.frames.size());
  for (std::size_t f = 0; f < ta.frames.size(); ++f) {
    ASSERT_EQ(ta.frames[f].positions, tb.frames[f].positions) << "frame " << f;
  }
  EXPECT_EQ(svc.frame_png(a["id"], 5), svc.frame_png(b["id"], 5));
}

TEST_F(ServiceTest, VerdictRequeryLoop) {
  ReviewService svc(options());
  const std::string id = svc.create_session(kDescription)["id"];
  svc.annotate(id);
  const json job = done_job(svc, id);

  json verdict = {{"job_id", job["id"]}, {"decision", "implausible"}, {"comments", json::array()}};
  EXPECT_THROW(svc.record_verdict(id, verdict), ValidationError);
  verdict["comments"] = {{{"part", "core"}, {"text", "is too soft"}}};
  EXPECT_THROW(svc.record_verdict(id, {{"job_id", "j999999"}, {"decision", "plausible"}}),
               NotFoundError);
  json s = svc.record_verdict(id, verdict);
  EXPECT_EQ(s["state"], "awaiting_requery");
  EXPECT_EQ(s["rectification_count"], 0);

  s = svc.requery(id);
  EXPECT_EQ(s["state"], "proposed");
  EXPECT_EQ(s["rectification_count"], 1);
  const std::string feedback = s["iterations"][1]["request"][2]["text"];
  EXPECT_NE(feedback.find("when the object is dropped from a certain height in the simulator"),
            std::string::npos);
  EXPECT_NE(feedback.find("Specifically, the core is too soft."), std::string::npos);
  EXPECT_THROW(svc.requery(id), ConflictError);

  const json job2 = done_job(svc, id);
  s = svc.record_verdict(id, {{"job_id", job2["id"]}, {"decision", "plausible"}});
  EXPECT_EQ(s["state"], "accepted");
  EXPECT_THROW(svc.requery(id), ConflictError);
  EXPECT_THROW(svc.simulate(id, {}), ConflictError);
}

TEST_F(ServiceTest, VerdictNeedsAFinishedJobOfThisSession) {
  ReviewService svc(options());
  const std::string a = svc.create_session(kDescription)["id"];
  const std::string b = svc.create_session(kDescription)["id"];
  svc.annotate(a);
  const json job = done_job(svc, a);
  EXPECT_THROW(svc.record_verdict(b, {{"job_id", job["id"]}, {"decision", "plausible"}}),
               ConflictError);
}

TEST_F(ServiceTest, OverrideExtension) {
  ReviewService svc(options());
  const std::string id = svc.create_session(kDescription)["id"];
  svc.annotate(id);
  json parts = json::parse(kSoftResponse);
  parts["core"]["E"] = 9e5;
  const json s = svc.override_parameters(id, {{"parts", parts}});
  EXPECT_EQ(s["iterations"].size(), 2u);
  EXPECT_EQ(s["iterations"][1]["origin"], "override");
  parts["core"]["CID"] = "M3";
  EXPECT_THROW(svc.override_parameters(id, {{"parts", parts}}), ValidationError);
}

TEST_F(ServiceTest, RestartPreservesSessionsAndJobs) {
  std::string id, job_id;
  {
    ReviewService svc(options());
    id = svc.create_session(kDescription)["id"];
    svc.annotate(id);
    job_id = done_job(svc, id)["id"];
  }
  ReviewService svc(options());
  ASSERT_EQ(svc.list_sessions().size(), 1u);
  const json s = svc.get_session(id);
  EXPECT_EQ(s["state"], "simulated");
  EXPECT_EQ(s["jobs"][0]["id"], job_id);
  EXPECT_EQ(svc.frame_png(job_id, 0).substr(1, 3), "PNG");
  const std::string id2 = svc.create_session(kDescription)["id"];
  EXPECT_NE(id2, id);
}

TEST_F(ServiceTest, ShutdownDuringJobPersistsItAsFailedOrDone) {
  auto o = options();
  o.base_config.duration = 20.0;  // long enough to be interrupted
  std::string id, job_id;
  {
    ReviewService svc(o);
    id = svc.create_session(kDescription)["id"];
    svc.annotate(id);
    job_id = svc.simulate(id, {})["id"];
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    svc.shutdown();
    const json job = svc.get_job(job_id);
    EXPECT_TRUE(job["status"] == "failed" || job["status"] == "done") << job;
  }
  ReviewService svc(o);
  const json job = svc.get_job(job_id);
  EXPECT_TRUE(job["status"] == "failed" || job["status"] == "done") << job;
}

TEST_F(ServiceTest, InterruptedJobsAreMarkedFailedOnLoad) {
  fs::create_directories(dir_ / "jobs");
  ReviewJob job;
  job.id = "j000007";
  job.session_id = "s000001";
  job.status = JobStatus::kRunning;
  job.config = json::object();
  std::ofstream(dir_ / "jobs" / "j000007.json") << job_to_json(job).dump();
  ReviewService svc(options());
  EXPECT_EQ(svc.get_job("j000007")["status"], "failed");
}

TEST_F(ServiceTest, MissingClientIsAnUpstreamError) {
  ReviewService svc(options(nullptr));
  const std::string id = svc.create_session(kDescription)["id"];
  EXPECT_THROW(svc.annotate(id), TransportError);
}

TEST_F(ServiceTest, TransportFailurePersistsTheError) {
  auto client = std::make_shared<MockChatClient>();
  client->push(RequestKind::kFineMaterial, std::string(MockChatClient::kTransportFailure));
  ReviewService svc(options(client));
  const std::string id = svc.create_session(kDescription)["id"];
  EXPECT_THROW(svc.annotate(id), TransportError);
  const json s = annotation::session_to_json(
      annotation::load_session(dir_ / "sessions" / (id + ".json")));
  EXPECT_FALSE(s["error"].get<std::string>().empty());
  EXPECT_EQ(s["iterations"].size(), 0u);
}

TEST(ErrorMapping, StatusCodes) {
  EXPECT_EQ(error_response(ValidationError({"a", "b"})).status, 400);
  EXPECT_EQ(error_response(ValidationError({"a", "b"})).body["details"].size(), 2u);
  EXPECT_EQ(error_response(ParseError("f", "m")).body["code"], "parse_error");
  EXPECT_EQ(error_response(NotFoundError("x")).status, 404);
  EXPECT_EQ(error_response(ConflictError("x")).status, 409);
  EXPECT_EQ(error_response(TransportError("x")).status, 502);
  EXPECT_EQ(error_response(std::runtime_error("x")).status, 500);
}

TEST_F(ServiceTest, HttpApiEndToEnd) {
  const fs::path web = dir_ / "web";
  fs::create_directories(web);
  std::ofstream(web / "index.html") << "<html>bench</html>";

  ReviewService svc(options());
  HttpServer server(svc, {"127.0.0.1", 0, web});
  const int port = server.bind();
  std::thread serving([&] { server.listen(); });

  httplib::Client http("127.0.0.1", port);
  auto res = http.Get("/api/sessions");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body), json::array());

  res = http.Post("/api/sessions", kDescription.dump(), "application/json");
  ASSERT_EQ(res->status, 200);
  const std::string id = json::parse(res->body)["id"];
  res = http.Post("/api/sessions", "{not json", "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(json::parse(res->body)["code"], "parse_error");

  res = http.Post("/api/sessions/" + id + "/simulate", "{}", "application/json");
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(json::parse(res->body)["code"], "conflict");
  res = http.Post("/api/sessions/" + id + "/annotate", "", "application/json");
  ASSERT_EQ(res->status, 200);
  res = http.Post("/api/sessions/" + id + "/simulate",
                  R"({"scenario": {"type": "drop", "height": 0.2}})", "application/json");
  ASSERT_EQ(res->status, 200);
  const std::string job = json::parse(res->body)["id"];
  svc.wait_idle();
  res = http.Get("/api/jobs/" + job);
  EXPECT_EQ(json::parse(res->body)["status"], "done");
  res = http.Get("/api/jobs/" + job + "/frames/3");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(res->body, svc.frame_png(job, 3));
  res = http.Get("/api/jobs/" + job + "/frames/99");
  EXPECT_EQ(res->status, 404);
  res = http.Get("/api/jobs/" + job + "/trajectory");
  ASSERT_EQ(res->status, 200);
  std::istringstream trj(res->body);
  EXPECT_EQ(mpm::read_trajectory(trj).frames.size(), 12u);

  res = http.Post("/api/sessions/" + id + "/verdict",
                  json{{"job_id", job}, {"decision", "implausible"},
                       {"comments", {{{"part", "cover"}, {"text", "wobbles"}}}}}.dump(),
                  "application/json");
  ASSERT_EQ(res->status, 200);
  res = http.Post("/api/sessions/" + id + "/requery", "", "application/json");
  ASSERT_EQ(res->status, 200);
  const json s = json::parse(res->body);
  EXPECT_EQ(s["iterations"].size(), 2u);
  EXPECT_EQ(s["rectification_count"], 1);

  res = http.Get("/api/nope");
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body)["code"], "not_found");
  res = http.Get("/api/sessions/s999999");
  EXPECT_EQ(res->status, 404);
  res = http.Get("/index.html");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "<html>bench</html>");

  server.stop();
  serving.join();
}

}  // namespace
}  // namespace simready::service
