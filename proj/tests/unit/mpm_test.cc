#include <cmath>
#include <random>
#include <atomic>
#include <set>
#include <sstream>
#include <tuple>

#include <gtest/gtest.h>

#include "simready/common/binary_io.h"
#include "simready/common/error.h"
#include "simready/mpm/config_io.h"
#include "simready/mpm/simulation.h"
#include "simready/mpm/trajectory_io.h"
#include "simready/mpm/transfer.h"
#include "simready/scenarios/scenario_io.h"
#include "support.h"

namespace simready::mpm {
namespace {

using testing::elastic;
using testing::make_cube_asset;

ParticleState make_particle(const Vector3& x, const Vector3& v = Vector3::Zero(),
                            double E = 1e5) {
  ParticleState p;
  p.x = x;
  p.v = v;
  p.material = elastic(E);
  p.lame = constitutive::lame_from_moduli(E, 0.3);
  p.volume0 = 1e-4;
  p.mass = 0.1;
  return p;
}

Boundaries open_boundaries() {
  Boundaries b;
  b.ground.enabled = false;
  b.walls = false;
  return b;
}

std::vector<ParticleState> random_blob(std::mt19937_64& rng, std::size_t n, const Vector3& center,
                                       double radius) {
  std::uniform_real_distribution<double> u(-radius, radius), m(0.05, 0.2);
  std::vector<ParticleState> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = make_particle(center + Vector3(u(rng), u(rng), u(rng)));
    p.mass = m(rng);
    out.push_back(p);
  }
  return out;
}

double sum_mass(const std::vector<ParticleState>& ps) {
  double m = 0.0;
  for (const auto& p : ps) m += p.mass;
  return m;
}

Vector3 sum_momentum(const std::vector<ParticleState>& ps) {
  Vector3 m = Vector3::Zero();
  for (const auto& p : ps) m += p.mass * p.v;
  return m;
}

const WorkerPool kSerial(1);

TEST(BSpline, PartitionOfUnityAndLinearReproduction) {
  for (double x : {3.0, 3.2, 3.5, 3.77, 4.49}) {
    const auto w = bspline_weights(x);
    EXPECT_NEAR(w.w[0] + w.w[1] + w.w[2], 1.0, 1e-15);
    double first = 0.0;
    for (int i = 0; i < 3; ++i) first += w.w[i] * (w.base + i);
    EXPECT_NEAR(first, x, 1e-14);
  }
}

TEST(ParticleToGrid, RestingParticleScattersNoMomentum) {
  GridField grid(32, 1.0);
  std::vector<ParticleState> ps = {make_particle(Vector3(0.5, 0.5, 0.5))};
  particle_to_grid(ps, grid, 1e-4, kSerial);
  EXPECT_EQ(grid.total_momentum(), Vector3::Zero());
  EXPECT_NEAR(grid.total_mass(), 0.1, 1e-15);
  EXPECT_EQ(grid.active().size(), 27u);
}

TEST(ParticleToGrid, MassIsConserved) {
  std::mt19937_64 rng(1);
  GridField grid(48, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    auto ps = random_blob(rng, 500, Vector3::Constant(0.5), 0.3);
    particle_to_grid(ps, grid, 1e-4, kSerial);
    EXPECT_NEAR(grid.total_mass(), sum_mass(ps), 1e-10 * sum_mass(ps));
  }
}

TEST(ParticleToGrid, MovingParticleMomentumOverTheStencil) {
  GridField grid(32, 1.0);
  std::vector<ParticleState> ps = {make_particle(Vector3(0.41, 0.52, 0.63), Vector3(1, 0, 0))};
  particle_to_grid(ps, grid, 1e-4, kSerial);
  // Independent sum of the 27 weights times m v.
  Vector3 expected = Vector3::Zero();
  const double dx = grid.dx();
  for (int i = 0; i < grid.resolution(); ++i) {
    for (int j = 0; j < grid.resolution(); ++j) {
      for (int k = 0; k < grid.resolution(); ++k) {
        auto kernel = [&](double r) {
          r = std::abs(r);
          if (r < 0.5) return 0.75 - r * r;
          if (r < 1.5) return 0.5 * (1.5 - r) * (1.5 - r);
          return 0.0;
        };
        const Vector3 d = (Vector3(i, j, k) * dx - ps[0].x) / dx;
        expected += kernel(d.x()) * kernel(d.y()) * kernel(d.z()) * 0.1 * Vector3(1, 0, 0);
      }
    }
  }
  EXPECT_LT((grid.total_momentum() - Vector3(0.1, 0, 0)).norm(), 1e-10);
  EXPECT_LT((grid.total_momentum() - expected).norm(), 1e-12);
}

TEST(ParticleToGrid, OutOfDomainNamesTheParticle) {
  GridField grid(16, 1.0);
  std::vector<ParticleState> ps = {make_particle(Vector3(0.5, 0.5, 0.5)),
                                   make_particle(Vector3(0.5, 1.2, 0.5))};
  try {
    particle_to_grid(ps, grid, 1e-4, kSerial);
    FAIL();
  } catch (const OutOfDomainError& e) {
    EXPECT_EQ(e.particle(), 1u);
  }
  ps[1].x = Vector3(0.5, 0.0, 0.5);  // stencil would reach node -1
  EXPECT_THROW(particle_to_grid(ps, grid, 1e-4, kSerial), OutOfDomainError);
}

TEST(ParticleToGrid, FastModeMatchesDeterministicToRoundOff) {
  std::mt19937_64 rng(2);
  auto ps = random_blob(rng, 2000, Vector3::Constant(0.5), 0.2);
  for (auto& p : ps) p.v = Vector3(1.0, -0.5, 0.25);
  GridField a(32, 1.0), b(32, 1.0);
  const WorkerPool pool(4);
  particle_to_grid(ps, a, 1e-4, pool, true);
  particle_to_grid(ps, b, 1e-4, pool, false);
  ASSERT_EQ(a.active().size(), b.active().size());
  for (auto idx : a.active()) {
    EXPECT_NEAR(a.mass()[idx], b.mass()[idx], 1e-12);
    EXPECT_LT((a.momentum()[idx] - b.momentum()[idx]).norm(), 1e-12);
  }
}

class GridUpdateTest : public ::testing::Test {
 protected:
  void SetUp() override {
    grid_ = GridField(16, 1.0);
    std::vector<ParticleState> ps = {make_particle(Vector3(0.52, 0.47, 0.5), Vector3(0.3, -0.2, 0.1))};
    particle_to_grid(ps, grid_, 1e-4, kSerial);
  }
  GridField grid_;
};

TEST_F(GridUpdateTest, NoForcesKeepsVelocities) {
  grid_update(grid_, 1e-3, Vector3::Zero(), open_boundaries(), Vector3::Zero());
  for (auto idx : grid_.active()) {
    if (grid_.mass()[idx] == 0.0) continue;  // zero-weight stencil node
    EXPECT_LT((grid_.velocity()[idx] - Vector3(0.3, -0.2, 0.1)).norm(), 1e-14);
  }
}

TEST_F(GridUpdateTest, GravityAddsDtG) {
  const Vector3 g(0, -9.8, 0);
  grid_update(grid_, 1e-3, g, open_boundaries(), Vector3(1, 0, 0));
  for (auto idx : grid_.active()) {
    if (grid_.mass()[idx] == 0.0) continue;
    EXPECT_LT((grid_.velocity()[idx] - (Vector3(0.3, -0.2, 0.1) + 1e-3 * Vector3(1, -9.8, 0))).norm(),
              1e-14);
  }
}

TEST(GridUpdate, GroundContactByHand) {
  GridField grid(16, 1.0);
  Boundaries b = open_boundaries();
  b.ground.enabled = true;
  b.ground.height = 0.5;
  b.ground.friction = 0.4;
  const std::size_t below = grid.index(8, 5, 8);  // y = 1/3 < 0.5
  const std::size_t above = grid.index(8, 12, 8);
  for (auto idx : {below, above}) {
    grid.touch(idx);
    grid.mass()[idx] = 2.0;
  }

  // Pure normal velocity into the plane: zeroed.
  grid.momentum()[below] = 2.0 * Vector3(0, -1, 0);
  grid.momentum()[above] = 2.0 * Vector3(0, -1, 0);
  grid_update(grid, 1e-3, Vector3::Zero(), b, Vector3::Zero());
  EXPECT_EQ(grid.velocity()[below], Vector3::Zero());
  EXPECT_EQ(grid.velocity()[above], Vector3(0, -1, 0));

  // Tangential 2, normal -1: scale = 1 - 0.4 * 1 / 2 = 0.8.
  grid.momentum()[below] = 2.0 * Vector3(2, -1, 0);
  grid_update(grid, 1e-3, Vector3::Zero(), b, Vector3::Zero());
  EXPECT_LT((grid.velocity()[below] - Vector3(1.6, 0, 0)).norm(), 1e-14);

  // Friction stops slow sliding entirely.
  grid.momentum()[below] = 2.0 * Vector3(0.1, -1, 0);
  grid_update(grid, 1e-3, Vector3::Zero(), b, Vector3::Zero());
  EXPECT_EQ(grid.velocity()[below], Vector3::Zero());

  // Separating nodes are untouched.
  grid.momentum()[below] = 2.0 * Vector3(1, 1, 0);
  grid_update(grid, 1e-3, Vector3::Zero(), b, Vector3::Zero());
  EXPECT_EQ(grid.velocity()[below], Vector3(1, 1, 0));
}

TEST(GridUpdate, WallsAreFreeSlip) {
  GridField grid(16, 1.0);
  Boundaries b = open_boundaries();
  b.walls = true;
  const std::size_t idx = grid.index(1, 8, 14);
  grid.touch(idx);
  grid.mass()[idx] = 1.0;
  grid.momentum()[idx] = Vector3(-1, 2, 3);
  grid_update(grid, 1e-3, Vector3::Zero(), b, Vector3::Zero());
  EXPECT_EQ(grid.velocity()[idx], Vector3(0, 2, 0));
}

TEST(GridToParticle, UniformFieldIsReproduced) {
  std::mt19937_64 rng(3);
  GridField grid(24, 1.0);
  auto ps = random_blob(rng, 200, Vector3::Constant(0.5), 0.2);
  particle_to_grid(ps, grid, 1e-4, kSerial);
  for (auto idx : grid.active()) grid.velocity()[idx] = Vector3(0.7, -0.1, 0.4);
  G2pOptions opt;
  grid_to_particle(grid, ps, 1e-4, opt, kSerial);
  for (const auto& p : ps) {
    EXPECT_LT((p.v - Vector3(0.7, -0.1, 0.4)).norm(), 1e-12);
    EXPECT_LT(p.C.norm(), 1e-9);
  }
}

TEST(GridToParticle, ZeroFieldLeavesParticlesInPlace) {
  std::mt19937_64 rng(4);
  GridField grid(24, 1.0);
  auto ps = random_blob(rng, 200, Vector3::Constant(0.5), 0.2);
  const auto before = ps;
  particle_to_grid(ps, grid, 1e-4, kSerial);
  G2pOptions opt;
  grid_to_particle(grid, ps, 1e-4, opt, kSerial);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(ps[i].x, before[i].x);
    EXPECT_EQ(ps[i].F, before[i].F);
  }
}

TEST(GridToParticle, AffineFieldRoundTripIsExact) {
  std::mt19937_64 rng(5);
  GridField grid(32, 1.0);
  auto ps = random_blob(rng, 300, Vector3::Constant(0.5), 0.25);
  const Vector3 a(0.2, -0.3, 0.1);
  Matrix3 B;
  B << 0.1, -0.4, 0.2, 0.3, 0.05, -0.2, -0.1, 0.25, 0.15;
  for (auto& p : ps) {
    p.v = a + B * p.x;
    p.C = B;
  }
  const auto expected = ps;
  particle_to_grid(ps, grid, 1e-4, kSerial);
  for (auto idx : grid.active()) grid.velocity()[idx] = grid.momentum()[idx] / grid.mass()[idx];
  G2pOptions opt;
  grid_to_particle(grid, ps, 0.0, opt, kSerial);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_LT((ps[i].v - expected[i].v).norm(), 1e-8);
    EXPECT_LT((ps[i].C - B).norm(), 1e-8);
  }
}

TEST(GridToParticle, SingularValueClampIsCounted) {
  GridField grid(16, 1.0);
  std::vector<ParticleState> ps = {make_particle(Vector3(0.5, 0.5, 0.5))};
  ps[0].F = Eigen::Vector3d(6.0, 1.0, 0.01).asDiagonal();
  particle_to_grid(ps, grid, 1e-6, kSerial);
  grid_update(grid, 1e-6, Vector3::Zero(), open_boundaries(), Vector3::Zero());
  G2pOptions opt;
  EXPECT_EQ(grid_to_particle(grid, ps, 1e-6, opt, kSerial), 1u);
  const auto svd = constitutive::svd_rotation_variant(ps[0].F);
  EXPECT_LE(svd.sigma.maxCoeff(), 4.0 + 1e-12);
  EXPECT_GE(svd.sigma.minCoeff(), 0.05 - 1e-12);
}

TEST(GridToParticle, InvertedTrialIsRecovered) {
  ParticleState p = make_particle(Vector3(0.5, 0.5, 0.5));
  G2pOptions opt;
  const Matrix3 inverted = Eigen::Vector3d(1.0, 1.0, -0.5).asDiagonal();
  EXPECT_TRUE(apply_plasticity(p, inverted, opt));
  EXPECT_GT(p.F.determinant(), 0.0);
}

TEST(Step, SingleParticleFreeFall) {
  SimConfig config;
  config.grid_resolution = 32;
  config.domain_size = 1.0;
  SimState state = make_state({make_particle(Vector3(0.5, 0.8, 0.5))}, open_boundaries(), config);
  const double dt = 1e-4;
  for (int i = 0; i < 2000; ++i) step(state, config, dt, kSerial);
  const double t = state.time;
  EXPECT_NEAR(t, 0.2, 1e-12);
  EXPECT_NEAR(state.particles[0].x.y(), 0.8 - 0.5 * 9.8 * t * t, 1e-3);
  EXPECT_NEAR(state.particles[0].x.x(), 0.5, 1e-12);
}

TEST(Step, RestingObjectWithoutGravityIsAFixedPoint) {
  SimConfig config;
  config.gravity = Vector3::Zero();
  const auto asset = make_cube_asset(5, 0.2, elastic(1e6));
  auto particles = initialize_particles(asset, config);
  for (auto& p : particles) p.x += Vector3::Constant(0.9);
  SimState state = make_state(particles, open_boundaries(), config);
  for (int i = 0; i < 100; ++i) step(state, config, 1e-4, kSerial);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    EXPECT_EQ(state.particles[i].x, particles[i].x);
    EXPECT_EQ(state.particles[i].v, Vector3::Zero());
  }
}

TEST(Step, MassAndMomentumConservedWithoutGravityOrContact) {
  std::mt19937_64 rng(6);
  SimConfig config;
  config.grid_resolution = 32;
  config.domain_size = 1.0;
  config.gravity = Vector3::Zero();
  auto ps = random_blob(rng, 400, Vector3::Constant(0.5), 0.1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& p : ps) {
    p.v = Vector3(0.3, -0.2, 0.1) + 0.2 * Vector3(u(rng), u(rng), u(rng));
    p.F = Matrix3::Identity() + 0.02 * Matrix3::Random();
  }
  SimState state = make_state(ps, open_boundaries(), config);
  const double m0 = sum_mass(ps);
  const Vector3 p0 = sum_momentum(ps);
  for (int i = 0; i < 1000; ++i) {
    step(state, config, 1e-4, kSerial);
    ASSERT_NEAR(state.grid.total_mass(), m0, 1e-10 * m0);
  }
  EXPECT_LE((sum_momentum(state.particles) - p0).norm(), 1e-6 * p0.norm());
}

TEST(Initialization, VolumeFromVoxelOccupancy) {
  SimConfig config;  // dx = 2 / 63
  const auto asset = make_cube_asset(10, 0.2, elastic(1e6, 0.3, 500));
  const auto ps = initialize_particles(asset, config);
  ASSERT_EQ(ps.size(), 1000u);
  // Independent voxel count of the scaled lattice.
  const double dx = 2.0 / 63.0;
  std::set<std::tuple<long, long, long>> voxels;
  for (const auto& x : asset.points) {
    const Vector3 w = 0.2 * x;
    voxels.emplace(std::lround(std::floor(w.x() / dx)), std::lround(std::floor(w.y() / dx)),
                   std::lround(std::floor(w.z() / dx)));
  }
  const double v0 = voxels.size() * dx * dx * dx / 1000.0;
  for (const auto& p : ps) {
    EXPECT_DOUBLE_EQ(p.volume0, v0);
    EXPECT_DOUBLE_EQ(p.mass, 500.0 * v0);
    EXPECT_EQ(p.F, Matrix3::Identity());
  }
}

TEST(Initialization, YieldStressSeedsPlasticState) {
  auto m = elastic(1e6);
  m.behavior = assets::BehaviorType::kM1;
  m.yield_stress = 2e4;
  const auto ps = initialize_particles(make_cube_asset(3, 0.2, m), SimConfig{});
  EXPECT_EQ(ps[0].plastic.sigma_y_current, 2e4);
  EXPECT_EQ(ps[0].plastic.eps_p, 0.0);
}

TEST(Cfl, BoundFromSoundAndParticleSpeed) {
  SimConfig config;
  std::vector<ParticleState> ps = {make_particle(Vector3::Zero(), Vector3(3, 4, 0), 1e5)};
  ps[0].material.density = 1000.0;
  EXPECT_DOUBLE_EQ(cfl_time_step(ps, config), 0.4 * config.dx() / (5.0 + 10.0));
}

SimConfig small_config() {
  SimConfig c;
  c.grid_resolution = 32;
  c.duration = 0.25;
  return c;
}

TEST(RunSimulation, FrameArithmetic) {
  SimConfig c = small_config();
  c.duration = 1.0;
  c.dt = 1e-3;
  const auto asset = make_cube_asset(4, 0.2, elastic(1e4, 0.3, 1000));
  RunStats stats;
  const auto t = run_simulation(asset, scenarios::Drop{0.5}, c, {.stats = &stats});
  ASSERT_EQ(t.frames.size(), 24u);
  for (std::size_t k = 0; k < t.frames.size(); ++k) {
    EXPECT_DOUBLE_EQ(t.frames[k].time, k / 24.0);
    EXPECT_EQ(t.frames[k].positions.size(), 64u);
  }
  EXPECT_EQ(t.asset_id, "cube");
  EXPECT_EQ(t.config_hash, config_hash(c));
  EXPECT_GT(stats.steps, 23u);
}

TEST(RunSimulation, FixedDtViolatingCflSuggestsAStep) {
  SimConfig c = small_config();
  c.adaptive_dt = false;
  c.dt = 1e-3;
  const auto asset = make_cube_asset(3, 0.2, elastic(1e9, 0.3, 500));
  try {
    run_simulation(asset, scenarios::Drop{}, c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("dt <="), std::string::npos);
  }
}

TEST(RunSimulation, WallsContainEveryParticle) {
  SimConfig c = small_config();
  c.duration = 0.5;
  const auto asset = make_cube_asset(5, 0.2, elastic(1e5, 0.3, 1000));
  const auto t = run_simulation(asset, scenarios::Throw{Vector3(8.0, 4.0, -6.0), 0.3}, c);
  for (const auto& f : t.frames) {
    for (const auto& x : f.positions) {
      EXPECT_TRUE((x.array() >= 0.0).all() && (x.array() <= c.domain_size).all());
    }
  }
}

TEST(RunSimulation, CancellationStopsTheRun) {
  std::atomic<bool> cancel{true};
  const auto asset = make_cube_asset(3, 0.2, elastic(1e5));
  EXPECT_THROW(run_simulation(asset, scenarios::Drop{}, small_config(), {.cancel = &cancel}),
               Error);
}

std::string trajectory_bytes(const Trajectory& t) {
  std::stringstream ss;
  write_trajectory(ss, t);
  return ss.str();
}

TEST(RunSimulation, DeterministicAcrossRepeatsAndWorkerCounts) {
  const auto asset = make_cube_asset(5, 0.2, elastic(1e6, 0.3, 800));
  SimConfig c = small_config();
  c.workers = 1;
  const auto one = trajectory_bytes(run_simulation(asset, scenarios::Drop{0.1}, c));
  const auto again = trajectory_bytes(run_simulation(asset, scenarios::Drop{0.1}, c));
  c.workers = 3;
  const auto three = trajectory_bytes(run_simulation(asset, scenarios::Drop{0.1}, c));
  EXPECT_EQ(one, again);
  EXPECT_EQ(one, three);
}

TEST(TrajectoryIo, RoundTripAndValidation) {
  Trajectory t;
  t.asset_id = "a";
  t.scenario = scenarios::canonical_scenario(scenarios::Drop{0.5});
  t.config_hash = "0123456789abcdef";
  t.fps = 24.0;
  for (int k = 0; k < 3; ++k) {
    Frame f;
    f.time = k / 24.0;
    f.positions = {Vector3(0.5, 0.25, k), Vector3(1, 2, 3)};
    f.velocities = {Vector3(0, -1, 0), Vector3(0.5, 0, 0)};
    t.frames.push_back(f);
  }
  std::stringstream ss(trajectory_bytes(t));
  const auto back = read_trajectory(ss);
  EXPECT_EQ(back.asset_id, "a");
  EXPECT_EQ(back.scenario, t.scenario);
  EXPECT_EQ(back.config_hash, t.config_hash);
  ASSERT_EQ(back.frames.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(back.frames[k].time, t.frames[k].time);
    EXPECT_EQ(back.frames[k].positions, t.frames[k].positions);
    EXPECT_EQ(back.frames[k].velocities, t.frames[k].velocities);
  }
  // Header, then per frame 8 bytes of time and two 24-byte blocks.
  const std::string bytes = trajectory_bytes(t);
  const auto header_end = bytes.find('\n', bytes.find('\n') + 1) + 1;
  EXPECT_EQ(bytes.size() - header_end, 3u * (8 + 24 + 24));

  std::stringstream truncated(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_trajectory(truncated), ParseError);
  t.frames[2].time = t.frames[1].time;
  std::stringstream dummy;
  EXPECT_THROW(write_trajectory(dummy, t), ValidationError);
}

TEST(ConfigIo, JsonRoundTripAndOverrides) {
  SimConfig c;
  c.grid_resolution = 48;
  c.gravity = Vector3(0, -1.62, 0);
  c.ground.friction = 0.7;
  const auto j = config_to_json(c);
  EXPECT_EQ(config_from_json(j), c);
  const auto partial = config_from_json(nlohmann::json{{"fps", 30.0}, {"ground", {{"height", 0.2}}}}, c);
  EXPECT_EQ(partial.fps, 30.0);
  EXPECT_EQ(partial.ground.height, 0.2);
  EXPECT_EQ(partial.ground.friction, 0.7);
  EXPECT_THROW(config_from_json(nlohmann::json{{"fsp", 30}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"fps", "fast"}}), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"grid_resolution", 3.5}}), ConfigError);
}

TEST(ConfigIo, HashIgnoresWorkersOnly) {
  SimConfig a, b;
  b.workers = 7;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.dt = 5e-5;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(ConfigIo, ValidationListsFailures) {
  SimConfig c;
  c.fps = 0;
  c.cfl = 2;
  EXPECT_EQ(check_config(c).size(), 2u);
  EXPECT_THROW(validate_config(c), ValidationError);
}

}  // namespace
}  // namespace simready::mpm
