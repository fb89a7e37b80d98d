#include <gtest/gtest.h>

#include <random>

#include "tacos/planner.hpp"
#include "tacos/simulator.hpp"

using namespace tacos;

namespace {

WorldState empty_world(double half = 50.0) {
  return make_world({Vec3(-half, -half, 0), Vec3(half, half, 30)}, {}, {}).value();
}

UavState navigating(const std::string& id, Vec3 p, Vec3 goal) {
  UavState s;
  s.id = UavId(id);
  s.position = p;
  s.phase = FlightPhase::Navigating;
  s.active_goal = goal;
  return s;
}

UavState hovering(const std::string& id, Vec3 p) {
  UavState s;
  s.id = UavId(id);
  s.position = p;
  s.phase = FlightPhase::Hovering;
  return s;
}

ActionCall go(const UavId& id, const Vec3& g) {
  return {id, "goto", {g.x(), g.y(), g.z()}, {}, CallOrigin::SupervisorIssued};
}

// Runs until every UAV hovers or max_time elapses; returns the elapsed time.
double run_to_completion(Simulator& sim, double max_time) {
  double t = 0;
  while (t < max_time && !all_goals_reached(sim.snapshot())) {
    sim.advance(sim.config().dt);
    t += sim.config().dt;
  }
  return t;
}

}  // namespace

TEST(PlanVelocities, UnconstrainedSingleUavFliesAtVmax) {
  SwarmState s{{navigating("alfa", {0, 0, 5}, {10, 0, 5})}, 0.0};
  auto cmds = plan_velocities(s, empty_world(), PlannerConfig{}, 0.1);
  ASSERT_EQ(cmds.size(), 1u);
  EXPECT_FALSE(cmds[0].fault);
  EXPECT_NEAR((cmds[0].velocity - Vec3(2, 0, 0)).norm(), 0.0, 1e-12);
}

TEST(PlanVelocities, GoalInsideObstacleIsFlagged) {
  auto sphere = Ellipsoid::aligned({10, 0, 5}, {2, 2, 2}).value();
  auto w = make_world({Vec3(-50, -50, 0), Vec3(50, 50, 30)}, {sphere}, {}).value();
  SwarmState s{{navigating("alfa", {0, 0, 5}, {10, 0, 5})}, 0.0};
  auto cmds = plan_velocities(s, w, PlannerConfig{}, 0.1);
  ASSERT_TRUE(cmds[0].fault.has_value());
  EXPECT_EQ(*cmds[0].fault, Errc::GoalInObstacle);
  EXPECT_EQ(cmds[0].velocity, Vec3::Zero());
}

TEST(PlanVelocities, IdleUavsGetZero) {
  UavState g;
  g.id = UavId("bravo");
  SwarmState s{{hovering("alfa", {0, 0, 5}), g}, 0.0};
  for (const auto& c : plan_velocities(s, empty_world(), PlannerConfig{}, 0.1)) {
    EXPECT_EQ(c.velocity, Vec3::Zero());
    EXPECT_FALSE(c.fault);
  }
}

TEST(PlanVelocities, Deterministic) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-20, 20);
  SwarmState s;
  for (int i = 0; i < 8; ++i) {
    s.uavs.push_back(navigating(callsign_for(i).str(), {u(rng), u(rng), 5}, {u(rng), u(rng), 5}));
  }
  auto a = plan_velocities(s, empty_world(), PlannerConfig{}, 0.1);
  auto b = plan_velocities(s, empty_world(), PlannerConfig{}, 0.1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].velocity, b[i].velocity);
    EXPECT_EQ(a[i].fault, b[i].fault);
  }
}

TEST(AllGoalsReached, Cases) {
  SwarmState hover{{hovering("alfa", {0, 0, 2}), hovering("bravo", {3, 0, 2})}, 0};
  EXPECT_TRUE(all_goals_reached(hover));
  SwarmState nav{{hovering("alfa", {0, 0, 2}), navigating("bravo", {3, 0, 2}, {5, 0, 2})}, 0};
  EXPECT_FALSE(all_goals_reached(nav));
  EXPECT_TRUE(all_goals_reached(SwarmState{}));
}

TEST(PlannerSafety, HeadOnSwapKeepsSeparation) {
  SimConfig cfg;
  cfg.swarm = {{UavId("alfa"), {-5, 0, 5}}, {UavId("bravo"), {5, 0, 5}}};
  Simulator sim(empty_world(), cfg);
  sim.dispatch(go(UavId("alfa"), {5, 0, 5}));
  sim.dispatch(go(UavId("bravo"), {-5, 0, 5}));
  run_to_completion(sim, 120.0);
  const auto audit = audit_trace(sim.trace(), sim.world(), 1.0, 2.0);
  EXPECT_TRUE(audit.clean()) << audit.violations.front();
  EXPECT_GE(audit.min_pairwise_distance, 1.0);
  EXPECT_TRUE(all_goals_reached(sim.snapshot()));
}

TEST(PlannerSafety, PassesAroundObstacleHeadOn) {
  auto sphere = Ellipsoid::aligned({0, 0, 5}, {3, 3, 3}).value();
  auto w = make_world({Vec3(-50, -50, 0), Vec3(50, 50, 30)}, {sphere}, {}).value();
  SimConfig cfg;
  cfg.swarm = {{UavId("alfa"), {-10, 0, 5}}};
  Simulator sim(w, cfg);
  sim.dispatch(go(UavId("alfa"), {10, 0, 5}));
  run_to_completion(sim, 120.0);
  EXPECT_TRUE(all_goals_reached(sim.snapshot()));
  EXPECT_TRUE(audit_trace(sim.trace(), w, 1.0, 2.0).clean());
}

namespace {

struct RandomCase {
  std::vector<SpawnSpec> spawn;
  std::vector<Vec3> goals;
};

// Spawns and goals pairwise >= 2 d_min apart, all airborne at 3..8 m.
RandomCase random_case(std::mt19937& rng, int n, double half) {
  std::uniform_real_distribution<double> xy(-half, half), z(3, 8);
  auto far_from = [](const std::vector<Vec3>& pts, const Vec3& p) {
    for (const auto& q : pts) {
      if ((p - q).norm() < 2.0) return false;
    }
    return true;
  };
  std::vector<Vec3> starts, goals;
  while (static_cast<int>(starts.size()) < n) {
    Vec3 p(xy(rng), xy(rng), z(rng));
    if (far_from(starts, p)) starts.push_back(p);
  }
  while (static_cast<int>(goals.size()) < n) {
    Vec3 p(xy(rng), xy(rng), z(rng));
    if (far_from(goals, p)) goals.push_back(p);
  }
  RandomCase c;
  for (int i = 0; i < n; ++i) c.spawn.push_back({callsign_for(i), starts[i]});
  c.goals = goals;
  return c;
}

}  // namespace

TEST(PlannerSafety, RandomEmptyWorldScenarios) {
  for (int n : {4, 8, 12}) {
    for (std::uint32_t seed = 0; seed < 10; ++seed) {
      std::mt19937 rng(seed * 31 + n);
      auto c = random_case(rng, n, 10.0);
      SimConfig cfg;
      cfg.swarm = c.spawn;
      Simulator sim(empty_world(), cfg);
      for (int i = 0; i < n; ++i) sim.dispatch(go(callsign_for(i), c.goals[i]));
      run_to_completion(sim, 90.0);
      const auto audit = audit_trace(sim.trace(), sim.world(), 1.0, 2.0);
      EXPECT_TRUE(audit.clean()) << "n=" << n << " seed=" << seed << " " << audit.violations.front();
    }
  }
}

// Empty world, distinct goals: each UAV arrives within 3x its straight-line time.
TEST(PlannerProgress, ArrivesWithinSlack) {
  constexpr double kSlack = 3.0;
  for (int n : {4, 8}) {
    for (std::uint32_t seed = 0; seed < 10; ++seed) {
      std::mt19937 rng(seed * 17 + n);
      auto c = random_case(rng, n, 15.0);
      SimConfig cfg;
      cfg.swarm = c.spawn;
      Simulator sim(empty_world(), cfg);
      std::vector<double> budget(n);
      for (int i = 0; i < n; ++i) {
        sim.dispatch(go(callsign_for(i), c.goals[i]));
        budget[i] = std::max((c.goals[i] - c.spawn[i].position).norm() / cfg.planner.v_max * kSlack, 1.0);
      }
      std::vector<double> arrived(n, -1.0);
      for (double t = 0; t < 120.0 && !all_goals_reached(sim.snapshot());) {
        auto s = sim.advance(cfg.dt);
        t += cfg.dt;
        for (int i = 0; i < n; ++i) {
          if (arrived[i] < 0 && s.uavs[i].phase == FlightPhase::Hovering) arrived[i] = t;
        }
      }
      for (int i = 0; i < n; ++i) {
        EXPECT_GE(arrived[i], 0.0) << "n=" << n << " seed=" << seed << " uav=" << i;
        EXPECT_LE(arrived[i], budget[i] + 1e-9) << "n=" << n << " seed=" << seed << " uav=" << i;
      }
    }
  }
}
