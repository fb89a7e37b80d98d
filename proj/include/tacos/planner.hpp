#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tacos/error.hpp"
#include "tacos/swarm.hpp"
#include "tacos/world.hpp"

namespace tacos {

enum class PriorityRule { ByIndex, ByDistanceToGoal };

struct PlannerConfig {
  double d_min = 1.0;            // m, minimum pairwise separation
  double v_max = 2.0;            // m/s
  double obstacle_margin = 0.2;  // ellipsoid-metric units
  double repulsion_gain = 2.0;
  PriorityRule priority_rule = PriorityRule::ByIndex;

  double neighbor_radius_factor = 3.0;  // neighbours inside factor * d_min repel
  double obstacle_band = 1.5;           // obstacles repel while margin < obstacle_margin + band
  double stall_timeout = 5.0;           // s of holding before the tangential bias kicks in
};

/// One velocity per UAV, in swarm order. fault is GoalInObstacle or
/// InfeasibleStep; in both cases velocity is zero and the UAV holds.
struct VelocityCommand {
  UavId id;
  Vec3 velocity = Vec3::Zero();
  std::optional<Errc> fault;
};

/// Priority-ordered reactive avoidance with a one-step safety lookahead.
///
/// Each UAV with an active goal gets a preferred velocity toward the goal,
/// bent by inverse-square repulsion from neighbours and obstacle surfaces.
/// Candidates are then committed in priority order: a UAV's next position
/// must keep d_min from the committed next positions of higher-priority UAVs
/// and from the current positions of the rest, stay in bounds and keep the
/// obstacle margin. Holding is always consistent with that order, so a safe
/// snapshot stays safe.
///
/// stalled_seconds[i] is how long UAV i has been holding with an unreached
/// goal (empty span = nobody stalled); past stall_timeout a right-hand
/// tangential bias is added to break symmetric deadlocks.
std::vector<VelocityCommand> plan_velocities(const SwarmState& swarm, const WorldState& world,
                                             const PlannerConfig& cfg, double dt,
                                             std::span<const double> stalled_seconds = {});

/// No UAV is taking off, navigating or landing.
bool all_goals_reached(const SwarmState& swarm);

}  // namespace tacos
