#include "tacos/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tacos {

namespace {

constexpr double kEps = 1e-9;

Vec3 clip(const Vec3& v, double limit) {
  const double n = v.norm();
  return n > limit ? Vec3(v * (limit / n)) : v;
}

Vec3 preferred_velocity(const UavState& u, double v_max, double dt) {
  const Vec3 to_goal = *u.active_goal - u.position;
  const double dist = to_goal.norm();
  if (dist < kEps) return Vec3::Zero();
  if (dist <= v_max * dt) return to_goal / dt;
  return to_goal * (v_max / dist);
}

// Horizontal right-hand direction relative to heading; x when heading is vertical.
Vec3 right_hand(const Vec3& heading) {
  Vec3 r = heading.cross(Vec3::UnitZ());
  if (r.norm() < kEps) return Vec3::UnitX();
  return r.normalized();
}

double min_obstacle_margin(const Vec3& p, const WorldState& w) { return point_margin(p, w); }

struct Candidate {
  std::size_t index;
  Vec3 velocity;
};

class CommitChecker {
 public:
  CommitChecker(const SwarmState& swarm, const WorldState& world, const PlannerConfig& cfg)
      : swarm_(swarm), world_(world), cfg_(cfg), next_(swarm.uavs.size()),
        committed_(swarm.uavs.size(), false) {
    for (std::size_t i = 0; i < swarm.uavs.size(); ++i) next_[i] = swarm.uavs[i].position;
  }

  bool admissible(std::size_t i, const Vec3& next) const {
    const Vec3& here = swarm_.uavs[i].position;
    if (!world_.bounds.contains(next)) return false;
    const double m_next = min_obstacle_margin(next, world_);
    if (!(m_next > cfg_.obstacle_margin)) {
      // Only a UAV already inside the margin band may move, and only outward.
      if (!(m_next > 0.0) || m_next < min_obstacle_margin(here, world_)) return false;
    }
    for (std::size_t j = 0; j < next_.size(); ++j) {
      if (j == i) continue;
      // next_[j] is j's committed position, or its current one when j is not
      // committed yet (it can always fall back to holding there).
      const double d_next = (next - next_[j]).norm();
      if (d_next < cfg_.d_min) {
        const double d_now = (here - next_[j]).norm();
        if (d_next < d_now) return false;
      }
    }
    return true;
  }

  void commit(std::size_t i, const Vec3& next) {
    next_[i] = next;
    committed_[i] = true;
  }

 private:
  const SwarmState& swarm_;
  const WorldState& world_;
  const PlannerConfig& cfg_;
  std::vector<Vec3> next_;
  std::vector<bool> committed_;
};

}  // namespace

std::vector<VelocityCommand> plan_velocities(const SwarmState& swarm, const WorldState& world,
                                             const PlannerConfig& cfg, double dt,
                                             std::span<const double> stalled_seconds) {
  const std::size_t n = swarm.uavs.size();
  std::vector<VelocityCommand> out(n);
  std::vector<Vec3> desired(n, Vec3::Zero());
  std::vector<bool> moving(n, false);
  const double neighbor_radius = cfg.neighbor_radius_factor * cfg.d_min;

  // Desired velocities read only the input snapshot, so each UAV is independent here.
  for (std::size_t i = 0; i < n; ++i) {
    const UavState& u = swarm.uavs[i];
    out[i].id = u.id;
    if (!is_transit(u.phase) || !u.active_goal) continue;
    if (!point_is_free(*u.active_goal, world)) {
      out[i].fault = Errc::GoalInObstacle;
      continue;
    }
    moving[i] = true;
    const Vec3 pref = preferred_velocity(u, cfg.v_max, dt);
    Vec3 v = pref;

    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec3 r = u.position - swarm.uavs[j].position;
      const double d = r.norm();
      if (d >= neighbor_radius || d < kEps) continue;
      const Vec3 away = r / d;
      v += cfg.repulsion_gain * (1.0 / (d * d) - 1.0 / (neighbor_radius * neighbor_radius)) * away;
    }

    for (const auto& o : world.obstacles) {
      const double g = o.margin(u.position) - cfg.obstacle_margin;
      if (g >= cfg.obstacle_band) continue;
      const Vec3 grad = o.gradient(u.position);
      if (grad.norm() < kEps) continue;
      const Vec3 normal = grad.normalized();
      const double gap = std::max(g, 1e-3);
      // Slide along the surface: remove the inward component, fully at the
      // band's inner edge.
      const double inward = v.dot(normal);
      if (inward < 0.0) v -= std::clamp(1.0 - gap / cfg.obstacle_band, 0.0, 1.0) * inward * normal;
      const double push =
          cfg.repulsion_gain * (1.0 / (gap * gap) - 1.0 / (cfg.obstacle_band * cfg.obstacle_band));
      v += std::min(push, cfg.v_max) * 0.25 * normal;
    }

    const double stalled = i < stalled_seconds.size() ? stalled_seconds[i] : 0.0;
    if (stalled > cfg.stall_timeout) {
      const Vec3 heading = pref.norm() > kEps ? pref : Vec3(*u.active_goal - u.position);
      v += 0.5 * cfg.v_max * right_hand(heading);
    }
    desired[i] = clip(v, cfg.v_max);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (cfg.priority_rule == PriorityRule::ByDistanceToGoal) {
    auto key = [&](std::size_t i) {
      const auto& u = swarm.uavs[i];
      return moving[i] ? (*u.active_goal - u.position).norm() : std::numeric_limits<double>::max();
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  }

  // Lower-priority UAVs yield: drop the part of their velocity that closes
  // on a higher-priority moving neighbour, in proportion to proximity.
  std::vector<std::size_t> rank(n);
  for (std::size_t k = 0; k < n; ++k) rank[order[k]] = k;
  for (std::size_t i = 0; i < n; ++i) {
    if (!moving[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !moving[j] || rank[j] > rank[i]) continue;
      const Vec3 r = swarm.uavs[j].position - swarm.uavs[i].position;
      const double d = r.norm();
      if (d >= neighbor_radius || d < kEps) continue;
      const Vec3 toward = r / d;
      const double closing = desired[i].dot(toward);
      if (closing <= 0.0) continue;
      const double keep = std::clamp((d - cfg.d_min) / (neighbor_radius - cfg.d_min), 0.0, 1.0);
      desired[i] -= (1.0 - keep) * closing * toward;
    }
  }

  CommitChecker checker(swarm, world, cfg);
  for (std::size_t i : order) {
    if (!moving[i]) continue;
    const Vec3& p = swarm.uavs[i].position;
    const Vec3 v = desired[i];
    if (v.norm() < kEps) continue;

    std::vector<Vec3> tries = {v, 0.5 * v, 0.25 * v};
    const Vec3 side = right_hand(v) * v.norm();
    tries.push_back(clip(0.5 * v + 0.5 * side, cfg.v_max));
    tries.push_back(clip(0.5 * v - 0.5 * side, cfg.v_max));
    tries.push_back(0.5 * side);
    tries.push_back(-0.5 * side);

    bool placed = false;
    for (const Vec3& t : tries) {
      if (checker.admissible(i, p + t * dt)) {
        checker.commit(i, p + t * dt);
        out[i].velocity = t;
        placed = true;
        break;
      }
    }
    if (!placed) {
      checker.commit(i, p);
      out[i].fault = Errc::InfeasibleStep;
    }
  }
  return out;
}

bool all_goals_reached(const SwarmState& swarm) {
  return std::none_of(swarm.uavs.begin(), swarm.uavs.end(),
                      [](const UavState& u) { return is_transit(u.phase); });
}

}  // namespace tacos
