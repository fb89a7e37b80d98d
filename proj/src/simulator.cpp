#include "tacos/simulator.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

namespace tacos {

namespace {

[[noreturn]] void reject_config(const std::string& msg) {
  throw TacosError(Errc::InvalidArgument, msg);
}

// A UAV moving slower than this fraction of v_max counts as holding.
constexpr double kStallSpeedFraction = 0.1;

}  // namespace

Simulator::Simulator(WorldState world, SimConfig cfg) : world_(std::move(world)), cfg_(std::move(cfg)) {
  if (!(cfg_.dt > 0.0)) reject_config("dt must be positive");
  cfg_.limits.v_max = cfg_.planner.v_max;
  std::set<UavId> ids;
  for (const auto& s : cfg_.swarm) {
    if (s.id.empty() || !ids.insert(s.id).second) {
      reject_config(fmt::format("duplicate or empty callsign '{}'", s.id.str()));
    }
    if (!point_is_free(s.position, world_)) {
      reject_config(fmt::format("spawn point of {} is not in free space", s.id.str()));
    }
  }
  for (std::size_t i = 0; i < cfg_.swarm.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg_.swarm.size(); ++j) {
      if ((cfg_.swarm[i].position - cfg_.swarm[j].position).norm() < 2.0 * cfg_.planner.d_min) {
        reject_config(fmt::format("spawn points of {} and {} are closer than 2 d_min",
                                  cfg_.swarm[i].id.str(), cfg_.swarm[j].id.str()));
      }
    }
  }
  for (const auto& s : cfg_.swarm) {
    UavState u;
    u.id = s.id;
    u.position = s.position;
    u.position.z() = std::max(u.position.z(), cfg_.limits.ground_z);
    u.phase = u.position.z() > cfg_.limits.ground_z ? FlightPhase::Hovering : FlightPhase::Grounded;
    swarm_.uavs.push_back(u);
  }
  stalled_.assign(swarm_.uavs.size(), 0.0);
  faulted_.assign(swarm_.uavs.size(), false);
  if (cfg_.trace_file) trace_.stream_to(*cfg_.trace_file);
  trace_.append_tick({0.0, swarm_.uavs});
}

DispatchOutcome Simulator::dispatch(const ActionCall& call) {
  std::lock_guard lock(mu_);
  TraceEvent ev{swarm_.sim_time, EventKind::Dispatch, call, call.target, false, std::nullopt, {}};
  DispatchOutcome out;
  UavState* u = swarm_.find(call.target);
  if (u == nullptr) {
    out.reason = Error{Errc::UnknownUav, fmt::format("no UAV named '{}'", call.target.str())};
  } else if (call.action == "goto" && call.args.size() == 3 &&
             !point_is_free(Vec3(call.args[0], call.args[1], call.args[2]), world_)) {
    out.reason = Error{Errc::GoalInObstacle, call.describe() + " targets occupied space"};
  } else {
    auto next = apply_action(*u, call, cfg_.limits);
    if (next.ok()) {
      *u = next.value();
      out.accepted = true;
      const auto idx = static_cast<std::size_t>(u - swarm_.uavs.data());
      stalled_[idx] = 0.0;
    } else {
      out.reason = next.error();
    }
  }
  ev.accepted = out.accepted;
  if (out.reason) {
    ev.reason = out.reason->code;
    ev.detail = out.reason->message;
  }
  trace_.append_event(std::move(ev));
  return out;
}

void Simulator::tick() {
  const double dt = cfg_.dt;
  auto commands = plan_velocities(swarm_, world_, cfg_.planner, dt, stalled_);
  ++tick_count_;
  const double now = static_cast<double>(tick_count_) * dt;
  for (std::size_t i = 0; i < swarm_.uavs.size(); ++i) {
    const auto& cmd = commands[i];
    const bool fault = cmd.fault.has_value();
    if (fault && !faulted_[i]) {
      trace_.append_event({swarm_.sim_time, EventKind::PlannerFault, std::nullopt, cmd.id, false,
                           cmd.fault, "holding position"});
    }
    faulted_[i] = fault;
    UavState& u = swarm_.uavs[i];
    const Vec3 before = u.position;
    u = phase_tick(u, cmd.velocity, dt, cfg_.limits);
    const bool slow = (u.position - before).norm() < kStallSpeedFraction * cfg_.planner.v_max * dt;
    stalled_[i] = (is_transit(u.phase) && slow) ? stalled_[i] + dt : 0.0;
  }
  swarm_.sim_time = now;
  trace_.append_tick({now, swarm_.uavs});
}

SwarmState Simulator::advance(double duration) {
  if (!(duration > 0.0)) throw TacosError(Errc::InvalidArgument, "advance duration must be positive");
  const auto steps = static_cast<std::int64_t>(std::ceil(duration / cfg_.dt - 1e-9));
  for (std::int64_t k = 0; k < steps; ++k) {
    SwarmState copy;
    std::function<void(const SwarmState&)> observer;
    {
      std::lock_guard lock(mu_);
      tick();
      observer = observer_;
      if (observer) copy = swarm_;
    }
    if (observer) observer(copy);
  }
  return snapshot();
}

SwarmState Simulator::snapshot() const {
  std::lock_guard lock(mu_);
  return swarm_;
}

void Simulator::record_event(TraceEvent event) {
  std::lock_guard lock(mu_);
  event.time = swarm_.sim_time;
  trace_.append_event(std::move(event));
}

void Simulator::set_tick_observer(std::function<void(const SwarmState&)> observer) {
  std::lock_guard lock(mu_);
  observer_ = std::move(observer);
}

}  // namespace tacos
