#include "tacos/swarm.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "tacos/actions.hpp"

namespace tacos {

namespace {

constexpr std::array<std::string_view, 26> kAlphabet = {
    "alfa",  "bravo",  "charlie", "delta",   "echo",   "foxtrot", "golf",  "hotel",  "india",
    "juliett", "kilo", "lima",    "mike",    "november", "oscar", "papa",  "quebec", "romeo",
    "sierra", "tango", "uniform", "victor",  "whiskey", "xray",   "yankee", "zulu"};

constexpr double kTouchdownEpsilon = 1e-9;

Result<UavState> phase_error(const UavState& s, const ActionCall& call) {
  return Error{Errc::InvalidPhaseTransition,
               fmt::format("{} cannot {} while {}", s.id.str(), call.action, to_string(s.phase))};
}

}  // namespace

UavId callsign_for(std::size_t index) {
  const auto base = std::string(kAlphabet[index % kAlphabet.size()]);
  const auto round = index / kAlphabet.size();
  return UavId(round == 0 ? base : base + std::to_string(round + 1));
}

std::string_view to_string(FlightPhase phase) {
  switch (phase) {
    case FlightPhase::Grounded: return "Grounded";
    case FlightPhase::TakingOff: return "TakingOff";
    case FlightPhase::Hovering: return "Hovering";
    case FlightPhase::Navigating: return "Navigating";
    case FlightPhase::Landing: return "Landing";
  }
  return "Grounded";
}

std::optional<FlightPhase> flight_phase_from_string(std::string_view s) {
  for (auto p : {FlightPhase::Grounded, FlightPhase::TakingOff, FlightPhase::Hovering,
                 FlightPhase::Navigating, FlightPhase::Landing}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

bool is_transit(FlightPhase phase) {
  return phase == FlightPhase::TakingOff || phase == FlightPhase::Navigating ||
         phase == FlightPhase::Landing;
}

const UavState* SwarmState::find(const UavId& id) const {
  auto it = std::find_if(uavs.begin(), uavs.end(), [&](const UavState& u) { return u.id == id; });
  return it == uavs.end() ? nullptr : &*it;
}

UavState* SwarmState::find(const UavId& id) {
  auto it = std::find_if(uavs.begin(), uavs.end(), [&](const UavState& u) { return u.id == id; });
  return it == uavs.end() ? nullptr : &*it;
}

Result<UavState> apply_action(const UavState& s, const ActionCall& call,
                              const KinematicLimits& limits) {
  if (call.target != s.id) {
    return Error{Errc::UnknownUav,
                 fmt::format("call for {} applied to {}", call.target.str(), s.id.str())};
  }
  UavState next = s;
  if (call.action == "arm_takeoff") {
    if (!call.args.empty()) return Error{Errc::ArityMismatch, "arm_takeoff takes no arguments"};
    if (s.phase != FlightPhase::Grounded) return phase_error(s, call);
    next.phase = FlightPhase::TakingOff;
    next.active_goal = Vec3(s.position.x(), s.position.y(), limits.ground_z + limits.takeoff_altitude);
    return next;
  }
  if (call.action == "goto") {
    if (call.args.size() != 3) return Error{Errc::ArityMismatch, "goto takes (x, y, z)"};
    if (s.phase != FlightPhase::Hovering && s.phase != FlightPhase::Navigating) {
      return phase_error(s, call);
    }
    next.phase = FlightPhase::Navigating;
    next.active_goal = Vec3(call.args[0], call.args[1], call.args[2]);
    return next;
  }
  if (call.action == "land") {
    if (!call.args.empty()) return Error{Errc::ArityMismatch, "land takes no arguments"};
    if (s.phase == FlightPhase::Grounded) return phase_error(s, call);
    next.phase = FlightPhase::Landing;
    next.active_goal = Vec3(s.position.x(), s.position.y(), limits.ground_z);
    return next;
  }
  return Error{Errc::UnknownAction, fmt::format("no execution semantics for '{}'", call.action)};
}

bool at_goal(const UavState& s, const KinematicLimits& limits) {
  if (!s.active_goal) return !is_transit(s.phase);
  return (s.position - *s.active_goal).norm() <= limits.arrival_tolerance;
}

UavState phase_tick(const UavState& s, const Vec3& commanded_velocity, double dt,
                    const KinematicLimits& limits) {
  UavState next = s;
  if (s.phase == FlightPhase::Grounded) {
    next.velocity = Vec3::Zero();
    next.position.z() = limits.ground_z;
    return next;
  }
  next.velocity = commanded_velocity;
  next.position = s.position + commanded_velocity * dt;
  if (next.phase == FlightPhase::Landing) {
    // Touchdown is a ground-contact test rather than a tolerance ball, so the
    // z snap never moves the airframe by more than rounding.
    if (next.position.z() - limits.ground_z > kTouchdownEpsilon) return next;
  } else if (!is_transit(next.phase) || !at_goal(next, limits)) {
    return next;
  }

  if (next.phase == FlightPhase::Landing) {
    next.phase = FlightPhase::Grounded;
    next.position.z() = limits.ground_z;
    next.velocity = Vec3::Zero();
  } else {
    next.phase = FlightPhase::Hovering;
  }
  next.active_goal.reset();
  return next;
}

}  // namespace tacos
