#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tacos/error.hpp"
#include "tacos/world.hpp"

namespace tacos {

struct ActionCall;

/// Callsign of one UAV ("alfa", "bravo", ...).
class UavId {
 public:
  UavId() = default;
  explicit UavId(std::string callsign) : callsign_(std::move(callsign)) {}

  const std::string& str() const { return callsign_; }
  bool empty() const { return callsign_.empty(); }

  auto operator<=>(const UavId&) const = default;

 private:
  std::string callsign_;
};

/// NATO-alphabet callsign for index i; beyond the alphabet a numeric suffix
/// is appended ("alfa2", ...).
UavId callsign_for(std::size_t index);

enum class FlightPhase { Grounded, TakingOff, Hovering, Navigating, Landing };

std::string_view to_string(FlightPhase phase);
std::optional<FlightPhase> flight_phase_from_string(std::string_view s);

/// True for phases that carry an active goal.
bool is_transit(FlightPhase phase);

struct UavState {
  UavId id;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  FlightPhase phase = FlightPhase::Grounded;
  std::optional<Vec3> active_goal;

  bool operator==(const UavState&) const = default;
};

struct SwarmState {
  std::vector<UavState> uavs;
  double sim_time = 0.0;

  const UavState* find(const UavId& id) const;
  UavState* find(const UavId& id);
  bool operator==(const SwarmState&) const = default;
};

struct KinematicLimits {
  double v_max = 2.0;
  double takeoff_altitude = 2.0;
  double arrival_tolerance = 0.15;
  double ground_z = 0.0;
};

/// Phase transition for one action primitive. Phase errors come back as
/// InvalidPhaseTransition; they are feedback for the Supervisor.
Result<UavState> apply_action(const UavState& s, const ActionCall& call,
                              const KinematicLimits& limits = {});

/// Integrates one step of the single-integrator model and auto-advances the
/// phase on arrival. The commanded velocity is taken as achieved.
UavState phase_tick(const UavState& s, const Vec3& commanded_velocity, double dt,
                    const KinematicLimits& limits = {});

/// Has this UAV reached the goal of its current phase?
bool at_goal(const UavState& s, const KinematicLimits& limits = {});

}  // namespace tacos
