#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "tacos/swarm.hpp"

namespace tacos {

/// Telemetry snapshot as JSON: {"sim_time", "uavs": [{callsign, position,
/// velocity, phase, goal}]}. Lengths are rounded to the centimetre so that
/// prompts stay short and stable.
nlohmann::json telemetry_json(const SwarmState& swarm);

/// The same snapshot as text, one UAV per line. This is what goes into model
/// prompts and onto the telemetry stream.
std::string render_telemetry(const SwarmState& swarm);

/// Inverse of telemetry_json (up to the rounding).
SwarmState swarm_from_telemetry(const nlohmann::json& j);

}  // namespace tacos
