#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <vector>

#include "tacos/actions.hpp"
#include "tacos/planner.hpp"
#include "tacos/swarm.hpp"
#include "tacos/trace.hpp"
#include "tacos/world.hpp"

namespace tacos {

struct SpawnSpec {
  UavId id;
  Vec3 position;
};

struct SimConfig {
  double dt = 0.1;
  std::uint64_t seed = 0;
  PlannerConfig planner;
  KinematicLimits limits;  // limits.v_max is overridden by planner.v_max
  std::vector<SpawnSpec> swarm;
  std::optional<std::filesystem::path> trace_file;
};

struct DispatchOutcome {
  bool accepted = false;
  std::optional<Error> reason;
};

/// Owns the swarm and the world and advances them in fixed steps of dt.
///
/// Single writer: dispatch() and advance() must come from one thread at a
/// time. snapshot() may be called from any thread.
class Simulator {
 public:
  /// Throws TacosError(InvalidArgument) when dt <= 0, callsigns repeat, or
  /// spawn points are closer than 2 * d_min or outside free space.
  Simulator(WorldState world, SimConfig cfg);

  DispatchOutcome dispatch(const ActionCall& call);

  /// Runs ceil(duration / dt) ticks and returns the final snapshot.
  SwarmState advance(double duration);

  SwarmState snapshot() const;
  const WorldState& world() const { return world_; }
  const SimConfig& config() const { return cfg_; }
  const KinematicLimits& limits() const { return cfg_.limits; }

  /// Not synchronized with advance(); read it from the writer thread.
  const Trace& trace() const { return trace_; }

  /// Adds an externally produced event (e.g. a validation rejection) at the current time.
  void record_event(TraceEvent event);

  /// Called after every tick with the new snapshot, on the advancing thread.
  void set_tick_observer(std::function<void(const SwarmState&)> observer);

 private:
  void tick();

  WorldState world_;
  SimConfig cfg_;
  SwarmState swarm_;
  std::int64_t tick_count_ = 0;
  std::vector<double> stalled_;
  std::vector<bool> faulted_;
  Trace trace_;
  std::function<void(const SwarmState&)> observer_;
  mutable std::mutex mu_;
};

}  // namespace tacos
