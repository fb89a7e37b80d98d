#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacos/actions.hpp"
#include "tacos/swarm.hpp"

namespace tacos {

struct TickRecord {
  double sim_time = 0.0;
  std::vector<UavState> uavs;
};

enum class EventKind { Dispatch, PlannerFault, Validation };

std::string_view to_string(EventKind kind);

struct TraceEvent {
  double time = 0.0;
  EventKind kind = EventKind::Dispatch;
  std::optional<ActionCall> call;
  UavId uav;
  bool accepted = true;
  std::optional<Errc> reason;
  std::string detail;
};

/// Append-only record of a simulation: one tick record per step plus
/// dispatch, rejection and planner-fault events. Can mirror itself to a
/// JSON-lines file as it grows.
class Trace {
 public:
  Trace() = default;
  Trace(const Trace& other)
      : ticks_(other.ticks_), events_(other.events_), order_(other.order_) {}
  Trace& operator=(const Trace& other) {
    ticks_ = other.ticks_;
    events_ = other.events_;
    order_ = other.order_;
    return *this;
  }
  Trace(Trace&&) = default;
  Trace& operator=(Trace&&) = default;
  ~Trace();

  /// Stream every subsequent record to path (one JSON object per line).
  void stream_to(const std::filesystem::path& path);

  void append_tick(TickRecord tick);
  void append_event(TraceEvent event);

  const std::vector<TickRecord>& ticks() const { return ticks_; }
  const std::vector<TraceEvent>& events() const { return events_; }

  /// Ticks and events in insertion order, one JSON document per line.
  std::string to_jsonl() const;
  static Trace from_jsonl(std::istream& in);
  static Trace load(const std::filesystem::path& path);

  /// Hash of the JSON-lines serialization; equal hashes for bit-identical traces.
  std::uint64_t digest() const;

 private:
  std::vector<TickRecord> ticks_;
  std::vector<TraceEvent> events_;
  // Insertion order: true = tick, false = event.
  std::vector<bool> order_;
  std::unique_ptr<std::ofstream> sink_;
};

nlohmann::json to_json(const UavState& u);
UavState uav_state_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ActionCall& call);
ActionCall action_call_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TickRecord& t);
nlohmann::json to_json(const TraceEvent& e);

struct AuditReport {
  double min_pairwise_distance = std::numeric_limits<double>::infinity();
  double min_obstacle_margin = std::numeric_limits<double>::infinity();
  double max_speed = 0.0;
  std::vector<std::string> violations;

  bool clean() const { return violations.empty(); }
};

/// Post-hoc safety check over every tick: pairwise separation >= d_min,
/// positions in free space, per-tick displacement within v_max * dt.
AuditReport audit_trace(const Trace& trace, const WorldState& world, double d_min, double v_max);

/// CSV of per-UAV trajectory polylines: uav,t,x,y,z,speed,color. color is a
/// hex RGB ramp from blue (still) to red (v_max).
std::string export_trajectories(const Trace& trace, double v_max);

std::string speed_color(double speed, double v_max);

}  // namespace tacos
