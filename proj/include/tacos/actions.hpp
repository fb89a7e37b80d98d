#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tacos/error.hpp"
#include "tacos/swarm.hpp"
#include "tacos/world.hpp"

namespace tacos {

enum class ParamType { Meters, Identifier };

std::string_view to_string(ParamType t);

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::Meters;

  bool operator==(const ParamSpec&) const = default;
};

struct ActionSpec {
  std::string name;
  std::vector<ParamSpec> params;
  std::string description;
  std::vector<FlightPhase> allowed_phases;

  bool operator==(const ActionSpec&) const = default;
};

/// Ordered, name-unique set of action primitives.
class ActionRegistry {
 public:
  ActionRegistry() = default;

  /// arm_takeoff(), goto(x, y, z), land().
  static ActionRegistry defaults();

  /// Throws TacosError(InvalidArgument) on a duplicate name.
  void add(ActionSpec spec);

  const ActionSpec* find(std::string_view name) const;
  const std::vector<ActionSpec>& specs() const { return specs_; }
  bool empty() const { return specs_.empty(); }
  std::size_t size() const { return specs_.size(); }

  bool operator==(const ActionRegistry&) const = default;

 private:
  std::vector<ActionSpec> specs_;
};

enum class CallOrigin { CoordinatorPlan, SupervisorIssued };

using RawArg = std::variant<double, std::string>;

/// A call as it comes out of model text, before any checking.
struct RawCall {
  std::string uav;
  std::string action;
  std::vector<RawArg> args;

  bool operator==(const RawCall&) const = default;
};

/// A validated invocation of one primitive on one UAV. Meter-typed arguments
/// live in args; identifier-typed arguments in labels, both in signature order.
struct ActionCall {
  UavId target;
  std::string action;
  std::vector<double> args;
  std::vector<std::string> labels;
  CallOrigin origin = CallOrigin::CoordinatorPlan;

  /// Equality ignoring origin.
  bool same_command(const ActionCall& other) const;
  std::string describe() const;
  RawCall to_raw() const;

  bool operator==(const ActionCall&) const = default;
};

Result<ActionCall> validate_call(const RawCall& raw, const ActionRegistry& registry,
                                 const SwarmState& swarm, const WorldState& world,
                                 CallOrigin origin = CallOrigin::CoordinatorPlan);

inline constexpr std::string_view kNoActionsSentinel = "NO ACTIONS AVAILABLE";

/// Text block documenting every action: signature line, description line and
/// allowed phases, in registry order.
std::string render_api_doc(const ActionRegistry& registry);

/// "goto(x: meters, y: meters, z: meters)"
std::string signature(const ActionSpec& spec);

}  // namespace tacos
