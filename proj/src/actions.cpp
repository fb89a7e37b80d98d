#include "tacos/actions.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "tacos/call_format.hpp"

namespace tacos {

std::string_view to_string(ParamType t) {
  return t == ParamType::Meters ? "meters" : "uav-id";
}

ActionRegistry ActionRegistry::defaults() {
  ActionRegistry r;
  r.add({"arm_takeoff",
         {},
         "Arm the motors and climb vertically to the takeoff altitude.",
         {FlightPhase::Grounded}});
  r.add({"goto",
         {{"x", ParamType::Meters}, {"y", ParamType::Meters}, {"z", ParamType::Meters}},
         "Fly to the world position (x, y, z) on a collision-free path.",
         {FlightPhase::Hovering, FlightPhase::Navigating}});
  r.add({"land",
         {},
         "Descend vertically and land on the ground point below the UAV.",
         {FlightPhase::TakingOff, FlightPhase::Hovering, FlightPhase::Navigating,
          FlightPhase::Landing}});
  return r;
}

void ActionRegistry::add(ActionSpec spec) {
  if (spec.name.empty() || find(spec.name) != nullptr) {
    throw TacosError(Errc::InvalidArgument, fmt::format("duplicate or empty action name '{}'", spec.name));
  }
  specs_.push_back(std::move(spec));
}

const ActionSpec* ActionRegistry::find(std::string_view name) const {
  auto it = std::find_if(specs_.begin(), specs_.end(),
                         [&](const ActionSpec& s) { return s.name == name; });
  return it == specs_.end() ? nullptr : &*it;
}

bool ActionCall::same_command(const ActionCall& other) const {
  return target == other.target && action == other.action && args == other.args &&
         labels == other.labels;
}

RawCall ActionCall::to_raw() const {
  RawCall raw{target.str(), action, {}};
  for (double a : args) raw.args.emplace_back(a);
  for (const auto& l : labels) raw.args.emplace_back(l);
  return raw;
}

std::string ActionCall::describe() const {
  std::string out = fmt::format("{}.{}(", target.str(), action);
  bool first = true;
  for (double a : args) {
    out += fmt::format("{}{}", first ? "" : ", ", format_number(a));
    first = false;
  }
  for (const auto& l : labels) {
    out += fmt::format("{}{}", first ? "" : ", ", l);
    first = false;
  }
  return out + ")";
}

Result<ActionCall> validate_call(const RawCall& raw, const ActionRegistry& registry,
                                 const SwarmState& swarm, const WorldState& world,
                                 CallOrigin origin) {
  const ActionSpec* spec = registry.find(raw.action);
  if (spec == nullptr) {
    return Error{Errc::UnknownAction, fmt::format("'{}' is not an available action", raw.action)};
  }
  const UavId id(raw.uav);
  if (swarm.find(id) == nullptr) {
    return Error{Errc::UnknownUav, fmt::format("no UAV named '{}'", raw.uav)};
  }
  if (raw.args.size() != spec->params.size()) {
    return Error{Errc::ArityMismatch, fmt::format("{} expects {} argument(s), got {}", spec->name,
                                                  spec->params.size(), raw.args.size())};
  }
  ActionCall call{id, spec->name, {}, {}, origin};
  for (std::size_t i = 0; i < raw.args.size(); ++i) {
    const auto& param = spec->params[i];
    if (param.type == ParamType::Meters) {
      const double* v = std::get_if<double>(&raw.args[i]);
      if (v == nullptr) {
        return Error{Errc::ArityMismatch,
                     fmt::format("{} argument '{}' must be a number", spec->name, param.name)};
      }
      if (!std::isfinite(*v)) {
        return Error{Errc::OutOfBoundsTarget,
                     fmt::format("{} argument '{}' is not finite", spec->name, param.name)};
      }
      call.args.push_back(*v);
    } else {
      const std::string* s = std::get_if<std::string>(&raw.args[i]);
      if (s == nullptr) {
        return Error{Errc::ArityMismatch,
                     fmt::format("{} argument '{}' must be an identifier", spec->name, param.name)};
      }
      call.labels.push_back(*s);
    }
  }
  if (call.action == "goto") {
    const Vec3 goal(call.args[0], call.args[1], call.args[2]);
    if (!world.bounds.contains(goal)) {
      return Error{Errc::OutOfBoundsTarget,
                   fmt::format("goto target {} is outside the workspace", call.describe())};
    }
    if (!point_is_free(goal, world)) {
      return Error{Errc::GoalInObstacle,
                   fmt::format("goto target {} lies inside an obstacle", call.describe())};
    }
  }
  return call;
}

std::string signature(const ActionSpec& spec) {
  std::string out = spec.name + "(";
  for (std::size_t i = 0; i < spec.params.size(); ++i) {
    if (i > 0) out += ", ";
    out += fmt::format("{}: {}", spec.params[i].name, to_string(spec.params[i].type));
  }
  return out + ")";
}

std::string render_api_doc(const ActionRegistry& registry) {
  if (registry.empty()) return std::string(kNoActionsSentinel) + "\n";
  std::string out =
      "AVAILABLE ACTIONS\n"
      "Every call targets exactly one UAV, named by its callsign in the \"uav\" field.\n";
  for (const auto& spec : registry.specs()) {
    out += "\n" + signature(spec) + "\n";
    out += "  " + spec.description + "\n";
    out += "  allowed phases:";
    for (std::size_t i = 0; i < spec.allowed_phases.size(); ++i) {
      out += fmt::format("{} {}", i == 0 ? "" : ",", to_string(spec.allowed_phases[i]));
    }
    out += "\n";
  }
  return out;
}

}  // namespace tacos
