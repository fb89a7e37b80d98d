#include "tacos/coordinator.hpp"

#include <cmath>

#include <fmt/format.h>

#include "tacos/call_format.hpp"
#include "tacos/scenario.hpp"
#include "tacos/telemetry.hpp"

namespace tacos {

using nlohmann::json;

json to_json(const TaskPlan& p) {
  json calls = json::array();
  for (const auto& c : p.calls) calls.push_back(raw_call_to_json(c.to_raw()));
  return {{"plan_id", p.plan_id},
          {"instruction", p.source_instruction.text},
          {"issued_at", p.source_instruction.issued_at},
          {"reasoning", p.reasoning},
          {"calls", calls}};
}

TaskPlan task_plan_from_json(const json& j) {
  TaskPlan p;
  p.plan_id = j.at("plan_id").get<std::string>();
  p.source_instruction = {j.at("instruction").get<std::string>(), j.value("issued_at", 0.0)};
  p.reasoning = j.at("reasoning").get<std::string>();
  const auto& calls = j.at("calls");
  for (std::size_t i = 0; i < calls.size(); ++i) {
    const RawCall raw = raw_call_from_json(calls[i], i).value();
    ActionCall c;
    c.target = UavId(raw.uav);
    c.action = raw.action;
    for (const auto& a : raw.args) {
      if (const auto* d = std::get_if<double>(&a)) c.args.push_back(*d);
      else c.labels.push_back(std::get<std::string>(a));
    }
    p.calls.push_back(std::move(c));
  }
  return p;
}

namespace {

RawCall raw(const std::string& uav, const std::string& action, std::vector<RawArg> args = {}) {
  return {uav, action, std::move(args)};
}

}  // namespace

std::vector<FewShotExample> default_examples() {
  std::vector<FewShotExample> out;
  {
    FewShotExample e;
    e.instruction = "All drones, take off.";
    e.ideal_reasoning =
        "The pilot wants the whole swarm airborne. Every UAV is on the ground, so each one gets an "
        "arm_takeoff call. The takeoffs are independent and can all be issued at once.";
    for (const char* id : {"alfa", "bravo", "charlie", "delta"}) e.ideal_plan.push_back(raw(id, "arm_takeoff"));
    out.push_back(std::move(e));
  }
  {
    FewShotExample e;
    e.instruction =
        "Split the swarm in two. Send the first group to the west side of town, and once it is there "
        "send the second group to the east side.";
    e.ideal_reasoning =
        "Four UAVs are hovering, so the first group is alfa and bravo and the second group is charlie "
        "and delta. The first group flies to two points near x = 30 on the west side. The second group "
        "flies to two points near x = 70 on the east side, but it must stay where it is until both "
        "first-group UAVs have arrived: issue the east-side calls only after the west-side calls are "
        "completed.";
    e.ideal_plan = {raw("alfa", "goto", {30.0, 45.0, 6.0}), raw("bravo", "goto", {30.0, 55.0, 6.0}),
                    raw("charlie", "goto", {70.0, 45.0, 6.0}), raw("delta", "goto", {70.0, 55.0, 6.0})};
    out.push_back(std::move(e));
  }
  {
    FewShotExample e;
    e.instruction = "Alfa and bravo, inspect cars 1 to 4.";
    e.ideal_reasoning =
        "Two UAVs and four cars, so each UAV inspects two cars, hovering 2 m above each one. Alfa "
        "takes car_1 and then car_2; bravo takes car_3 and then car_4. The two UAVs are independent and "
        "can start together; each flies to its second car after reaching its first.";
    e.ideal_plan = {raw("alfa", "goto", {68.48, 57.65, 2.0}), raw("alfa", "goto", {57.65, 68.48, 2.0}),
                    raw("bravo", "goto", {42.35, 68.48, 2.0}), raw("bravo", "goto", {31.52, 57.65, 2.0})};
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

std::string fmt_vec(const Vec3& v) {
  return fmt::format("[{}, {}, {}]", format_number(v.x()), format_number(v.y()), format_number(v.z()));
}

double cm(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

std::string render_world_block(const WorldState& world) {
  const auto& b = world.bounds;
  std::string out = fmt::format("WORLD\nbounds: x {}..{}, y {}..{}, z {}..{} (meters)\n", format_number(b.min.x()),
                                format_number(b.max.x()), format_number(b.min.y()), format_number(b.max.y()),
                                format_number(b.min.z()), format_number(b.max.z()));
  out += "entities:\n";
  if (world.entities.empty()) out += "  (none)\n";
  for (const auto& e : world.entities) {
    out += fmt::format("  {} ({}) at {}\n", e.id, to_string(e.kind), fmt_vec(e.position));
  }
  out += "obstacles (no-fly ellipsoids, never send a UAV inside one):\n";
  if (world.obstacles.empty()) out += "  (none)\n";
  for (std::size_t i = 0; i < world.obstacles.size(); ++i) {
    const auto& o = world.obstacles[i];
    const Mat3 inv = o.shape().inverse();
    const Vec3 half(cm(std::sqrt(inv(0, 0))), cm(std::sqrt(inv(1, 1))), cm(std::sqrt(inv(2, 2))));
    const std::string name = o.label().empty() ? fmt::format("obstacle_{}", i + 1) : o.label();
    out += fmt::format("  {} center {} half-extent {}\n", name, fmt_vec(o.center()), fmt_vec(half));
  }
  return out;
}

namespace {

constexpr std::string_view kRole =
    "ROLE\n"
    "You are the Coordinator of a swarm of UAVs. A pilot gives you instructions in natural language "
    "and you turn each one into a task plan: a list of atomic API calls, each addressed to a single "
    "UAV.\n"
    "You do not schedule the calls. A separate Supervisor issues them over time while watching "
    "telemetry, so write down in your reasoning any order the calls must follow, for example which "
    "group has to arrive before another group moves.\n"
    "If the instruction refers to earlier commands, use the prior interactions you are given.\n";

constexpr std::string_view kFormat =
    "OUTPUT FORMAT\n"
    "Answer with exactly two sections and nothing else:\n"
    "REASONING:\n"
    "<which UAVs do what, and any ordering between them>\n"
    "PLAN:\n"
    "<JSON array; each element is {\"uav\": \"<callsign>\", \"action\": \"<action>\", \"args\": [...]}>\n"
    "Reason first, then write the plan. Use an empty PLAN array only when the instruction cannot or "
    "should not be carried out, and say why in REASONING.\n";

}  // namespace

std::string build_config_prompt(const std::string& api_doc, const std::vector<FewShotExample>& examples,
                                const WorldState& world) {
  std::string out;
  out += kRole;
  out += "\n";
  out += kFormat;
  out += "\n";
  out += api_doc;
  out += "\n";
  out += render_world_block(world);
  if (!examples.empty()) {
    out += "\nEXAMPLES\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const auto& e = examples[i];
      out += fmt::format("\nEXAMPLE {}\nINSTRUCTION: {}\n", i + 1, e.instruction);
      out += render_output({e.ideal_reasoning, e.ideal_plan});
    }
  }
  return out;
}

std::string build_user_message(const Instruction& instr, const SwarmState& swarm, const CoordinatorHistory& hist,
                               std::size_t history_budget_tokens) {
  std::string out = render_for_prompt(hist, history_budget_tokens);
  if (out.back() != '\n') out += "\n";
  out += fmt::format("\nSWARM STATE\n{}\n\nINSTRUCTION: {}\n", render_telemetry(swarm), instr.text);
  return out;
}

namespace {

const std::vector<std::string_view> kLabels{"REASONING", "PLAN"};

}  // namespace

Result<CoordinatorOutput> parse_output(std::string_view text) {
  const Section plan = extract_section(text, "PLAN", kLabels);
  if (!plan.found) return Error{Errc::MissingPlan, "no PLAN: section"};
  const Section reasoning = extract_section(text, "REASONING", kLabels);
  if (!reasoning.found || reasoning.body.empty()) return Error{Errc::MissingReasoning, "no REASONING: section"};
  auto calls = parse_call_array(plan.body);
  if (!calls.ok()) return calls.error();
  return CoordinatorOutput{reasoning.body, std::move(calls).value()};
}

std::string render_output(const CoordinatorOutput& out) {
  return "REASONING:\n" + out.reasoning + "\nPLAN:\n" + render_call_array(out.calls) + "\n";
}

std::string next_plan_id(const CoordinatorHistory& hist) { return fmt::format("P{:04}", hist.plan_count() + 1); }

TaskPlan plan(const Instruction& instr, const SwarmState& swarm, const WorldState& world, CoordinatorHistory& hist,
              LlmBackend& backend, const std::string& config_prompt, const ActionRegistry& registry,
              const CoordinatorConfig& cfg) {
  if (trim(instr.text).empty()) throw TacosError(Errc::InvalidArgument, "empty instruction");
  CompletionRequest req;
  req.model_id = cfg.model_id;
  req.temperature = cfg.temperature;
  req.max_tokens = cfg.max_tokens;
  req.messages = {{Role::System, config_prompt},
                  {Role::User, build_user_message(instr, swarm, hist, cfg.history_budget_tokens)}};

  std::optional<CoordinatorOutput> parsed;
  for (int attempt = 0;; ++attempt) {
    const std::string text = backend.complete(req);
    auto r = parse_output(text);
    if (r.ok()) {
      parsed = std::move(r).value();
      break;
    }
    if (attempt >= cfg.parse_retries) {
      throw TacosError(Errc::ParseFailure, fmt::format("{} after {} attempts; last answer:\n{}",
                                                       r.error().describe(), attempt + 1, text));
    }
    req.messages.push_back({Role::Assistant, text});
    req.messages.push_back(
        {Role::User, fmt::format("Your answer could not be used ({}). Reply again with a REASONING: section "
                                 "and a PLAN: section holding a JSON array of calls.",
                                 r.error().describe())});
  }

  TaskPlan out;
  out.reasoning = parsed->reasoning;
  out.source_instruction = instr;
  out.plan_id = next_plan_id(hist);
  std::vector<std::string> rejected;
  for (std::size_t i = 0; i < parsed->calls.size(); ++i) {
    auto c = validate_call(parsed->calls[i], registry, swarm, world, CallOrigin::CoordinatorPlan);
    if (c.ok()) {
      out.calls.push_back(std::move(c).value());
    } else {
      rejected.push_back(fmt::format("call {}: {}", i, c.error().describe()));
    }
  }
  if (!rejected.empty()) {
    throw TacosError(Errc::ValidationFailure,
                     fmt::format("plan rejected, {} invalid call(s): {}", rejected.size(), fmt::join(rejected, "; ")));
  }

  HistoryEntry e;
  e.kind = EntryKind::Plan;
  e.issued_at = instr.issued_at;
  e.instruction = instr.text;
  e.reasoning = out.reasoning;
  e.plan_id = out.plan_id;
  for (const auto& c : out.calls) e.plan_summary.push_back(c.describe());
  e.state_digest = phase_summary(swarm) + "; world: " + world_summary(world);
  hist = append_entry(hist, std::move(e)).value();
  return out;
}

}  // namespace tacos
