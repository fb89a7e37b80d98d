#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tacos/actions.hpp"
#include "tacos/history.hpp"
#include "tacos/llm_backend.hpp"
#include "tacos/swarm.hpp"
#include "tacos/world.hpp"

namespace tacos {

struct Instruction {
  std::string text;
  double issued_at = 0.0;

  bool operator==(const Instruction&) const = default;
};

struct TaskPlan {
  std::string reasoning;
  std::vector<ActionCall> calls;  // set-like: ordering intent lives in reasoning
  std::string plan_id;
  Instruction source_instruction;

  bool operator==(const TaskPlan&) const = default;
};

nlohmann::json to_json(const TaskPlan& p);
TaskPlan task_plan_from_json(const nlohmann::json& j);

struct FewShotExample {
  std::string instruction;
  std::string ideal_reasoning;
  std::vector<RawCall> ideal_plan;
};

/// Takeoff-all, two groups in sequence, multi-target inspection; written for
/// the urban scenario with a four-UAV swarm (alfa..delta).
std::vector<FewShotExample> default_examples();

/// Role, output format, action doc, world summary, then worked examples
/// (omitted entirely when there are none).
std::string build_config_prompt(const std::string& api_doc, const std::vector<FewShotExample>& examples,
                                const WorldState& world);

/// Bounds, entities with positions, obstacles with center and half-extent.
std::string render_world_block(const WorldState& world);

/// Prior interactions, swarm telemetry and the instruction, in that order.
std::string build_user_message(const Instruction& instr, const SwarmState& swarm,
                               const CoordinatorHistory& hist, std::size_t history_budget_tokens);

struct CoordinatorOutput {
  std::string reasoning;
  std::vector<RawCall> calls;

  bool operator==(const CoordinatorOutput&) const = default;
};

/// Pulls the REASONING and PLAN sections out of model text in either order,
/// ignoring surrounding prose and code fences.
Result<CoordinatorOutput> parse_output(std::string_view text);
/// Canonical text form; parse_output(render_output(x)) == x for trimmed reasoning.
std::string render_output(const CoordinatorOutput& out);

struct CoordinatorConfig {
  int parse_retries = 2;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string model_id;
  std::size_t history_budget_tokens = 2000;
};

/// Renders the prompt, queries the backend (retrying unparseable answers with
/// a corrective message), validates every call against the current swarm and
/// world, and on success appends a Plan entry to hist.
///
/// Throws TacosError: ParseFailure once retries run out, ValidationFailure if
/// any call is invalid (nothing is appended), or whatever the backend throws.
TaskPlan plan(const Instruction& instr, const SwarmState& swarm, const WorldState& world,
              CoordinatorHistory& hist, LlmBackend& backend, const std::string& config_prompt,
              const ActionRegistry& registry = ActionRegistry::defaults(),
              const CoordinatorConfig& cfg = {});

/// "P0003" for the third plan in a history.
std::string next_plan_id(const CoordinatorHistory& hist);

}  // namespace tacos
