#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacos/actions.hpp"
#include "tacos/coordinator.hpp"
#include "tacos/llm_backend.hpp"
#include "tacos/simulator.hpp"

namespace tacos {

enum class Outcome { Accepted, Rejected, Completed };

std::string_view to_string(Outcome o);

struct MemoryRecord {
  int cycle = 0;
  ActionCall call;
  Outcome outcome = Outcome::Accepted;
  std::optional<Error> reason;
};

/// What the Supervisor has issued for the current plan. Empty between plans.
class ScopedMemory {
 public:
  const std::string& plan_id() const { return plan_id_; }
  const std::vector<MemoryRecord>& issued() const { return issued_; }
  int cycle_index() const { return cycle_index_; }
  bool empty() const { return plan_id_.empty() && issued_.empty() && cycle_index_ == 0; }

  void begin(const std::string& plan_id);
  void clear();
  void next_cycle() { ++cycle_index_; }
  void record(int cycle, ActionCall call, Outcome outcome, std::optional<Error> reason = std::nullopt);

  /// Marks accepted calls completed once telemetry shows their effect:
  /// airborne after arm_takeoff, hovering at the goal after goto, grounded
  /// after land.
  void refresh(const SwarmState& swarm, const KinematicLimits& limits);

  /// True if some record of this command (origin ignored) is Completed.
  bool completed(const ActionCall& call) const;
  /// Best outcome over the records of a command, or nullopt if never issued.
  std::optional<Outcome> status_of(const ActionCall& call) const;

  /// First line "status: issued k/N plan calls; m completed; p in progress;
  /// r rejected" (or "status: issued k calls; ..." without a plan), then one
  /// line per record.
  std::string digest(const std::vector<ActionCall>* plan_calls) const;

 private:
  std::string plan_id_;
  std::vector<MemoryRecord> issued_;
  int cycle_index_ = 0;
};

struct CycleDecision {
  std::vector<ActionCall> issue;
  bool done = false;
  std::string note;
};

/// Raw Supervisor answer: NOTE / ISSUE / DONE sections.
struct SupervisorOutput {
  std::string note;
  std::vector<RawCall> issue;
  bool done = false;

  bool operator==(const SupervisorOutput&) const = default;
};

/// DONE: true next to a non-empty ISSUE list is a ParseFailure unless
/// allow_final_batch is set (merged agent: "these are the last calls").
Result<SupervisorOutput> parse_supervisor_output(std::string_view text, bool allow_final_batch = false);
std::string render_supervisor_output(const SupervisorOutput& out);

struct SupervisorConfig {
  double cycle_period = 10.0;  // simulated seconds between cycles
  int max_cycles = 12;
  int parse_retries = 2;
  bool include_reasoning = true;
  /// Finish without another model call once every plan call is completed and
  /// no UAV is in transit.
  bool completion_probe = true;
  /// 0 runs the simulator as fast as possible; 1 paces it in real time.
  double realtime_factor = 0.0;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string model_id;
  ActionRegistry registry = ActionRegistry::defaults();
  std::shared_ptr<std::atomic<bool>> cancel;
};

std::string build_supervisor_config_prompt(const std::string& api_doc, const WorldState& world);

std::string build_cycle_message(const TaskPlan& plan, const SwarmState& swarm, const ScopedMemory& mem,
                                const SupervisorConfig& cfg);

/// One closed-loop step: prompt, parse (with retries), validate. Invalid
/// calls are recorded in mem as rejected and left out of the decision; valid
/// ones are returned for dispatch. Increments mem's cycle index.
///
/// Throws TacosError: CycleBudgetExceeded when the budget is already spent,
/// ParseFailure, or backend errors.
CycleDecision run_cycle(const TaskPlan& plan, const SwarmState& swarm, const WorldState& world, ScopedMemory& mem,
                        LlmBackend& backend, const std::string& config_prompt, const SupervisorConfig& cfg);

enum class Completion { None, SupervisorDone, AllCallsCompleted };

std::string_view to_string(Completion c);

struct IssuedCall {
  std::string call;
  bool accepted = false;
  std::optional<Error> reason;
  bool out_of_plan = false;
  bool duplicate = false;
};

struct CycleRecord {
  int index = 0;
  double sim_time = 0.0;
  std::string note;
  bool done = false;
  std::vector<IssuedCall> issued;
};

struct ExecutionReport {
  std::string plan_id;
  bool success = false;
  Completion completion = Completion::None;
  int cycles_used = 0;
  std::optional<Error> error;
  std::vector<CycleRecord> cycles;
  int duplicate_issues = 0;
  std::vector<std::string> out_of_plan;
  double start_time = 0.0;
  double end_time = 0.0;
  std::size_t first_tick = 0;  // trace tick range covered by this execution
  std::size_t last_tick = 0;
  bool memory_empty_at_entry = false;
  bool memory_empty_at_exit = false;
};

nlohmann::json to_json(const ExecutionReport& r);

/// Observer hooks used by the service to stream progress.
struct ExecutionHooks {
  std::function<void(const CycleRecord&)> on_cycle;
};

/// Owns the Supervisor's scoped memory and configuration prompt.
class Supervisor {
 public:
  Supervisor(std::shared_ptr<LlmBackend> backend, const WorldState& world, SupervisorConfig cfg = {});

  /// Runs the closed loop against sim until the plan completes, the
  /// Supervisor declares it done, or something fails. Never throws for
  /// model or action errors; they end up in the report.
  ExecutionReport execute_plan(const TaskPlan& plan, Simulator& sim, const ExecutionHooks& hooks = {});

  const ScopedMemory& memory() const { return memory_; }
  const SupervisorConfig& config() const { return cfg_; }
  SupervisorConfig& config() { return cfg_; }
  const std::string& config_prompt() const { return config_prompt_; }

 private:
  std::shared_ptr<LlmBackend> backend_;
  SupervisorConfig cfg_;
  std::string config_prompt_;
  ScopedMemory memory_;
};

/// Single-LLM variant with no Coordinator: one prompt carrying both roles
/// and one conversation that grows across every instruction. Without a plan
/// there is nothing to probe, so an instruction ends only on a DONE claim.
class MergedAgent {
 public:
  MergedAgent(std::shared_ptr<LlmBackend> backend, const WorldState& world, SupervisorConfig cfg = {});

  ExecutionReport execute_instruction(const Instruction& instr, Simulator& sim, const ExecutionHooks& hooks = {});

  const std::vector<ChatMessage>& conversation() const { return conversation_; }
  std::size_t llm_roles() const { return 1; }
  const SupervisorConfig& config() const { return cfg_; }
  SupervisorConfig& config() { return cfg_; }

 private:
  std::shared_ptr<LlmBackend> backend_;
  SupervisorConfig cfg_;
  std::vector<ChatMessage> conversation_;  // starts with the system prompt
  int instructions_ = 0;
};

std::string build_merged_config_prompt(const std::string& api_doc, const WorldState& world);

/// The merged agent answers with optional REASONING plus NOTE / ISSUE / DONE.
std::string build_merged_cycle_message(const Instruction& instr, int cycle, const SwarmState& swarm,
                                       const ScopedMemory& mem, const SupervisorConfig& cfg);

}  // namespace tacos
