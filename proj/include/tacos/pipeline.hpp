#pragma once

#include <memory>
#include <optional>
#include <string_view>

#include "tacos/coordinator.hpp"
#include "tacos/history.hpp"
#include "tacos/supervisor.hpp"

namespace tacos {

enum class AblationMode { Full, NoCoordinator, NoReasoning };

std::string_view to_string(AblationMode m);  // full, woc, wor
std::optional<AblationMode> ablation_from_string(std::string_view s);

struct PipelineConfig {
  AblationMode mode = AblationMode::Full;
  CoordinatorConfig coordinator;
  SupervisorConfig supervisor;
  std::vector<FewShotExample> examples = default_examples();
};

struct InstructionResult {
  std::optional<TaskPlan> plan;  // absent for the merged agent or when planning failed
  ExecutionReport report;
};

/// Instruction -> plan -> supervised execution -> history, for one session.
/// In NoCoordinator mode the merged agent replaces both LLM roles.
class Pipeline {
 public:
  Pipeline(std::shared_ptr<LlmBackend> backend, const WorldState& world, PipelineConfig cfg = {});

  /// Coordinator step alone. Throws TacosError like plan(). Not available in
  /// NoCoordinator mode (InvalidArgument).
  TaskPlan make_plan(const Instruction& instr, const SwarmState& swarm);

  /// Supervisor step alone; appends an Update entry to the history.
  ExecutionReport execute(const TaskPlan& plan, Simulator& sim, const ExecutionHooks& hooks = {});

  /// Both steps. Planning errors come back as a failed report, never thrown.
  InstructionResult handle(const Instruction& instr, Simulator& sim, const ExecutionHooks& hooks = {});

  const CoordinatorHistory& history() const { return history_; }
  const PipelineConfig& config() const { return cfg_; }
  const std::string& coordinator_prompt() const { return coordinator_prompt_; }
  const Supervisor* supervisor() const { return supervisor_.get(); }
  const MergedAgent* merged() const { return merged_.get(); }
  void set_cancel(std::shared_ptr<std::atomic<bool>> flag);

 private:
  std::shared_ptr<LlmBackend> backend_;
  WorldState world_;
  PipelineConfig cfg_;
  std::string coordinator_prompt_;
  CoordinatorHistory history_;
  std::unique_ptr<Supervisor> supervisor_;
  std::unique_ptr<MergedAgent> merged_;
};

}  // namespace tacos
