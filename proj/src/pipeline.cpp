#include "tacos/pipeline.hpp"

#include <fmt/format.h>

namespace tacos {

std::string_view to_string(AblationMode m) {
  switch (m) {
    case AblationMode::Full: return "full";
    case AblationMode::NoCoordinator: return "woc";
    case AblationMode::NoReasoning: return "wor";
  }
  return "full";
}

std::optional<AblationMode> ablation_from_string(std::string_view s) {
  if (s == "full") return AblationMode::Full;
  if (s == "woc") return AblationMode::NoCoordinator;
  if (s == "wor") return AblationMode::NoReasoning;
  return std::nullopt;
}

Pipeline::Pipeline(std::shared_ptr<LlmBackend> backend, const WorldState& world, PipelineConfig cfg)
    : backend_(std::move(backend)), world_(world), cfg_(std::move(cfg)), history_(cfg_.coordinator.history_budget_tokens) {
  cfg_.supervisor.include_reasoning = cfg_.mode != AblationMode::NoReasoning;
  if (cfg_.mode == AblationMode::NoCoordinator) {
    merged_ = std::make_unique<MergedAgent>(backend_, world_, cfg_.supervisor);
  } else {
    coordinator_prompt_ = build_config_prompt(render_api_doc(cfg_.supervisor.registry), cfg_.examples, world_);
    supervisor_ = std::make_unique<Supervisor>(backend_, world_, cfg_.supervisor);
  }
}

void Pipeline::set_cancel(std::shared_ptr<std::atomic<bool>> flag) {
  cfg_.supervisor.cancel = flag;
  if (supervisor_) supervisor_->config().cancel = flag;
  if (merged_) merged_->config().cancel = flag;
}

TaskPlan Pipeline::make_plan(const Instruction& instr, const SwarmState& swarm) {
  if (!supervisor_) throw TacosError(Errc::InvalidArgument, "no Coordinator in w/oC mode");
  return plan(instr, swarm, world_, history_, *backend_, coordinator_prompt_, cfg_.supervisor.registry,
              cfg_.coordinator);
}

ExecutionReport Pipeline::execute(const TaskPlan& plan, Simulator& sim, const ExecutionHooks& hooks) {
  const SwarmState before = sim.snapshot();
  ExecutionReport report = supervisor_->execute_plan(plan, sim, hooks);
  const SwarmState after = sim.snapshot();

  // Final phases go back into the Coordinator's history so later
  // instructions can see what the swarm is already doing.
  HistoryEntry e;
  e.kind = EntryKind::Update;
  e.issued_at = std::max(after.sim_time, history_.empty() ? 0.0 : history_.entries().back().issued_at);
  e.plan_id = plan.plan_id;
  e.outcome = report.success ? fmt::format("completed after {} cycle{}", report.cycles_used,
                                           report.cycles_used == 1 ? "" : "s")
                             : fmt::format("failed ({})", report.error ? to_string(report.error->code) : "unverified");
  e.state_digest = phase_delta(before, after) + "; now " + phase_summary(after);
  history_ = append_entry(history_, std::move(e)).value();
  return report;
}

InstructionResult Pipeline::handle(const Instruction& instr, Simulator& sim, const ExecutionHooks& hooks) {
  InstructionResult out;
  if (merged_) {
    out.report = merged_->execute_instruction(instr, sim, hooks);
    return out;
  }
  try {
    out.plan = make_plan(instr, sim.snapshot());
  } catch (const TacosError& e) {
    out.report.plan_id = next_plan_id(history_);
    out.report.error = e.error();
    out.report.memory_empty_at_entry = out.report.memory_empty_at_exit = supervisor_->memory().empty();
    out.report.start_time = out.report.end_time = sim.snapshot().sim_time;
    return out;
  }
  out.report = execute(*out.plan, sim, hooks);
  return out;
}

}  // namespace tacos
