#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacos/llm_backend.hpp"
#include "tacos/pipeline.hpp"
#include "tacos/scenario.hpp"
#include "tacos/simulator.hpp"

namespace tacos {

// Task 0: every UAV takes off. Task 1: two groups fly to two parks, the
// second group only after the first has arrived. Task 2: inspect every car.
enum class TaskId { Task0, Task1, Task2 };

std::string_view to_string(TaskId t);  // task0, task1, task2
std::optional<TaskId> task_from_string(std::string_view s);

/// What a predicate needs besides the trace.
struct TaskContext {
  std::vector<UavId> uavs;  // in spawn order
  std::size_t from_tick = 0;  // first trace tick belonging to the task
};

using TaskPredicate = std::function<bool(const Trace&, const WorldState&, const TaskContext&)>;

struct TaskSpec {
  TaskId id = TaskId::Task0;
  std::string instruction;
  double time_budget = 360.0;  // simulated seconds
  TaskPredicate predicate;
};

TaskSpec task_spec(TaskId id);

inline constexpr std::string_view kTask0Instruction = "All drones, take off.";
inline constexpr std::string_view kTask1Instruction =
    "Split the swarm into two groups. Send the first group to park_north, and once it has arrived send the "
    "second group to park_south.";
inline constexpr std::string_view kTask2Instruction = "Inspect all eight cars parked around the block.";

inline constexpr double kParkRadius = 8.0;      // horizontal, counts as "at the park"
inline constexpr double kDepartThreshold = 1.0;  // group B has left once it moved this far
inline constexpr double kInspectRadius = 2.0;
inline constexpr double kInspectAltitude = 2.0;

/// Group A is the first half of the callsigns (rounded down), group B the rest.
std::pair<std::vector<UavId>, std::vector<UavId>> split_groups(const std::vector<UavId>& uavs);

bool task0_success(const Trace& trace, const WorldState& world, const TaskContext& ctx);
/// Every group A UAV gets within kParkRadius of park_north before any group B
/// UAV moves more than kDepartThreshold, and group B ends at park_south.
bool task1_success(const Trace& trace, const WorldState& world, const TaskContext& ctx);
/// Every car has some UAV within kInspectRadius at some tick.
bool task2_success(const Trace& trace, const WorldState& world, const TaskContext& ctx);

/// Grid around (50, 50) with 4 m spacing, 4 per row, +-1 m horizontal jitter.
std::vector<SpawnSpec> spawn_grid(std::size_t n, std::uint64_t seed);

// Scripted fixtures. One script per (task, swarm size) covers the
// Coordinator, the Supervisor (with and without reasoning) and the merged
// agent, so the same backend can drive every mode. Scripts for Task 1 and 2
// include the Task 0 rules because those runs start with a takeoff.

std::vector<ScriptRule> fixture_script(TaskId task, std::size_t swarm_size);
/// All three tasks in one script, for sessions that take them in any order.
std::vector<ScriptRule> fixture_script_all(std::size_t swarm_size);

/// Coordinator answer the fixture uses for a task.
std::string fixture_coordinator_answer(TaskId task, std::size_t swarm_size);

using BackendFactory = std::function<std::shared_ptr<LlmBackend>(TaskId, std::size_t swarm_size)>;

BackendFactory scripted_factory();

struct TrialRecord {
  TaskId task = TaskId::Task0;
  AblationMode mode = AblationMode::Full;
  std::size_t swarm_size = 0;
  std::uint64_t seed = 0;
  bool success = false;
  int cycles_used = 0;  // Supervisor cycles for the task instruction only
  std::string failure;  // empty on success
  std::uint64_t trace_digest = 0;
  std::vector<std::string> lint;  // ambiguous rule matches seen during the run
};

nlohmann::json to_json(const TrialRecord& t);

struct BatchResult {
  TaskId task = TaskId::Task0;
  AblationMode mode = AblationMode::Full;
  std::size_t swarm_size = 0;
  std::size_t n_runs = 0;
  double success_rate = 0.0;
  std::optional<double> avg_steps;  // mean cycles over successful runs only
  std::vector<TrialRecord> trials;
};

nlohmann::json to_json(const BatchResult& b);
/// Reads what to_json wrote; metrics are recomputed from the trials.
BatchResult batch_result_from_json(const nlohmann::json& j);

/// Success rate and L from a set of trials.
BatchResult aggregate(TaskId task, AblationMode mode, std::size_t swarm_size, std::vector<TrialRecord> trials);

struct TrialOptions {
  double cycle_period = 30.0;
  int max_cycles = 12;
  bool lint = true;  // record prompts and check no two rules match the same one
  PipelineConfig base;  // mode and supervisor timing are overwritten per trial
  SimConfig sim;  // swarm is overwritten per trial
};

/// One seeded run. Never throws: errors become a failed record.
TrialRecord run_trial(const Scenario& scenario, TaskId task, AblationMode mode, std::size_t swarm_size,
                      std::uint64_t seed, const BackendFactory& backends, const TrialOptions& opts = {},
                      Trace* trace_out = nullptr);

struct BatchSpec {
  TaskId task = TaskId::Task0;
  AblationMode mode = AblationMode::Full;
  std::size_t swarm_size = 4;
  std::size_t runs = 50;
  std::uint64_t base_seed = 1;
};

BatchResult run_batch(const Scenario& scenario, const BatchSpec& spec, const BackendFactory& backends,
                      const TrialOptions& opts = {});

/// Fixed-width table: task, mode, size, runs, success rate, L.
std::string report_table(const std::vector<BatchResult>& results);
std::string report_csv(const std::vector<BatchResult>& results);
/// Bar-chart series grouped by task and size, one bar per mode.
nlohmann::json plot_data(const std::vector<BatchResult>& results);

/// FNV-1a, stable across platforms; used for determinism checks.
std::uint64_t fnv1a(std::string_view data);

}  // namespace tacos
