#include "tacos/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "tacos/call_format.hpp"

namespace tacos {

using json = nlohmann::json;

std::string_view to_string(TaskId t) {
  switch (t) {
    case TaskId::Task0: return "task0";
    case TaskId::Task1: return "task1";
    case TaskId::Task2: return "task2";
  }
  return "task0";
}

std::optional<TaskId> task_from_string(std::string_view s) {
  if (s == "task0" || s == "0") return TaskId::Task0;
  if (s == "task1" || s == "1") return TaskId::Task1;
  if (s == "task2" || s == "2") return TaskId::Task2;
  return std::nullopt;
}

TaskSpec task_spec(TaskId id) {
  switch (id) {
    case TaskId::Task0: return {id, std::string(kTask0Instruction), 360.0, task0_success};
    case TaskId::Task1: return {id, std::string(kTask1Instruction), 360.0, task1_success};
    case TaskId::Task2: return {id, std::string(kTask2Instruction), 360.0, task2_success};
  }
  throw TacosError(Errc::InvalidArgument, "unknown task");
}

// ---- predicates ----

std::pair<std::vector<UavId>, std::vector<UavId>> split_groups(const std::vector<UavId>& uavs) {
  const auto half = static_cast<std::ptrdiff_t>(uavs.size() / 2);
  return {{uavs.begin(), uavs.begin() + half}, {uavs.begin() + half, uavs.end()}};
}

namespace {

const UavState* find_in(const TickRecord& t, const UavId& id) {
  for (const auto& u : t.uavs)
    if (u.id == id) return &u;
  return nullptr;
}

double horizontal(const Vec3& a, const Vec3& b) { return std::hypot(a.x() - b.x(), a.y() - b.y()); }

}  // namespace

bool task0_success(const Trace& trace, const WorldState&, const TaskContext& ctx) {
  if (trace.ticks().size() <= ctx.from_tick) return false;
  const auto& last = trace.ticks().back();
  for (const auto& id : ctx.uavs) {
    const UavState* u = find_in(last, id);
    if (!u || u->phase != FlightPhase::Hovering) return false;
  }
  const double t0 = trace.ticks()[ctx.from_tick].sim_time;
  return std::none_of(trace.events().begin(), trace.events().end(), [&](const TraceEvent& e) {
    return e.kind == EventKind::Dispatch && e.accepted && e.time >= t0 && e.call && e.call->action == "land";
  });
}

bool task1_success(const Trace& trace, const WorldState& world, const TaskContext& ctx) {
  const TaskEntity* north = world.find_entity("park_north");
  const TaskEntity* south = world.find_entity("park_south");
  if (!north || !south || trace.ticks().size() <= ctx.from_tick) return false;
  const auto [group_a, group_b] = split_groups(ctx.uavs);
  if (group_a.empty() || group_b.empty()) return false;

  const auto& ticks = trace.ticks();
  std::vector<Vec3> start;
  for (const auto& id : group_b) {
    const UavState* u = find_in(ticks[ctx.from_tick], id);
    if (!u) return false;
    start.push_back(u->position);
  }

  std::vector<bool> visited(group_a.size(), false);
  std::size_t remaining = group_a.size();
  for (std::size_t k = ctx.from_tick; k < ticks.size(); ++k) {
    for (std::size_t i = 0; i < group_b.size(); ++i) {
      const UavState* u = find_in(ticks[k], group_b[i]);
      if (!u) return false;
      // Group B moving before group A is complete breaks the ordering.
      if (remaining > 0 && (u->position - start[i]).norm() > kDepartThreshold) return false;
    }
    for (std::size_t i = 0; i < group_a.size(); ++i) {
      if (visited[i]) continue;
      const UavState* u = find_in(ticks[k], group_a[i]);
      if (u && horizontal(u->position, north->position) <= kParkRadius) {
        visited[i] = true;
        --remaining;
      }
    }
  }
  if (remaining > 0) return false;
  for (const auto& id : group_b) {
    const UavState* u = find_in(ticks.back(), id);
    if (!u || horizontal(u->position, south->position) > kParkRadius) return false;
  }
  return true;
}

bool task2_success(const Trace& trace, const WorldState& world, const TaskContext& ctx) {
  const auto cars = world.entities_of_kind(EntityKind::Car);
  if (cars.empty()) return false;
  std::vector<bool> seen(cars.size(), false);
  for (std::size_t k = ctx.from_tick; k < trace.ticks().size(); ++k) {
    for (const auto& u : trace.ticks()[k].uavs) {
      for (std::size_t c = 0; c < cars.size(); ++c) {
        if (!seen[c] && (u.position - cars[c]->position).norm() <= kInspectRadius) seen[c] = true;
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

// ---- spawn ----

std::vector<SpawnSpec> spawn_grid(std::size_t n, std::uint64_t seed) {
  constexpr double kSpacing = 4.0;
  constexpr std::size_t kColumns = 4;
  const std::size_t cols = std::min(n, kColumns);
  const std::size_t rows = (n + kColumns - 1) / kColumns;
  const double x0 = 50.0 - kSpacing * static_cast<double>(cols - 1) / 2.0;
  const double y0 = 50.0 + kSpacing * static_cast<double>(rows - 1) / 2.0;  // first row is the northmost
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::vector<SpawnSpec> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x0 + kSpacing * static_cast<double>(i % kColumns) + jitter(rng);
    const double y = y0 - kSpacing * static_cast<double>(i / kColumns) + jitter(rng);
    out.push_back({callsign_for(i), Vec3(x, y, 0.0)});
  }
  return out;
}

// ---- fixtures ----

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

RawCall takeoff(const UavId& id) { return {id.str(), "arm_takeoff", {}}; }
RawCall go(const UavId& id, const Vec3& p) {
  return {id.str(), "goto", {round2(p.x()), round2(p.y()), round2(p.z())}};
}

std::vector<UavId> callsigns(std::size_t n) {
  std::vector<UavId> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(callsign_for(i));
  return ids;
}

// Task geometry is worked out on the nominal (unjittered) grid.
std::vector<Vec3> nominal_positions(std::size_t n) {
  const auto cols = static_cast<double>(std::min<std::size_t>(n, 4));
  const auto rows = static_cast<double>((n + 3) / 4);
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(50.0 - 2.0 * (cols - 1) + 4.0 * static_cast<double>(i % 4),
                     50.0 + 2.0 * (rows - 1) - 4.0 * static_cast<double>(i / 4), 0.0);
  }
  return out;
}

std::vector<Vec3> ring(const Vec3& center, std::size_t k, double radius, double z) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < k; ++i) {
    const double a = std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
    out.emplace_back(center.x() + radius * std::cos(a), center.y() + radius * std::sin(a), z);
  }
  return out;
}

const Vec3 kParkNorth(50.0, 80.0, 0.0);
const Vec3 kParkSouth(50.0, 22.0, 0.0);
constexpr double kParkRing = 5.0;
constexpr double kParkAltitude = 5.0;

// Car positions as shipped in scenarios/urban.scn.
const std::vector<std::pair<std::string, Vec3>>& urban_cars() {
  static const std::vector<std::pair<std::string, Vec3>> cars{
      {"car_1", {68.48, 57.65, 0.5}}, {"car_2", {57.65, 68.48, 0.5}}, {"car_3", {42.35, 68.48, 0.5}},
      {"car_4", {31.52, 57.65, 0.5}}, {"car_5", {31.52, 42.35, 0.5}}, {"car_6", {42.35, 31.52, 0.5}},
      {"car_7", {57.65, 31.52, 0.5}}, {"car_8", {68.48, 42.35, 0.5}}};
  return cars;
}

// Per drone, the cars it visits in order. Greedy closest pairs with a
// capacity of ceil(8 / n), then each drone's cars chained nearest first.
std::vector<std::vector<std::size_t>> car_assignment(std::size_t n) {
  const auto& cars = urban_cars();
  const auto pos = nominal_positions(n);
  const std::size_t cap = (cars.size() + n - 1) / n;
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<bool> taken(cars.size(), false);
  for (std::size_t step = 0; step < cars.size(); ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bd = 0, bc = 0;
    for (std::size_t d = 0; d < n; ++d) {
      if (out[d].size() >= cap) continue;
      const Vec3 from = out[d].empty() ? pos[d] : cars[out[d].back()].second;
      for (std::size_t c = 0; c < cars.size(); ++c) {
        if (taken[c]) continue;
        const double dist = horizontal(from, cars[c].second);
        if (dist < best - 1e-9) {
          best = dist;
          bd = d;
          bc = c;
        }
      }
    }
    taken[bc] = true;
    out[bd].push_back(bc);
  }
  return out;
}

constexpr std::string_view kOrderCue = "only after group A has arrived";

struct TaskPlanText {
  std::string reasoning;
  std::vector<std::vector<RawCall>> stages;  // in order; the plan is their concatenation
};

TaskPlanText task_plan_text(TaskId task, std::size_t n) {
  const auto ids = callsigns(n);
  TaskPlanText t;
  switch (task) {
    case TaskId::Task0: {
      t.reasoning = "Every drone is on the ground and has to take off. The takeoffs are independent, so they can "
                    "all go out at once.";
      t.stages.emplace_back();
      for (const auto& id : ids) t.stages.back().push_back(takeoff(id));
      break;
    }
    case TaskId::Task1: {
      const auto [a, b] = split_groups(ids);
      const auto north = ring(kParkNorth, a.size(), kParkRing, kParkAltitude);
      const auto south = ring(kParkSouth, b.size(), kParkRing, kParkAltitude);
      auto names = [](const std::vector<UavId>& g) {
        std::string s;
        for (const auto& id : g) s += (s.empty() ? "" : ", ") + id.str();
        return s;
      };
      t.reasoning = fmt::format(
          "The swarm is airborne. Group A is {} and flies to park_north; group B is {} and flies to "
          "park_south. Group B holds its position and is sent {}, since the instruction orders the two "
          "moves. Each drone gets its own point on a 5 m ring around its park.",
          names(a), names(b), kOrderCue);
      t.stages.resize(2);
      for (std::size_t i = 0; i < a.size(); ++i) t.stages[0].push_back(go(a[i], north[i]));
      for (std::size_t i = 0; i < b.size(); ++i) t.stages[1].push_back(go(b[i], south[i]));
      break;
    }
    case TaskId::Task2: {
      const auto cars = car_assignment(n);
      std::size_t rounds = 0;
      for (const auto& c : cars) rounds = std::max(rounds, c.size());
      t.reasoning = "There are eight cars. Each drone takes the cars closest to it and hovers 1.5 m above "
                    "each one in turn";
      t.reasoning += rounds > 1 ? "; a drone moves to its next car only after reaching the previous one."
                                : "; every drone has a single car, so all can go at once.";
      if (n > urban_cars().size()) t.reasoning += " Drones without a car stay where they are.";
      t.stages.resize(rounds);
      for (std::size_t r = 0; r < rounds; ++r) {
        for (std::size_t d = 0; d < n; ++d) {
          if (r >= cars[d].size()) continue;
          Vec3 p = urban_cars()[cars[d][r]].second;
          p.z() = kInspectAltitude;
          t.stages[r].push_back(go(ids[d], p));
        }
      }
      break;
    }
  }
  return t;
}

std::string instruction_text(TaskId t) { return task_spec(t).instruction; }

Matcher sub(std::string p) { return {Matcher::Kind::Substring, std::move(p)}; }
Matcher rx(std::string p) { return {Matcher::Kind::Regex, std::move(p)}; }

std::string sup_answer(std::string note, std::vector<RawCall> issue, bool done) {
  return render_supervisor_output({std::move(note), std::move(issue), done});
}

std::string sup_status(std::size_t issued, std::size_t total, std::size_t completed) {
  return fmt::format("status: issued {}/{} plan calls; {} completed; 0 in progress;", issued, total, completed);
}
std::string sup_busy(std::size_t issued, std::size_t total) {
  return fmt::format("status: issued {}/{} plan calls; \\d+ completed; [1-9]\\d* in progress", issued, total);
}
std::string merged_status(std::size_t issued, std::size_t completed) {
  return fmt::format("status: issued {} calls; {} completed; 0 in progress;", issued, completed);
}
std::string merged_busy(std::size_t issued) {
  return fmt::format("status: issued {} calls; \\d+ completed; [1-9]\\d* in progress", issued);
}

// Staged rules for the Supervisor: stage s goes out when the stages before
// it are all completed, wait while anything is in transit, DONE at the end.
void supervisor_rules(std::vector<ScriptRule>& rules, const std::string& tag, const Matcher& plan_sig,
                      const TaskPlanText& t, std::optional<Matcher> first_stage_extra) {
  std::size_t total = 0;
  for (const auto& s : t.stages) total += s.size();
  std::size_t before = 0;
  for (std::size_t s = 0; s < t.stages.size(); ++s) {
    ScriptRule issue{fmt::format("{}.supervisor.stage{}", tag, s + 1),
                     {plan_sig, sub(sup_status(before, total, before))},
                     sup_answer(s == 0 ? "Sending the calls that can start now." : "The previous step is done; "
                                                                                   "sending the next calls.",
                                t.stages[s], false),
                     std::nullopt};
    if (s == 0 && first_stage_extra) issue.all_of.push_back(*first_stage_extra);
    rules.push_back(std::move(issue));
    before += t.stages[s].size();
    rules.push_back({fmt::format("{}.supervisor.wait{}", tag, s + 1),
                     {plan_sig, rx(sup_busy(before, total))},
                     sup_answer("Waiting for the drones in transit.", {}, false),
                     std::nullopt});
  }
  rules.push_back({tag + ".supervisor.done",
                   {plan_sig, sub(sup_status(total, total, total))},
                   sup_answer("Every plan call is completed.", {}, true),
                   std::nullopt});
}

// The merged agent has no plan; it keys on the instruction and its own
// issue count. Task 0 goes out as a final batch, the others wait for an
// explicit DONE once everything has arrived.
void merged_rules(std::vector<ScriptRule>& rules, const std::string& tag, TaskId task, const TaskPlanText& t) {
  const Matcher instr = sub(")\nINSTRUCTION: " + instruction_text(task) + "\n");
  const bool final_batch = task == TaskId::Task0;
  std::size_t before = 0;
  for (std::size_t s = 0; s < t.stages.size(); ++s) {
    const bool last = s + 1 == t.stages.size();
    std::string answer = s == 0 ? "REASONING: " + t.reasoning + "\n" : "";
    answer += sup_answer("Sending the calls that can start now.", t.stages[s], last && final_batch);
    rules.push_back({fmt::format("{}.merged.stage{}", tag, s + 1), {instr, sub(merged_status(before, before))},
                     answer, std::nullopt});
    before += t.stages[s].size();
    rules.push_back({fmt::format("{}.merged.wait{}", tag, s + 1), {instr, rx(merged_busy(before))},
                     sup_answer("Waiting for the drones in transit.", {}, false), std::nullopt});
  }
  rules.push_back({tag + ".merged.done", {instr, sub(merged_status(before, before))},
                   sup_answer("The instruction has been carried out.", {}, true), std::nullopt});
}

void task_rules(std::vector<ScriptRule>& rules, TaskId task, std::size_t n) {
  const std::string tag(to_string(task));
  const TaskPlanText t = task_plan_text(task, n);

  rules.push_back({tag + ".coordinator", {sub("\n\nINSTRUCTION: " + instruction_text(task) + "\n")},
                   fixture_coordinator_answer(task, n), std::nullopt});

  const Matcher plan_sig = sub(task == TaskId::Task0 ? "PLAN CALLS:\n1. alfa.arm_takeoff()\n"
                                                     : "PLAN CALLS:\n1. alfa.goto(");
  if (task == TaskId::Task1) {
    // With the reasoning the ordering cue is visible and only group A goes
    // first. Without it the plan reads as independent gotos.
    supervisor_rules(rules, tag, plan_sig, t, sub(std::string(kOrderCue)));
    std::size_t total = t.stages[0].size() + t.stages[1].size();
    std::vector<RawCall> all = t.stages[0];
    all.insert(all.end(), t.stages[1].begin(), t.stages[1].end());
    rules.push_back({tag + ".supervisor.unordered",
                     {plan_sig, sub(sup_status(0, total, 0)), sub("REASONING:\n(withheld)\n")},
                     sup_answer("No ordering given; sending every plan call.", all, false),
                     std::nullopt});
  } else {
    supervisor_rules(rules, tag, plan_sig, t, std::nullopt);
  }
  merged_rules(rules, tag, task, t);
}

}  // namespace

std::string fixture_coordinator_answer(TaskId task, std::size_t swarm_size) {
  const TaskPlanText t = task_plan_text(task, swarm_size);
  CoordinatorOutput out{t.reasoning, {}};
  for (const auto& s : t.stages) out.calls.insert(out.calls.end(), s.begin(), s.end());
  return render_output(out);
}

std::vector<ScriptRule> fixture_script(TaskId task, std::size_t swarm_size) {
  if (swarm_size == 0) throw TacosError(Errc::InvalidArgument, "swarm size must be positive");
  std::vector<ScriptRule> rules;
  if (task != TaskId::Task0) task_rules(rules, TaskId::Task0, swarm_size);
  task_rules(rules, task, swarm_size);
  return rules;
}

std::vector<ScriptRule> fixture_script_all(std::size_t swarm_size) {
  if (swarm_size == 0) throw TacosError(Errc::InvalidArgument, "swarm size must be positive");
  std::vector<ScriptRule> rules;
  for (auto t : {TaskId::Task0, TaskId::Task1, TaskId::Task2}) task_rules(rules, t, swarm_size);
  return rules;
}

BackendFactory scripted_factory() {
  return [](TaskId task, std::size_t n) { return std::make_shared<ScriptedBackend>(fixture_script(task, n)); };
}

// ---- runs ----

json to_json(const TrialRecord& t) {
  json j{{"task", std::string(to_string(t.task))}, {"mode", std::string(to_string(t.mode))},
         {"swarm_size", t.swarm_size}, {"seed", t.seed}, {"success", t.success}, {"cycles_used", t.cycles_used},
         {"trace_digest", fmt::format("{:016x}", t.trace_digest)}};
  if (!t.failure.empty()) j["failure"] = t.failure;
  if (!t.lint.empty()) j["lint"] = t.lint;
  return j;
}

json to_json(const BatchResult& b) {
  json trials = json::array();
  for (const auto& t : b.trials) trials.push_back(to_json(t));
  return {{"task", std::string(to_string(b.task))}, {"mode", std::string(to_string(b.mode))},
          {"swarm_size", b.swarm_size}, {"n_runs", b.n_runs}, {"success_rate", b.success_rate},
          {"avg_steps_L", b.avg_steps ? json(*b.avg_steps) : json(nullptr)}, {"trials", trials}};
}

BatchResult batch_result_from_json(const json& j) {
  try {
    const auto task = task_from_string(j.at("task").get<std::string>());
    const auto mode = ablation_from_string(j.at("mode").get<std::string>());
    if (!task || !mode) throw TacosError(Errc::InvalidArgument, "unknown task or mode in results");
    std::vector<TrialRecord> trials;
    for (const auto& t : j.at("trials")) {
      TrialRecord r;
      r.task = *task;
      r.mode = *mode;
      r.swarm_size = j.at("swarm_size").get<std::size_t>();
      r.seed = t.at("seed").get<std::uint64_t>();
      r.success = t.at("success").get<bool>();
      r.cycles_used = t.at("cycles_used").get<int>();
      r.failure = t.value("failure", "");
      r.trace_digest = std::stoull(t.at("trace_digest").get<std::string>(), nullptr, 16);
      if (t.contains("lint")) r.lint = t["lint"].get<std::vector<std::string>>();
      trials.push_back(std::move(r));
    }
    return aggregate(*task, *mode, j.at("swarm_size").get<std::size_t>(), std::move(trials));
  } catch (const json::exception& e) {
    throw TacosError(Errc::InvalidArgument, std::string("malformed results: ") + e.what());
  }
}

BatchResult aggregate(TaskId task, AblationMode mode, std::size_t swarm_size, std::vector<TrialRecord> trials) {
  BatchResult b{task, mode, swarm_size, trials.size(), 0.0, std::nullopt, std::move(trials)};
  std::size_t ok = 0;
  double steps = 0.0;
  for (const auto& t : b.trials) {
    if (!t.success) continue;
    ++ok;
    steps += t.cycles_used;
  }
  if (b.n_runs > 0) b.success_rate = static_cast<double>(ok) / static_cast<double>(b.n_runs);
  if (ok > 0) b.avg_steps = steps / static_cast<double>(ok);
  return b;
}

TrialRecord run_trial(const Scenario& scenario, TaskId task, AblationMode mode, std::size_t swarm_size,
                      std::uint64_t seed, const BackendFactory& backends, const TrialOptions& opts,
                      Trace* trace_out) {
  TrialRecord rec;
  rec.task = task;
  rec.mode = mode;
  rec.swarm_size = swarm_size;
  rec.seed = seed;
  try {
    const TaskSpec spec = task_spec(task);
    SimConfig sc = opts.sim;
    sc.seed = seed;
    sc.swarm = spawn_grid(swarm_size, seed);
    Simulator sim(scenario.world, sc);

    std::shared_ptr<LlmBackend> backend = backends(task, swarm_size);
    const auto* scripted = dynamic_cast<const ScriptedBackend*>(backend.get());
    std::shared_ptr<RecordingBackend> recorder;
    if (opts.lint && scripted) {
      recorder = std::make_shared<RecordingBackend>(backend);
      backend = recorder;
    }

    PipelineConfig pc = opts.base;
    pc.mode = mode;
    pc.supervisor.cycle_period = opts.cycle_period;
    pc.supervisor.max_cycles =
        std::min(opts.max_cycles, static_cast<int>(std::floor(spec.time_budget / opts.cycle_period + 1e-9)));
    Pipeline pipe(backend, scenario.world, pc);

    if (task != TaskId::Task0) {
      const auto pre = pipe.handle({std::string(kTask0Instruction), sim.snapshot().sim_time}, sim);
      if (!pre.report.success) {
        rec.failure = "takeoff preamble failed: " +
                      (pre.report.error ? pre.report.error->describe() : std::string("unknown"));
      }
    }
    if (rec.failure.empty()) {
      TaskContext ctx;
      for (const auto& s : sc.swarm) ctx.uavs.push_back(s.id);
      ctx.from_tick = sim.trace().ticks().empty() ? 0 : sim.trace().ticks().size() - 1;
      const auto res = pipe.handle({spec.instruction, sim.snapshot().sim_time}, sim);
      rec.cycles_used = res.report.cycles_used;
      if (!res.report.success) {
        rec.failure = res.report.error ? res.report.error->describe() : "execution did not complete";
      } else if (!spec.predicate(sim.trace(), scenario.world, ctx)) {
        rec.failure = "success predicate not met";
      }
    }
    rec.success = rec.failure.empty();
    rec.trace_digest = fnv1a(sim.trace().to_jsonl());
    if (recorder) {
      std::vector<std::string> prompts;
      for (const auto& r : recorder->transcript()) prompts.push_back(r.request.last_user());
      rec.lint = lint_script(scripted->rules(), prompts);
    }
    if (trace_out) *trace_out = sim.trace();
  } catch (const std::exception& e) {
    rec.success = false;
    rec.failure = e.what();
  }
  return rec;
}

BatchResult run_batch(const Scenario& scenario, const BatchSpec& spec, const BackendFactory& backends,
                      const TrialOptions& opts) {
  std::vector<TrialRecord> trials;
  trials.reserve(spec.runs);
  for (std::size_t i = 0; i < spec.runs; ++i) {
    trials.push_back(run_trial(scenario, spec.task, spec.mode, spec.swarm_size, spec.base_seed + i, backends, opts));
  }
  return aggregate(spec.task, spec.mode, spec.swarm_size, std::move(trials));
}

// ---- report ----

std::string report_table(const std::vector<BatchResult>& results) {
  std::string out = fmt::format("{:<6} {:<5} {:>4} {:>5} {:>8} {:>6}\n", "task", "mode", "size", "runs", "success", "L");
  for (const auto& b : results) {
    out += fmt::format("{:<6} {:<5} {:>4} {:>5} {:>7.1f}% {:>6}\n", to_string(b.task), to_string(b.mode),
                       b.swarm_size, b.n_runs, 100.0 * b.success_rate,
                       b.avg_steps ? fmt::format("{:.2f}", *b.avg_steps) : std::string("-"));
  }
  return out;
}

std::string report_csv(const std::vector<BatchResult>& results) {
  std::string out = "task,mode,size,runs,success_rate,avg_steps_L\n";
  for (const auto& b : results) {
    out += fmt::format("{},{},{},{},{:.4f},{}\n", to_string(b.task), to_string(b.mode), b.swarm_size, b.n_runs,
                       b.success_rate, b.avg_steps ? fmt::format("{:.4f}", *b.avg_steps) : std::string());
  }
  return out;
}

json plot_data(const std::vector<BatchResult>& results) {
  json groups = json::array();
  std::map<std::pair<TaskId, std::size_t>, std::size_t> index;
  for (const auto& b : results) {
    const auto key = std::make_pair(b.task, b.swarm_size);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, groups.size()).first;
      groups.push_back({{"task", std::string(to_string(b.task))}, {"size", b.swarm_size}, {"bars", json::array()}});
    }
    groups[it->second]["bars"].push_back({{"mode", std::string(to_string(b.mode))},
                                          {"success_rate", b.success_rate},
                                          {"avg_steps_L", b.avg_steps ? json(*b.avg_steps) : json(nullptr)}});
  }
  return {{"metrics", {"success_rate", "avg_steps_L"}}, {"groups", groups}};
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace tacos
