#include "tacos/supervisor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <chrono>
#include <thread>

#include <fmt/format.h>

#include "tacos/call_format.hpp"
#include "tacos/planner.hpp"
#include "tacos/telemetry.hpp"

namespace tacos {

using nlohmann::json;

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Accepted: return "in progress";
    case Outcome::Rejected: return "rejected";
    case Outcome::Completed: return "completed";
  }
  return "in progress";
}

std::string_view to_string(Completion c) {
  switch (c) {
    case Completion::None: return "none";
    case Completion::SupervisorDone: return "supervisor_done";
    case Completion::AllCallsCompleted: return "all_calls_completed";
  }
  return "none";
}

// ---- memory ----

void ScopedMemory::begin(const std::string& plan_id) {
  clear();
  plan_id_ = plan_id;
}

void ScopedMemory::clear() {
  plan_id_.clear();
  issued_.clear();
  cycle_index_ = 0;
}

void ScopedMemory::record(int cycle, ActionCall call, Outcome outcome, std::optional<Error> reason) {
  issued_.push_back({cycle, std::move(call), outcome, std::move(reason)});
}

namespace {

bool achieved(const ActionCall& call, const UavState& u, const KinematicLimits& limits) {
  if (call.action == "arm_takeoff") return u.phase == FlightPhase::Hovering || u.phase == FlightPhase::Navigating;
  if (call.action == "land") return u.phase == FlightPhase::Grounded;
  if (call.action == "goto" && call.args.size() == 3) {
    const Vec3 goal(call.args[0], call.args[1], call.args[2]);
    return u.phase == FlightPhase::Hovering && (u.position - goal).norm() <= limits.arrival_tolerance + 1e-6;
  }
  return false;
}

int rank(Outcome o) {
  switch (o) {
    case Outcome::Rejected: return 0;
    case Outcome::Accepted: return 1;
    case Outcome::Completed: return 2;
  }
  return 0;
}

}  // namespace

void ScopedMemory::refresh(const SwarmState& swarm, const KinematicLimits& limits) {
  for (auto& r : issued_) {
    if (r.outcome != Outcome::Accepted) continue;
    const UavState* u = swarm.find(r.call.target);
    if (u && achieved(r.call, *u, limits)) r.outcome = Outcome::Completed;
  }
}

bool ScopedMemory::completed(const ActionCall& call) const { return status_of(call) == Outcome::Completed; }

std::optional<Outcome> ScopedMemory::status_of(const ActionCall& call) const {
  std::optional<Outcome> best;
  for (const auto& r : issued_) {
    if (!r.call.same_command(call)) continue;
    if (!best || rank(r.outcome) > rank(*best)) best = r.outcome;
  }
  return best;
}

std::string ScopedMemory::digest(const std::vector<ActionCall>* plan_calls) const {
  int issued = 0, done = 0, running = 0, rejected = 0;
  auto tally = [&](std::optional<Outcome> s) {
    if (!s) return;
    ++issued;
    if (*s == Outcome::Completed) ++done;
    if (*s == Outcome::Accepted) ++running;
    if (*s == Outcome::Rejected) ++rejected;
  };
  std::string out;
  if (plan_calls) {
    for (const auto& c : *plan_calls) tally(status_of(c));
    out = fmt::format("status: issued {}/{} plan calls; {} completed; {} in progress; {} rejected\n", issued,
                      plan_calls->size(), done, running, rejected);
  } else {
    std::vector<const ActionCall*> distinct;
    for (const auto& r : issued_) {
      if (std::none_of(distinct.begin(), distinct.end(), [&](const ActionCall* c) { return c->same_command(r.call); })) {
        distinct.push_back(&r.call);
      }
    }
    for (const auto* c : distinct) tally(status_of(*c));
    out = fmt::format("status: issued {} calls; {} completed; {} in progress; {} rejected\n", issued, done, running,
                      rejected);
  }
  if (issued_.empty()) out += "(nothing issued yet)\n";
  for (const auto& r : issued_) {
    out += fmt::format("cycle {}: {} -> {}", r.cycle, r.call.describe(), to_string(r.outcome));
    if (r.reason) out += fmt::format(" ({})", to_string(r.reason->code));
    out += "\n";
  }
  return out;
}

// ---- output grammar ----

namespace {

const std::vector<std::string_view> kSupervisorLabels{"NOTE", "ISSUE", "DONE", "REASONING", "PLAN"};

}  // namespace

Result<SupervisorOutput> parse_supervisor_output(std::string_view text, bool allow_final_batch) {
  SupervisorOutput out;
  const Section issue = extract_section(text, "ISSUE", kSupervisorLabels);
  const Section done = extract_section(text, "DONE", kSupervisorLabels);
  if (!issue.found && !done.found) return Error{Errc::MissingPlan, "no ISSUE: or DONE: section"};
  out.note = extract_section(text, "NOTE", kSupervisorLabels).body;
  if (done.found) {
    std::string word;
    for (char c : done.body) {
      if (!std::isalpha(static_cast<unsigned char>(c))) break;
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (word != "true" && word != "false") {
      return Error{Errc::ParseFailure, "DONE: must be true or false, got '" + done.body + "'"};
    }
    out.done = word == "true";
  }
  if (issue.found) {
    auto calls = parse_call_array(issue.body);
    if (!calls.ok()) return calls.error();
    out.issue = std::move(calls).value();
  }
  if (out.done && !out.issue.empty() && !allow_final_batch) {
    return Error{Errc::ParseFailure, "DONE: true together with calls to issue"};
  }
  return out;
}

std::string render_supervisor_output(const SupervisorOutput& out) {
  return fmt::format("NOTE: {}\nISSUE:\n{}\nDONE: {}\n", out.note, render_call_array(out.issue),
                     out.done ? "true" : "false");
}

// ---- prompts ----

namespace {

constexpr std::string_view kSupervisorRole =
    "ROLE\n"
    "You are the Supervisor of a swarm of UAVs. The Coordinator has turned a pilot instruction into a "
    "task plan: a set of API calls, plus reasoning that says in which order they have to happen. You "
    "work in cycles. Each cycle you receive the plan, fresh telemetry and a record of what you have "
    "already issued for this plan, and you decide which calls to send now.\n"
    "Rules:\n"
    "- Respect every ordering stated in the reasoning. A call that has to wait stays unissued until "
    "the memory shows the calls it depends on as completed.\n"
    "- Never issue again a call the memory shows as completed or in progress.\n"
    "- Only issue a call if the UAV's current phase allows the action.\n"
    "- When every plan call is completed, answer DONE: true with an empty ISSUE list.\n";

constexpr std::string_view kSupervisorFormat =
    "OUTPUT FORMAT\n"
    "NOTE: <one line on what you are doing now and why>\n"
    "ISSUE:\n"
    "<JSON array of calls to send now, [] to wait; each element is {\"uav\": \"<callsign>\", \"action\": "
    "\"<action>\", \"args\": [...]}>\n"
    "DONE: <true or false>\n";

constexpr std::string_view kMergedRole =
    "ROLE\n"
    "You control a swarm of UAVs on behalf of a pilot who gives instructions in natural language. You "
    "work in cycles. Each cycle you receive the current instruction, fresh telemetry and a record of the "
    "calls you have already issued for it, and you decide which API calls to send now.\n"
    "Rules:\n"
    "- Work out which UAVs are involved and in which order they have to act; calls that have to wait "
    "stay unissued until the calls they depend on are completed.\n"
    "- Never issue again a call the memory shows as completed or in progress.\n"
    "- Only issue a call if the UAV's current phase allows the action.\n"
    "- When the instruction has been carried out, answer DONE: true with an empty ISSUE list. If the "
    "calls you are sending now are the last ones the instruction needs, you may send them with DONE: "
    "true; the instruction then ends as soon as they complete.\n";

constexpr std::string_view kMergedFormat =
    "OUTPUT FORMAT\n"
    "REASONING: <which UAVs do what, and in which order>\n"
    "NOTE: <one line on what you are doing now>\n"
    "ISSUE:\n"
    "<JSON array of calls to send now, [] to wait; each element is {\"uav\": \"<callsign>\", \"action\": "
    "\"<action>\", \"args\": [...]}>\n"
    "DONE: <true or false>\n";

}  // namespace

std::string build_supervisor_config_prompt(const std::string& api_doc, const WorldState& world) {
  return fmt::format("{}\n{}\n{}\n{}", kSupervisorRole, kSupervisorFormat, api_doc, render_world_block(world));
}

std::string build_merged_config_prompt(const std::string& api_doc, const WorldState& world) {
  return fmt::format("{}\n{}\n{}\n{}", kMergedRole, kMergedFormat, api_doc, render_world_block(world));
}

std::string build_cycle_message(const TaskPlan& plan, const SwarmState& swarm, const ScopedMemory& mem,
                                const SupervisorConfig& cfg) {
  std::string out = fmt::format("SUPERVISOR CYCLE {} (budget {})\nPLAN {}\nREASONING:\n{}\nPLAN CALLS:\n",
                                mem.cycle_index() + 1, cfg.max_cycles, plan.plan_id,
                                cfg.include_reasoning ? plan.reasoning : "(withheld)");
  if (plan.calls.empty()) out += "(none)\n";
  for (std::size_t i = 0; i < plan.calls.size(); ++i) out += fmt::format("{}. {}\n", i + 1, plan.calls[i].describe());
  out += fmt::format("SWARM STATE\n{}\nMEMORY\n{}", render_telemetry(swarm), mem.digest(&plan.calls));
  return out;
}

std::string build_merged_cycle_message(const Instruction& instr, int cycle, const SwarmState& swarm,
                                       const ScopedMemory& mem, const SupervisorConfig& cfg) {
  return fmt::format("CYCLE {} (budget {})\nINSTRUCTION: {}\nSWARM STATE\n{}\nMEMORY\n{}", cycle, cfg.max_cycles,
                     instr.text, render_telemetry(swarm), mem.digest(nullptr));
}

// ---- cycle ----

namespace {

ActionCall loose_call(const RawCall& raw) {
  ActionCall c;
  c.target = UavId(raw.uav);
  c.action = raw.action;
  c.origin = CallOrigin::SupervisorIssued;
  for (const auto& a : raw.args) {
    if (const auto* d = std::get_if<double>(&a)) c.args.push_back(*d);
    else c.labels.push_back(std::get<std::string>(a));
  }
  return c;
}

// Queries the model over messages until the answer parses; messages gains
// the failed answers and corrective prompts along the way.
SupervisorOutput ask(LlmBackend& backend, std::vector<ChatMessage>& messages, const SupervisorConfig& cfg,
                     std::string* answer = nullptr, bool allow_final_batch = false) {
  CompletionRequest req;
  req.model_id = cfg.model_id;
  req.temperature = cfg.temperature;
  req.max_tokens = cfg.max_tokens;
  for (int attempt = 0;; ++attempt) {
    req.messages = messages;
    const std::string text = backend.complete(req);
    auto r = parse_supervisor_output(text, allow_final_batch);
    if (r.ok()) {
      if (answer) *answer = text;
      return std::move(r).value();
    }
    if (attempt >= cfg.parse_retries) {
      throw TacosError(Errc::ParseFailure, fmt::format("{} after {} attempts; last answer:\n{}",
                                                       r.error().describe(), attempt + 1, text));
    }
    messages.push_back({Role::Assistant, text});
    messages.push_back({Role::User, fmt::format("Your answer could not be used ({}). Reply again with NOTE:, "
                                                "ISSUE: (a JSON array) and DONE: sections.",
                                                r.error().describe())});
  }
}

CycleDecision decide(const SupervisorOutput& out, int cycle, const SwarmState& swarm, const WorldState& world,
                     ScopedMemory& mem, const SupervisorConfig& cfg) {
  CycleDecision d;
  d.note = out.note;
  d.done = out.done;
  for (const auto& raw : out.issue) {
    auto v = validate_call(raw, cfg.registry, swarm, world, CallOrigin::SupervisorIssued);
    if (v.ok()) {
      d.issue.push_back(std::move(v).value());
    } else {
      mem.record(cycle, loose_call(raw), Outcome::Rejected, v.error());
    }
  }
  return d;
}

}  // namespace

CycleDecision run_cycle(const TaskPlan& plan, const SwarmState& swarm, const WorldState& world, ScopedMemory& mem,
                        LlmBackend& backend, const std::string& config_prompt, const SupervisorConfig& cfg) {
  if (mem.plan_id() != plan.plan_id) {
    throw TacosError(Errc::InvalidArgument,
                     fmt::format("memory belongs to plan '{}', not '{}'", mem.plan_id(), plan.plan_id));
  }
  if (mem.cycle_index() >= cfg.max_cycles) {
    throw TacosError(Errc::CycleBudgetExceeded, fmt::format("plan {} used all {} cycles", plan.plan_id, cfg.max_cycles));
  }
  std::vector<ChatMessage> messages{{Role::System, config_prompt},
                                    {Role::User, build_cycle_message(plan, swarm, mem, cfg)}};
  mem.next_cycle();
  const SupervisorOutput out = ask(backend, messages, cfg);
  return decide(out, mem.cycle_index(), swarm, world, mem, cfg);
}

// ---- execution loop ----

namespace {

void advance(Simulator& sim, const SupervisorConfig& cfg) {
  if (cfg.realtime_factor <= 0.0) {
    sim.advance(cfg.cycle_period);
    return;
  }
  const double dt = sim.config().dt;
  const auto ticks = static_cast<long>(std::ceil(cfg.cycle_period / dt - 1e-9));
  const auto pause = std::chrono::duration<double>(dt / cfg.realtime_factor);
  for (long k = 0; k < ticks; ++k) {
    if (cfg.cancel && cfg.cancel->load()) return;
    sim.advance(dt);
    std::this_thread::sleep_for(pause);
  }
}

struct Loop {
  Simulator& sim;
  const SupervisorConfig& cfg;
  ScopedMemory& mem;
  const std::vector<ActionCall>* plan_calls;  // null for the merged agent
  const ExecutionHooks& hooks;
  ExecutionReport& report;

  // decide_fn(snapshot) runs one model cycle and returns its decision.
  void run(const std::function<CycleDecision(const SwarmState&)>& decide_fn) {
    for (;;) {
      if (cfg.cancel && cfg.cancel->load()) {
        report.error = Error{Errc::Cancelled, "execution cancelled"};
        return;
      }
      if (mem.cycle_index() >= cfg.max_cycles) {
        report.error = Error{Errc::CycleBudgetExceeded, fmt::format("no completion within {} cycles", cfg.max_cycles)};
        return;
      }
      SwarmState snap = sim.snapshot();
      mem.refresh(snap, sim.limits());
      const std::size_t before = mem.issued().size();
      CycleDecision d;
      try {
        d = decide_fn(snap);
      } catch (const TacosError& e) {
        report.error = e.error();
        return;
      }
      const int cycle = mem.cycle_index();
      CycleRecord rec{cycle, snap.sim_time, d.note, d.done, {}};
      for (std::size_t i = before; i < mem.issued().size(); ++i) {
        const auto& r = mem.issued()[i];
        TraceEvent ev;
        ev.time = snap.sim_time;
        ev.kind = EventKind::Validation;
        ev.call = r.call;
        ev.uav = r.call.target;
        ev.accepted = false;
        ev.reason = r.reason ? std::optional(r.reason->code) : std::nullopt;
        ev.detail = r.reason ? r.reason->message : "";
        sim.record_event(ev);
        rec.issued.push_back({r.call.describe(), false, r.reason, false, false});
      }
      if (d.done && d.issue.empty()) {
        report.success = true;
        report.completion = Completion::SupervisorDone;
        finish_cycle(std::move(rec));
        return;
      }
      for (auto& call : d.issue) {
        IssuedCall ic;
        ic.call = call.describe();
        ic.duplicate = mem.completed(call);
        ic.out_of_plan = plan_calls && std::none_of(plan_calls->begin(), plan_calls->end(),
                                                     [&](const ActionCall& p) { return p.same_command(call); });
        const auto outcome = sim.dispatch(call);
        ic.accepted = outcome.accepted;
        ic.reason = outcome.reason;
        mem.record(cycle, call, outcome.accepted ? Outcome::Accepted : Outcome::Rejected, outcome.reason);
        if (ic.duplicate) ++report.duplicate_issues;
        if (ic.out_of_plan) report.out_of_plan.push_back(ic.call);
        rec.issued.push_back(std::move(ic));
      }
      finish_cycle(std::move(rec));
      advance(sim, cfg);
      snap = sim.snapshot();
      mem.refresh(snap, sim.limits());
      if (plan_calls && cfg.completion_probe && all_plan_calls_completed() && all_goals_reached(snap)) {
        report.success = true;
        report.completion = Completion::AllCallsCompleted;
        return;
      }
      // A final batch (merged agent only) ends the instruction once it has landed.
      if (d.done && all_issued_completed() && all_goals_reached(snap)) {
        report.success = true;
        report.completion = Completion::SupervisorDone;
        return;
      }
    }
  }

  bool all_issued_completed() const {
    return std::all_of(mem.issued().begin(), mem.issued().end(),
                       [&](const MemoryRecord& r) { return r.outcome == Outcome::Rejected || mem.completed(r.call); });
  }

  bool all_plan_calls_completed() const {
    return std::all_of(plan_calls->begin(), plan_calls->end(), [&](const ActionCall& c) { return mem.completed(c); });
  }

  void finish_cycle(CycleRecord rec) {
    if (hooks.on_cycle) hooks.on_cycle(rec);
    report.cycles.push_back(std::move(rec));
  }
};

void open_report(ExecutionReport& report, const std::string& id, ScopedMemory& mem, Simulator& sim) {
  report.plan_id = id;
  report.memory_empty_at_entry = mem.empty();
  mem.begin(id);
  report.start_time = sim.snapshot().sim_time;
  report.first_tick = sim.trace().ticks().empty() ? 0 : sim.trace().ticks().size() - 1;
}

void close_report(ExecutionReport& report, ScopedMemory& mem, Simulator& sim) {
  report.cycles_used = mem.cycle_index();
  report.end_time = sim.snapshot().sim_time;
  report.last_tick = sim.trace().ticks().empty() ? 0 : sim.trace().ticks().size() - 1;
  if (report.error) report.success = false;
  mem.clear();
  report.memory_empty_at_exit = mem.empty();
}

}  // namespace

Supervisor::Supervisor(std::shared_ptr<LlmBackend> backend, const WorldState& world, SupervisorConfig cfg)
    : backend_(std::move(backend)),
      cfg_(std::move(cfg)),
      config_prompt_(build_supervisor_config_prompt(render_api_doc(cfg_.registry), world)) {}

ExecutionReport Supervisor::execute_plan(const TaskPlan& plan, Simulator& sim, const ExecutionHooks& hooks) {
  ExecutionReport report;
  open_report(report, plan.plan_id, memory_, sim);

  // Calls were validated when the plan was made; the world or swarm may have
  // changed since, and hand-built plans skip the Coordinator entirely.
  const SwarmState snap = sim.snapshot();
  for (const auto& c : plan.calls) {
    auto v = validate_call(c.to_raw(), cfg_.registry, snap, sim.world(), CallOrigin::CoordinatorPlan);
    if (v.ok()) continue;
    TraceEvent ev;
    ev.time = snap.sim_time;
    ev.kind = EventKind::Validation;
    ev.call = c;
    ev.uav = c.target;
    ev.accepted = false;
    ev.reason = v.error().code;
    ev.detail = v.error().message;
    sim.record_event(ev);
    if (!report.error) report.error = v.error();
  }

  if (!report.error) {
    if (plan.calls.empty()) {
      report.success = true;
      report.completion = Completion::AllCallsCompleted;
    } else {
      Loop loop{sim, cfg_, memory_, &plan.calls, hooks, report};
      loop.run([&](const SwarmState& s) {
        return run_cycle(plan, s, sim.world(), memory_, *backend_, config_prompt_, cfg_);
      });
    }
  }
  close_report(report, memory_, sim);
  return report;
}

MergedAgent::MergedAgent(std::shared_ptr<LlmBackend> backend, const WorldState& world, SupervisorConfig cfg)
    : backend_(std::move(backend)), cfg_(std::move(cfg)) {
  conversation_.push_back({Role::System, build_merged_config_prompt(render_api_doc(cfg_.registry), world)});
}

ExecutionReport MergedAgent::execute_instruction(const Instruction& instr, Simulator& sim,
                                                 const ExecutionHooks& hooks) {
  ++instructions_;
  ScopedMemory mem;
  ExecutionReport report;
  open_report(report, fmt::format("M{:04}", instructions_), mem, sim);
  Loop loop{sim, cfg_, mem, nullptr, hooks, report};
  loop.run([&](const SwarmState& s) {
    conversation_.push_back({Role::User, build_merged_cycle_message(instr, mem.cycle_index() + 1, s, mem, cfg_)});
    mem.next_cycle();
    std::string answer;
    const SupervisorOutput out = ask(*backend_, conversation_, cfg_, &answer, true);
    conversation_.push_back({Role::Assistant, answer});
    return decide(out, mem.cycle_index(), s, sim.world(), mem, cfg_);
  });
  close_report(report, mem, sim);
  return report;
}

// ---- report ----

json to_json(const ExecutionReport& r) {
  json cycles = json::array();
  for (const auto& c : r.cycles) {
    json issued = json::array();
    for (const auto& i : c.issued) {
      json ji{{"call", i.call}, {"accepted", i.accepted}, {"out_of_plan", i.out_of_plan}, {"duplicate", i.duplicate}};
      if (i.reason) ji["reason"] = {{"code", std::string(to_string(i.reason->code))}, {"message", i.reason->message}};
      issued.push_back(ji);
    }
    cycles.push_back({{"index", c.index}, {"sim_time", c.sim_time}, {"note", c.note}, {"done", c.done}, {"issued", issued}});
  }
  json j{{"plan_id", r.plan_id},
         {"success", r.success},
         {"completion", std::string(to_string(r.completion))},
         {"cycles_used", r.cycles_used},
         {"cycles", cycles},
         {"duplicate_issues", r.duplicate_issues},
         {"out_of_plan", r.out_of_plan},
         {"start_time", r.start_time},
         {"end_time", r.end_time},
         {"trace_ticks", {r.first_tick, r.last_tick}},
         {"memory_empty_at_entry", r.memory_empty_at_entry},
         {"memory_empty_at_exit", r.memory_empty_at_exit}};
  j["error"] = r.error ? json{{"code", std::string(to_string(r.error->code))}, {"message", r.error->message}} : json(nullptr);
  return j;
}

}  // namespace tacos
