#include <gtest/gtest.h>

#include <fmt/format.h>

#include "tacos/call_format.hpp"
#include "tacos/planner.hpp"
#include "tacos/scenario.hpp"
#include "tacos/supervisor.hpp"

using namespace tacos;

namespace {

const WorldState& urban() {
  static const WorldState w = load_scenario(std::filesystem::path(TACOS_SCENARIO_DIR) / "urban.scn").world;
  return w;
}

SimConfig grid(int n, double z = 0.0) {
  SimConfig cfg;
  for (int i = 0; i < n; ++i) cfg.swarm.push_back({callsign_for(i), {44.0 + 4.0 * (i % 4), 46.0 + 4.0 * (i / 4), z}});
  return cfg;
}

ActionCall call(const std::string& uav, const std::string& action, std::vector<double> args = {}) {
  return {UavId(uav), action, std::move(args), {}, CallOrigin::CoordinatorPlan};
}

TaskPlan plan_of(std::vector<ActionCall> calls, std::string reasoning = "Each UAV does its call.") {
  return {std::move(reasoning), std::move(calls), "P0001", {"test", 0.0}};
}

TaskPlan takeoff_plan(int n) {
  std::vector<ActionCall> calls;
  for (int i = 0; i < n; ++i) calls.push_back(call(callsign_for(i).str(), "arm_takeoff"));
  return plan_of(calls, "Every UAV takes off; no ordering needed.");
}

std::string issue(const std::vector<ActionCall>& calls, const std::string& note = "go") {
  SupervisorOutput out{note, {}, false};
  for (const auto& c : calls) out.issue.push_back(c.to_raw());
  return render_supervisor_output(out);
}

const std::string kDone = "NOTE: all calls completed\nISSUE: []\nDONE: true";
const std::string kWait = "NOTE: waiting\nISSUE: []\nDONE: false";

ScriptRule when(const std::string& substring, const std::string& response) {
  return {substring, {{Matcher::Kind::Substring, substring}}, response, {}};
}

SupervisorConfig quick(double period = 30.0) {
  SupervisorConfig cfg;
  cfg.cycle_period = period;
  return cfg;
}

}  // namespace

TEST(ParseSupervisor, Sections) {
  auto out = parse_supervisor_output(
                 "NOTE: first group\nISSUE:\n```json\n[{\"uav\": \"alfa\", \"action\": \"land\", \"args\": []}]\n```\nDONE: false")
                 .value();
  EXPECT_EQ(out.note, "first group");
  ASSERT_EQ(out.issue.size(), 1u);
  EXPECT_FALSE(out.done);
  EXPECT_TRUE(parse_supervisor_output("DONE: True.").value().done);
  EXPECT_EQ(parse_supervisor_output("").error().code, Errc::MissingPlan);
  EXPECT_EQ(parse_supervisor_output("DONE: maybe").error().code, Errc::ParseFailure);
  EXPECT_EQ(parse_supervisor_output("ISSUE: [{\"uav\": \"alfa\", \"action\": \"land\", \"args\": []}]\nDONE: true")
                .error()
                .code,
            Errc::ParseFailure);
  const SupervisorOutput o{"n", {{"bravo", "goto", {1.0, 2.5, 3.0}}}, false};
  EXPECT_EQ(parse_supervisor_output(render_supervisor_output(o)).value(), o);
}

TEST(Memory, DigestAndRefresh) {
  ScopedMemory mem;
  EXPECT_TRUE(mem.empty());
  mem.begin("P0001");
  const auto plan = takeoff_plan(2).calls;
  EXPECT_EQ(mem.digest(&plan), "status: issued 0/2 plan calls; 0 completed; 0 in progress; 0 rejected\n(nothing issued yet)\n");
  mem.next_cycle();
  mem.record(1, plan[0], Outcome::Accepted);
  mem.record(1, call("bravo", "goto", {1, 2, 3}), Outcome::Rejected, Error{Errc::InvalidPhaseTransition, "x"});
  SwarmState s;
  UavState a;
  a.id = UavId("alfa");
  a.phase = FlightPhase::Hovering;
  s.uavs.push_back(a);
  mem.refresh(s, KinematicLimits{});
  EXPECT_TRUE(mem.completed(plan[0]));
  EXPECT_EQ(mem.digest(&plan),
            "status: issued 1/2 plan calls; 1 completed; 0 in progress; 0 rejected\n"
            "cycle 1: alfa.arm_takeoff() -> completed\n"
            "cycle 1: bravo.goto(1, 2, 3) -> rejected (InvalidPhaseTransition)\n");
  EXPECT_EQ(mem.digest(nullptr).substr(0, mem.digest(nullptr).find('\n')),
            "status: issued 2 calls; 1 completed; 0 in progress; 1 rejected");
  mem.clear();
  EXPECT_TRUE(mem.empty());
}

TEST(RunCycle, TakeoffAllFromGround) {
  const auto plan = takeoff_plan(4);
  ScriptedBackend b({when("status: issued 0/4 plan calls", issue(plan.calls)),
                     when("status: issued 4/4 plan calls; 4 completed", kDone)});
  Simulator sim(urban(), grid(4));
  ScopedMemory mem;
  mem.begin(plan.plan_id);
  const auto cfg = quick();
  const auto prompt = build_supervisor_config_prompt(render_api_doc(cfg.registry), urban());
  auto d = run_cycle(plan, sim.snapshot(), urban(), mem, b, prompt, cfg);
  EXPECT_FALSE(d.done);
  ASSERT_EQ(d.issue.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(d.issue[i].action, "arm_takeoff");
    EXPECT_EQ(d.issue[i].origin, CallOrigin::SupervisorIssued);
    mem.record(1, d.issue[i], sim.dispatch(d.issue[i]).accepted ? Outcome::Accepted : Outcome::Rejected);
  }
  EXPECT_EQ(mem.cycle_index(), 1);

  // Next cycle, everyone hovering.
  sim.advance(30.0);
  mem.refresh(sim.snapshot(), sim.limits());
  d = run_cycle(plan, sim.snapshot(), urban(), mem, b, prompt, cfg);
  EXPECT_TRUE(d.done);
  EXPECT_TRUE(d.issue.empty());
}

TEST(RunCycle, SequencedPlanWithholdsSecondGroup) {
  const auto plan = plan_of({call("alfa", "goto", {48, 80, 5}), call("bravo", "goto", {52, 80, 5}),
                             call("charlie", "goto", {48, 22, 5}), call("delta", "goto", {52, 22, 5})},
                            "Group A first; send group B only after group A has arrived.");
  const std::vector<ActionCall> group_a(plan.calls.begin(), plan.calls.begin() + 2);
  ScriptedBackend b({{"first", {{Matcher::Kind::Substring, "status: issued 0/4"}, {Matcher::Kind::Substring, "only after group A"}},
                      issue(group_a), {}}});
  Simulator sim(urban(), grid(4, 2.0));
  ScopedMemory mem;
  mem.begin(plan.plan_id);
  const auto d = run_cycle(plan, sim.snapshot(), urban(), mem, b, "sys", quick());
  ASSERT_EQ(d.issue.size(), 2u);
  EXPECT_EQ(d.issue[0].target.str(), "alfa");
  EXPECT_EQ(d.issue[1].target.str(), "bravo");
}

TEST(RunCycle, InvalidIssuedCallsGoToMemory) {
  const auto plan = takeoff_plan(1);
  ScriptedBackend b({when("", "ISSUE: [{\"uav\": \"zulu\", \"action\": \"arm_takeoff\", \"args\": []},"
                              " {\"uav\": \"alfa\", \"action\": \"arm_takeoff\", \"args\": []}]")});
  Simulator sim(urban(), grid(1));
  ScopedMemory mem;
  mem.begin(plan.plan_id);
  const auto d = run_cycle(plan, sim.snapshot(), urban(), mem, b, "sys", quick());
  ASSERT_EQ(d.issue.size(), 1u);
  ASSERT_EQ(mem.issued().size(), 1u);
  EXPECT_EQ(mem.issued()[0].reason->code, Errc::UnknownUav);
}

TEST(RunCycle, BudgetAndPlanMismatch) {
  const auto plan = takeoff_plan(1);
  ScriptedBackend b({when("", kWait)});
  Simulator sim(urban(), grid(1));
  ScopedMemory mem;
  EXPECT_THROW(run_cycle(plan, sim.snapshot(), urban(), mem, b, "sys", quick()), TacosError);
  mem.begin(plan.plan_id);
  auto cfg = quick();
  cfg.max_cycles = 2;
  run_cycle(plan, sim.snapshot(), urban(), mem, b, "sys", cfg);
  run_cycle(plan, sim.snapshot(), urban(), mem, b, "sys", cfg);
  try {
    run_cycle(plan, sim.snapshot(), urban(), mem, b, "sys", cfg);
    FAIL();
  } catch (const TacosError& e) {
    EXPECT_EQ(e.code(), Errc::CycleBudgetExceeded);
  }
}

TEST(ExecutePlan, TakeoffCompletesInOneCycle) {
  const auto plan = takeoff_plan(4);
  auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{
      when("status: issued 0/4 plan calls", issue(plan.calls)), when("status: issued 4/4 plan calls; 4 completed", kDone)});
  Simulator sim(urban(), grid(4));
  Supervisor sup(b, urban(), quick());
  EXPECT_TRUE(sup.memory().empty());
  const auto r = sup.execute_plan(plan, sim);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.cycles_used, 1);
  EXPECT_EQ(r.completion, Completion::AllCallsCompleted);
  EXPECT_TRUE(r.memory_empty_at_entry);
  EXPECT_TRUE(r.memory_empty_at_exit);
  EXPECT_TRUE(sup.memory().empty());
  EXPECT_EQ(b->calls(), 1u);
  for (const auto& u : sim.snapshot().uavs) EXPECT_EQ(u.phase, FlightPhase::Hovering);
  EXPECT_EQ(r.duplicate_issues, 0);
  EXPECT_TRUE(r.out_of_plan.empty());
}

TEST(ExecutePlan, WithoutProbeTheDoneClaimCostsACycle) {
  const auto plan = takeoff_plan(4);
  auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{
      when("status: issued 0/4 plan calls", issue(plan.calls)), when("status: issued 4/4 plan calls; 4 completed", kDone)});
  Simulator sim(urban(), grid(4));
  auto cfg = quick();
  cfg.completion_probe = false;
  const auto r = Supervisor(b, urban(), cfg).execute_plan(plan, sim);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.cycles_used, 2);
  EXPECT_EQ(r.completion, Completion::SupervisorDone);
}

TEST(ExecutePlan, EightCarsWithinTwoCycles) {
  std::vector<ActionCall> calls;
  auto cars = urban().entities_of_kind(EntityKind::Car);
  for (std::size_t i = 0; i < cars.size(); ++i) {
    const auto& c = cars[i]->position;
    calls.push_back(call(callsign_for(static_cast<int>(i / 2)).str(), "goto", {c.x(), c.y(), 2.0}));
  }
  const auto plan = plan_of(calls, "Each UAV inspects two cars, one after the other.");
  std::vector<ActionCall> first, second;
  for (std::size_t i = 0; i < calls.size(); ++i) (i % 2 ? second : first).push_back(calls[i]);
  auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{
      when("status: issued 0/8 plan calls", issue(first)),
      when("status: issued 4/8 plan calls; 4 completed", issue(second)),
      when("status: issued 8/8 plan calls; 8 completed", kDone)});
  Simulator sim(urban(), grid(4, 2.0));
  const auto r = Supervisor(b, urban(), quick()).execute_plan(plan, sim);
  EXPECT_TRUE(r.success) << to_json(r).dump(2);
  EXPECT_LE(r.cycles_used, 2);
  for (const auto* car : cars) {
    bool seen = false;
    for (const auto& t : sim.trace().ticks()) {
      for (const auto& u : t.uavs) seen |= (u.position - car->position).norm() <= 2.0;
    }
    EXPECT_TRUE(seen) << car->id;
  }
}

TEST(ExecutePlan, GoalInsideObstacleFailsWithTraceEvent) {
  const auto plan = plan_of({call("alfa", "goto", {15, 15, 1})});
  auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{when("", kWait)});
  Simulator sim(urban(), grid(1, 2.0));
  const auto r = Supervisor(b, urban(), quick()).execute_plan(plan, sim);
  EXPECT_FALSE(r.success);
  ASSERT_TRUE(r.error.has_value());
  EXPECT_EQ(r.error->code, Errc::GoalInObstacle);
  EXPECT_EQ(r.cycles_used, 0);
  ASSERT_FALSE(sim.trace().events().empty());
  EXPECT_EQ(sim.trace().events().back().reason, Errc::GoalInObstacle);
  EXPECT_EQ(b->calls(), 0u);
}

TEST(ExecutePlan, LivelockHitsCycleBudget) {
  const auto plan = takeoff_plan(2);
  auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{when("", kWait)});
  Simulator sim(urban(), grid(2));
  Supervisor sup(b, urban(), quick());
  const auto r = sup.execute_plan(plan, sim);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.error->code, Errc::CycleBudgetExceeded);
  EXPECT_EQ(r.cycles_used, 12);
  EXPECT_EQ(b->calls(), 12u);
  EXPECT_TRUE(sup.memory().empty());
}

TEST(ExecutePlan, ParseFailureEndsInFailedReport) {
  const auto plan = takeoff_plan(2);
  auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{when("", "I am not sure.")});
  Simulator sim(urban(), grid(2));
  Supervisor sup(b, urban(), quick());
  const auto r = sup.execute_plan(plan, sim);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.error->code, Errc::ParseFailure);
  EXPECT_EQ(r.cycles_used, 1);
  EXPECT_EQ(b->calls(), 3u);
  EXPECT_TRUE(sup.memory().empty());
}

TEST(ExecutePlan, DuplicatesAndOutOfPlanCallsAreReported) {
  const auto plan = takeoff_plan(1);
  auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{
      when("status: issued 0/1", issue(plan.calls)),
      // Re-issues the completed takeoff and adds an unplanned goto.
      when("status: issued 1/1 plan calls; 1 completed", issue({plan.calls[0], call("alfa", "goto", {44, 50, 3})})),
  });
  Simulator sim(urban(), grid(1));
  auto cfg = quick();
  cfg.completion_probe = false;
  cfg.max_cycles = 2;
  const auto r = Supervisor(b, urban(), cfg).execute_plan(plan, sim);
  EXPECT_EQ(r.duplicate_issues, 1);
  ASSERT_EQ(r.out_of_plan.size(), 1u);
  EXPECT_EQ(r.out_of_plan[0], "alfa.goto(44, 50, 3)");
  ASSERT_EQ(r.cycles.size(), 2u);
  EXPECT_FALSE(r.cycles[1].issued[0].accepted);  // already hovering
  EXPECT_EQ(r.cycles[1].issued[0].reason->code, Errc::InvalidPhaseTransition);
  EXPECT_TRUE(r.cycles[1].issued[1].accepted);
}

TEST(ExecutePlan, EmptyPlanNeedsNoCycles) {
  auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{});
  Simulator sim(urban(), grid(1));
  const auto r = Supervisor(b, urban(), quick()).execute_plan(plan_of({}, "Refused: nothing to do."), sim);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.cycles_used, 0);
}

TEST(ExecutePlan, ReasoningWithheldWhenConfigured) {
  const auto plan = takeoff_plan(1);
  auto rec = std::make_shared<RecordingBackend>(std::make_shared<ScriptedBackend>(
      std::vector<ScriptRule>{when("status: issued 0/1", issue(plan.calls))}));
  Simulator sim(urban(), grid(1));
  auto cfg = quick();
  cfg.include_reasoning = false;
  Supervisor(rec, urban(), cfg).execute_plan(plan, sim);
  const auto prompt = rec->transcript().at(0).request.last_user();
  EXPECT_NE(prompt.find("REASONING:\n(withheld)\n"), std::string::npos);
  EXPECT_EQ(prompt.find(plan.reasoning), std::string::npos);
  EXPECT_EQ(prompt.find("INSTRUCTION"), std::string::npos);
}

TEST(ExecutePlan, ReportIsDeterministic) {
  auto run = [] {
    const auto plan = takeoff_plan(3);
    auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{when("status: issued 0/3", issue(plan.calls))});
    Simulator sim(urban(), grid(3));
    const auto r = Supervisor(b, urban(), quick()).execute_plan(plan, sim);
    return to_json(r).dump() + sim.trace().to_jsonl();
  };
  EXPECT_EQ(run(), run());
}

TEST(MergedAgent, OneRoleOneGrowingConversation) {
  std::vector<ActionCall> takeoffs;
  for (int i = 0; i < 4; ++i) takeoffs.push_back(call(callsign_for(i).str(), "arm_takeoff"));
  auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{
      {"up", {{Matcher::Kind::Substring, "INSTRUCTION: take off"}, {Matcher::Kind::Substring, "status: issued 0 calls"}},
       "REASONING: all four take off\n" + issue(takeoffs), {}},
      {"up_done", {{Matcher::Kind::Substring, "INSTRUCTION: take off"}, {Matcher::Kind::Substring, "status: issued 4 calls; 4 completed"}},
       kDone, {}},
      {"down", {{Matcher::Kind::Substring, "INSTRUCTION: alfa land"}, {Matcher::Kind::Substring, "status: issued 0 calls"}},
       issue({call("alfa", "land")}), {}},
      {"down_done", {{Matcher::Kind::Substring, "INSTRUCTION: alfa land"}, {Matcher::Kind::Substring, "1 completed"}},
       kDone, {}}});
  Simulator sim(urban(), grid(4));
  MergedAgent agent(b, urban(), quick());
  EXPECT_EQ(agent.llm_roles(), 1u);
  const auto r1 = agent.execute_instruction({"take off", 0.0}, sim);
  EXPECT_TRUE(r1.success);
  EXPECT_EQ(r1.cycles_used, 2);
  EXPECT_EQ(r1.completion, Completion::SupervisorDone);
  const auto n1 = agent.conversation().size();
  EXPECT_EQ(n1, 5u);  // system + 2 x (user, assistant)
  const auto r2 = agent.execute_instruction({"alfa land", 60.0}, sim);
  EXPECT_TRUE(r2.success);
  EXPECT_EQ(agent.conversation().size(), n1 + 4);
  EXPECT_EQ(agent.conversation()[1].content.substr(0, 7), "CYCLE 1");
  EXPECT_EQ(sim.snapshot().uavs[0].phase, FlightPhase::Grounded);
}

TEST(MergedAgent, FinalBatchEndsOnceItCompletes) {
  std::vector<ActionCall> takeoffs;
  for (int i = 0; i < 4; ++i) takeoffs.push_back(call(callsign_for(i).str(), "arm_takeoff"));
  SupervisorOutput last{"last calls", {}, true};
  for (const auto& c : takeoffs) last.issue.push_back(c.to_raw());
  const std::string text = render_supervisor_output(last);
  EXPECT_FALSE(parse_supervisor_output(text).ok());
  ASSERT_TRUE(parse_supervisor_output(text, true).ok());

  auto b = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{when("status: issued 0 calls", text)});
  Simulator sim(urban(), grid(4));
  MergedAgent agent(b, urban(), quick());
  const auto r = agent.execute_instruction({"take off", 0.0}, sim);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.cycles_used, 1);
  EXPECT_EQ(r.completion, Completion::SupervisorDone);
  for (const auto& u : sim.snapshot().uavs) EXPECT_EQ(u.phase, FlightPhase::Hovering);

  // a final batch that has not landed after one period keeps the loop going
  auto slow = std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{
      when("status: issued 0 calls", render_supervisor_output({"go far", {{"alfa", "goto", {50.0, 95.0, 5.0}}}, true})),
      when("status: issued 1 calls; 1 completed", kDone),
      when("in progress", kWait)});
  Simulator sim2(urban(), grid(4, 2.0));
  for (int i = 0; i < 4; ++i) sim2.dispatch(call(callsign_for(i).str(), "arm_takeoff"));
  sim2.advance(5.0);
  MergedAgent agent2(slow, urban(), quick(5.0));
  const auto r2 = agent2.execute_instruction({"alfa north", 5.0}, sim2);
  EXPECT_TRUE(r2.success);
  EXPECT_GT(r2.cycles_used, 1);
}
