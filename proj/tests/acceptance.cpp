// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tacos/call_format.hpp"
#include "tacos/coordinator.hpp"
#include "tacos/harness.hpp"
#include "tacos/trace.hpp"

#include <httplib.h>  // after Eigen, see service_test.cpp

using namespace tacos;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

const Scenario& urban() {
  static const Scenario s = load_scenario(std::filesystem::path(TACOS_SCENARIO_DIR) / "urban.scn");
  return s;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
  void note(const std::string& s) { notes.push_back(s); }
};

const std::vector<AblationMode> kModes{AblationMode::Full, AblationMode::NoReasoning, AblationMode::NoCoordinator};
const std::vector<std::size_t> kSizes{4, 8, 12};
constexpr std::size_t kRuns = 50;

std::string l_text(const BatchResult& b) { return b.avg_steps ? fmt::format("{:.2f}", *b.avg_steps) : "-"; }

// 1. Task 0, every mode and size, 50 runs: success 1.0 and L exactly 1.
Verdict task0() {
  Verdict o;
  const auto t0 = Clock::now();
  for (auto mode : kModes) {
    for (auto n : kSizes) {
      const auto b = run_batch(urban(), {TaskId::Task0, mode, n, kRuns, 1}, scripted_factory());
      o.check(b.n_runs == kRuns && b.success_rate == 1.0 && b.avg_steps && *b.avg_steps == 1.0,
              fmt::format("{} n={} rate={} L={}", to_string(mode), n, b.success_rate, l_text(b)));
    }
  }
  const double t = seconds_since(t0);
  o.check(t < 60.0, fmt::format("runtime {:.1f} s", t));
  o.note(fmt::format("9 batches x {} runs in {:.1f} s", kRuns, t));
  return o;
}

// 2. Task 2, Full, sizes 4/8/12, 50 runs: success 1.0, L <= 2.
Verdict task2() {
  Verdict o;
  const auto t0 = Clock::now();
  for (auto n : kSizes) {
    const auto b = run_batch(urban(), {TaskId::Task2, AblationMode::Full, n, kRuns, 1}, scripted_factory());
    o.check(b.success_rate == 1.0 && b.avg_steps && *b.avg_steps <= 2.0,
            fmt::format("n={} rate={} L={}", n, b.success_rate, l_text(b)));
    o.note(fmt::format("n={} rate={:.2f} L={}", n, b.success_rate, l_text(b)));
  }
  const double t = seconds_since(t0);
  o.check(t < 300.0, fmt::format("runtime {:.1f} s", t));
  return o;
}

// 3. Reasoning withheld: Task 1 always fails the ordering predicate, Task 2
// still succeeds.
Verdict wor_contrast() {
  Verdict o;
  for (auto n : kSizes) {
    const auto t1 = run_batch(urban(), {TaskId::Task1, AblationMode::NoReasoning, n, kRuns, 1}, scripted_factory());
    const auto t2 = run_batch(urban(), {TaskId::Task2, AblationMode::NoReasoning, n, kRuns, 1}, scripted_factory());
    const auto full = run_batch(urban(), {TaskId::Task1, AblationMode::Full, n, kRuns, 1}, scripted_factory());
    o.check(t1.success_rate == 0.0, fmt::format("w/oR task1 n={} rate={}", n, t1.success_rate));
    o.check(t2.success_rate >= 0.95, fmt::format("w/oR task2 n={} rate={}", n, t2.success_rate));
    // the contrast only means something if the full system does sequence
    o.check(full.success_rate == 1.0, fmt::format("full task1 n={} rate={}", n, full.success_rate));
    for (const auto& t : t1.trials)
      o.check(t.failure == "success predicate not met", "w/oR task1 failed for another reason: " + t.failure);
    o.note(fmt::format("n={}: w/oR task1 {:.2f}, w/oR task2 {:.2f}, full task1 {:.2f}", n, t1.success_rate,
                       t2.success_rate, full.success_rate));
  }
  return o;
}

// Independent audit: recomputes every distance and ellipsoid quadratic form
// straight from the trace.
struct Audit {
  double min_pair = std::numeric_limits<double>::infinity();
  double max_speed = 0.0;
  std::size_t violations = 0;
  std::size_t ticks = 0;
};

Audit audit(const Trace& trace, const WorldState& w, double d_min, double v_max, double dt) {
  Audit a;
  const TickRecord* prev = nullptr;
  for (const auto& tick : trace.ticks()) {
    ++a.ticks;
    if (prev) {
      for (std::size_t i = 0; i < tick.uavs.size(); ++i) {
        const double v = (tick.uavs[i].position - prev->uavs[i].position).norm() / dt;
        a.max_speed = std::max(a.max_speed, v);
        if (v > v_max + 1e-6) ++a.violations;
      }
    }
    prev = &tick;
    for (std::size_t i = 0; i < tick.uavs.size(); ++i) {
      const Vec3& p = tick.uavs[i].position;
      for (int k = 0; k < 3; ++k) {
        if (p[k] < w.bounds.min[k] - 1e-9 || p[k] > w.bounds.max[k] + 1e-9) ++a.violations;
      }
      for (const auto& o : w.obstacles) {
        const Vec3 d = p - o.center();
        if (d.dot(o.shape() * d) <= 1.0) ++a.violations;
      }
      for (std::size_t j = i + 1; j < tick.uavs.size(); ++j) {
        const Vec3 q = tick.uavs[j].position - p;
        const double dist = std::sqrt(q.x() * q.x() + q.y() * q.y() + q.z() * q.z());
        a.min_pair = std::min(a.min_pair, dist);
        if (dist < d_min) ++a.violations;
      }
    }
  }
  return a;
}

bool all_hovering(const SwarmState& s) {
  for (const auto& u : s.uavs)
    if (u.phase != FlightPhase::Hovering) return false;
  return true;
}

// Random points are drawn outside the planner's obstacle repulsion shell so
// that arrival can be checked; closer points are legal but settle off-goal.
double clear_margin() {
  const PlannerConfig pc;
  return pc.obstacle_margin + pc.obstacle_band;
}

// A spawn point is usable only if the climb to takeoff altitude is clear too;
// tree canopies float above free ground.
bool column_clear(const Vec3& p, const WorldState& w) {
  for (double z = 0.0; z <= 4.0; z += 0.25)
    if (point_margin(Vec3(p.x(), p.y(), z), w) <= clear_margin()) return false;
  return true;
}

// 4. Planner safety fuzz: random spawns and random goal rounds in the urban
// world, 50 scenarios per swarm size.
Verdict safety_fuzz() {
  Verdict o;
  const auto t0 = Clock::now();
  const WorldState& w = urban().world;
  constexpr double d_min = 1.0;
  for (auto n : kSizes) {
    Audit total;
    std::size_t sent = 0, accepted = 0, reached = 0;
    for (std::uint64_t s = 0; s < kRuns; ++s) {
      std::mt19937_64 rng(1000 * n + s);
      std::uniform_real_distribution<double> ux(3.0, 97.0), uz(1.0, 14.0);
      auto far_apart = [&](const std::vector<Vec3>& pts, const Vec3& p, double sep) {
        for (const auto& q : pts)
          if ((q - p).norm() < sep) return false;
        return true;
      };
      SimConfig cfg;
      cfg.seed = s;
      std::vector<Vec3> spawns;
      while (spawns.size() < n) {
        const Vec3 p(ux(rng), ux(rng), 0.0);
        if (column_clear(p, w) && far_apart(spawns, p, 2.5 * d_min)) spawns.push_back(p);
      }
      for (std::size_t i = 0; i < n; ++i) cfg.swarm.push_back({callsign_for(i), spawns[i]});
      Simulator sim(w, cfg);
      for (std::size_t i = 0; i < n; ++i) sim.dispatch({callsign_for(i), "arm_takeoff", {}, {}, CallOrigin::SupervisorIssued});
      for (int k = 0; k < 100 && !all_hovering(sim.snapshot()); ++k) sim.advance(1.0);
      o.check(all_hovering(sim.snapshot()), fmt::format("n={} seed={}: takeoff incomplete", n, s));
      for (int round = 0; round < 2; ++round) {
        std::vector<Vec3> goals;
        while (goals.size() < n) {
          const Vec3 g(ux(rng), ux(rng), uz(rng));
          if (point_margin(g, w) > clear_margin() && far_apart(goals, g, 2.5 * d_min)) goals.push_back(g);
        }
        for (std::size_t i = 0; i < n; ++i) {
          const auto r = sim.dispatch({callsign_for(i), "goto", {goals[i].x(), goals[i].y(), goals[i].z()}, {},
                                       CallOrigin::SupervisorIssued});
          ++sent;
          accepted += r.accepted;
        }
        sim.advance(60.0);
        const auto snap = sim.snapshot();
        for (std::size_t i = 0; i < n; ++i) reached += (snap.uavs[i].position - goals[i]).norm() < 0.5;
      }
      const Audit a = audit(sim.trace(), w, d_min, cfg.planner.v_max, cfg.dt);
      total.min_pair = std::min(total.min_pair, a.min_pair);
      total.max_speed = std::max(total.max_speed, a.max_speed);
      total.violations += a.violations;
      total.ticks += a.ticks;
      // the library's own audit has to agree
      const AuditReport lib = audit_trace(sim.trace(), w, d_min, cfg.planner.v_max);
      o.check(lib.clean() == (a.violations == 0), fmt::format("n={} seed={}: audits disagree", n, s));
    }
    o.check(total.violations == 0, fmt::format("n={}: {} violations", n, total.violations));
    o.check(total.min_pair >= d_min, fmt::format("n={}: min pairwise {:.3f} m", n, total.min_pair));
    // an idle swarm would pass the audit trivially
    o.check(accepted == sent, fmt::format("n={}: {}/{} gotos accepted", n, accepted, sent));
    o.check(reached * 10 >= sent * 8, fmt::format("n={}: only {}/{} goals reached", n, reached, sent));
    o.note(fmt::format("n={}: {} scenarios, {} ticks, {}/{} goals reached, min pairwise {:.3f} m, max speed {:.2f} m/s, "
                       "{} violations",
                       n, kRuns, total.ticks, reached, sent, total.min_pair, total.max_speed, total.violations));
  }
  const double t = seconds_since(t0);
  o.check(t < 600.0, fmt::format("runtime {:.1f} s", t));
  return o;
}

// 5. Same inputs twice: bit-identical traces and batch results.
Verdict determinism() {
  Verdict o;
  for (auto task : {TaskId::Task1, TaskId::Task2}) {
    Trace a, b;
    const auto ra = run_trial(urban(), task, AblationMode::Full, 8, 77, scripted_factory(), {}, &a);
    const auto rb = run_trial(urban(), task, AblationMode::Full, 8, 77, scripted_factory(), {}, &b);
    const std::string ja = a.to_jsonl(), jb = b.to_jsonl();
    o.check(!ja.empty() && ja == jb, fmt::format("{} trace differs", to_string(task)));
    o.check(fnv1a(ja) == fnv1a(jb) && ra.trace_digest == rb.trace_digest, "trace hash differs");
    o.note(fmt::format("{} trace {:016x} ({} bytes)", to_string(task), fnv1a(ja), ja.size()));
  }
  const BatchSpec spec{TaskId::Task1, AblationMode::Full, 12, 10, 5};
  const auto b1 = to_json(run_batch(urban(), spec, scripted_factory())).dump();
  const auto b2 = to_json(run_batch(urban(), spec, scripted_factory())).dump();
  o.check(b1 == b2, "batch result differs");
  o.note(fmt::format("batch {:016x} == {:016x}", fnv1a(b1), fnv1a(b2)));
  return o;
}

// Random plans for the grammar round trip.
CoordinatorOutput random_plan(std::mt19937_64& rng) {
  static const std::vector<std::string> words{"alfa", "takes", "off", "then", "flies", "north;", "group", "B",
                                              "waits", "(until", "arrival)", "{json}", "[1,", "2]", "car_3",
                                              "\"quoted\"", "ISSUE", "plan", "reasoning", "é"};
  static const std::vector<std::string> actions{"arm_takeoff", "land", "goto", "orbit", "inspect"};
  std::uniform_int_distribution<int> nlines(1, 4), nwords(1, 12), nwords_pick(0, static_cast<int>(words.size()) - 1),
      ncalls(0, 12), nargs(0, 4), nact(0, static_cast<int>(actions.size()) - 1), coin(0, 3), idx(0, 40);
  std::uniform_real_distribution<double> val(-150.0, 150.0);
  CoordinatorOutput out;
  const int lines = nlines(rng);
  for (int l = 0; l < lines; ++l) {
    if (l) out.reasoning += "\n";
    const int k = nwords(rng);
    for (int i = 0; i < k; ++i) out.reasoning += (i ? " " : "") + words[nwords_pick(rng)];
  }
  const int calls = ncalls(rng);
  for (int c = 0; c < calls; ++c) {
    RawCall rc{callsign_for(idx(rng)).str(), actions[nact(rng)], {}};
    const int a = nargs(rng);
    for (int i = 0; i < a; ++i) {
      switch (coin(rng)) {
        case 0: rc.args.emplace_back(std::round(val(rng))); break;
        case 1: rc.args.emplace_back(std::round(val(rng) * 100.0) / 100.0); break;
        case 2: rc.args.emplace_back(val(rng)); break;
        default: rc.args.emplace_back(fmt::format("car_{}", idx(rng))); break;
      }
    }
    out.calls.push_back(std::move(rc));
  }
  return out;
}

// 6. Grammar round trip, the five validation errors, memory scoping, L over
// successes.
Verdict properties() {
  Verdict o;
  std::mt19937_64 rng(2024);
  int round_trips = 0;
  for (int i = 0; i < 250; ++i) {
    const auto plan = random_plan(rng);
    const auto parsed = parse_output(render_output(plan));
    const bool ok = parsed.ok() && parsed.value() == plan;
    o.check(ok, fmt::format("plan {} did not round-trip", i));
    round_trips += ok;
  }
  o.note(fmt::format("{} plans round-tripped", round_trips));

  SwarmState swarm;
  UavState alfa;
  alfa.id = UavId("alfa");
  alfa.position = Vec3(50, 50, 2);
  alfa.phase = FlightPhase::Hovering;
  swarm.uavs.push_back(alfa);
  const auto reg = ActionRegistry::defaults();
  const std::vector<std::pair<RawCall, Errc>> bad{
      {{"alfa", "barrel_roll", {}}, Errc::UnknownAction},
      {{"zulu", "arm_takeoff", {}}, Errc::UnknownUav},
      {{"alfa", "goto", {50.0, 50.0}}, Errc::ArityMismatch},
      {{"alfa", "goto", {500.0, 50.0, 5.0}}, Errc::OutOfBoundsTarget},
      {{"alfa", "goto", {18.0, 50.0, 2.0}}, Errc::GoalInObstacle},  // inside house_5
  };
  for (const auto& [call, code] : bad) {
    const auto v = validate_call(call, reg, swarm, urban().world);
    o.check(!v.ok() && v.error().code == code, fmt::format("{} not rejected as {}", call.action, to_string(code)));
  }

  // memory must be empty around every execution, including failed ones
  int executions = 0;
  for (std::size_t n : kSizes) {
    for (auto mode : {AblationMode::Full, AblationMode::NoReasoning}) {
      SimConfig sc;
      sc.swarm = spawn_grid(n, 3);
      Simulator sim(urban().world, sc);
      auto rules = fixture_script_all(n);
      PipelineConfig pc;
      pc.mode = mode;
      pc.supervisor.cycle_period = 30.0;
      Pipeline pipe(std::make_shared<ScriptedBackend>(rules), urban().world, pc);
      for (const auto& text : {std::string(kTask0Instruction), std::string(kTask1Instruction),
                               std::string(kTask2Instruction), std::string("Unknown words here.")}) {
        o.check(pipe.supervisor()->memory().empty(), "memory not empty before a plan");
        const auto r = pipe.handle({text, sim.snapshot().sim_time}, sim);
        o.check(pipe.supervisor()->memory().empty(), "memory not empty after a plan");
        if (r.plan) {
          o.check(r.report.memory_empty_at_entry && r.report.memory_empty_at_exit, "report shows memory leak");
          ++executions;
        }
      }
      // a plan that never completes hits the cycle budget, and still clears
      TaskPlan stuck{"wait", {{UavId("alfa"), "goto", {50.0, 95.0, 5.0}, {}, CallOrigin::CoordinatorPlan}}, "X0001",
                     {"stuck", 0.0}};
      Supervisor sup(std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{
                         {"wait", {{Matcher::Kind::Substring, "SUPERVISOR CYCLE"}}, "NOTE: w\nISSUE: []\nDONE: false", {}}}),
                     urban().world, pc.supervisor);
      const auto r = sup.execute_plan(stuck, sim);
      o.check(!r.success && r.error && r.error->code == Errc::CycleBudgetExceeded, "stuck plan did not hit the budget");
      o.check(r.memory_empty_at_entry && r.memory_empty_at_exit && sup.memory().empty(), "stuck plan leaked memory");
      ++executions;
    }
  }
  o.note(fmt::format("memory scoped across {} executions", executions));

  // L over successes: a batch where every other run has no usable backend
  int made = 0;
  BackendFactory mixed = [&](TaskId t, std::size_t n) -> std::shared_ptr<LlmBackend> {
    if (made++ % 2) return std::make_shared<ScriptedBackend>(std::vector<ScriptRule>{});
    return scripted_factory()(t, n);
  };
  const auto b = run_batch(urban(), {TaskId::Task2, AblationMode::Full, 4, 6, 1}, mixed);
  double sum = 0.0;
  int ok = 0;
  for (const auto& t : b.trials)
    if (t.success) sum += t.cycles_used, ++ok;
  o.check(ok == 3 && b.success_rate == 0.5, fmt::format("mixed batch success {}", b.success_rate));
  o.check(b.avg_steps && *b.avg_steps == sum / ok, "L includes failed runs");
  const auto none = aggregate(TaskId::Task1, AblationMode::Full, 4, {b.trials[1], b.trials[3]});
  o.check(!none.avg_steps, "L defined without successes");
  o.note(fmt::format("mixed batch: rate {:.2f}, L {}", b.success_rate, l_text(b)));
  return o;
}

// 7. Record a session against an OpenAI-style stub server, replay it as a
// script, and compare the reports.
Verdict record_replay() {
  Verdict o;
  constexpr std::size_t n = 4;
  httplib::Server stub;
  ScriptedBackend brain(fixture_script_all(n));
  stub.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto r = request_from_json(json::parse(req.body));
      const json body{{"model", "stub"},
                      {"choices", json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", brain.complete(r)}}}}})}};
      res.set_content(body.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(e.what(), "text/plain");
    }
  });
  const int port = stub.bind_to_any_port("127.0.0.1");
  std::thread server([&] { stub.listen_after_bind(); });
  stub.wait_until_ready();

  const auto transcript = std::filesystem::temp_directory_path() / fmt::format("tacos_accept_{}.jsonl", port);
  std::filesystem::remove(transcript);
  auto session = [&](std::shared_ptr<LlmBackend> backend) {
    SimConfig sc;
    sc.swarm = spawn_grid(n, 9);
    Simulator sim(urban().world, sc);
    PipelineConfig pc;
    pc.supervisor.cycle_period = 30.0;
    Pipeline pipe(std::move(backend), urban().world, pc);
    std::vector<std::string> reports;
    for (const auto& text : {std::string(kTask0Instruction), std::string(kTask1Instruction)}) {
      const auto r = pipe.handle({text, sim.snapshot().sim_time}, sim);
      json j = to_json(r.report);
      if (r.plan) j["plan"] = to_json(*r.plan);
      reports.push_back(j.dump());
    }
    return std::make_pair(reports, sim.trace().to_jsonl());
  };

  HttpBackendConfig hc;
  hc.endpoint = fmt::format("http://127.0.0.1:{}/v1", port);
  hc.model_id = "stub";
  auto recorded = session(std::make_shared<RecordingBackend>(std::make_shared<HttpBackend>(hc), transcript));
  stub.stop();
  server.join();

  const auto records = load_transcript(transcript);
  auto replayed = session(std::make_shared<ScriptedBackend>(script_from_transcript(records)));
  o.check(!records.empty(), "nothing recorded");
  o.check(recorded.first.size() == 2 && recorded.first == replayed.first, "replayed reports differ");
  o.check(recorded.second == replayed.second, "replayed trace differs");
  o.check(recorded.first.size() == 2 && json::parse(recorded.first[1])["success"].get<bool>(), "recorded session failed");
  o.note(fmt::format("{} exchanges recorded over HTTP, reports {:016x}", records.size(),
                     fnv1a(recorded.first[0] + recorded.first[1])));
  std::filesystem::remove(transcript);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1 task 0 reproduction", task0},
      {"2 task 2 reproduction", task2},
      {"3 w/oR contrast", wor_contrast},
      {"4 planner safety fuzz", safety_fuzz},
      {"5 determinism", determinism},
      {"6 parser and property suite", properties},
      {"7 record and replay", record_replay},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = Clock::now();
    Verdict o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    std::printf("%s criterion %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0));
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
