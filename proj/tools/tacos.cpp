// tacos: command-line front end.
//
//   tacos run      one instruction (or a sequence) against a fresh simulator
//   tacos bench    seeded batches over tasks, modes and swarm sizes
//   tacos serve    HTTP service with the telemetry stream
//   tacos plot     rebuild report and plot data from a results file
//   tacos fixture  write the scripted fixture for a task and swarm size
//
// A model backend is picked in this order: --replay, --script, --live (or
// TACOS_ENDPOINT set), then the built-in fixture scripts.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tacos/harness.hpp"
#include "tacos/service.hpp"
#include "tacos/trace.hpp"

using namespace tacos;
using json = nlohmann::json;

namespace {

struct BackendOptions {
  std::string script;
  std::string replay;
  std::string record;
  bool live = false;
  std::string endpoint;
  std::string model;
  std::string api_key;
};

void add_backend_options(CLI::App* app, BackendOptions& b) {
  app->add_option("--script", b.script, "scripted backend rules (JSON)");
  app->add_option("--replay", b.replay, "replay a recorded transcript (JSONL)");
  app->add_option("--record", b.record, "record every model exchange to this JSONL file");
  app->add_flag("--live", b.live, "use the HTTP backend (TACOS_ENDPOINT, TACOS_MODEL, TACOS_API_KEY)");
  app->add_option("--endpoint", b.endpoint, "OpenAI-compatible base URL")->envname("TACOS_ENDPOINT");
  app->add_option("--model", b.model, "model id")->envname("TACOS_MODEL");
  app->add_option("--api-key", b.api_key, "bearer token")->envname("TACOS_API_KEY");
}

bool uses_http(const BackendOptions& b) { return b.script.empty() && b.replay.empty() && (b.live || !b.endpoint.empty()); }

// fallback builds the fixture script when nothing else is configured.
std::shared_ptr<LlmBackend> make_backend(const BackendOptions& b, const std::function<std::vector<ScriptRule>()>& fallback,
                                         const std::string& record_path) {
  std::shared_ptr<LlmBackend> out;
  if (!b.replay.empty()) {
    out = std::make_shared<ScriptedBackend>(script_from_transcript(load_transcript(b.replay)));
  } else if (!b.script.empty()) {
    out = std::make_shared<ScriptedBackend>(load_script(b.script));
  } else if (uses_http(b)) {
    if (b.endpoint.empty()) throw TacosError(Errc::InvalidArgument, "--live needs TACOS_ENDPOINT or --endpoint");
    HttpBackendConfig cfg;
    cfg.endpoint = b.endpoint;
    cfg.model_id = b.model;
    cfg.api_key = b.api_key;
    out = std::make_shared<HttpBackend>(cfg);
  } else {
    out = std::make_shared<ScriptedBackend>(fallback());
  }
  if (!record_path.empty()) out = std::make_shared<RecordingBackend>(out, std::filesystem::path(record_path));
  return out;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw TacosError(Errc::InvalidArgument, "cannot write " + p.string());
  out << text;
}

void write_reports(const std::vector<BatchResult>& results, const std::filesystem::path& dir) {
  json all = json::array();
  for (const auto& b : results) all.push_back(to_json(b));
  write_file(dir / "results.json", all.dump(2) + "\n");
  write_file(dir / "report.txt", report_table(results));
  write_file(dir / "report.csv", report_csv(results));
  write_file(dir / "plot_data.json", plot_data(results).dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TACOS: natural-language control of a simulated UAV swarm"};
  app.require_subcommand(1);

  // ---- run ----
  auto* run = app.add_subcommand("run", "run instructions against a fresh simulator and print the reports");
  std::string scenario_path = "scenarios/urban.scn";
  std::vector<std::string> instructions;
  std::string mode_name = "full";
  std::size_t size = 4;
  std::uint64_t seed = 1;
  double period = 30.0;
  int max_cycles = 12;
  std::string trace_out, trajectories_out, report_out;
  BackendOptions backend;
  run->add_option("--scenario", scenario_path, "scenario file")->capture_default_str();
  run->add_option("--instruction,-i", instructions, "instruction text; repeat for a sequence")->required();
  run->add_option("--mode", mode_name, "full, woc or wor")->capture_default_str()->check(CLI::IsMember({"full", "woc", "wor"}));
  run->add_option("--size", size, "swarm size")->capture_default_str()->check(CLI::Range(1, 64));
  run->add_option("--seed", seed, "spawn jitter seed")->capture_default_str();
  run->add_option("--cycle-period", period, "simulated seconds per Supervisor cycle")->capture_default_str();
  run->add_option("--max-cycles", max_cycles, "Supervisor cycle budget")->capture_default_str();
  run->add_option("--trace", trace_out, "write the trace as JSONL");
  run->add_option("--trajectories", trajectories_out, "write speed-coloured trajectories as CSV");
  run->add_option("--report", report_out, "write the reports as JSON");
  add_backend_options(run, backend);

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "seeded batches with success rate and L");
  std::vector<std::string> tasks{"0"}, modes{"full"};
  std::vector<std::size_t> sizes{4};
  std::size_t runs = 50;
  std::string out_dir = "bench_out";
  bench->add_option("--task", tasks, "0, 1 or 2 (repeatable)")->capture_default_str();
  bench->add_option("--mode", modes, "full, woc or wor (repeatable)")->capture_default_str();
  bench->add_option("--size", sizes, "swarm sizes")->capture_default_str();
  bench->add_option("--runs", runs, "runs per setting")->capture_default_str();
  bench->add_option("--seed", seed, "seed of the first run")->capture_default_str();
  bench->add_option("--scenario", scenario_path, "scenario file")->capture_default_str();
  bench->add_option("--cycle-period", period, "simulated seconds per Supervisor cycle")->capture_default_str();
  bench->add_option("--out-dir", out_dir, "where results and plot data go")->capture_default_str();
  add_backend_options(bench, backend);

  // ---- serve ----
  auto* serve = app.add_subcommand("serve", "HTTP service for the pilot console");
  std::string host = "127.0.0.1";
  int port = 8080;
  double realtime = 1.0;
  std::string transcripts;
  serve->add_option("--scenario", scenario_path, "default scenario")->capture_default_str();
  serve->add_option("--host", host, "listen address")->capture_default_str();
  serve->add_option("--port", port, "listen port")->capture_default_str();
  serve->add_option("--cycle-period", period, "simulated seconds per Supervisor cycle")->capture_default_str();
  serve->add_option("--realtime", realtime, "simulated seconds per wall second; 0 runs flat out")->capture_default_str();
  serve->add_option("--transcripts", transcripts, "directory for per-session transcripts");
  add_backend_options(serve, backend);

  // ---- plot ----
  auto* plot = app.add_subcommand("plot", "rebuild report and plot data from results.json");
  std::string results_path;
  plot->add_option("results", results_path, "results.json written by bench")->required()->check(CLI::ExistingFile);
  plot->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

  // ---- fixture ----
  auto* fixture = app.add_subcommand("fixture", "write the scripted fixture for a task");
  std::string fixture_task = "0", fixture_out;
  fixture->add_option("--task", fixture_task, "0, 1, 2 or all")->capture_default_str();
  fixture->add_option("--size", size, "swarm size")->capture_default_str();
  fixture->add_option("--out", fixture_out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const Scenario scenario = load_scenario(scenario_path);
      SimConfig sc;
      sc.seed = seed;
      sc.swarm = spawn_grid(size, seed);
      Simulator sim(scenario.world, sc);
      PipelineConfig pc;
      pc.mode = *ablation_from_string(mode_name);
      pc.supervisor.cycle_period = period;
      pc.supervisor.max_cycles = max_cycles;
      pc.supervisor.model_id = backend.model;
      Pipeline pipe(make_backend(backend, [&] { return fixture_script_all(size); }, backend.record), scenario.world, pc);
      json reports = json::array();
      bool ok = true;
      for (const auto& text : instructions) {
        const auto res = pipe.handle({text, sim.snapshot().sim_time}, sim);
        json j = to_json(res.report);
        if (res.plan) j["plan"] = to_json(*res.plan);
        reports.push_back(j);
        ok = ok && res.report.success;
        const std::size_t first = res.report.cycles.empty() ? 0 : res.report.cycles.front().issued.size();
        std::cerr << fmt::format("{} [{}] {} after {} cycle(s), first cycle issued {} call(s)\n", res.report.plan_id,
                                 mode_name, res.report.success ? "completed" : "failed", res.report.cycles_used, first);
        if (!res.report.success) break;
      }
      const json out{{"mode", mode_name}, {"size", size}, {"seed", seed}, {"reports", reports}};
      std::cout << out.dump(2) << "\n";
      if (!trace_out.empty()) write_file(trace_out, sim.trace().to_jsonl());
      if (!trajectories_out.empty())
        write_file(trajectories_out, export_trajectories(sim.trace(), sc.planner.v_max));
      if (!report_out.empty()) write_file(report_out, out.dump(2) + "\n");
      return ok ? 0 : 1;
    }

    if (*bench) {
      const Scenario scenario = load_scenario(scenario_path);
      BackendFactory factory;
      if (uses_http(backend) || !backend.script.empty() || !backend.replay.empty()) {
        factory = [&](TaskId, std::size_t) { return make_backend(backend, {}, ""); };
      } else {
        factory = scripted_factory();
      }
      TrialOptions opts;
      opts.cycle_period = period;
      opts.base.supervisor.model_id = backend.model;
      std::vector<BatchResult> results;
      for (const auto& t : tasks) {
        const auto task = task_from_string(t);
        if (!task) throw TacosError(Errc::InvalidArgument, "unknown task '" + t + "'");
        for (const auto& m : modes) {
          const auto mode = ablation_from_string(m);
          if (!mode) throw TacosError(Errc::InvalidArgument, "unknown mode '" + m + "'");
          for (auto n : sizes) {
            results.push_back(run_batch(scenario, {*task, *mode, n, runs, seed}, factory, opts));
            std::cerr << report_table({results.back()}).substr(report_table({}).size());
          }
        }
      }
      write_reports(results, out_dir);
      std::cout << report_table(results);
      return 0;
    }

    if (*serve) {
      ServiceConfig cfg;
      cfg.scenario = scenario_path;
      load_scenario(cfg.scenario);  // fail early on a bad path
      cfg.pipeline.supervisor.cycle_period = period;
      cfg.pipeline.supervisor.realtime_factor = realtime;
      cfg.pipeline.supervisor.model_id = backend.model;
      if (!transcripts.empty()) cfg.transcript_dir = transcripts;
      Service svc(cfg, [&](const std::string&) { return make_backend(backend, [] { return fixture_script_all(4); }, ""); });
      std::cerr << fmt::format("tacos serving on http://{}:{}\n", host, port);
      svc.listen(host, port);
      return 0;
    }

    if (*plot) {
      std::ifstream in(results_path);
      const json all = json::parse(in);
      std::vector<BatchResult> results;
      for (const auto& j : all) results.push_back(batch_result_from_json(j));
      write_reports(results, out_dir);
      std::cout << report_table(results);
      return 0;
    }

    if (*fixture) {
      std::vector<ScriptRule> rules;
      if (fixture_task == "all") {
        rules = fixture_script_all(size);
      } else {
        const auto task = task_from_string(fixture_task);
        if (!task) throw TacosError(Errc::InvalidArgument, "unknown task '" + fixture_task + "'");
        rules = fixture_script(*task, size);
      }
      const std::string text = script_to_json(rules).dump(2) + "\n";
      if (fixture_out.empty()) std::cout << text;
      else write_file(fixture_out, text);
      return 0;
    }
  } catch (const TacosError& e) {
    std::cerr << "tacos: " << to_string(e.code()) << ": " << e.error().message << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "tacos: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
