#include "tacos/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "tacos/harness.hpp"
#include "tacos/telemetry.hpp"

namespace tacos {

using json = nlohmann::json;

SessionRequest session_request_from_json(const json& j) {
  SessionRequest r;
  if (!j.is_object()) throw TacosError(Errc::InvalidArgument, "session request must be a JSON object");
  try {
    if (j.contains("scenario")) r.scenario = j.at("scenario").get<std::string>();
    if (j.contains("swarm_size")) {
      const int n = j.at("swarm_size").get<int>();
      if (n < 1 || n > 64) throw TacosError(Errc::InvalidArgument, "swarm_size must be in 1..64");
      r.swarm_size = static_cast<std::size_t>(n);
    }
    if (j.contains("seed")) r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mode")) {
      auto m = ablation_from_string(j.at("mode").get<std::string>());
      if (!m) throw TacosError(Errc::InvalidArgument, "mode must be full, woc or wor");
      r.mode = *m;
    }
  } catch (const json::exception& e) {
    throw TacosError(Errc::InvalidArgument, e.what());
  }
  return r;
}

namespace {

struct StreamEvent {
  std::uint64_t seq = 0;
  std::string type;
  json data;
};

json error_json(const Error& e) {
  return {{"error", {{"code", std::string(to_string(e.code))}, {"message", e.message}}}};
}

int status_for(Errc c) {
  switch (c) {
    case Errc::NotFound: return 404;
    case Errc::BusyWithPlan: return 409;
    case Errc::ParseFailure:
    case Errc::MissingPlan:
    case Errc::MissingReasoning:
    case Errc::MalformedCall:
    case Errc::ValidationFailure: return 422;
    case Errc::BackendUnreachable:
    case Errc::BadResponse:
    case Errc::NoRuleMatched:
    case Errc::TokenLimitExceeded: return 502;
    default: return 400;
  }
}

json plan_json(const TaskPlan& p) {
  json j = to_json(p);
  json calls = json::array();
  for (const auto& c : p.calls) calls.push_back(c.describe());
  j["call_text"] = calls;
  return j;
}

json cycle_json(const CycleRecord& c) {
  json issued = json::array();
  for (const auto& i : c.issued) {
    json ji{{"call", i.call}, {"accepted", i.accepted}};
    if (i.reason) ji["reason"] = std::string(to_string(i.reason->code));
    issued.push_back(ji);
  }
  return {{"index", c.index}, {"sim_time", c.sim_time}, {"note", c.note}, {"done", c.done}, {"issued", issued}};
}

}  // namespace

// One pilot session. cmd_mu serializes commands; mu guards the shared
// fields read by handlers and streams.
struct Session {
  std::string id;
  Scenario scenario;
  AblationMode mode = AblationMode::Full;
  std::unique_ptr<Simulator> sim;
  std::shared_ptr<RecordingBackend> recorder;
  std::unique_ptr<Pipeline> pipe;
  std::shared_ptr<std::atomic<bool>> cancel = std::make_shared<std::atomic<bool>>(false);

  std::mutex cmd_mu;
  std::thread worker;

  std::mutex mu;
  std::condition_variable cv;
  bool busy = false;
  std::optional<TaskPlan> plan;
  std::optional<ExecutionReport> report;
  std::deque<StreamEvent> events;  // bounded backlog for streams
  std::uint64_t next_seq = 1;

  void publish(std::string type, json data) {
    {
      std::lock_guard lk(mu);
      events.push_back({next_seq++, std::move(type), std::move(data)});
      while (events.size() > 256) events.pop_front();
    }
    cv.notify_all();
  }

  void join() {
    if (worker.joinable()) worker.join();
  }
};

struct Service::Impl {
  ServiceConfig cfg;
  SessionBackendFactory backends;
  httplib::Server server;
  std::thread server_thread;
  std::atomic<bool> stopping{false};

  std::mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  int session_counter = 0;

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lk(sessions_mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw TacosError(Errc::NotFound, "no session '" + id + "'");
    return it->second;
  }

  std::shared_ptr<Session> create(const SessionRequest& req) {
    auto s = std::make_shared<Session>();
    {
      std::lock_guard lk(sessions_mu);
      s->id = fmt::format("s{}", ++session_counter);
    }
    s->scenario = load_scenario(req.scenario.value_or(cfg.scenario));
    s->mode = req.mode;
    SimConfig sc = cfg.sim;
    sc.seed = req.seed;
    sc.swarm = spawn_grid(req.swarm_size, req.seed);
    s->sim = std::make_unique<Simulator>(s->scenario.world, sc);
    std::optional<std::filesystem::path> file;
    if (cfg.transcript_dir) {
      std::filesystem::create_directories(*cfg.transcript_dir);
      file = *cfg.transcript_dir / (s->id + ".jsonl");
    }
    s->recorder = std::make_shared<RecordingBackend>(backends(s->id), file);
    PipelineConfig pc = cfg.pipeline;
    pc.mode = req.mode;
    pc.supervisor.cancel = s->cancel;
    s->pipe = std::make_unique<Pipeline>(s->recorder, s->scenario.world, pc);
    std::lock_guard lk(sessions_mu);
    sessions[s->id] = s;
    return s;
  }

  std::string last_model_text(Session& s) {
    const auto t = s.recorder->transcript();
    return t.empty() ? "" : t.back().response;
  }

  void run_async(const std::shared_ptr<Session>& s, std::function<ExecutionReport()> body) {
    {
      std::lock_guard lk(s->mu);
      s->busy = true;
      s->report.reset();
    }
    s->cancel->store(false);
    s->worker = std::thread([s, body = std::move(body)] {
      ExecutionReport r;
      try {
        r = body();
      } catch (const std::exception& e) {
        r.error = Error{Errc::InvalidArgument, e.what()};
      }
      {
        std::lock_guard lk(s->mu);
        s->report = r;
        s->busy = false;
      }
      s->publish("report", to_json(r));
    });
  }

  // POST /sessions/{id}/instruction
  std::pair<int, json> instruct(const std::string& id, const json& body) {
    auto s = find(id);
    if (!body.is_object() || !body.contains("text") || !body["text"].is_string())
      throw TacosError(Errc::InvalidArgument, "body must be {\"text\": \"...\"}");
    const std::string text = body["text"].get<std::string>();
    const bool preempt = body.value("preempt", false);

    std::lock_guard cmd(s->cmd_mu);
    bool busy;
    {
      std::lock_guard lk(s->mu);
      busy = s->busy;
    }
    if (busy) {
      if (!preempt) throw TacosError(Errc::BusyWithPlan, "a plan is still executing; resend with preempt to cancel it");
      s->cancel->store(true);
      s->join();
      std::string cancelled;
      {
        std::lock_guard lk(s->mu);
        if (s->plan) cancelled = s->plan->plan_id;
      }
      s->publish("cancelled", {{"plan_id", cancelled}, {"by", text}});
    }
    s->join();

    const Instruction instr{text, s->sim->snapshot().sim_time};
    if (s->mode == AblationMode::NoCoordinator) {
      {
        std::lock_guard lk(s->mu);
        s->plan.reset();
      }
      s->publish("instruction", {{"text", text}, {"mode", "woc"}});
      run_async(s, [s, instr] { return s->pipe->handle(instr, *s->sim, hooks(s)).report; });
      return {202, {{"mode", "woc"}, {"plan_id", nullptr}, {"reasoning", ""}, {"calls", json::array()}}};
    }

    TaskPlan plan;
    try {
      plan = s->pipe->make_plan(instr, s->sim->snapshot());
    } catch (const TacosError& e) {
      json err = error_json(e.error());
      err["model_text"] = last_model_text(*s);
      return {status_for(e.code()), err};
    }
    {
      std::lock_guard lk(s->mu);
      s->plan = plan;
    }
    s->publish("plan", plan_json(plan));
    run_async(s, [s, plan] { return s->pipe->execute(plan, *s->sim, hooks(s)); });
    json out = plan_json(plan);
    out["mode"] = std::string(to_string(s->mode));
    return {202, out};
  }

  static ExecutionHooks hooks(const std::shared_ptr<Session>& s) {
    ExecutionHooks h;
    std::weak_ptr<Session> w = s;
    h.on_cycle = [w](const CycleRecord& c) {
      if (auto sp = w.lock()) sp->publish("cycle", cycle_json(c));
    };
    return h;
  }

  json state(const std::string& id) {
    auto s = find(id);
    json j = telemetry_json(s->sim->snapshot());
    std::lock_guard lk(s->mu);
    j["session_id"] = s->id;
    j["busy"] = s->busy;
    j["mode"] = std::string(to_string(s->mode));
    j["plan_id"] = s->plan ? json(s->plan->plan_id) : json(nullptr);
    return j;
  }

  json world_json(const Session& s) { return scenario_to_json(s.scenario); }

  void stream(const std::string& id, httplib::Response& res) {
    auto s = find(id);
    auto last_time = std::make_shared<double>(-1.0);
    auto sent_first = std::make_shared<bool>(false);
    std::uint64_t start_seq;
    {
      std::lock_guard lk(s->mu);
      start_seq = s->next_seq;
    }
    auto cursor = std::make_shared<std::uint64_t>(start_seq);
    const auto period = std::chrono::duration<double>(cfg.heartbeat);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, s, last_time, sent_first, cursor, period](std::size_t, httplib::DataSink& sink) {
          auto write = [&](const std::string& type, std::uint64_t seq, const json& data) {
            std::string msg;
            if (seq) msg += fmt::format("id: {}\n", seq);
            msg += fmt::format("event: {}\ndata: {}\n\n", type, data.dump());
            return sink.write(msg.data(), msg.size());
          };
          auto snapshot = [&] {
            const SwarmState snap = s->sim->snapshot();
            if (snap.sim_time < *last_time) return true;  // never go back in time
            *last_time = snap.sim_time;
            return write("snapshot", 0, telemetry_json(snap));
          };
          if (stopping) return false;
          if (!*sent_first) {
            *sent_first = true;
            return snapshot();
          }
          std::vector<StreamEvent> batch;
          {
            std::unique_lock lk(s->mu);
            s->cv.wait_for(lk, period, [&] {
              return stopping.load() || (!s->events.empty() && s->events.back().seq >= *cursor);
            });
            for (const auto& e : s->events)
              if (e.seq >= *cursor) batch.push_back(e);
          }
          if (stopping) return false;
          for (const auto& e : batch) {
            if (!write(e.type, e.seq, e.data)) return false;
            *cursor = e.seq + 1;
          }
          return snapshot();
        });
  }

  void routes() {
    auto guard = [](httplib::Response& res, const std::function<std::pair<int, json>()>& fn) {
      try {
        auto [status, body] = fn();
        res.status = status;
        res.set_content(body.dump(), "application/json");
      } catch (const TacosError& e) {
        res.status = status_for(e.code());
        res.set_content(error_json(e.error()).dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(error_json({Errc::InvalidArgument, e.what()}).dump(), "application/json");
      }
    };
    auto parse_body = [](const httplib::Request& req) {
      if (req.body.empty()) return json::object();
      try {
        return json::parse(req.body);
      } catch (const json::exception& e) {
        throw TacosError(Errc::InvalidArgument, std::string("body is not JSON: ") + e.what());
      }
    };

    server.Post("/sessions", [this, guard, parse_body](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] {
        auto s = create(session_request_from_json(parse_body(req)));
        return std::pair{201, json{{"session_id", s->id},
                                   {"mode", std::string(to_string(s->mode))},
                                   {"world", world_json(*s)},
                                   {"state", telemetry_json(s->sim->snapshot())}}};
      });
    });
    server.Post(R"(/sessions/([^/]+)/instruction)",
                [this, guard, parse_body](const httplib::Request& req, httplib::Response& res) {
                  guard(res, [&] { return instruct(req.matches[1], parse_body(req)); });
                });
    server.Get(R"(/sessions/([^/]+)/state)", [this, guard](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] { return std::pair{200, state(req.matches[1])}; });
    });
    server.Get(R"(/sessions/([^/]+)/plan)", [this, guard](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] {
        auto s = find(req.matches[1]);
        std::lock_guard lk(s->mu);
        if (!s->plan) throw TacosError(Errc::NotFound, "no plan yet");
        return std::pair{200, plan_json(*s->plan)};
      });
    });
    server.Get(R"(/sessions/([^/]+)/report)", [this, guard](const httplib::Request& req, httplib::Response& res) {
      guard(res, [&] {
        auto s = find(req.matches[1]);
        std::lock_guard lk(s->mu);
        if (!s->report) throw TacosError(Errc::NotFound, s->busy ? "plan still executing" : "no report yet");
        return std::pair{200, to_json(*s->report)};
      });
    });
    server.Get(R"(/sessions/([^/]+)/telemetry)", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        stream(req.matches[1], res);
      } catch (const TacosError& e) {
        res.status = status_for(e.code());
        res.set_content(error_json(e.error()).dump(), "application/json");
      }
    });
  }
};

Service::Service(ServiceConfig cfg, SessionBackendFactory backends) : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
  impl_->backends = std::move(backends);
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw TacosError(Errc::InvalidArgument, fmt::format("cannot bind {}:{}", host, port));
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw TacosError(Errc::InvalidArgument, fmt::format("cannot listen on {}:{}", host, port));
}

void Service::stop() {
  if (impl_->stopping.exchange(true)) return;
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lk(impl_->sessions_mu);
    for (auto& [id, s] : impl_->sessions) all.push_back(s);
  }
  for (auto& s : all) {
    s->cancel->store(true);
    s->cv.notify_all();
  }
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
  for (auto& s : all) s->join();
}

bool Service::wait_idle(const std::string& session_id, double timeout_s) {
  auto s = impl_->find(session_id);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  for (;;) {
    {
      std::lock_guard lk(s->mu);
      if (!s->busy) return true;
    }
    if (std::chrono::steady_clock::now() > deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

}  // namespace tacos
