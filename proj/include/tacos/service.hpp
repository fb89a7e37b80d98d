#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "tacos/pipeline.hpp"
#include "tacos/scenario.hpp"

namespace tacos {

struct SessionRequest {
  std::optional<std::filesystem::path> scenario;  // default: ServiceConfig::scenario
  std::size_t swarm_size = 4;
  std::uint64_t seed = 1;
  AblationMode mode = AblationMode::Full;
};

SessionRequest session_request_from_json(const nlohmann::json& j);

struct ServiceConfig {
  std::filesystem::path scenario;
  PipelineConfig pipeline;  // cycle period and pacing live in pipeline.supervisor
  SimConfig sim;            // swarm is filled per session
  double heartbeat = 0.2;   // seconds between telemetry snapshots on the stream
  std::optional<std::filesystem::path> transcript_dir;  // one JSONL file per session
};

/// Builds the model backend for a new session.
using SessionBackendFactory = std::function<std::shared_ptr<LlmBackend>(const std::string& session_id)>;

/// HTTP front end. Each session owns a simulator, a pipeline and one worker
/// thread that runs the active plan; request handlers only read snapshots
/// or start and cancel that worker.
///
///   POST /sessions                    {scenario?, swarm_size?, seed?, mode?} -> 201 {session_id, ...}
///   POST /sessions/{id}/instruction   {text, preempt?} -> 202 {plan_id, reasoning, calls}
///   GET  /sessions/{id}/state         telemetry snapshot plus busy flag
///   GET  /sessions/{id}/plan          active or last plan
///   GET  /sessions/{id}/report        last execution report
///   GET  /sessions/{id}/telemetry     text/event-stream: snapshot first, then
///                                     snapshot / plan / cycle / report events
///
/// Errors come back as {"error": {"code", "message"}} with 400 (bad input),
/// 404 (unknown session), 409 (BusyWithPlan), 422 (model output unusable;
/// "model_text" holds the last answer) or 502 (backend failure).
class Service {
 public:
  Service(ServiceConfig cfg, SessionBackendFactory backends);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread. port 0 picks a free port; the
  /// bound port is returned.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();

  /// Waits until the session has no running plan (tests and the CLI).
  bool wait_idle(const std::string& session_id, double timeout_s);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tacos
