#include "tacos/trace.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "tacos/scenario.hpp"

namespace tacos {

using nlohmann::json;

namespace {

std::optional<Errc> errc_from_string(std::string_view s) {
  for (int c = 0; c <= static_cast<int>(Errc::InvalidArgument); ++c) {
    if (to_string(static_cast<Errc>(c)) == s) return static_cast<Errc>(c);
  }
  return std::nullopt;
}

EventKind event_kind_from_string(std::string_view s) {
  if (s == "planner_fault") return EventKind::PlannerFault;
  if (s == "validation") return EventKind::Validation;
  return EventKind::Dispatch;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Dispatch: return "dispatch";
    case EventKind::PlannerFault: return "planner_fault";
    case EventKind::Validation: return "validation";
  }
  return "dispatch";
}

json to_json(const UavState& u) {
  return json{{"id", u.id.str()},
              {"position", vec_to_json(u.position)},
              {"velocity", vec_to_json(u.velocity)},
              {"phase", std::string(to_string(u.phase))},
              {"goal", u.active_goal ? vec_to_json(*u.active_goal) : json(nullptr)}};
}

UavState uav_state_from_json(const json& j) {
  UavState u;
  u.id = UavId(j.at("id").get<std::string>());
  u.position = vec_from_json(j.at("position"));
  u.velocity = vec_from_json(j.at("velocity"));
  auto phase = flight_phase_from_string(j.at("phase").get<std::string>());
  if (!phase) throw TacosError(Errc::InvalidArgument, "unknown flight phase");
  u.phase = *phase;
  if (j.contains("goal") && !j.at("goal").is_null()) u.active_goal = vec_from_json(j.at("goal"));
  return u;
}

json to_json(const ActionCall& call) {
  json j{{"uav", call.target.str()}, {"action", call.action}, {"args", call.args}};
  if (!call.labels.empty()) j["labels"] = call.labels;
  j["origin"] = call.origin == CallOrigin::CoordinatorPlan ? "coordinator" : "supervisor";
  return j;
}

ActionCall action_call_from_json(const json& j) {
  ActionCall c;
  c.target = UavId(j.at("uav").get<std::string>());
  c.action = j.at("action").get<std::string>();
  c.args = j.value("args", std::vector<double>{});
  c.labels = j.value("labels", std::vector<std::string>{});
  c.origin = j.value("origin", std::string{"coordinator"}) == "supervisor"
                 ? CallOrigin::SupervisorIssued
                 : CallOrigin::CoordinatorPlan;
  return c;
}

json to_json(const TickRecord& t) {
  json uavs = json::array();
  for (const auto& u : t.uavs) uavs.push_back(to_json(u));
  return json{{"type", "tick"}, {"t", t.sim_time}, {"uavs", uavs}};
}

json to_json(const TraceEvent& e) {
  json j{{"type", "event"},
         {"t", e.time},
         {"event", std::string(to_string(e.kind))},
         {"uav", e.uav.str()},
         {"accepted", e.accepted}};
  if (e.call) j["call"] = to_json(*e.call);
  if (e.reason) j["reason"] = std::string(to_string(*e.reason));
  if (!e.detail.empty()) j["detail"] = e.detail;
  return j;
}

Trace::~Trace() = default;

void Trace::stream_to(const std::filesystem::path& path) {
  sink_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
  if (!*sink_) throw TacosError(Errc::InvalidArgument, "cannot open trace file " + path.string());
}

void Trace::append_tick(TickRecord tick) {
  if (sink_) *sink_ << to_json(tick).dump() << '\n';
  ticks_.push_back(std::move(tick));
  order_.push_back(true);
}

void Trace::append_event(TraceEvent event) {
  if (sink_) *sink_ << to_json(event).dump() << '\n';
  events_.push_back(std::move(event));
  order_.push_back(false);
}

std::string Trace::to_jsonl() const {
  std::string out;
  std::size_t ti = 0;
  std::size_t ei = 0;
  for (bool is_tick : order_) {
    out += is_tick ? to_json(ticks_[ti++]).dump() : to_json(events_[ei++]).dump();
    out += '\n';
  }
  return out;
}

Trace Trace::from_jsonl(std::istream& in) {
  Trace t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.at("type") == "tick") {
      TickRecord r{j.at("t").get<double>(), {}};
      for (const auto& u : j.at("uavs")) r.uavs.push_back(uav_state_from_json(u));
      t.append_tick(std::move(r));
    } else {
      TraceEvent e;
      e.time = j.at("t").get<double>();
      e.kind = event_kind_from_string(j.at("event").get<std::string>());
      e.uav = UavId(j.value("uav", std::string{}));
      e.accepted = j.value("accepted", true);
      if (j.contains("call")) e.call = action_call_from_json(j.at("call"));
      if (j.contains("reason")) e.reason = errc_from_string(j.at("reason").get<std::string>());
      e.detail = j.value("detail", std::string{});
      t.append_event(std::move(e));
    }
  }
  return t;
}

Trace Trace::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TacosError(Errc::NotFound, "cannot open trace file " + path.string());
  return from_jsonl(in);
}

std::uint64_t Trace::digest() const { return std::hash<std::string>{}(to_jsonl()); }

AuditReport audit_trace(const Trace& trace, const WorldState& world, double d_min, double v_max) {
  AuditReport report;
  constexpr double kSpeedSlack = 1e-9;
  const auto& ticks = trace.ticks();
  for (std::size_t k = 0; k < ticks.size(); ++k) {
    const auto& uavs = ticks[k].uavs;
    for (std::size_t i = 0; i < uavs.size(); ++i) {
      const Vec3& p = uavs[i].position;
      report.min_obstacle_margin = std::min(report.min_obstacle_margin, point_margin(p, world));
      if (!point_is_free(p, world)) {
        report.violations.push_back(
            fmt::format("t={} {} not in free space", ticks[k].sim_time, uavs[i].id.str()));
      }
      for (std::size_t j = i + 1; j < uavs.size(); ++j) {
        const double d = (p - uavs[j].position).norm();
        report.min_pairwise_distance = std::min(report.min_pairwise_distance, d);
        if (d < d_min) {
          report.violations.push_back(fmt::format("t={} {}-{} separation {} < {}", ticks[k].sim_time,
                                                  uavs[i].id.str(), uavs[j].id.str(), d, d_min));
        }
      }
      if (k > 0 && i < ticks[k - 1].uavs.size()) {
        const double dt = ticks[k].sim_time - ticks[k - 1].sim_time;
        if (dt <= 0.0) {
          report.violations.push_back(fmt::format("t={} tick time not increasing", ticks[k].sim_time));
          continue;
        }
        const double speed = (p - ticks[k - 1].uavs[i].position).norm() / dt;
        report.max_speed = std::max(report.max_speed, speed);
        if (speed > v_max * (1.0 + kSpeedSlack)) {
          report.violations.push_back(
              fmt::format("t={} {} speed {} > {}", ticks[k].sim_time, uavs[i].id.str(), speed, v_max));
        }
      }
    }
  }
  return report;
}

std::string speed_color(double speed, double v_max) {
  const double s = v_max > 0.0 ? std::clamp(speed / v_max, 0.0, 1.0) : 0.0;
  const int r = static_cast<int>(std::lround(255.0 * s));
  const int b = 255 - r;
  const int g = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(2.0 * s - 1.0)) * 0.6));
  return fmt::format("#{:02x}{:02x}{:02x}", r, g, b);
}

std::string export_trajectories(const Trace& trace, double v_max) {
  // Group by UAV so each polyline is contiguous.
  std::map<std::string, std::vector<std::pair<double, const UavState*>>> lines;
  std::vector<std::string> order;
  for (const auto& tick : trace.ticks()) {
    for (const auto& u : tick.uavs) {
      auto [it, fresh] = lines.try_emplace(u.id.str());
      if (fresh) order.push_back(u.id.str());
      it->second.emplace_back(tick.sim_time, &u);
    }
  }
  std::string out = "uav,t,x,y,z,speed,color\n";
  for (const auto& id : order) {
    for (const auto& [t, u] : lines[id]) {
      const double speed = u->velocity.norm();
      out += fmt::format("{},{},{},{},{},{},{}\n", id, t, u->position.x(), u->position.y(),
                         u->position.z(), speed, speed_color(speed, v_max));
    }
  }
  return out;
}

}  // namespace tacos
