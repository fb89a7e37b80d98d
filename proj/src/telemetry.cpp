#include "tacos/telemetry.hpp"

#include <cmath>

#include "tacos/scenario.hpp"

namespace tacos {

using nlohmann::json;

namespace {

double cm(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  return r == 0.0 ? 0.0 : r;  // no "-0"
}

json rounded(const Vec3& v) { return json::array({cm(v.x()), cm(v.y()), cm(v.z())}); }

}  // namespace

json telemetry_json(const SwarmState& swarm) {
  json uavs = json::array();
  for (const auto& u : swarm.uavs) {
    uavs.push_back({{"callsign", u.id.str()},
                    {"position", rounded(u.position)},
                    {"velocity", rounded(u.velocity)},
                    {"phase", std::string(to_string(u.phase))},
                    {"goal", u.active_goal ? rounded(*u.active_goal) : json(nullptr)}});
  }
  return json{{"sim_time", std::round(swarm.sim_time * 1000.0) / 1000.0}, {"uavs", uavs}};
}

std::string render_telemetry(const SwarmState& swarm) {
  const json j = telemetry_json(swarm);
  std::string out = "{\"sim_time\": " + j["sim_time"].dump() + ", \"uavs\": [";
  const auto& uavs = j["uavs"];
  for (std::size_t i = 0; i < uavs.size(); ++i) {
    out += "\n  " + uavs[i].dump();
    if (i + 1 < uavs.size()) out += ",";
  }
  out += uavs.empty() ? "]}" : "\n]}";
  return out;
}

SwarmState swarm_from_telemetry(const json& j) {
  SwarmState s;
  s.sim_time = j.at("sim_time").get<double>();
  for (const auto& u : j.at("uavs")) {
    UavState st;
    st.id = UavId(u.at("callsign").get<std::string>());
    st.position = vec_from_json(u.at("position"));
    st.velocity = vec_from_json(u.at("velocity"));
    st.phase = flight_phase_from_string(u.at("phase").get<std::string>()).value_or(FlightPhase::Grounded);
    if (!u.at("goal").is_null()) st.active_goal = vec_from_json(u.at("goal"));
    s.uavs.push_back(st);
  }
  return s;
}

}  // namespace tacos
