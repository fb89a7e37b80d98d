#include "tacos/scenario.hpp"

#include <fstream>

#include <fmt/format.h>

namespace tacos {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw TacosError(Errc::InvalidScenario, msg); }

Ellipsoid obstacle_from_json(const json& j) {
  const std::string label = j.value("id", std::string{});
  if (!j.contains("center")) bad(fmt::format("obstacle '{}' has no center", label));
  const Vec3 center = vec_from_json(j.at("center"));
  Result<Ellipsoid> e = Error{Errc::InvalidScenario, ""};
  if (j.contains("shape_matrix")) {
    const auto& m = j.at("shape_matrix");
    if (!m.is_array() || m.size() != 3) bad(fmt::format("obstacle '{}' shape_matrix must be 3x3", label));
    Mat3 shape;
    for (int r = 0; r < 3; ++r) {
      const auto& row = m.at(r);
      if (!row.is_array() || row.size() != 3) bad(fmt::format("obstacle '{}' shape_matrix must be 3x3", label));
      for (int c = 0; c < 3; ++c) shape(r, c) = row.at(c).get<double>();
    }
    e = Ellipsoid::from_matrix(center, shape, label);
  } else if (j.contains("semi_axes")) {
    Eigen::Quaterniond q = Eigen::Quaterniond::Identity();
    if (j.contains("rotation")) {
      const auto& r = j.at("rotation");
      if (!r.is_array() || r.size() != 4) bad(fmt::format("obstacle '{}' rotation must be [w,x,y,z]", label));
      q = Eigen::Quaterniond(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                             r[3].get<double>());
    }
    e = Ellipsoid::from_axes(center, vec_from_json(j.at("semi_axes")), q, label);
  } else {
    bad(fmt::format("obstacle '{}' needs shape_matrix or semi_axes", label));
  }
  if (!e.ok()) throw TacosError(e.error());
  return e.value();
}

json obstacle_to_json(const Ellipsoid& e) {
  json j;
  if (!e.label().empty()) j["id"] = e.label();
  j["center"] = vec_to_json(e.center());
  if (const auto& axes = e.axes_form()) {
    j["semi_axes"] = vec_to_json(axes->semi_axes);
    const auto& q = axes->rotation;
    j["rotation"] = json::array({q.w(), q.x(), q.y(), q.z()});
  } else {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) {
      rows.push_back(json::array({e.shape()(r, 0), e.shape()(r, 1), e.shape()(r, 2)}));
    }
    j["shape_matrix"] = rows;
  }
  return j;
}

}  // namespace

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) bad("expected a 3-element array");
  for (const auto& x : j) {
    if (!x.is_number()) bad("expected numeric vector components");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Scenario scenario_from_json(const json& j) {
  try {
    Scenario s;
    s.name = j.value("name", std::string{"unnamed"});
    if (!j.contains("bounds")) bad("missing bounds");
    Bounds b{vec_from_json(j.at("bounds").at("min")), vec_from_json(j.at("bounds").at("max"))};
    std::vector<Ellipsoid> obstacles;
    for (const auto& o : j.value("obstacles", json::array())) obstacles.push_back(obstacle_from_json(o));
    std::vector<TaskEntity> entities;
    for (const auto& e : j.value("entities", json::array())) {
      const auto kind_name = e.at("kind").get<std::string>();
      auto kind = entity_kind_from_string(kind_name);
      if (!kind) bad(fmt::format("unknown entity kind '{}'", kind_name));
      entities.push_back({e.at("id").get<std::string>(), *kind, vec_from_json(e.at("position"))});
    }
    auto world = make_world(b, std::move(obstacles), std::move(entities));
    if (!world.ok()) throw TacosError(world.error());
    s.world = std::move(world).value();
    return s;
  } catch (const json::exception& ex) {
    bad(ex.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["bounds"] = {{"min", vec_to_json(s.world.bounds.min)}, {"max", vec_to_json(s.world.bounds.max)}};
  j["obstacles"] = json::array();
  for (const auto& o : s.world.obstacles) j["obstacles"].push_back(obstacle_to_json(o));
  j["entities"] = json::array();
  for (const auto& e : s.world.entities) {
    j["entities"].push_back(
        {{"id", e.id}, {"kind", std::string(to_string(e.kind))}, {"position", vec_to_json(e.position)}});
  }
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad(fmt::format("cannot open scenario file '{}'", path.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    bad(fmt::format("{}: {}", path.string(), ex.what()));
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) bad(fmt::format("cannot write scenario file '{}'", path.string()));
  out << scenario_to_json(s).dump(2) << '\n';
}

}  // namespace tacos
