#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "tacos/world.hpp"

namespace tacos {

// Scenario files are JSON documents (see scenarios/scenario.schema.json):
//
//   { "name": "...",
//     "bounds":    { "min": [x,y,z], "max": [x,y,z] },
//     "obstacles": [ { "id": "...", "center": [x,y,z],
//                      "shape_matrix": [[..],[..],[..]] }          // or
//                    { "id": "...", "center": [x,y,z],
//                      "semi_axes": [a,b,c], "rotation": [w,x,y,z] } ],
//     "entities":  [ { "id": "...", "kind": "car", "position": [x,y,z] } ] }
//
// An obstacle written in semi-axes form is saved back in that form, so both
// forms round-trip exactly.

struct Scenario {
  std::string name;
  WorldState world;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

/// Throws TacosError(InvalidScenario) for unreadable or malformed files.
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

nlohmann::json vec_to_json(const Vec3& v);
Vec3 vec_from_json(const nlohmann::json& j);

}  // namespace tacos
