#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacos/actions.hpp"

namespace tacos {

// Wire form of a call inside model output: {"uav": "alfa", "action": "goto", "args": [5, 5, 3]}

/// Shortest text that reads back to the same double.
std::string format_number(double v);

nlohmann::json raw_call_to_json(const RawCall& call);
Result<RawCall> raw_call_from_json(const nlohmann::json& j, std::size_t index);

/// Renders a JSON array with one call object per line.
std::string render_call_array(const std::vector<RawCall>& calls);

/// Finds the first top-level JSON array in text (code fences and surrounding
/// prose are skipped) and parses it as a list of calls. MissingPlan if there
/// is no array, MalformedCall(index) for a bad element.
Result<std::vector<RawCall>> parse_call_array(std::string_view text);

/// Text between a line-leading label (e.g. "PLAN:") and the next known label.
/// Markdown emphasis around the label ("**PLAN:**") is accepted.
struct Section {
  bool found = false;
  std::string body;
};
Section extract_section(std::string_view text, std::string_view label,
                        const std::vector<std::string_view>& all_labels);

std::string trim(std::string_view s);

}  // namespace tacos
