#include "tacos/call_format.hpp"

#include <cctype>

#include <fmt/format.h>

namespace tacos {

using nlohmann::json;

std::string format_number(double v) { return fmt::format("{}", v); }

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

json raw_call_to_json(const RawCall& call) {
  json args = json::array();
  for (const auto& a : call.args) {
    std::visit([&](const auto& v) { args.push_back(v); }, a);
  }
  return json{{"uav", call.uav}, {"action", call.action}, {"args", args}};
}

Result<RawCall> raw_call_from_json(const json& j, std::size_t index) {
  auto malformed = [&](std::string_view why) -> Result<RawCall> {
    return Error{Errc::MalformedCall, fmt::format("call {}: {}", index, why)};
  };
  if (!j.is_object()) return malformed("not an object");
  if (!j.contains("uav") || !j["uav"].is_string()) return malformed("missing string field 'uav'");
  if (!j.contains("action") || !j["action"].is_string()) {
    return malformed("missing string field 'action'");
  }
  RawCall call{j["uav"].get<std::string>(), j["action"].get<std::string>(), {}};
  if (j.contains("args")) {
    const auto& args = j["args"];
    if (!args.is_array()) return malformed("'args' must be an array");
    for (const auto& a : args) {
      if (a.is_number()) {
        call.args.emplace_back(a.get<double>());
      } else if (a.is_string()) {
        call.args.emplace_back(a.get<std::string>());
      } else {
        return malformed("arguments must be numbers or strings");
      }
    }
  }
  return call;
}

std::string render_call_array(const std::vector<RawCall>& calls) {
  if (calls.empty()) return "[]";
  std::string out = "[\n";
  for (std::size_t i = 0; i < calls.size(); ++i) {
    const auto& c = calls[i];
    std::string args;
    for (std::size_t k = 0; k < c.args.size(); ++k) {
      if (k) args += ", ";
      if (const auto* d = std::get_if<double>(&c.args[k])) {
        args += format_number(*d);
      } else {
        args += nlohmann::json(std::get<std::string>(c.args[k])).dump();
      }
    }
    out += fmt::format("  {{\"uav\": {}, \"action\": {}, \"args\": [{}]}}", nlohmann::json(c.uav).dump(),
                       nlohmann::json(c.action).dump(), args);
    out += i + 1 < calls.size() ? ",\n" : "\n";
  }
  return out + "]";
}

namespace {

// Index one past the bracket matching text[open], or npos.
std::size_t match_bracket(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if (c == ']' || c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

Result<std::vector<RawCall>> parse_call_array(std::string_view text) {
  for (std::size_t pos = text.find('['); pos != std::string_view::npos;
       pos = text.find('[', pos + 1)) {
    const std::size_t end = match_bracket(text, pos);
    if (end == std::string_view::npos) continue;
    json arr = json::parse(text.substr(pos, end - pos), nullptr, /*allow_exceptions=*/false);
    if (arr.is_discarded() || !arr.is_array()) continue;
    std::vector<RawCall> calls;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto c = raw_call_from_json(arr[i], i);
      if (!c.ok()) return c.error();
      calls.push_back(std::move(c).value());
    }
    return calls;
  }
  return Error{Errc::MissingPlan, "no JSON array of calls found"};
}

namespace {

// If line (after markup) starts with "<label>:", returns the offset just past
// the colon and any closing markup.
std::optional<std::size_t> label_offset(std::string_view line, std::string_view label) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '*' || line[i] == '#' ||
                             line[i] == '_')) {
    ++i;
  }
  if (line.substr(i, label.size()) != label) return std::nullopt;
  i += label.size();
  while (i < line.size() && (line[i] == '*' || line[i] == '_')) ++i;
  if (i >= line.size() || line[i] != ':') return std::nullopt;
  ++i;
  while (i < line.size() && (line[i] == '*' || line[i] == '_')) ++i;
  return i;
}

}  // namespace

Section extract_section(std::string_view text, std::string_view label,
                        const std::vector<std::string_view>& all_labels) {
  Section out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    const std::string_view line =
        text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!out.found) {
      if (auto off = label_offset(line, label)) {
        out.found = true;
        out.body += std::string(line.substr(*off));
      }
    } else {
      bool other = false;
      for (auto l : all_labels) {
        if (label_offset(line, l)) other = true;
      }
      if (other) break;
      out.body += "\n";
      out.body += std::string(line);
    }
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  out.body = trim(out.body);
  return out;
}

}  // namespace tacos
