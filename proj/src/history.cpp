#include "tacos/history.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace tacos {

using nlohmann::json;

const HistoryEntry* CoordinatorHistory::find_plan(const std::string& plan_id) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->kind == EntryKind::Plan && it->plan_id == plan_id) return &*it;
  }
  return nullptr;
}

std::size_t CoordinatorHistory::plan_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.kind == EntryKind::Plan;
  return n;
}

Result<CoordinatorHistory> append_entry(const CoordinatorHistory& h, HistoryEntry entry) {
  if (!h.entries_.empty() && entry.issued_at < h.entries_.back().issued_at) {
    return Error{Errc::OutOfOrderEntry,
                 fmt::format("entry at t={} after entry at t={}", entry.issued_at, h.entries_.back().issued_at)};
  }
  CoordinatorHistory next = h;
  next.entries_.push_back(std::move(entry));
  return next;
}

namespace {

std::string indent_continuation(const std::string& text) {
  std::string out;
  for (char c : text) {
    out += c;
    if (c == '\n') out += "    ";
  }
  return out;
}

std::string stamp(const HistoryEntry& e, std::size_t index) {
  return fmt::format("[{}] t={:.1f}s", index + 1, e.issued_at);
}

}  // namespace

std::string render_entry_full(const HistoryEntry& e, std::size_t index) {
  std::string out = stamp(e, index);
  if (e.kind == EntryKind::Update) {
    out += fmt::format(" update for {}: {}\n", e.plan_id, e.outcome.empty() ? "unknown" : e.outcome);
    if (!e.state_digest.empty()) out += "  state: " + e.state_digest + "\n";
    return out;
  }
  out += fmt::format(" instruction: \"{}\"\n", e.instruction);
  if (!e.reasoning.empty()) out += "  reasoning: " + indent_continuation(e.reasoning) + "\n";
  out += fmt::format("  plan {}:", e.plan_id);
  if (e.plan_summary.empty()) out += " (no calls)";
  for (const auto& c : e.plan_summary) out += "\n    " + c;
  out += "\n";
  if (!e.state_digest.empty()) out += "  state: " + e.state_digest + "\n";
  if (!e.outcome.empty()) out += "  outcome: " + e.outcome + "\n";
  return out;
}

std::string render_entry_digest(const HistoryEntry& e, std::size_t index) {
  if (e.kind == EntryKind::Update) {
    return fmt::format("{} update for {}: {}\n", stamp(e, index), e.plan_id,
                       e.outcome.empty() ? "unknown" : e.outcome);
  }
  const auto n = e.plan_summary.size();
  return fmt::format("{} instruction: \"{}\" (plan {}, {} call{})\n", stamp(e, index), e.instruction,
                     e.plan_id, n, n == 1 ? "" : "s");
}

std::string render_for_prompt(const CoordinatorHistory& h, std::size_t budget_tokens) {
  const auto& es = h.entries();
  if (es.empty()) return std::string(kNoHistorySentinel);

  const std::string header = "PRIOR INTERACTIONS (oldest first)\n";
  const std::size_t n = es.size();
  std::vector<std::string> shown(n);
  std::size_t chars = header.size();
  for (std::size_t i = 0; i < n; ++i) {
    shown[i] = render_entry_digest(es[i], i);
    chars += shown[i].size();
  }
  auto fits = [&](std::size_t c) { return (c + 3) / 4 <= budget_tokens; };  // chars/4, as estimate_tokens

  // Fold the oldest digests into a stub until the rest fits.
  std::size_t folded = 0;
  std::string stub;
  while (!fits(chars) && folded < n) {
    chars -= shown[folded].size() + stub.size();
    ++folded;
    stub = fmt::format("({} earlier interaction{} omitted)\n", folded, folded == 1 ? "" : "s");
    chars += stub.size();
  }
  // Expand from the newest backwards while the budget allows.
  for (std::size_t i = n; i-- > folded;) {
    std::string full = render_entry_full(es[i], i);
    const std::size_t c = chars - shown[i].size() + full.size();
    if (!fits(c)) break;
    chars = c;
    shown[i] = std::move(full);
  }

  std::string out = header + stub;
  for (std::size_t i = folded; i < n; ++i) out += shown[i];
  return out;
}

std::string phase_summary(const SwarmState& swarm) {
  std::vector<std::pair<FlightPhase, std::vector<std::string>>> groups;
  for (const auto& u : swarm.uavs) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == u.phase; });
    if (it == groups.end()) {
      groups.push_back({u.phase, {}});
      it = std::prev(groups.end());
    }
    it->second.push_back(u.id.str());
  }
  std::vector<std::string> parts;
  for (const auto& [phase, ids] : groups) parts.push_back(fmt::format("{}: {}", to_string(phase), fmt::join(ids, ", ")));
  return parts.empty() ? "no UAVs" : fmt::format("{}", fmt::join(parts, " | "));
}

std::string phase_delta(const SwarmState& before, const SwarmState& after) {
  std::vector<std::string> changes;
  std::size_t unchanged = 0;
  for (const auto& u : after.uavs) {
    const UavState* prev = before.find(u.id);
    if (!prev) {
      changes.push_back(fmt::format("{} new ({})", u.id.str(), to_string(u.phase)));
    } else if (prev->phase != u.phase) {
      changes.push_back(fmt::format("{} {}->{}", u.id.str(), to_string(prev->phase), to_string(u.phase)));
    } else {
      ++unchanged;
    }
  }
  std::string out = changes.empty() ? "no phase changes" : fmt::format("{}", fmt::join(changes, ", "));
  if (!changes.empty() && unchanged > 0) out += fmt::format("; {} unchanged", unchanged);
  return out;
}

std::string world_summary(const WorldState& world) {
  return fmt::format("{} obstacles, {} entities", world.obstacles.size(), world.entities.size());
}

json history_to_json(const CoordinatorHistory& h) {
  json es = json::array();
  for (const auto& e : h.entries()) {
    es.push_back({{"kind", e.kind == EntryKind::Plan ? "plan" : "update"},
                  {"issued_at", e.issued_at},
                  {"instruction", e.instruction},
                  {"reasoning", e.reasoning},
                  {"plan_id", e.plan_id},
                  {"plan_summary", e.plan_summary},
                  {"state_digest", e.state_digest},
                  {"outcome", e.outcome}});
  }
  return {{"token_budget", h.token_budget()}, {"entries", es}};
}

CoordinatorHistory history_from_json(const json& j) {
  CoordinatorHistory h(j.value("token_budget", std::size_t{2000}));
  try {
    for (const auto& je : j.at("entries")) {
      HistoryEntry e;
      const auto kind = je.at("kind").get<std::string>();
      if (kind != "plan" && kind != "update") throw TacosError(Errc::InvalidArgument, "bad entry kind " + kind);
      e.kind = kind == "plan" ? EntryKind::Plan : EntryKind::Update;
      e.issued_at = je.at("issued_at").get<double>();
      e.instruction = je.value("instruction", "");
      e.reasoning = je.value("reasoning", "");
      e.plan_id = je.value("plan_id", "");
      e.plan_summary = je.value("plan_summary", std::vector<std::string>{});
      e.state_digest = je.value("state_digest", "");
      e.outcome = je.value("outcome", "");
      h = append_entry(h, std::move(e)).value();
    }
  } catch (const json::exception& e) {
    throw TacosError(Errc::InvalidArgument, std::string("history: ") + e.what());
  }
  return h;
}

}  // namespace tacos
