#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacos/error.hpp"
#include "tacos/swarm.hpp"
#include "tacos/world.hpp"

namespace tacos {

inline constexpr std::string_view kNoHistorySentinel = "NO PRIOR INTERACTIONS";

/// Plan entries are written when the Coordinator answers an instruction;
/// Update entries record how execution of that plan ended.
enum class EntryKind { Plan, Update };

struct HistoryEntry {
  EntryKind kind = EntryKind::Plan;
  double issued_at = 0.0;
  std::string instruction;
  std::string reasoning;
  std::string plan_id;
  std::vector<std::string> plan_summary;  // one described call per line
  std::string state_digest;
  std::string outcome;

  bool operator==(const HistoryEntry&) const = default;
};

/// Append-only; copies are cheap to reason about because nothing mutates
/// an entry after it is appended.
class CoordinatorHistory {
 public:
  explicit CoordinatorHistory(std::size_t token_budget = 2000) : token_budget_(token_budget) {}

  const std::vector<HistoryEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t token_budget() const { return token_budget_; }

  /// Newest Plan entry with that plan id, or nullptr.
  const HistoryEntry* find_plan(const std::string& plan_id) const;
  std::size_t plan_count() const;

  bool operator==(const CoordinatorHistory&) const = default;

 private:
  friend Result<CoordinatorHistory> append_entry(const CoordinatorHistory& h, HistoryEntry entry);
  std::vector<HistoryEntry> entries_;
  std::size_t token_budget_;
};

/// New history with entry at the end. OutOfOrderEntry if entry.issued_at is
/// earlier than the last entry.
Result<CoordinatorHistory> append_entry(const CoordinatorHistory& h, HistoryEntry entry);

/// Oldest-first text for the Coordinator prompt, at most budget_tokens by the
/// chars/4 estimate. Newest entries are shown in full; older ones shrink to a
/// single line that still quotes the instruction. Only when even those lines
/// overflow are the oldest entries folded into a count stub.
std::string render_for_prompt(const CoordinatorHistory& h, std::size_t budget_tokens);

std::string render_entry_full(const HistoryEntry& e, std::size_t index);
std::string render_entry_digest(const HistoryEntry& e, std::size_t index);

/// "Grounded: alfa, bravo | Hovering: charlie" in first-seen phase order.
std::string phase_summary(const SwarmState& swarm);
/// "alfa Grounded->Hovering, bravo Grounded->Hovering; 2 unchanged".
std::string phase_delta(const SwarmState& before, const SwarmState& after);
/// "9 obstacles, 10 entities".
std::string world_summary(const WorldState& world);

nlohmann::json history_to_json(const CoordinatorHistory& h);
/// Replays entries through append_entry, so ordering is re-checked.
CoordinatorHistory history_from_json(const nlohmann::json& j);

}  // namespace tacos
