#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacos/error.hpp"

namespace tacos {

enum class Role { System, User, Assistant };

std::string_view to_string(Role r);
std::optional<Role> role_from_string(std::string_view s);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string model_id;

  /// Content of the last User message, or "" if there is none.
  std::string last_user() const;

  bool operator==(const CompletionRequest&) const = default;
};

/// Throws TacosError(InvalidArgument) unless the first message is System,
/// System/User contents are nonempty, temperature >= 0 and max_tokens > 0.
void check_request(const CompletionRequest& req);

/// Rough token count: ceil(chars / 4).
std::size_t estimate_tokens(std::string_view text);
std::size_t estimate_tokens(const CompletionRequest& req);

nlohmann::json to_json(const CompletionRequest& req);
CompletionRequest request_from_json(const nlohmann::json& j);

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;

  /// Assistant text for the request. Throws TacosError with BackendUnreachable,
  /// BadResponse, NoRuleMatched or TokenLimitExceeded.
  virtual std::string complete(const CompletionRequest& req) = 0;
};

// ---- scripted ----

struct Matcher {
  enum class Kind { Substring, Regex, Exact };
  Kind kind = Kind::Substring;
  std::string pattern;

  bool matches(std::string_view text) const;
  bool operator==(const Matcher&) const = default;
};

/// Matches when every matcher accepts the last User message.
struct ScriptRule {
  std::string name;
  std::vector<Matcher> all_of;
  std::string response;
  std::optional<int> max_uses;

  bool matches(std::string_view text) const;
  bool operator==(const ScriptRule&) const = default;
};

nlohmann::json script_to_json(const std::vector<ScriptRule>& rules);
std::vector<ScriptRule> script_from_json(const nlohmann::json& j);
std::vector<ScriptRule> load_script(const std::filesystem::path& path);
void save_script(const std::vector<ScriptRule>& rules, const std::filesystem::path& path);

/// Prompts matched by more than one rule, as "prompt i: rule a, rule b" lines.
/// Empty means the script is unambiguous over the given prompts.
std::vector<std::string> lint_script(const std::vector<ScriptRule>& rules,
                                     const std::vector<std::string>& prompts);

/// Answers with the first rule (in script order) that matches and still has
/// uses left.
class ScriptedBackend : public LlmBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptRule> rules,
                           std::optional<std::size_t> token_limit = std::nullopt);

  std::string complete(const CompletionRequest& req) override;

  std::size_t calls() const;
  /// Remaining uses per rule; nullopt for unlimited rules.
  std::vector<std::optional<int>> uses_left() const;
  const std::vector<ScriptRule>& rules() const { return rules_; }

 private:
  std::vector<ScriptRule> rules_;
  std::vector<std::optional<int>> left_;
  std::optional<std::size_t> token_limit_;
  std::size_t calls_ = 0;
  mutable std::mutex mu_;
};

// ---- remote ----

struct HttpBackendConfig {
  std::string endpoint;  // e.g. http://localhost:8000/v1
  std::string model_id;
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::optional<std::size_t> token_limit;
};

/// OpenAI-compatible chat completions client (POST {endpoint}/chat/completions).
/// Connection errors, 429 and 5xx are retried with doubling backoff.
class HttpBackend : public LlmBackend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg);
  std::string complete(const CompletionRequest& req) override;
  const HttpBackendConfig& config() const { return cfg_; }

 private:
  HttpBackendConfig cfg_;
  std::string host_;  // scheme://host:port
  std::string base_path_;
};

// ---- record / replay ----

struct TranscriptRecord {
  CompletionRequest request;
  std::string response;

  bool operator==(const TranscriptRecord&) const = default;
};

nlohmann::json to_json(const TranscriptRecord& r);
TranscriptRecord transcript_record_from_json(const nlohmann::json& j);
std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path);

/// Forwards to an inner backend and keeps every (request, response) pair,
/// optionally appending each one to a JSONL file as it happens.
class RecordingBackend : public LlmBackend {
 public:
  explicit RecordingBackend(std::shared_ptr<LlmBackend> inner,
                            std::optional<std::filesystem::path> file = std::nullopt);

  std::string complete(const CompletionRequest& req) override;
  std::vector<TranscriptRecord> transcript() const;

 private:
  std::shared_ptr<LlmBackend> inner_;
  std::vector<TranscriptRecord> records_;
  std::ofstream out_;
  mutable std::mutex mu_;
};

/// Exact-match single-use rules, one per record; identical prompts are
/// answered in recorded order.
std::vector<ScriptRule> script_from_transcript(const std::vector<TranscriptRecord>& records);

}  // namespace tacos
