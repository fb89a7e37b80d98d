#include "tacos/llm_backend.hpp"

#include <regex>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

namespace tacos {

using nlohmann::json;

std::string_view to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::optional<Role> role_from_string(std::string_view s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  return std::nullopt;
}

std::string CompletionRequest::last_user() const {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::User) return it->content;
  }
  return {};
}

void check_request(const CompletionRequest& req) {
  if (req.messages.empty() || req.messages.front().role != Role::System) {
    throw TacosError(Errc::InvalidArgument, "request must start with a system message");
  }
  for (const auto& m : req.messages) {
    if (m.role != Role::Assistant && m.content.empty()) {
      throw TacosError(Errc::InvalidArgument, "empty system/user message");
    }
  }
  if (!(req.temperature >= 0.0)) throw TacosError(Errc::InvalidArgument, "temperature must be >= 0");
  if (req.max_tokens <= 0) throw TacosError(Errc::InvalidArgument, "max_tokens must be positive");
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::size_t estimate_tokens(const CompletionRequest& req) {
  std::size_t n = 0;
  for (const auto& m : req.messages) n += estimate_tokens(m.content);
  return n;
}

namespace {

void check_token_limit(const CompletionRequest& req, const std::optional<std::size_t>& limit) {
  if (!limit) return;
  const auto n = estimate_tokens(req);
  if (n > *limit) {
    throw TacosError(Errc::TokenLimitExceeded,
                     fmt::format("prompt is ~{} tokens, limit {}", n, *limit));
  }
}

}  // namespace

json to_json(const CompletionRequest& req) {
  json msgs = json::array();
  for (const auto& m : req.messages) {
    msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  return {{"model", req.model_id},
          {"messages", msgs},
          {"temperature", req.temperature},
          {"max_tokens", req.max_tokens}};
}

CompletionRequest request_from_json(const json& j) {
  CompletionRequest req;
  req.model_id = j.value("model", "");
  req.temperature = j.value("temperature", 0.0);
  req.max_tokens = j.value("max_tokens", 1024);
  for (const auto& m : j.at("messages")) {
    const auto role = role_from_string(m.at("role").get<std::string>());
    if (!role) throw TacosError(Errc::BadResponse, "unknown role " + m.at("role").dump());
    req.messages.push_back({*role, m.at("content").get<std::string>()});
  }
  return req;
}

// ---- scripted ----

bool Matcher::matches(std::string_view text) const {
  switch (kind) {
    case Kind::Substring: return text.find(pattern) != std::string_view::npos;
    case Kind::Exact: return text == pattern;
    case Kind::Regex: {
      const std::regex re(pattern);
      return std::regex_search(text.begin(), text.end(), re);
    }
  }
  return false;
}

bool ScriptRule::matches(std::string_view text) const {
  for (const auto& m : all_of) {
    if (!m.matches(text)) return false;
  }
  return true;
}

namespace {

std::string_view kind_name(Matcher::Kind k) {
  switch (k) {
    case Matcher::Kind::Substring: return "substring";
    case Matcher::Kind::Regex: return "regex";
    case Matcher::Kind::Exact: return "exact";
  }
  return "substring";
}

}  // namespace

json script_to_json(const std::vector<ScriptRule>& rules) {
  json out = json::array();
  for (const auto& r : rules) {
    json m = json::array();
    for (const auto& x : r.all_of) m.push_back({{std::string(kind_name(x.kind)), x.pattern}});
    json jr{{"name", r.name}, {"match", m}, {"response", r.response}};
    if (r.max_uses) jr["max_uses"] = *r.max_uses;
    out.push_back(jr);
  }
  return out;
}

std::vector<ScriptRule> script_from_json(const json& j) {
  if (!j.is_array()) throw TacosError(Errc::InvalidArgument, "script must be a JSON array of rules");
  std::vector<ScriptRule> rules;
  for (const auto& jr : j) {
    ScriptRule r;
    r.name = jr.value("name", fmt::format("rule_{}", rules.size()));
    r.response = jr.at("response").get<std::string>();
    if (jr.contains("max_uses")) r.max_uses = jr.at("max_uses").get<int>();
    for (const auto& m : jr.at("match")) {
      if (m.size() != 1) throw TacosError(Errc::InvalidArgument, "matcher needs exactly one kind");
      const auto& [k, v] = *m.items().begin();
      Matcher x;
      if (k == "substring") x.kind = Matcher::Kind::Substring;
      else if (k == "regex") x.kind = Matcher::Kind::Regex;
      else if (k == "exact") x.kind = Matcher::Kind::Exact;
      else throw TacosError(Errc::InvalidArgument, "unknown matcher kind " + k);
      x.pattern = v.get<std::string>();
      r.all_of.push_back(std::move(x));
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<ScriptRule> load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TacosError(Errc::NotFound, "cannot open script " + path.string());
  try {
    return script_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw TacosError(Errc::InvalidArgument, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void save_script(const std::vector<ScriptRule>& rules, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw TacosError(Errc::NotFound, "cannot write " + path.string());
  out << script_to_json(rules).dump(2) << "\n";
}

std::vector<std::string> lint_script(const std::vector<ScriptRule>& rules,
                                     const std::vector<std::string>& prompts) {
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    std::vector<std::string> hits;
    for (const auto& r : rules) {
      if (r.matches(prompts[i])) hits.push_back(r.name);
    }
    if (hits.size() > 1) problems.push_back(fmt::format("prompt {}: {}", i, fmt::join(hits, ", ")));
  }
  return problems;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules, std::optional<std::size_t> token_limit)
    : rules_(std::move(rules)), token_limit_(token_limit) {
  for (const auto& r : rules_) left_.push_back(r.max_uses);
}

std::string ScriptedBackend::complete(const CompletionRequest& req) {
  check_request(req);
  check_token_limit(req, token_limit_);
  const std::string prompt = req.last_user();
  std::lock_guard lock(mu_);
  ++calls_;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (left_[i] && *left_[i] <= 0) continue;
    if (!rules_[i].matches(prompt)) continue;
    if (left_[i]) --*left_[i];
    return rules_[i].response;
  }
  const auto head = prompt.substr(0, 200);
  throw TacosError(Errc::NoRuleMatched, "no script rule matches prompt starting: " + head);
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::vector<std::optional<int>> ScriptedBackend::uses_left() const {
  std::lock_guard lock(mu_);
  return left_;
}

// ---- remote ----

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg_.endpoint, m, url)) {
    throw TacosError(Errc::InvalidArgument, "endpoint must look like http://host:port/path, got '" +
                                                cfg_.endpoint + "'");
  }
  host_ = m[1];
  base_path_ = m[2];
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

std::string HttpBackend::complete(const CompletionRequest& req) {
  check_request(req);
  check_token_limit(req, cfg_.token_limit);
  json body = to_json(req);
  if (body["model"].get<std::string>().empty()) body["model"] = cfg_.model_id;

  httplib::Client client(host_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  std::string last_error;
  auto backoff = cfg_.initial_backoff;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(base_path_ + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = fmt::format("HTTP {}", res->status);
      continue;
    }
    if (res->status != 200) {
      throw TacosError(Errc::BadResponse, fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 300)));
    }
    try {
      const auto j = json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw TacosError(Errc::BadResponse, std::string("unexpected completion body: ") + e.what());
    }
  }
  throw TacosError(Errc::BackendUnreachable,
                   fmt::format("{}{} failed after {} attempts: {}", host_, base_path_,
                               cfg_.max_retries + 1, last_error));
}

// ---- record / replay ----

json to_json(const TranscriptRecord& r) { return {{"request", to_json(r.request)}, {"response", r.response}}; }

TranscriptRecord transcript_record_from_json(const json& j) {
  return {request_from_json(j.at("request")), j.at("response").get<std::string>()};
}

std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TacosError(Errc::NotFound, "cannot open transcript " + path.string());
  std::vector<TranscriptRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(transcript_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw TacosError(Errc::InvalidArgument,
                       fmt::format("{} record {}: {}", path.string(), out.size(), e.what()));
    }
  }
  return out;
}

RecordingBackend::RecordingBackend(std::shared_ptr<LlmBackend> inner,
                                   std::optional<std::filesystem::path> file)
    : inner_(std::move(inner)) {
  if (file) {
    out_.open(*file, std::ios::app);
    if (!out_) throw TacosError(Errc::NotFound, "cannot open transcript " + file->string());
  }
}

std::string RecordingBackend::complete(const CompletionRequest& req) {
  std::string response = inner_->complete(req);
  std::lock_guard lock(mu_);
  records_.push_back({req, response});
  if (out_.is_open()) out_ << to_json(records_.back()).dump() << "\n" << std::flush;
  return response;
}

std::vector<TranscriptRecord> RecordingBackend::transcript() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<ScriptRule> script_from_transcript(const std::vector<TranscriptRecord>& records) {
  std::vector<ScriptRule> rules;
  for (std::size_t i = 0; i < records.size(); ++i) {
    rules.push_back({fmt::format("replay_{}", i),
                     {{Matcher::Kind::Exact, records[i].request.last_user()}},
                     records[i].response,
                     1});
  }
  return rules;
}

}  // namespace tacos
