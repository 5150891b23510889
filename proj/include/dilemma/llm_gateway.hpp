#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <httplib.h>
// <resolv.h> (via httplib) defines _res, which collides with Eigen parameter names.
#ifdef _res
#undef _res
#endif
#include <json.hpp>

#include "dilemma/game_engine.hpp"
#include "dilemma/hashing.hpp"
#include "dilemma/prompts.hpp"

namespace dilemma {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Action normalisation --------------------------------------------------------

namespace detail {

struct ActionSynonym {
  std::string_view text;
  Action action;
};

// The only mapping from model text to actions.
inline constexpr std::array<ActionSynonym, 5> kActionSynonyms{{
    {"attack", Action::Attack},
    {"do_nothing", Action::DoNothing},
    {"do nothing", Action::DoNothing},
    {"donothing", Action::DoNothing},
    {"nothing", Action::DoNothing},
}};

inline bool is_trim_char(unsigned char c) {
  return std::isspace(c) || (std::ispunct(c) && c != '_');
}

} // namespace detail

// Case-insensitive, trims surrounding whitespace and punctuation. Unknown text
// yields nullopt; there is no default action.
inline std::optional<Action> normalize_action(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && detail::is_trim_char(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && detail::is_trim_char(static_cast<unsigned char>(text[e - 1]))) --e;
  std::string key;
  key.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) {
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
  }
  for (const auto& s : detail::kActionSynonyms) {
    if (key == s.text) return s.action;
  }
  return std::nullopt;
}

// Structured-output parsing --------------------------------------------------

enum class ParseErrorKind : std::uint8_t { NotStructured, MissingKey, UnknownAction };

inline constexpr std::string_view to_string(ParseErrorKind k) noexcept {
  switch (k) {
    case ParseErrorKind::NotStructured: return "NOT_STRUCTURED";
    case ParseErrorKind::MissingKey: return "MISSING_KEY";
    case ParseErrorKind::UnknownAction: return "UNKNOWN_ACTION";
  }
  return "NOT_STRUCTURED";
}

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::NotStructured;
  std::string offending_text;
  std::string detail;
};

using ParseOutcome = std::variant<Decision, ParseError>;

namespace detail {

// End index (exclusive) of the balanced {...} starting at `open`, honouring
// JSON string escapes. npos when unbalanced.
inline std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

} // namespace detail

// Finds the first JSON object carrying action, message and reasoning, anywhere
// in the text (prose and code fences around it are ignored).
inline ParseOutcome parse_decision(std::string_view raw) {
  std::optional<ParseError> missing;
  for (std::size_t open = raw.find('{'); open != std::string_view::npos;
       open = raw.find('{', open + 1)) {
    const auto close = detail::match_brace(raw, open);
    if (close == std::string_view::npos) continue;
    const auto candidate = raw.substr(open, close - open);
    auto obj = nlohmann::json::parse(candidate, nullptr, /*allow_exceptions=*/false);
    if (!obj.is_object()) continue;

    const bool has_all = obj.contains("action") && obj.contains("message") &&
                         obj.contains("reasoning");
    if (!has_all) {
      if (!missing) {
        std::string which;
        for (const char* k : {"action", "message", "reasoning"}) {
          if (!obj.contains(k)) which += which.empty() ? k : std::string(", ") + k;
        }
        missing = ParseError{ParseErrorKind::MissingKey, std::string(candidate),
                             "missing key(s): " + which};
      }
      continue;
    }
    const auto& a = obj["action"];
    const auto& m = obj["message"];
    const auto& r = obj["reasoning"];
    if (!a.is_string()) {
      return ParseError{ParseErrorKind::UnknownAction, std::string(candidate),
                        "action is not a string"};
    }
    if (!m.is_string() || !r.is_string()) {
      return ParseError{ParseErrorKind::MissingKey, std::string(candidate),
                        "message and reasoning must be strings"};
    }
    const auto action = normalize_action(a.get<std::string>());
    if (!action) {
      return ParseError{ParseErrorKind::UnknownAction, std::string(candidate),
                        "unrecognised action '" + a.get<std::string>() + "'"};
    }
    return Decision{*action, m.get<std::string>(), r.get<std::string>()};
  }
  if (missing) return *missing;
  return ParseError{ParseErrorKind::NotStructured, std::string(raw), "no JSON object found"};
}

inline std::string serialize_decision(const Decision& d) {
  nlohmann::ordered_json j;
  j["action"] = to_string(d.action);
  j["message"] = d.message;
  j["reasoning"] = d.reasoning;
  return j.dump();
}

// Providers ------------------------------------------------------------------

enum class ProviderKind : std::uint8_t { OpenAI, Anthropic, Gemini };

inline ProviderKind parse_provider_kind(std::string_view s) {
  if (s == "openai") return ProviderKind::OpenAI;
  if (s == "anthropic") return ProviderKind::Anthropic;
  if (s == "gemini") return ProviderKind::Gemini;
  throw ConfigError("unknown provider kind '" + std::string(s) + "'");
}

inline constexpr std::string_view to_string(ProviderKind k) noexcept {
  switch (k) {
    case ProviderKind::OpenAI: return "openai";
    case ProviderKind::Anthropic: return "anthropic";
    case ProviderKind::Gemini: return "gemini";
  }
  return "openai";
}

struct RetryPolicy {
  int max_attempts = 3;
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(1000),
                                                 std::chrono::milliseconds(2000),
                                                 std::chrono::milliseconds(4000)};

  std::chrono::milliseconds delay_after(int attempt) const {
    if (backoff.empty()) return std::chrono::milliseconds(0);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(std::max(attempt, 1) - 1),
                                         backoff.size() - 1);
    return backoff[i];
  }
};

struct ProviderSpec {
  std::string provider_id;
  ProviderKind kind = ProviderKind::OpenAI;
  std::string model_name;
  std::string endpoint;  // full URL; "{model}" is replaced by model_name
  std::string auth_env;  // name of the environment variable holding the key
  std::optional<double> temperature;         // provider default when absent
  std::optional<int> max_output_tokens;      // provider default when absent
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  std::chrono::milliseconds min_request_interval{0};  // per-provider rate limit
};

inline void validate(const ProviderSpec& s) {
  if (s.provider_id.empty()) throw ConfigError("provider_id is empty");
  if (s.endpoint.empty()) throw ConfigError("provider " + s.provider_id + " has no endpoint");
  if (s.auth_env.empty()) throw ConfigError("provider " + s.provider_id + " names no auth variable");
  if (s.retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
  if (s.timeout.count() <= 0) throw ConfigError("timeout must be positive");
}

struct RawCompletion {
  std::string text;
  std::chrono::milliseconds latency{0};
  int attempt = 1;
};

namespace detail {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint is not a URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

inline nlohmann::json request_body(const ProviderSpec& s, std::string_view prompt) {
  nlohmann::json body;
  switch (s.kind) {
    case ProviderKind::OpenAI:
      body["model"] = s.model_name;
      body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
      if (s.temperature) body["temperature"] = *s.temperature;
      if (s.max_output_tokens) body["max_completion_tokens"] = *s.max_output_tokens;
      break;
    case ProviderKind::Anthropic:
      body["model"] = s.model_name;
      body["max_tokens"] = s.max_output_tokens.value_or(4096);
      body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
      if (s.temperature) body["temperature"] = *s.temperature;
      break;
    case ProviderKind::Gemini: {
      body["contents"] = nlohmann::json::array(
          {{{"role", "user"}, {"parts", nlohmann::json::array({{{"text", prompt}}})}}});
      nlohmann::json gen = nlohmann::json::object();
      if (s.temperature) gen["temperature"] = *s.temperature;
      if (s.max_output_tokens) gen["maxOutputTokens"] = *s.max_output_tokens;
      if (!gen.empty()) body["generationConfig"] = gen;
      break;
    }
  }
  return body;
}

inline httplib::Headers auth_headers(const ProviderSpec& s, const std::string& key) {
  switch (s.kind) {
    case ProviderKind::OpenAI: return {{"Authorization", "Bearer " + key}};
    case ProviderKind::Anthropic:
      return {{"x-api-key", key}, {"anthropic-version", "2023-06-01"}};
    case ProviderKind::Gemini: return {{"x-goog-api-key", key}};
  }
  return {};
}

// Pulls the generated text out of a provider response body.
inline std::optional<std::string> response_text(ProviderKind kind, const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  try {
    switch (kind) {
      case ProviderKind::OpenAI: {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        return std::nullopt;
      }
      case ProviderKind::Anthropic: {
        std::string out;
        for (const auto& block : j.at("content")) {
          if (block.value("type", "") == "text") out += block.at("text").get<std::string>();
        }
        return out;
      }
      case ProviderKind::Gemini: {
        std::string out;
        for (const auto& part : j.at("candidates").at(0).at("content").at("parts")) {
          if (part.contains("text")) out += part.at("text").get<std::string>();
        }
        return out;
      }
    }
  } catch (const nlohmann::json::exception&) {
  }
  return std::nullopt;
}

inline bool transient_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

} // namespace detail

// Spaces requests to one provider at least `interval` apart, across threads.
class RateLimiter {
 public:
  void acquire(std::chrono::milliseconds interval) {
    if (interval.count() <= 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + interval;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

// Chat-completion client shared by all in-flight games. Each call opens its own
// connection; only the per-provider rate limiters are shared.
class Gateway {
 public:
  RawCompletion complete(const ProviderSpec& spec, std::string_view prompt) {
    validate(spec);
    const char* key = std::getenv(spec.auth_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("credential variable " + spec.auth_env + " is not set for provider " +
                        spec.provider_id);
    }
    const auto url = detail::split_url(detail::replace_all(spec.endpoint, "{model}", spec.model_name));
    const std::string body = detail::request_body(spec, prompt).dump();
    const auto headers = detail::auth_headers(spec, key);
    auto& limiter = limiter_for(spec.provider_id);

    std::string last_error;
    for (int attempt = 1; attempt <= spec.retry.max_attempts; ++attempt) {
      limiter.acquire(spec.min_request_interval);
      ++requests_;
      const auto start = std::chrono::steady_clock::now();

      httplib::Client client(url.origin);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(spec.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());

      auto res = client.Post(url.path, headers, body, "application/json");
      const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);

      std::chrono::milliseconds wait = spec.retry.delay_after(attempt);
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
      } else if (res->status == 200) {
        auto text = detail::response_text(spec.kind, res->body);
        if (!text) {
          throw TransportError("provider " + spec.provider_id + " returned an unexpected body");
        }
        return RawCompletion{std::move(*text), latency, attempt};
      } else if (detail::transient_status(res->status)) {
        last_error = "HTTP " + std::to_string(res->status);
        if (res->has_header("Retry-After")) {
          const auto secs_hint = std::atoi(res->get_header_value("Retry-After").c_str());
          wait = std::max(wait, std::chrono::milliseconds(std::min(secs_hint, 60) * 1000));
        }
      } else {
        throw TransportError("provider " + spec.provider_id + " answered HTTP " +
                             std::to_string(res->status) + ": " + res->body.substr(0, 200));
      }
      if (attempt < spec.retry.max_attempts) std::this_thread::sleep_for(wait);
    }
    throw TransportError("provider " + spec.provider_id + " failed after " +
                         std::to_string(spec.retry.max_attempts) + " attempts (" + last_error + ")");
  }

  // Number of HTTP requests issued so far.
  std::size_t request_count() const noexcept { return requests_.load(); }

 private:
  RateLimiter& limiter_for(const std::string& provider_id) {
    std::lock_guard lock(mu_);
    auto& slot = limiters_[provider_id];
    if (!slot) slot = std::make_unique<RateLimiter>();
    return *slot;
  }

  std::mutex mu_;
  std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
  std::atomic<std::size_t> requests_{0};
};

// Audit log ------------------------------------------------------------------

struct AuditEntry {
  std::string run_key;
  int period = 0;
  AgentId agent;
  int attempt = 0;
  std::string prompt_hash;
  std::string raw_text;
};

// Append-only JSONL. Thread-safe; each entry is flushed on write.
class AuditLog {
 public:
  explicit AuditLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  }

  void append(const AuditEntry& e) {
    nlohmann::ordered_json j;
    j["run_key"] = e.run_key;
    j["period"] = e.period;
    j["agent"] = e.agent;
    j["attempt"] = e.attempt;
    j["prompt_hash"] = e.prompt_hash;
    j["raw_text"] = e.raw_text;
    const auto line = j.dump() + "\n";
    std::lock_guard lock(mu_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw std::runtime_error("cannot append to audit log " + path_.string());
    out << line;
  }

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

// LLM-backed agent -----------------------------------------------------------

// Renders the treatment prompt, asks the provider, and parses the reply. A
// malformed reply is re-asked with a format reminder, at most
// retry.max_attempts times in total; after that the game is aborted.
class LlmAgent final : public Agent {
 public:
  LlmAgent(Gateway& gateway, ProviderSpec spec, std::string run_key, AuditLog* audit = nullptr)
      : gateway_(gateway), spec_(std::move(spec)), run_key_(std::move(run_key)), audit_(audit) {
    validate(spec_);
  }

  Decision decide(const DecisionContext& ctx) override {
    const std::string prompt = render(ctx);
    std::string last_problem;
    for (int attempt = 1; attempt <= spec_.retry.max_attempts; ++attempt) {
      const std::string sent =
          attempt == 1 ? prompt : prompt + "\n\n" + std::string(kFormatReminder);
      RawCompletion raw;
      try {
        raw = gateway_.complete(spec_, sent);
      } catch (const TransportError& e) {
        throw AgentFailure(std::string("transport: ") + e.what());
      }
      if (audit_) {
        audit_->append({run_key_, ctx.current_period, ctx.agent_id, attempt, checksum(sent), raw.text});
      }
      ++attempts_;
      auto parsed = parse_decision(raw.text);
      if (auto* d = std::get_if<Decision>(&parsed)) return *d;
      const auto& err = std::get<ParseError>(parsed);
      last_problem = std::string(to_string(err.kind)) + " (" + err.detail + ")";
    }
    throw AgentFailure("parse: no valid decision after " + std::to_string(spec_.retry.max_attempts) +
                       " attempts; last error " + last_problem);
  }

  // Completions requested by this agent so far (including malformed ones).
  int attempts() const noexcept { return attempts_; }

 private:
  Gateway& gateway_;
  ProviderSpec spec_;
  std::string run_key_;
  AuditLog* audit_;
  int attempts_ = 0;
};

inline std::unique_ptr<Agent> llm_agent(Gateway& gateway, const ProviderSpec& spec,
                                        std::string run_key, AuditLog* audit = nullptr) {
  return std::make_unique<LlmAgent>(gateway, spec, std::move(run_key), audit);
}

} // namespace dilemma
