#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dilemma/agents.hpp"
#include "dilemma/game_engine.hpp"
#include "dilemma/hashing.hpp"
#include "dilemma/llm_gateway.hpp"
#include "dilemma/prompts.hpp"
#include "dilemma/record.hpp"

namespace dilemma {

// Plans ----------------------------------------------------------------------

// One row of the factorial: either scripted policies (assigned to agent slots
// in order, cycling) or a remote model playing every slot.
struct ProviderSet {
  std::string id;
  std::variant<std::vector<PolicySpec>, ProviderSpec> agents;

  bool scripted() const { return std::holds_alternative<std::vector<PolicySpec>>(agents); }
};

struct ExperimentPlan {
  std::vector<ProviderSet> providers;
  std::vector<Treatment> treatments{kAllTreatments.begin(), kAllTreatments.end()};
  int replications = 20;
  std::uint64_t base_seed = 0;
  int concurrency_limit = 1;
  std::filesystem::path output_dir = "corpus";
  bool strict_paper = true;
  int max_periods = kPaperMaxPeriods;
};

inline bool valid_model_id(std::string_view id) {
  if (id.empty() || id.find("__") != std::string_view::npos) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

inline void validate(const ExperimentPlan& plan) {
  if (plan.replications < 1) throw ConfigError("replications must be >= 1");
  if (plan.concurrency_limit < 1) throw ConfigError("concurrency must be >= 1");
  if (plan.providers.empty()) throw ConfigError("plan names no providers");
  if (plan.treatments.empty()) throw ConfigError("plan names no treatments");
  std::set<std::string> ids;
  for (const auto& p : plan.providers) {
    if (!valid_model_id(p.id)) throw ConfigError("invalid provider id '" + p.id + "'");
    if (!ids.insert(p.id).second) throw ConfigError("duplicate provider id '" + p.id + "'");
    if (const auto* pol = std::get_if<std::vector<PolicySpec>>(&p.agents)) {
      if (pol->empty()) throw ConfigError("provider '" + p.id + "' lists no policies");
      for (const auto& s : *pol) validate(s);
    } else {
      validate(std::get<ProviderSpec>(p.agents));
    }
  }
  std::set<Treatment> ts(plan.treatments.begin(), plan.treatments.end());
  if (ts.size() != plan.treatments.size()) throw ConfigError("duplicate treatment in plan");
}

// providers x treatments x replications, in that nesting order.
inline std::vector<RunKey> plan_runs(const ExperimentPlan& plan) {
  validate(plan);
  std::vector<RunKey> keys;
  keys.reserve(plan.providers.size() * plan.treatments.size() *
               static_cast<std::size_t>(plan.replications));
  for (const auto& p : plan.providers) {
    for (Treatment t : plan.treatments) {
      for (int r = 1; r <= plan.replications; ++r) keys.push_back({p.id, t, r});
    }
  }
  return keys;
}

// Writes `contents` next to `target` under a hidden temporary name, then
// renames it into place.
inline void write_atomically(const std::filesystem::path& target, const std::string& contents) {
  std::ostringstream tid;
  tid << std::this_thread::get_id();
  const auto tmp = target.parent_path() / ("." + target.filename().string() + ".tmp-" + tid.str());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError("cannot open " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw PersistenceError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw PersistenceError("cannot rename into " + target.string());
  }
}

inline std::filesystem::path transcript_path(const std::filesystem::path& dir, const RunKey& key) {
  return dir / (key.str() + ".json");
}

// Execution ------------------------------------------------------------------

struct ExecuteOptions {
  Gateway* gateway = nullptr;  // required when the plan names remote providers
  AuditLog* audit = nullptr;
  // Stop after this many new games have been persisted (used for staged runs).
  std::optional<std::size_t> max_new_games;
};

struct ExecuteSummary {
  std::size_t total = 0;
  std::size_t completed = 0;
  std::size_t aborted = 0;
  std::size_t skipped = 0;
  std::size_t transport_failures = 0;
};

inline AgentRoster build_roster(const ProviderSet& provider, const GameConfig& config,
                                const RunKey& key, const ExecuteOptions& opts,
                                std::map<AgentId, std::string>& assignment) {
  AgentRoster roster;
  for (std::size_t i = 0; i < config.agent_ids.size(); ++i) {
    const auto& id = config.agent_ids[i];
    if (const auto* pol = std::get_if<std::vector<PolicySpec>>(&provider.agents)) {
      const auto& spec = (*pol)[i % pol->size()];
      roster[id] = make_scripted(spec);
      assignment[id] = describe(spec);
    } else {
      const auto& spec = std::get<ProviderSpec>(provider.agents);
      if (!opts.gateway) throw ConfigError("remote provider '" + provider.id + "' needs a gateway");
      roster[id] = llm_agent(*opts.gateway, spec, key.str(), opts.audit);
      assignment[id] = spec.provider_id + ":" + spec.model_name;
    }
  }
  return roster;
}

inline RecordedGame run_one(const ExperimentPlan& plan, const ProviderSet& provider,
                            const RunKey& key, const ExecuteOptions& opts) {
  const auto config = GameConfig::for_treatment(key.treatment, plan.max_periods);
  RecordedGame g;
  g.key = key;
  auto roster = build_roster(provider, config, key, opts, g.assignment);
  g.transcript = play(config, roster, game_seed(plan.base_seed, key), plan.strict_paper);
  g.prompt_checksums = template_checksums(key.treatment);
  return g;
}

// Runs every key without a persisted transcript, up to concurrency_limit games
// at a time. Completed and aborted games are both persisted.
inline ExecuteSummary execute(const ExperimentPlan& plan, const ExecuteOptions& opts = {}) {
  const auto keys = plan_runs(plan);
  std::filesystem::create_directories(plan.output_dir);

  std::map<std::string, const ProviderSet*> by_id;
  for (const auto& p : plan.providers) by_id[p.id] = &p;

  ExecuteSummary summary;
  summary.total = keys.size();
  std::vector<RunKey> pending;
  for (const auto& k : keys) {
    if (std::filesystem::exists(transcript_path(plan.output_dir, k))) ++summary.skipped;
    else pending.push_back(k);
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> started{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::vector<std::string> failures;

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      if (opts.max_new_games && started.fetch_add(1) >= *opts.max_new_games) return;
      const RunKey& key = pending[i];
      try {
        auto game = run_one(plan, *by_id.at(key.model_id), key, opts);
        write_atomically(transcript_path(plan.output_dir, key), serialize(game));
        std::lock_guard lock(mu);
        if (game.transcript.aborted()) {
          ++summary.aborted;
          if (game.transcript.abort_reason.find("transport:") != std::string::npos) {
            ++summary.transport_failures;
          }
        } else {
          ++summary.completed;
        }
      } catch (const std::exception& e) {
        stop = true;
        std::lock_guard lock(mu);
        failures.push_back(key.str() + ": " + e.what());
      }
    }
  };

  const auto n_workers = static_cast<std::size_t>(
      std::min<std::size_t>(static_cast<std::size_t>(plan.concurrency_limit), pending.size()));
  {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  if (!failures.empty()) {
    std::string report = "execution halted: " + failures.front() + " [completed " +
                         std::to_string(summary.completed) + ", aborted " +
                         std::to_string(summary.aborted) + ", skipped " +
                         std::to_string(summary.skipped) + ", total " +
                         std::to_string(summary.total) + "]";
    throw PersistenceError(report);
  }
  return summary;
}

// Plan files -----------------------------------------------------------------

inline PolicySpec policy_from_json(const nlohmann::json& j) {
  PolicySpec s;
  s.kind = parse_policy_kind(j.at("kind").get<std::string>());
  s.attack_period = j.value("k", 1);
  s.attack_probability = j.value("p", 0.0);
  s.seed = j.value("seed", std::uint64_t{0});
  s.dominance_phrase = j.value("dominance_phrase", std::string("dominates"));
  validate(s);
  return s;
}

inline ProviderSpec provider_from_json(const std::string& id, const nlohmann::json& j) {
  ProviderSpec s;
  s.provider_id = id;
  s.kind = parse_provider_kind(j.at("kind").get<std::string>());
  s.model_name = j.at("model").get<std::string>();
  s.endpoint = j.at("endpoint").get<std::string>();
  s.auth_env = j.at("auth_env").get<std::string>();
  if (j.contains("temperature")) s.temperature = j.at("temperature").get<double>();
  if (j.contains("max_output_tokens")) s.max_output_tokens = j.at("max_output_tokens").get<int>();
  s.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    s.retry.max_attempts = r.value("max_attempts", 3);
    if (r.contains("backoff_ms")) {
      s.retry.backoff.clear();
      for (const auto& ms : r.at("backoff_ms")) s.retry.backoff.emplace_back(ms.get<int>());
    }
  }
  s.min_request_interval = std::chrono::milliseconds(j.value("min_request_interval_ms", 0));
  validate(s);
  return s;
}

// Experiment config (JSON):
// {
//   "providers": [
//     {"id": "peace", "policy": {"kind": "ALWAYS_PEACE"}},
//     {"id": "mixed", "policies": [{"kind": "ATTACK_AT_PERIOD", "k": 3}, {"kind": "ALWAYS_PEACE"}]},
//     {"id": "gpt-5", "provider": {"kind": "openai", "model": "gpt-5", "endpoint": "...",
//                                  "auth_env": "OPENAI_API_KEY"}}
//   ],
//   "treatments": ["BASELINE", "MULTIPOLAR", "FINITE_PERIODS", "COMMUNICATION"],
//   "replications": 20, "base_seed": 1, "concurrency": 4, "output_dir": "corpus",
//   "strict_paper": true, "max_periods": 10
// }
inline ExperimentPlan plan_from_json(const nlohmann::json& j) {
  ExperimentPlan plan;
  try {
    for (const auto& pj : j.at("providers")) {
      ProviderSet set;
      set.id = pj.at("id").get<std::string>();
      if (pj.contains("policy")) {
        set.agents = std::vector<PolicySpec>{policy_from_json(pj.at("policy"))};
      } else if (pj.contains("policies")) {
        std::vector<PolicySpec> v;
        for (const auto& x : pj.at("policies")) v.push_back(policy_from_json(x));
        set.agents = std::move(v);
      } else if (pj.contains("provider")) {
        set.agents = provider_from_json(set.id, pj.at("provider"));
      } else {
        throw ConfigError("provider '" + set.id + "' needs policy, policies or provider");
      }
      plan.providers.push_back(std::move(set));
    }
    if (j.contains("treatments")) {
      plan.treatments.clear();
      for (const auto& t : j.at("treatments")) plan.treatments.push_back(parse_treatment(t.get<std::string>()));
    }
    plan.replications = j.value("replications", 20);
    plan.base_seed = j.value("base_seed", std::uint64_t{0});
    plan.concurrency_limit = j.value("concurrency", 1);
    plan.output_dir = j.value("output_dir", std::string("corpus"));
    plan.strict_paper = j.value("strict_paper", true);
    plan.max_periods = j.value("max_periods", kPaperMaxPeriods);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  validate(plan);
  return plan;
}

inline ExperimentPlan load_plan(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  const auto j = nlohmann::json::parse(in, nullptr, false, /*ignore_comments=*/true);
  if (j.is_discarded()) throw ConfigError("config " + file.string() + " is not valid JSON");
  return plan_from_json(j);
}

} // namespace dilemma
