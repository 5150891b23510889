#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dilemma/hashing.hpp"
#include "dilemma/types.hpp"

namespace dilemma {

inline constexpr int kPaperMaxPeriods = 10;

struct GameConfig {
  Treatment treatment = Treatment::Baseline;
  int n_agents = 2;
  int max_periods = kPaperMaxPeriods;
  bool horizon_disclosed = false;
  bool communication_enabled = false;
  std::vector<AgentId> agent_ids{"A", "B"};

  // The configuration a treatment prescribes. Only max_periods is free.
  static GameConfig for_treatment(Treatment t, int max_periods = kPaperMaxPeriods) {
    GameConfig c;
    c.treatment = t;
    c.n_agents = t == Treatment::Multipolar ? 3 : 2;
    c.max_periods = max_periods;
    c.horizon_disclosed = t == Treatment::FinitePeriods;
    c.communication_enabled = t == Treatment::Communication;
    c.agent_ids = c.n_agents == 3 ? std::vector<AgentId>{"A", "B", "C"}
                                  : std::vector<AgentId>{"A", "B"};
    return c;
  }

  friend bool operator==(const GameConfig&, const GameConfig&) = default;
};

// Throws ConfigError naming the first violated rule. With strict_paper the
// period cap is pinned to 10.
inline void validate(const GameConfig& c, bool strict_paper = false) {
  if (c.n_agents != 2 && c.n_agents != 3) {
    throw ConfigError("n_agents must be 2 or 3, got " + std::to_string(c.n_agents));
  }
  if ((c.n_agents == 3) != (c.treatment == Treatment::Multipolar)) {
    throw ConfigError("n_agents = 3 exactly when the treatment is MULTIPOLAR");
  }
  if (c.horizon_disclosed != (c.treatment == Treatment::FinitePeriods)) {
    throw ConfigError("horizon_disclosed must be set exactly for FINITE_PERIODS");
  }
  if (c.communication_enabled != (c.treatment == Treatment::Communication)) {
    throw ConfigError("communication_enabled must be set exactly for COMMUNICATION");
  }
  if (c.max_periods < 1) throw ConfigError("max_periods must be positive");
  if (strict_paper && c.max_periods != kPaperMaxPeriods) {
    throw ConfigError("strict-paper mode requires max_periods = 10, got " +
                      std::to_string(c.max_periods));
  }
  if (static_cast<int>(c.agent_ids.size()) != c.n_agents) {
    throw ConfigError("agent_ids must list exactly n_agents labels");
  }
  const std::set<AgentId> unique(c.agent_ids.begin(), c.agent_ids.end());
  if (unique.size() != c.agent_ids.size()) throw ConfigError("agent_ids must be unique");
}

// Records --------------------------------------------------------------------

struct PeriodRecord {
  int period = 0;
  std::map<AgentId, Decision> decisions;

  bool any_attack() const {
    return std::any_of(decisions.begin(), decisions.end(),
                       [](const auto& kv) { return kv.second.action == Action::Attack; });
  }
  int attackers() const {
    return static_cast<int>(std::count_if(decisions.begin(), decisions.end(), [](const auto& kv) {
      return kv.second.action == Action::Attack;
    }));
  }

  friend bool operator==(const PeriodRecord&, const PeriodRecord&) = default;
};

enum class Termination : std::uint8_t { AttackEnded, CapReached, Aborted };

inline constexpr std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::AttackEnded: return "ATTACK_ENDED";
    case Termination::CapReached: return "CAP_REACHED";
    case Termination::Aborted: return "ABORTED";
  }
  return "ABORTED";
}

inline Termination parse_termination(std::string_view s) {
  if (s == "ATTACK_ENDED") return Termination::AttackEnded;
  if (s == "CAP_REACHED") return Termination::CapReached;
  if (s == "ABORTED") return Termination::Aborted;
  throw ConfigError("unknown termination '" + std::string(s) + "'");
}

struct Transcript {
  GameConfig config;
  std::uint64_t seed = 0;
  std::vector<PeriodRecord> periods;
  Termination termination = Termination::Aborted;
  std::string abort_reason;

  bool aborted() const { return termination == Termination::Aborted; }

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

// Returns a description of the first broken transcript invariant, if any.
// Aborted transcripts only need a well-formed prefix of peaceful periods.
inline std::optional<std::string> find_invariant_violation(const Transcript& t) {
  const auto& c = t.config;
  if (static_cast<int>(t.periods.size()) > c.max_periods) return "more periods than max_periods";
  for (std::size_t i = 0; i < t.periods.size(); ++i) {
    const auto& p = t.periods[i];
    if (p.period != static_cast<int>(i) + 1) return "period numbers are not 1..n in order";
    if (p.decisions.size() != c.agent_ids.size()) return "period without one decision per agent";
    for (const auto& id : c.agent_ids) {
      if (!p.decisions.contains(id)) return "period missing a decision for agent " + id;
    }
    const bool last = i + 1 == t.periods.size();
    if (p.any_attack() && !last) return "period recorded after an attack";
  }
  switch (t.termination) {
    case Termination::AttackEnded:
      if (t.periods.empty() || !t.periods.back().any_attack()) {
        return "ATTACK_ENDED without an attack in the final period";
      }
      break;
    case Termination::CapReached:
      if (static_cast<int>(t.periods.size()) != c.max_periods) return "CAP_REACHED before the cap";
      if (!t.periods.empty() && t.periods.back().any_attack()) return "CAP_REACHED with an attack";
      break;
    case Termination::Aborted:
      if (!t.periods.empty() && t.periods.back().any_attack()) return "ABORTED after an attack";
      break;
  }
  return std::nullopt;
}

// Decision context -----------------------------------------------------------

struct PrivateHistoryEntry {
  int period = 0;
  Action action = Action::DoNothing;
  std::string message;
  std::string reasoning;
};

struct PublicLogEntry {
  int period = 0;
  AgentId agent_id;
  std::string message;
};

struct RulesDescriptor {
  Treatment treatment = Treatment::Baseline;
  int n_agents = 2;
  int max_periods = kPaperMaxPeriods;
  bool horizon_disclosed = false;
  bool communication_enabled = false;
  std::string horizon_text;
};

struct DecisionContext {
  AgentId agent_id;
  int current_period = 1;
  RulesDescriptor rules;
  std::vector<PrivateHistoryEntry> private_history;
  std::optional<std::vector<PublicLogEntry>> public_log;
  // Seed of the random stream for this (game, agent, period). Never rendered.
  std::uint64_t stream_seed = 0;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual Decision decide(const DecisionContext& context) = 0;
};

// State machine --------------------------------------------------------------

struct PeriodResult {
  bool terminated = false;
  std::optional<Termination> cause;

  static PeriodResult proceed() { return {}; }
  static PeriodResult end(Termination t) { return {true, t}; }
};

class GameState {
 public:
  explicit GameState(GameConfig config, std::uint64_t seed = 0, bool strict_paper = false)
      : config_(std::move(config)), seed_(seed) {
    validate(config_, strict_paper);
  }

  const GameConfig& config() const noexcept { return config_; }
  int current_period() const noexcept { return period_; }
  bool terminated() const noexcept { return finished_.has_value(); }
  const std::vector<PeriodRecord>& periods() const noexcept { return periods_; }
  const std::vector<PublicLogEntry>& public_log() const noexcept { return public_log_; }

  DecisionContext context_for(const AgentId& agent_id) const {
    if (std::find(config_.agent_ids.begin(), config_.agent_ids.end(), agent_id) ==
        config_.agent_ids.end()) {
      throw LookupError("unknown agent '" + agent_id + "'");
    }
    if (terminated()) throw StateError("game already terminated");

    DecisionContext ctx;
    ctx.agent_id = agent_id;
    ctx.current_period = period_;
    ctx.rules = {config_.treatment,         config_.n_agents,
                 config_.max_periods,       config_.horizon_disclosed,
                 config_.communication_enabled,
                 config_.horizon_disclosed
                     ? "exactly " + std::to_string(config_.max_periods) + " periods"
                     : std::string("unknown number of periods")};
    ctx.private_history.reserve(periods_.size());
    for (const auto& rec : periods_) {
      const Decision& own = rec.decisions.at(agent_id);
      ctx.private_history.push_back({rec.period, own.action, own.message, own.reasoning});
    }
    if (config_.communication_enabled) ctx.public_log = public_log_;
    ctx.stream_seed = combine_seed(combine_seed(seed_, agent_id),
                                   static_cast<std::uint64_t>(period_));
    return ctx;
  }

  PeriodResult resolve_period(const std::vector<std::pair<AgentId, Decision>>& submissions) {
    if (terminated()) throw StateError("game already terminated");
    PeriodRecord rec;
    rec.period = period_;
    for (const auto& [id, decision] : submissions) {
      if (std::find(config_.agent_ids.begin(), config_.agent_ids.end(), id) ==
          config_.agent_ids.end()) {
        throw ProtocolError("decision from unknown agent '" + id + "'");
      }
      if (!rec.decisions.emplace(id, decision).second) {
        throw ProtocolError("duplicate decision from agent '" + id + "'");
      }
    }
    if (rec.decisions.size() != config_.agent_ids.size()) {
      throw ProtocolError("period " + std::to_string(period_) + " is missing decisions");
    }

    // Public log entries follow agent order within a period.
    if (config_.communication_enabled) {
      for (const auto& id : config_.agent_ids) {
        const auto& msg = rec.decisions.at(id).message;
        if (msg.find_first_not_of(" \t\r\n") != std::string::npos) {
          public_log_.push_back({period_, id, msg});
        }
      }
    }

    const bool attack = rec.any_attack();
    periods_.push_back(std::move(rec));
    if (attack) {
      finished_ = Termination::AttackEnded;
      return PeriodResult::end(Termination::AttackEnded);
    }
    if (period_ == config_.max_periods) {
      finished_ = Termination::CapReached;
      return PeriodResult::end(Termination::CapReached);
    }
    ++period_;
    return PeriodResult::proceed();
  }

  PeriodResult resolve_period(const std::map<AgentId, Decision>& decisions) {
    return resolve_period(std::vector<std::pair<AgentId, Decision>>(decisions.begin(),
                                                                    decisions.end()));
  }

  void abort(std::string reason) {
    if (terminated()) throw StateError("game already terminated");
    finished_ = Termination::Aborted;
    abort_reason_ = std::move(reason);
  }

  Transcript transcript() const {
    if (!terminated()) throw StateError("game still running");
    return Transcript{config_, seed_, periods_, *finished_, abort_reason_};
  }

 private:
  GameConfig config_;
  std::uint64_t seed_;
  int period_ = 1;
  std::vector<PeriodRecord> periods_;
  std::vector<PublicLogEntry> public_log_;
  std::optional<Termination> finished_;
  std::string abort_reason_;
};

inline GameState new_game(const GameConfig& config, std::uint64_t seed = 0,
                          bool strict_paper = false) {
  return GameState(config, seed, strict_paper);
}

using AgentRoster = std::map<AgentId, std::unique_ptr<Agent>>;

// Plays one game to completion. Every agent's context for a period is built
// before any decision of that period is taken. An AgentFailure aborts the game.
inline Transcript play(const GameConfig& config, AgentRoster& agents, std::uint64_t seed,
                       bool strict_paper = false) {
  GameState state(config, seed, strict_paper);
  for (const auto& id : config.agent_ids) {
    auto it = agents.find(id);
    if (it == agents.end() || !it->second) throw ConfigError("no agent for '" + id + "'");
  }
  if (agents.size() != config.agent_ids.size()) throw ConfigError("agents not in config");

  while (!state.terminated()) {
    std::vector<DecisionContext> contexts;
    contexts.reserve(config.agent_ids.size());
    for (const auto& id : config.agent_ids) contexts.push_back(state.context_for(id));

    std::vector<std::pair<AgentId, Decision>> submissions;
    try {
      for (const auto& ctx : contexts) {
        submissions.emplace_back(ctx.agent_id, agents.at(ctx.agent_id)->decide(ctx));
      }
    } catch (const AgentFailure& e) {
      state.abort(std::string("agent failure in period ") +
                  std::to_string(state.current_period()) + ": " + e.what());
      break;
    }
    state.resolve_period(submissions);
  }
  return state.transcript();
}

} // namespace dilemma
