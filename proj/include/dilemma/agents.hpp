#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <random>
#include <string>
#include <string_view>

#include "dilemma/game_engine.hpp"

namespace dilemma {

enum class PolicyKind : std::uint8_t {
  AlwaysPeace,
  AlwaysAttack,
  AttackAtPeriod,
  BernoulliAttack,
  BackwardInduction,
  PledgeReciprocator,
};

inline constexpr std::string_view to_string(PolicyKind k) noexcept {
  switch (k) {
    case PolicyKind::AlwaysPeace: return "ALWAYS_PEACE";
    case PolicyKind::AlwaysAttack: return "ALWAYS_ATTACK";
    case PolicyKind::AttackAtPeriod: return "ATTACK_AT_PERIOD";
    case PolicyKind::BernoulliAttack: return "BERNOULLI_ATTACK";
    case PolicyKind::BackwardInduction: return "BACKWARD_INDUCTION";
    case PolicyKind::PledgeReciprocator: return "PLEDGE_RECIPROCATOR";
  }
  return "ALWAYS_PEACE";
}

inline PolicyKind parse_policy_kind(std::string_view s) {
  for (auto k : {PolicyKind::AlwaysPeace, PolicyKind::AlwaysAttack, PolicyKind::AttackAtPeriod,
                 PolicyKind::BernoulliAttack, PolicyKind::BackwardInduction,
                 PolicyKind::PledgeReciprocator}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown policy kind '" + std::string(s) + "'");
}

struct PolicySpec {
  PolicyKind kind = PolicyKind::AlwaysPeace;
  int attack_period = 1;          // ATTACK_AT_PERIOD
  double attack_probability = 0;  // BERNOULLI_ATTACK
  std::uint64_t seed = 0;         // BERNOULLI_ATTACK
  std::string dominance_phrase = "dominates";  // PLEDGE_RECIPROCATOR

  static PolicySpec always_peace() { return {PolicyKind::AlwaysPeace}; }
  static PolicySpec always_attack() { return {PolicyKind::AlwaysAttack}; }
  static PolicySpec attack_at(int k) { return {PolicyKind::AttackAtPeriod, k}; }
  static PolicySpec bernoulli(double p, std::uint64_t seed) {
    return {PolicyKind::BernoulliAttack, 1, p, seed};
  }
  static PolicySpec backward_induction() { return {PolicyKind::BackwardInduction}; }
  static PolicySpec pledge_reciprocator(std::string phrase = "dominates") {
    PolicySpec s{PolicyKind::PledgeReciprocator};
    s.dominance_phrase = std::move(phrase);
    return s;
  }

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

inline void validate(const PolicySpec& s) {
  if (s.kind == PolicyKind::AttackAtPeriod && (s.attack_period < 1 || s.attack_period > 10)) {
    throw ConfigError("ATTACK_AT_PERIOD k must lie in [1, 10]");
  }
  if (s.kind == PolicyKind::BernoulliAttack &&
      !(s.attack_probability >= 0.0 && s.attack_probability <= 1.0)) {
    throw ConfigError("BERNOULLI_ATTACK p must lie in [0, 1]");
  }
  if (s.kind == PolicyKind::PledgeReciprocator && s.dominance_phrase.empty()) {
    throw ConfigError("PLEDGE_RECIPROCATOR needs a dominance phrase");
  }
}

inline std::string describe(const PolicySpec& s) {
  std::string out(to_string(s.kind));
  switch (s.kind) {
    case PolicyKind::AttackAtPeriod: out += "(" + std::to_string(s.attack_period) + ")"; break;
    case PolicyKind::BernoulliAttack: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "(%g,%llu)", s.attack_probability,
                    static_cast<unsigned long long>(s.seed));
      out += buf;
      break;
    }
    default: break;
  }
  return out;
}

namespace detail {

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Uniform draw in [0, 1) with 53 bits; fixed across standard libraries.
inline double unit_draw(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

} // namespace detail

// Scripted agents emit fixed texts prefixed with a policy tag so coding tests
// can target them. They keep no state between calls.
class ScriptedAgent final : public Agent {
 public:
  explicit ScriptedAgent(PolicySpec spec) : spec_(std::move(spec)) { validate(spec_); }

  const PolicySpec& spec() const noexcept { return spec_; }

  Decision decide(const DecisionContext& ctx) override {
    switch (spec_.kind) {
      case PolicyKind::AlwaysPeace:
        return {Action::DoNothing, "[always-peace] I will not attack.",
                "[always-peace] Keep the game going for future payoffs."};
      case PolicyKind::AlwaysAttack:
        return {Action::Attack, "[always-attack] I am attacking now.",
                "[always-attack] Attack to avoid the worst outcome."};
      case PolicyKind::AttackAtPeriod:
        if (ctx.current_period >= spec_.attack_period) {
          return {Action::Attack, "[attack-at-period] Time is up.",
                  "[attack-at-period] Scheduled period reached; strike first."};
        }
        return {Action::DoNothing, "[attack-at-period] Not yet.",
                "[attack-at-period] Waiting for the scheduled period."};
      case PolicyKind::BernoulliAttack: {
        const bool attack =
            detail::unit_draw(combine_seed(ctx.stream_seed, spec_.seed)) < spec_.attack_probability;
        return {attack ? Action::Attack : Action::DoNothing, "[bernoulli] Coin flipped.",
                attack ? "[bernoulli] Random draw says attack."
                       : "[bernoulli] Random draw says hold."};
      }
      case PolicyKind::BackwardInduction:
        if (ctx.rules.horizon_disclosed) {
          return {Action::Attack, "[backward-induction] Attacking from the start.",
                  "[backward-induction] Known horizon: by backward induction ATTACK now."};
        }
        return {Action::DoNothing, "[backward-induction] No end in sight.",
                "[backward-induction] Unknown number of periods, so restraint can pay."};
      case PolicyKind::PledgeReciprocator: {
        if (!ctx.public_log) {
          throw UsageError("PLEDGE_RECIPROCATOR needs a public log (COMMUNICATION only)");
        }
        const std::string needle = detail::lowercase(spec_.dominance_phrase);
        const bool provoked =
            std::any_of(ctx.public_log->begin(), ctx.public_log->end(), [&](const auto& e) {
              return e.agent_id != ctx.agent_id &&
                     detail::lowercase(e.message).find(needle) != std::string::npos;
            });
        if (provoked) {
          return {Action::Attack, "[pledge-reciprocator] Pledge withdrawn.",
                  "[pledge-reciprocator] The other agent announced an attack; preempt."};
        }
        return {Action::DoNothing, "I will do DO_NOTHING this period. Will you do the same?",
                "[pledge-reciprocator] Repeat the public message to sustain reciprocity."};
      }
    }
    throw StateError("unhandled policy kind");
  }

 private:
  PolicySpec spec_;
};

inline std::unique_ptr<Agent> make_scripted(const PolicySpec& spec) {
  return std::make_unique<ScriptedAgent>(spec);
}

} // namespace dilemma
