#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dilemma/fixtures.hpp"
#include "dilemma/game_engine.hpp"
#include "dilemma/hashing.hpp"

namespace dilemma {

struct TemplateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Treatment-specific prompt. The rules block is sent verbatim (after the
// {max_periods} slot is filled); the turn block carries per-period slots
// {agent_id}, {current_period}, {private_history} and, for COMMUNICATION,
// {public_log}.
struct PromptTemplate {
  Treatment treatment = Treatment::Baseline;
  std::string_view rules_block;
  std::string_view turn_block;

  std::string rules_checksum() const { return checksum(rules_block); }
  std::string turn_checksum() const { return checksum(turn_block); }
};

inline PromptTemplate template_for(Treatment t) {
  switch (t) {
    case Treatment::Baseline:
      return {t, fixtures::baseline_rules, fixtures::baseline_turn};
    case Treatment::Multipolar:
      return {t, fixtures::multipolar_rules, fixtures::multipolar_turn};
    case Treatment::FinitePeriods:
      return {t, fixtures::finite_periods_rules, fixtures::finite_periods_turn};
    case Treatment::Communication:
      return {t, fixtures::communication_rules, fixtures::communication_turn};
  }
  throw TemplateError("no template for treatment");
}

// {"<slug>.rules": checksum, "<slug>.turn": checksum} for a treatment.
inline std::map<std::string, std::string> template_checksums(Treatment t) {
  const auto tpl = template_for(t);
  const std::string stem(slug(t));
  return {{stem + ".rules", tpl.rules_checksum()}, {stem + ".turn", tpl.turn_checksum()}};
}

inline constexpr std::string_view kFormatReminder =
    "Reminder: reply with one JSON object with exactly the keys action, message, reasoning; "
    "action must be ATTACK or DO_NOTHING.";

namespace detail {

// Single left-to-right pass, so slot-like text inside substituted values is
// never expanded.
inline std::string fill_slots(std::string_view text, const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(text.size() + 256);
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i);
      if (close != std::string_view::npos) {
        const std::string name(text.substr(i + 1, close - i - 1));
        if (auto it = slots.find(name); it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
        if (!name.empty() && name.find_first_not_of("abcdefghijklmnopqrstuvwxyz_") == std::string::npos) {
          throw TemplateError("template slot {" + name + "} has no value");
        }
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

} // namespace detail

inline std::string rules_for(Treatment t, int max_periods = kPaperMaxPeriods) {
  return detail::fill_slots(template_for(t).rules_block,
                            {{"max_periods", std::to_string(max_periods)}});
}

inline std::string render_private_history(std::span<const PrivateHistoryEntry> history) {
  if (history.empty()) return "(none)";
  std::string out;
  for (const auto& e : history) {
    if (!out.empty()) out += '\n';
    out += "Period " + std::to_string(e.period) + " — action: " + std::string(to_string(e.action)) +
           "; message: " + e.message + "; reasoning: " + e.reasoning;
  }
  return out;
}

inline std::string render_public_log(std::span<const PublicLogEntry> log) {
  if (log.empty()) return "(none)";
  std::string out;
  for (const auto& e : log) {
    if (!out.empty()) out += '\n';
    out += "Period " + std::to_string(e.period) + " — " + agent_label(e.agent_id) +
           " said: " + e.message;
  }
  return out;
}

inline std::string render(const PromptTemplate& tpl, const GameConfig& config,
                          const AgentId& agent_id, int period,
                          std::span<const PrivateHistoryEntry> history,
                          const std::vector<PublicLogEntry>* public_log) {
  if (tpl.treatment != config.treatment) {
    throw TemplateError("template treatment " + std::string(to_string(tpl.treatment)) +
                        " does not match config treatment " +
                        std::string(to_string(config.treatment)));
  }
  if ((public_log != nullptr) != config.communication_enabled) {
    throw TemplateError(config.communication_enabled
                            ? "COMMUNICATION prompt rendered without a public log"
                            : "public log supplied to a treatment without communication");
  }
  std::map<std::string, std::string> slots{
      {"agent_id", agent_id},
      {"current_period", std::to_string(period)},
      {"max_periods", std::to_string(config.max_periods)},
      {"private_history", render_private_history(history)},
  };
  if (public_log) slots.emplace("public_log", render_public_log(*public_log));
  return detail::fill_slots(tpl.rules_block, slots) + "\n" +
         detail::fill_slots(tpl.turn_block, slots);
}

// Renders the prompt an agent sees for a decision context.
inline std::string render(const DecisionContext& ctx) {
  GameConfig config = GameConfig::for_treatment(ctx.rules.treatment, ctx.rules.max_periods);
  return render(template_for(ctx.rules.treatment), config, ctx.agent_id, ctx.current_period,
                ctx.private_history, ctx.public_log ? &*ctx.public_log : nullptr);
}

} // namespace dilemma
