#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dilemma/csv.hpp"
#include "dilemma/record.hpp"
#include "dilemma/fixtures.hpp"
#include "dilemma/game_engine.hpp"

namespace dilemma {

struct CodingRefusal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Outcomes -------------------------------------------------------------------

enum class AttackStructure : std::uint8_t { None, Unilateral, Simultaneous2, Simultaneous3 };

inline constexpr std::string_view to_string(AttackStructure s) noexcept {
  switch (s) {
    case AttackStructure::None: return "NONE";
    case AttackStructure::Unilateral: return "UNILATERAL";
    case AttackStructure::Simultaneous2: return "SIMULTANEOUS_2";
    case AttackStructure::Simultaneous3: return "SIMULTANEOUS_3";
  }
  return "NONE";
}

inline AttackStructure structure_for(int attackers) {
  switch (attackers) {
    case 0: return AttackStructure::None;
    case 1: return AttackStructure::Unilateral;
    case 2: return AttackStructure::Simultaneous2;
    case 3: return AttackStructure::Simultaneous3;
    default: throw CodingRefusal("more than three attackers");
  }
}

inline AttackStructure parse_attack_structure(std::string_view s) {
  for (auto v : {AttackStructure::None, AttackStructure::Unilateral, AttackStructure::Simultaneous2,
                 AttackStructure::Simultaneous3}) {
    if (s == to_string(v)) return v;
  }
  throw ConfigError("unknown attack structure '" + std::string(s) + "'");
}

// Two agents: attack-nothing / attack-attack / nothing-nothing.
// Three agents: no-attacker / one-attacker / two-attacker / three-attacker.
inline std::string terminal_profile(int n_agents, int attackers) {
  if (n_agents == 2) {
    static constexpr std::array<std::string_view, 3> names{"nothing-nothing", "attack-nothing",
                                                           "attack-attack"};
    return std::string(names.at(static_cast<std::size_t>(attackers)));
  }
  static constexpr std::array<std::string_view, 4> names{"no-attacker", "one-attacker",
                                                         "two-attacker", "three-attacker"};
  return std::string(names.at(static_cast<std::size_t>(attackers)));
}

struct OutcomeRecord {
  std::string run_key;
  std::string model_id;
  Treatment treatment = Treatment::Baseline;
  bool war_started = false;
  std::optional<int> war_period;
  std::optional<int> peaceful_periods_before_war;
  int n_attackers = 0;
  AttackStructure attack_structure = AttackStructure::None;
  std::string terminal_profile;
  std::optional<int> public_message_count;   // COMMUNICATION only
  std::optional<int> public_log_word_count;  // COMMUNICATION only

  friend bool operator==(const OutcomeRecord&, const OutcomeRecord&) = default;
};

inline int whitespace_tokens(std::string_view text) {
  int n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

inline bool is_public_message(std::string_view m) {
  return m.find_first_not_of(" \t\r\n") != std::string_view::npos;
}

inline OutcomeRecord code_outcome(const RecordedGame& game) {
  const auto& t = game.transcript;
  if (t.aborted()) throw CodingRefusal(game.key.str() + ": aborted games are not coded");

  OutcomeRecord o;
  o.run_key = game.key.str();
  o.model_id = game.key.model_id;
  o.treatment = t.config.treatment;
  if (!t.periods.empty() && t.periods.back().any_attack()) {
    const auto& last = t.periods.back();
    o.war_started = true;
    o.war_period = last.period;
    o.peaceful_periods_before_war = last.period - 1;
    o.n_attackers = last.attackers();
  }
  o.attack_structure = structure_for(o.n_attackers);
  o.terminal_profile = terminal_profile(t.config.n_agents, o.n_attackers);
  if (t.config.communication_enabled) {
    int count = 0, words = 0;
    for (const auto& p : t.periods) {
      for (const auto& id : t.config.agent_ids) {
        const auto& m = p.decisions.at(id).message;
        if (!is_public_message(m)) continue;
        ++count;
        words += whitespace_tokens(m);
      }
    }
    o.public_message_count = count;
    o.public_log_word_count = words;
  }
  return o;
}

// Dictionary classification --------------------------------------------------

enum class ReasoningCategory : std::uint8_t {
  PrecautionaryPreemptive,
  UnknownHorizonCooperation,
  BackwardInduction,
  TrustSignaling,
  OtherUnclear,
};

enum class MessageCategory : std::uint8_t {
  ProceduralRule,
  ReciprocalPledge,
  RelationalTrust,
  CollectivePayoff,
  OpenDominance,
  OtherUnclear,
};

inline constexpr std::string_view to_string(ReasoningCategory c) noexcept {
  switch (c) {
    case ReasoningCategory::PrecautionaryPreemptive: return "PRECAUTIONARY_PREEMPTIVE";
    case ReasoningCategory::UnknownHorizonCooperation: return "UNKNOWN_HORIZON_COOPERATION";
    case ReasoningCategory::BackwardInduction: return "BACKWARD_INDUCTION";
    case ReasoningCategory::TrustSignaling: return "TRUST_SIGNALING";
    case ReasoningCategory::OtherUnclear: return "OTHER_UNCLEAR";
  }
  return "OTHER_UNCLEAR";
}

inline constexpr std::string_view to_string(MessageCategory c) noexcept {
  switch (c) {
    case MessageCategory::ProceduralRule: return "PROCEDURAL_RULE";
    case MessageCategory::ReciprocalPledge: return "RECIPROCAL_PLEDGE";
    case MessageCategory::RelationalTrust: return "RELATIONAL_TRUST";
    case MessageCategory::CollectivePayoff: return "COLLECTIVE_PAYOFF";
    case MessageCategory::OpenDominance: return "OPEN_DOMINANCE";
    case MessageCategory::OtherUnclear: return "OTHER_UNCLEAR";
  }
  return "OTHER_UNCLEAR";
}

// Highest precedence first; the residual category is implied last.
inline constexpr std::array<ReasoningCategory, 4> kReasoningPrecedence{
    ReasoningCategory::BackwardInduction, ReasoningCategory::PrecautionaryPreemptive,
    ReasoningCategory::TrustSignaling, ReasoningCategory::UnknownHorizonCooperation};

inline constexpr std::array<MessageCategory, 5> kMessagePrecedence{
    MessageCategory::ProceduralRule, MessageCategory::OpenDominance,
    MessageCategory::ReciprocalPledge, MessageCategory::CollectivePayoff,
    MessageCategory::RelationalTrust};

inline constexpr std::array<ReasoningCategory, 5> kReasoningCategories{
    ReasoningCategory::PrecautionaryPreemptive, ReasoningCategory::UnknownHorizonCooperation,
    ReasoningCategory::BackwardInduction, ReasoningCategory::TrustSignaling,
    ReasoningCategory::OtherUnclear};

inline constexpr std::array<MessageCategory, 6> kMessageCategories{
    MessageCategory::ProceduralRule, MessageCategory::ReciprocalPledge,
    MessageCategory::RelationalTrust, MessageCategory::CollectivePayoff,
    MessageCategory::OpenDominance, MessageCategory::OtherUnclear};

template <typename Category>
struct TextLabel {
  Category category = Category::OtherUnclear;
  // Every (category, phrase) hit, in precedence order, for audit.
  std::vector<std::pair<Category, std::string>> matched_terms;

  int hits_for(Category c) const {
    return static_cast<int>(std::count_if(matched_terms.begin(), matched_terms.end(),
                                          [c](const auto& m) { return m.first == c; }));
  }
};

using ReasoningLabel = TextLabel<ReasoningCategory>;
using MessageLabel = TextLabel<MessageCategory>;

// Phrase lists keyed by "<domain>:<CATEGORY>", e.g. "reasoning:BACKWARD_INDUCTION".
class CodingDictionary {
 public:
  static CodingDictionary parse(std::string_view text) {
    CodingDictionary d;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      const auto first = line.find_first_not_of(' ');
      if (first == std::string::npos || line[first] == '#') continue;
      line.erase(0, first);
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("dictionary line " + std::to_string(lineno) + ": bad heading");
        section = line.substr(1, line.size() - 2);
        d.phrases_[section];
        continue;
      }
      if (section.empty()) throw ConfigError("dictionary phrase before any heading");
      std::string lower;
      for (unsigned char c : line) lower.push_back(static_cast<char>(std::tolower(c)));
      d.phrases_[section].push_back(std::move(lower));
    }
    return d;
  }

  static const CodingDictionary& builtin() {
    static const CodingDictionary d = parse(fixtures::coding_dictionary);
    return d;
  }

  const std::vector<std::string>& phrases(const std::string& section) const {
    static const std::vector<std::string> none;
    auto it = phrases_.find(section);
    return it == phrases_.end() ? none : it->second;
  }

 private:
  std::map<std::string, std::vector<std::string>> phrases_;
};

namespace detail {

// Case-insensitive; " ... " in a phrase matches any gap, parts in order.
inline bool phrase_hits(std::string_view lowered_text, std::string_view phrase) {
  std::size_t from = 0;
  std::size_t start = 0;
  constexpr std::string_view gap = " ... ";
  while (true) {
    const auto end = phrase.find(gap, start);
    const auto part = phrase.substr(start, end == std::string_view::npos ? phrase.npos : end - start);
    const auto at = lowered_text.find(part, from);
    if (at == std::string_view::npos) return false;
    from = at + part.size();
    if (end == std::string_view::npos) return true;
    start = end + gap.size();
  }
}

template <typename Category, std::size_t N>
TextLabel<Category> classify(std::string_view text, std::string_view domain,
                             const std::array<Category, N>& precedence,
                             const CodingDictionary& dict) {
  std::string lowered;
  lowered.reserve(text.size());
  for (unsigned char c : text) lowered.push_back(static_cast<char>(std::tolower(c)));

  TextLabel<Category> label;
  for (Category c : precedence) {
    const auto section = std::string(domain) + ":" + std::string(to_string(c));
    for (const auto& phrase : dict.phrases(section)) {
      if (phrase_hits(lowered, phrase)) label.matched_terms.emplace_back(c, phrase);
    }
  }
  label.category = label.matched_terms.empty() ? Category::OtherUnclear
                                               : label.matched_terms.front().first;
  return label;
}

} // namespace detail

inline ReasoningLabel classify_reasoning(std::string_view text,
                                         const CodingDictionary& dict = CodingDictionary::builtin()) {
  return detail::classify(text, "reasoning", kReasoningPrecedence, dict);
}

inline MessageLabel classify_message(std::string_view text,
                                     const CodingDictionary& dict = CodingDictionary::builtin()) {
  return detail::classify(text, "message", kMessagePrecedence, dict);
}

// Corpus coding --------------------------------------------------------------

template <typename Label>
struct TextRow {
  std::string run_key;
  std::string model_id;
  Treatment treatment = Treatment::Baseline;
  AgentId agent;
  int period = 0;
  Label label;
};

using ReasoningRow = TextRow<ReasoningLabel>;
using MessageRow = TextRow<MessageLabel>;

struct CodedCorpus {
  std::vector<OutcomeRecord> outcomes;
  std::vector<ReasoningRow> reasoning;
  std::vector<MessageRow> messages;
  std::vector<std::string> rejected;  // "<run key>: <why>"
};

inline CodedCorpus code_corpus(const std::vector<RecordedGame>& games,
                               const CodingDictionary& dict = CodingDictionary::builtin()) {
  CodedCorpus out;
  for (const auto& g : games) {
    try {
      out.outcomes.push_back(code_outcome(g));
    } catch (const CodingRefusal& e) {
      out.rejected.emplace_back(e.what());
      continue;
    }
    const auto& t = g.transcript;
    for (const auto& p : t.periods) {
      for (const auto& id : t.config.agent_ids) {
        const auto& d = p.decisions.at(id);
        out.reasoning.push_back({g.key.str(), g.key.model_id, t.config.treatment, id, p.period,
                                 classify_reasoning(d.reasoning, dict)});
        if (t.config.communication_enabled && is_public_message(d.message)) {
          out.messages.push_back({g.key.str(), g.key.model_id, t.config.treatment, id, p.period,
                                  classify_message(d.message, dict)});
        }
      }
    }
  }
  return out;
}

inline CodedCorpus code_corpus(const Corpus& corpus,
                               const CodingDictionary& dict = CodingDictionary::builtin()) {
  auto out = code_corpus(corpus.games, dict);
  for (const auto& g : corpus.aborted) {
    out.rejected.push_back(g.key.str() + ": aborted (" + g.transcript.abort_reason + ")");
  }
  return out;
}

// CSV tables -----------------------------------------------------------------

inline const std::vector<std::string>& outcome_columns() {
  static const std::vector<std::string> cols{
      "run_key",        "model_id",          "treatment",        "war_started",
      "war_period",     "peaceful_periods_before_war",           "n_attackers",
      "attack_structure", "terminal_profile", "public_message_count", "public_log_word_count"};
  return cols;
}

inline void write_outcomes_csv(std::ostream& out, const std::vector<OutcomeRecord>& rows) {
  csv::write_row(out, outcome_columns());
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& o : rows) {
    csv::write_row(out, {o.run_key, o.model_id, std::string(to_string(o.treatment)),
                         o.war_started ? "1" : "0", opt(o.war_period),
                         opt(o.peaceful_periods_before_war), std::to_string(o.n_attackers),
                         std::string(to_string(o.attack_structure)), o.terminal_profile,
                         opt(o.public_message_count), opt(o.public_log_word_count)});
  }
}

inline std::vector<OutcomeRecord> read_outcomes_csv(std::istream& in) {
  std::vector<std::string> row;
  if (!csv::read_row(in, row) || row != outcome_columns()) {
    throw ConfigError("outcome table does not have the expected header");
  }
  auto opt = [](const std::string& s) -> std::optional<int> {
    if (s.empty()) return std::nullopt;
    return std::stoi(s);
  };
  std::vector<OutcomeRecord> out;
  int line = 1;
  while (csv::read_row(in, row)) {
    ++line;
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != outcome_columns().size()) {
      throw ConfigError("outcome table line " + std::to_string(line) + " has " +
                        std::to_string(row.size()) + " fields");
    }
    try {
      OutcomeRecord o;
      o.run_key = row[0];
      o.model_id = row[1];
      o.treatment = parse_treatment(row[2]);
      o.war_started = row[3] == "1";
      o.war_period = opt(row[4]);
      o.peaceful_periods_before_war = opt(row[5]);
      o.n_attackers = std::stoi(row[6]);
      o.attack_structure = parse_attack_structure(row[7]);
      o.terminal_profile = row[8];
      o.public_message_count = opt(row[9]);
      o.public_log_word_count = opt(row[10]);
      out.push_back(std::move(o));
    } catch (const std::logic_error& e) {
      throw ConfigError("outcome table line " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

template <typename Label>
void write_label_csv(std::ostream& out, const std::vector<TextRow<Label>>& rows) {
  csv::write_row(out, {"run_key", "model_id", "treatment", "agent", "period", "category",
                       "hit_count", "matched_terms"});
  for (const auto& r : rows) {
    std::string terms;
    for (const auto& [cat, phrase] : r.label.matched_terms) {
      if (!terms.empty()) terms += "; ";
      terms += std::string(to_string(cat)) + "=" + phrase;
    }
    csv::write_row(out, {r.run_key, r.model_id, std::string(to_string(r.treatment)), r.agent,
                         std::to_string(r.period), std::string(to_string(r.label.category)),
                         std::to_string(r.label.hits_for(r.label.category)), terms});
  }
}

} // namespace dilemma
