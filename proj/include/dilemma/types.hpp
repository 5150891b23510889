#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dilemma {

// Errors ---------------------------------------------------------------------

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LookupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised by an agent that cannot produce a decision. The engine turns it into
// an aborted transcript.
struct AgentFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Actions and treatments -----------------------------------------------------

enum class Action : std::uint8_t { Attack, DoNothing };

inline constexpr std::string_view to_string(Action a) noexcept {
  return a == Action::Attack ? "ATTACK" : "DO_NOTHING";
}

inline Action parse_action(std::string_view s) {
  if (s == "ATTACK") return Action::Attack;
  if (s == "DO_NOTHING") return Action::DoNothing;
  throw std::invalid_argument("unknown action '" + std::string(s) + "'");
}

enum class Treatment : std::uint8_t { Baseline, Multipolar, FinitePeriods, Communication };

inline constexpr std::array<Treatment, 4> kAllTreatments{
    Treatment::Baseline, Treatment::Multipolar, Treatment::FinitePeriods,
    Treatment::Communication};

inline constexpr std::string_view to_string(Treatment t) noexcept {
  switch (t) {
    case Treatment::Baseline: return "BASELINE";
    case Treatment::Multipolar: return "MULTIPOLAR";
    case Treatment::FinitePeriods: return "FINITE_PERIODS";
    case Treatment::Communication: return "COMMUNICATION";
  }
  return "BASELINE";
}

// Lower-case file-name stem used for template fixtures and run keys.
inline constexpr std::string_view slug(Treatment t) noexcept {
  switch (t) {
    case Treatment::Baseline: return "baseline";
    case Treatment::Multipolar: return "multipolar";
    case Treatment::FinitePeriods: return "finite_periods";
    case Treatment::Communication: return "communication";
  }
  return "baseline";
}

inline Treatment parse_treatment(std::string_view text) {
  std::string up;
  for (char c : text) {
    up.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  for (Treatment t : kAllTreatments) {
    if (up == to_string(t)) return t;
  }
  if (up == "FINITE") return Treatment::FinitePeriods;
  throw ConfigError("unknown treatment '" + std::string(text) + "'");
}

inline std::size_t index_of(Treatment t) noexcept { return static_cast<std::size_t>(t); }

// Decisions -----------------------------------------------------------------

struct Decision {
  Action action = Action::DoNothing;
  std::string message;
  std::string reasoning;

  friend bool operator==(const Decision&, const Decision&) = default;
};

using AgentId = std::string;

// "A" -> "Agent A"
inline std::string agent_label(std::string_view id) { return "Agent " + std::string(id); }

} // namespace dilemma
