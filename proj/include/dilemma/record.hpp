#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dilemma/game_engine.hpp"
#include "dilemma/hashing.hpp"

namespace dilemma {

inline constexpr int kTranscriptSchemaVersion = 1;

struct SchemaVersionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CorruptRecordError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PersistenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Run keys -------------------------------------------------------------------

struct RunKey {
  std::string model_id;
  Treatment treatment = Treatment::Baseline;
  int replication = 1;  // 1-based

  // "<model>__<treatment>__r007"; also the transcript file stem.
  std::string str() const {
    char rep[16];
    std::snprintf(rep, sizeof rep, "r%03d", replication);
    return model_id + "__" + std::string(slug(treatment)) + "__" + rep;
  }

  friend auto operator<=>(const RunKey&, const RunKey&) = default;
};

inline std::uint64_t game_seed(std::uint64_t base_seed, const RunKey& key) {
  return combine_seed(base_seed, key.str());
}

// Persisted games ------------------------------------------------------------

struct RecordedGame {
  RunKey key;
  Transcript transcript;
  std::map<AgentId, std::string> assignment;  // agent slot -> policy or model
  std::map<std::string, std::string> prompt_checksums;

  friend bool operator==(const RecordedGame&, const RecordedGame&) = default;
};

inline nlohmann::ordered_json to_json(const RecordedGame& g) {
  using nlohmann::ordered_json;
  const auto& t = g.transcript;
  ordered_json j;
  j["schema_version"] = kTranscriptSchemaVersion;
  j["run_key"] = {{"id", g.key.str()},
                  {"model_id", g.key.model_id},
                  {"treatment", to_string(g.key.treatment)},
                  {"replication", g.key.replication}};
  j["config"] = {{"treatment", to_string(t.config.treatment)},
                 {"n_agents", t.config.n_agents},
                 {"max_periods", t.config.max_periods},
                 {"horizon_disclosed", t.config.horizon_disclosed},
                 {"communication_enabled", t.config.communication_enabled},
                 {"agent_ids", t.config.agent_ids}};
  j["seed"] = t.seed;
  ordered_json assignment = ordered_json::object();
  for (const auto& [id, who] : g.assignment) assignment[id] = who;
  j["agents"] = assignment;
  ordered_json periods = ordered_json::array();
  for (const auto& p : t.periods) {
    ordered_json decisions = ordered_json::object();
    for (const auto& [id, d] : p.decisions) {
      decisions[id] = {{"action", to_string(d.action)},
                       {"message", d.message},
                       {"reasoning", d.reasoning}};
    }
    periods.push_back({{"period", p.period}, {"decisions", decisions}});
  }
  j["periods"] = periods;
  j["termination"] = to_string(t.termination);
  if (t.aborted()) j["abort_reason"] = t.abort_reason;
  ordered_json sums = ordered_json::object();
  for (const auto& [k, v] : g.prompt_checksums) sums[k] = v;
  j["prompt_checksums"] = sums;
  return j;
}

inline std::string serialize(const RecordedGame& g) { return to_json(g).dump(2) + "\n"; }

inline RecordedGame recorded_game_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("schema_version")) {
    throw SchemaVersionError("transcript has no schema_version");
  }
  if (j.at("schema_version") != kTranscriptSchemaVersion) {
    throw SchemaVersionError("unsupported transcript schema_version " +
                             j.at("schema_version").dump() + " (expected " +
                             std::to_string(kTranscriptSchemaVersion) + ")");
  }
  RecordedGame g;
  const auto& rk = j.at("run_key");
  g.key.model_id = rk.at("model_id").get<std::string>();
  g.key.treatment = parse_treatment(rk.at("treatment").get<std::string>());
  g.key.replication = rk.at("replication").get<int>();

  const auto& c = j.at("config");
  auto& cfg = g.transcript.config;
  cfg.treatment = parse_treatment(c.at("treatment").get<std::string>());
  cfg.n_agents = c.at("n_agents").get<int>();
  cfg.max_periods = c.at("max_periods").get<int>();
  cfg.horizon_disclosed = c.at("horizon_disclosed").get<bool>();
  cfg.communication_enabled = c.at("communication_enabled").get<bool>();
  cfg.agent_ids = c.at("agent_ids").get<std::vector<AgentId>>();

  g.transcript.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [id, who] : j.at("agents").items()) g.assignment[id] = who.get<std::string>();
  for (const auto& pj : j.at("periods")) {
    PeriodRecord rec;
    rec.period = pj.at("period").get<int>();
    for (const auto& [id, dj] : pj.at("decisions").items()) {
      rec.decisions[id] = {parse_action(dj.at("action").get<std::string>()), dj.at("message").get<std::string>(),
                           dj.at("reasoning").get<std::string>()};
    }
    g.transcript.periods.push_back(std::move(rec));
  }
  g.transcript.termination = parse_termination(j.at("termination").get<std::string>());
  g.transcript.abort_reason = j.value("abort_reason", std::string());
  for (const auto& [k, v] : j.at("prompt_checksums").items()) {
    g.prompt_checksums[k] = v.get<std::string>();
  }
  return g;
}

// Loading --------------------------------------------------------------------

struct Corpus {
  std::vector<RecordedGame> games;    // complete games, sorted by run key
  std::vector<RecordedGame> aborted;  // abort records, sorted by run key
};

inline RecordedGame load_transcript(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CorruptRecordError("cannot read " + file.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw CorruptRecordError(file.stem().string() + ": not valid JSON");
  RecordedGame g;
  try {
    g = recorded_game_from_json(j);
  } catch (const SchemaVersionError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptRecordError(file.stem().string() + ": " + e.what());
  }
  const auto stem = file.stem().string();
  if (g.key.str() != stem) {
    throw CorruptRecordError(stem + ": run key in file is " + g.key.str());
  }
  if (g.transcript.config.treatment != g.key.treatment) {
    throw CorruptRecordError(stem + ": config treatment disagrees with run key");
  }
  if (auto bad = find_invariant_violation(g.transcript)) {
    throw CorruptRecordError(stem + ": " + *bad);
  }
  return g;
}

// Loads every "*.json" transcript in `dir`. Hidden temporaries are ignored.
inline Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  if (!std::filesystem::exists(dir)) throw ConfigError("corpus directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.starts_with(".") || entry.path().extension() != ".json") {
      continue;
    }
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto g = load_transcript(f);
    (g.transcript.aborted() ? corpus.aborted : corpus.games).push_back(std::move(g));
  }
  return corpus;
}

} // namespace dilemma
