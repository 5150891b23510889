// Runs the ten acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <regex>
#include <sstream>

#include "dilemma/coding.hpp"
#include "dilemma/llm_gateway.hpp"
#include "dilemma/report.hpp"
#include "dilemma/stats.hpp"
#include "../support/line_diff.hpp"
#include "../support/mock_provider.hpp"
#include "../support/oracles.hpp"

using namespace dilemma;

namespace {

struct Check {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void equal(const std::string& actual, const std::string& expected, const std::string& what) {
    expect(actual == expected, what + ": expected " + expected + ", got " + actual);
  }
  void near(double actual, double expected, double tol, const std::string& what) {
    expect(std::abs(actual - expected) <= tol,
           what + ": expected " + std::to_string(expected) + " +/- " + std::to_string(tol) + ", got " +
               std::to_string(actual));
  }
};

std::string pct1(const std::optional<double>& v) { return v ? format_fixed(*v, 1) : "(none)"; }

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(DILEMMA_TEST_FIXTURES) + "/" + name, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::array<Treatment, 4>& treatments() { return kAllTreatments; }

// Criteria -------------------------------------------------------------------

void incidence_marginals(Check& c) {
  const auto t = incidence_table(paper_replication_dataset());
  const std::array<std::string, 4> pooled{"65.0", "81.3", "100.0", "42.5"};
  for (Treatment tr : treatments()) {
    c.equal(pct1(t.treatment_pct(tr)), pooled[index_of(tr)], "pooled " + std::string(to_string(tr)));
  }
  const std::array<std::pair<std::string, std::string>, 4> models{
      {{"gpt-5", "96.3"}, {"gemini", "85.0"}, {"gpt-5-mini", "75.0"}, {"sonnet", "32.5"}}};
  for (const auto& [m, v] : models) c.equal(pct1(t.model_pct(m)), v, "model " + m);
}

void lpm_replication(Check& c) {
  const auto data = paper_replication_dataset();
  const auto r = fit_lpm(data);
  c.near(*r.coefficient("MULTIPOLAR") * 100, 16.25, 1e-9, "MULTIPOLAR coefficient (pp)");
  c.near(*r.coefficient("FINITE_PERIODS") * 100, 35.0, 1e-9, "FINITE_PERIODS coefficient (pp)");
  c.near(*r.coefficient("COMMUNICATION") * 100, -22.5, 1e-9, "COMMUNICATION coefficient (pp)");
  c.near(r.r_squared, 0.512, 0.001, "R-squared");

  const std::array<std::tuple<std::string, double, double>, 3> bands{
      {{"MULTIPOLAR", 4.2, 5.2}, {"FINITE_PERIODS", 4.0, 5.0}, {"COMMUNICATION", 5.3, 6.3}}};
  std::optional<Covariance> chosen;
  for (auto cov : kAllCovariances) {
    bool inside = true;
    for (const auto& [name, lo, hi] : bands) {
      const double se = *r.standard_error(name, cov) * 100;
      inside &= se >= lo && se <= hi;
    }
    if (inside) {
      chosen = cov;
      break;
    }
  }
  c.expect(chosen.has_value(), "no HC variant puts all three robust SEs inside their bands");
  if (!chosen) return;

  const auto boot = oracle::pairs_bootstrap_se(data, r.reference_model, 10000, 20240611);
  for (const auto& [name, lo, hi] : bands) {
    const double se = *r.standard_error(name, *chosen);
    const double b = boot.at(*r.index_of(name));
    c.notes.push_back(name + ": " + std::string(to_string(*chosen)) + " " + format_fixed(se * 100, 3) +
                      "pp, pairs bootstrap " + format_fixed(b * 100, 3) + "pp");
    c.expect(std::abs(b - se) / se <= 0.10,
             name + ": bootstrap SE " + format_fixed(b * 100, 3) + "pp vs " + std::string(to_string(*chosen)) +
                 " " + format_fixed(se * 100, 3) + "pp differ by more than 10%");
  }
}

void leave_one_out(Check& c) {
  const auto loo = leave_one_model_out(paper_replication_dataset());
  const std::map<std::string, std::array<const char*, 4>> expected{
      {"gemini", {"56.7", "75.0", "100.0", "40.0"}},
      {"gpt-5", {"55.0", "75.0", "100.0", "26.7"}},
      {"gpt-5-mini", {"61.7", "76.7", "100.0", "46.7"}},
      {"sonnet", {"86.7", "98.3", "100.0", "56.7"}},
  };
  for (const auto& [m, cells] : expected) {
    for (Treatment t : treatments()) {
      c.equal(pct1(loo.at(m)[index_of(t)]), cells[index_of(t)], "omit " + m + " " + std::string(to_string(t)));
    }
  }
}

void within_model(Check& c) {
  const auto data = paper_replication_dataset();
  const auto deltas = within_model_deltas(data);
  const auto table = incidence_table(data);
  const std::map<std::string, std::pair<double, double>> expected{
      {"gpt-5", {5, -5}}, {"gemini", {10, -40}}, {"gpt-5-mini", {20, -45}}, {"sonnet", {30, 0}}};
  for (const auto& [m, d] : expected) {
    c.expect(deltas.at(m)[1] == d.first, m + " multipolar delta " + pct1(deltas.at(m)[1]));
    c.expect(deltas.at(m)[3] == d.second, m + " communication delta " + pct1(deltas.at(m)[3]));
    c.expect(table.cell_pct(m, Treatment::FinitePeriods) == 100.0, m + " finite rate");
  }
}

void timing_and_structure(Check& c) {
  const auto data = paper_replication_dataset();
  const auto s = timing_stats(data);
  c.equal(format_fixed(*s[0].mean_peaceful_periods, 2), "0.02", "baseline mean peaceful periods");
  c.expect(s[0].war_games == 52 && s[0].war_period_histogram[0] == 51, "baseline 51+1 of 52");
  c.equal(format_fixed(*s[3].mean_peaceful_periods, 2), "0.03", "communication mean peaceful periods");
  c.expect(s[3].war_games == 34 && s[3].war_period_histogram[0] == 33, "communication 33+1 of 34");
  c.near(*s[1].mean_peaceful_periods, 0.48, 0.02, "multipolar mean peaceful periods");
  c.expect(s[1].war_games == 65 && s[1].war_period_histogram[0] == 59, "multipolar 59 of 65 in period 1");
  c.near(*s[2].mean_peaceful_periods, 1.70, 0.02, "finite mean peaceful periods");
  c.expect(s[2].war_games == 80 && s[2].war_period_histogram[0] == 60, "finite 60 of 80 in period 1");

  const auto st = attack_structure_table(data);
  c.expect(st[0].unilateral == 25 && st[0].simultaneous() == 27, "baseline 25/27");
  c.expect(st[2].unilateral == 28 && st[2].simultaneous() == 52, "finite 28/52");
  c.expect(st[1].unilateral == 14 && st[1].simultaneous_2 == 18 && st[1].simultaneous_3 == 33, "multipolar 14/18/33");
  c.expect(st[3].unilateral == 27 && st[3].simultaneous() == 7, "communication 27/7");
}

Transcript random_game(std::mt19937_64& rng, Treatment t, std::vector<PolicySpec>& specs, std::uint64_t& seed) {
  const auto config = GameConfig::for_treatment(t);
  specs.clear();
  for (std::size_t a = 0; a < config.agent_ids.size(); ++a) specs.push_back(oracle::random_policy(rng, t));
  seed = rng();
  auto roster = oracle::roster_for(config, specs);
  return play(config, roster, seed, true);
}

void coder_oracle(Check& c) {
  std::mt19937_64 rng(6);
  int disagreements = 0;
  for (int i = 0; i < 1000; ++i) {
    const Treatment t = kAllTreatments[static_cast<std::size_t>(i % 4)];
    std::vector<PolicySpec> specs;
    std::uint64_t seed = 0;
    const auto tr = random_game(rng, t, specs, seed);
    const auto o = code_outcome({RunKey{"m", t, i + 1}, tr, {}, {}});
    const auto s = oracle::scan(tr);
    const bool same = o.war_started == s.war && o.war_period.value_or(0) == s.war_period &&
                      o.peaceful_periods_before_war.value_or(0) == s.peaceful && o.n_attackers == s.attackers &&
                      to_string(o.attack_structure) == s.structure && o.terminal_profile == s.profile;
    disagreements += !same;
  }
  c.expect(disagreements == 0, std::to_string(disagreements) + " disagreement(s) with the brute-force scanner");
}

// Takes actions from a scripted policy but writes tagged texts and records
// every context it is shown.
class TaggedAgent : public Agent {
 public:
  TaggedAgent(std::unique_ptr<Agent> inner, std::string tag, std::vector<DecisionContext>* seen)
      : inner_(std::move(inner)), tag_(std::move(tag)), seen_(seen) {}
  Decision decide(const DecisionContext& ctx) override {
    seen_->push_back(ctx);
    auto d = inner_->decide(ctx);
    const auto p = std::to_string(ctx.current_period);
    d.message = "MSG-" + tag_ + "-" + p;
    d.reasoning = "REASON-" + tag_ + "-" + p;
    return d;
  }

 private:
  std::unique_ptr<Agent> inner_;
  std::string tag_;
  std::vector<DecisionContext>* seen_;
};

void engine_properties(Check& c) {
  std::mt19937_64 rng(7);
  int after_attack = 0, leaks = 0, order_mismatch = 0, nondeterministic = 0;
  for (int i = 0; i < 1000; ++i) {
    const Treatment t = kAllTreatments[static_cast<std::size_t>(i % 4)];
    const auto config = GameConfig::for_treatment(t);
    std::vector<PolicySpec> specs;
    std::uint64_t seed = 0;
    const auto tr = random_game(rng, t, specs, seed);

    for (std::size_t p = 0; p + 1 < tr.periods.size(); ++p) after_attack += tr.periods[p].any_attack();
    after_attack += find_invariant_violation(tr).has_value();

    auto again_roster = oracle::roster_for(config, specs);
    const auto again = play(config, again_roster, seed, true);
    const RunKey key{"m", t, 1};
    nondeterministic += serialize({key, tr, {}, {}}) != serialize({key, again, {}, {}});

    std::map<AgentId, std::vector<DecisionContext>> seen;
    AgentRoster tagged;
    for (std::size_t a = 0; a < config.agent_ids.size(); ++a) {
      const auto& id = config.agent_ids[a];
      tagged[id] = std::make_unique<TaggedAgent>(make_scripted(specs[a]), "S" + id, &seen[id]);
    }
    play(config, tagged, seed, true);
    for (const auto& [id, contexts] : seen) {
      for (const auto& ctx : contexts) {
        std::string blob;
        for (const auto& h : ctx.private_history) blob += h.message + "|" + h.reasoning + "|";
        if (ctx.public_log) {
          for (const auto& e : *ctx.public_log) blob += e.message + "|";
        }
        const auto prompt = render(ctx);
        for (const auto& other : config.agent_ids) {
          if (other == id) continue;
          leaks += blob.find("REASON-S" + other) != std::string::npos;
          leaks += prompt.find("REASON-S" + other) != std::string::npos;
          if (t != Treatment::Communication) {
            leaks += blob.find("MSG-S" + other) != std::string::npos;
            leaks += prompt.find("MSG-S" + other) != std::string::npos;
          }
        }
      }
    }

    auto forward = oracle::roster_for(config, specs);
    auto backward = oracle::roster_for(config, specs);
    auto ga = new_game(config, seed, true);
    auto gb = new_game(config, seed, true);
    while (!ga.terminated()) {
      std::vector<std::pair<AgentId, Decision>> a_subs, b_subs;
      for (const auto& id : config.agent_ids) a_subs.emplace_back(id, forward.at(id)->decide(ga.context_for(id)));
      for (auto it = config.agent_ids.rbegin(); it != config.agent_ids.rend(); ++it) {
        b_subs.emplace_back(*it, backward.at(*it)->decide(gb.context_for(*it)));
      }
      std::shuffle(b_subs.begin(), b_subs.end(), rng);
      ga.resolve_period(a_subs);
      gb.resolve_period(b_subs);
    }
    order_mismatch += !(ga.transcript() == gb.transcript()) || !(ga.transcript() == tr);
  }
  c.expect(after_attack == 0, std::to_string(after_attack) + " period(s) after an attack or invariant breaks");
  c.expect(leaks == 0, std::to_string(leaks) + " cross-agent text leak(s)");
  c.expect(order_mismatch == 0, std::to_string(order_mismatch) + " submission-order mismatch(es)");
  c.expect(nondeterministic == 0, std::to_string(nondeterministic) + " non-identical rerun(s)");
}

std::vector<std::vector<std::string>> read_tsv(const std::string& name) {
  std::istringstream in(read_fixture(name));
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream s(line);
    for (std::string f; std::getline(s, f, '\t');) fields.push_back(f);
    rows.push_back(fields);
  }
  return rows;
}

void classifier_golden(Check& c) {
  const auto golden = read_tsv("coding_golden.tsv");
  c.expect(golden.size() == 9, "golden set has " + std::to_string(golden.size()) + " snippets, expected 9");
  for (const auto& g : golden) {
    const bool reasoning = g[0] == "reasoning";
    const auto label = [&] {
      return reasoning ? std::string(to_string(classify_reasoning(g[2]).category))
                       : std::string(to_string(classify_message(g[2]).category));
    };
    const auto first = label();
    c.equal(first, g[1], "\"" + g[2] + "\"");
    c.expect(label() == first, "non-deterministic label for \"" + g[2] + "\"");
  }

  std::vector<ReasoningRow> reasoning;
  std::vector<MessageRow> messages;
  for (int i = 0; i < 90; ++i) {
    const auto& g = golden[static_cast<std::size_t>(i) % golden.size()];
    const Treatment t = kAllTreatments[static_cast<std::size_t>(i) % 4];
    const std::string model = i % 3 ? "m1" : "m2";
    reasoning.push_back({"k", model, t, "A", 1, classify_reasoning(g[2])});
    messages.push_back({"k", model, t, "A", 1, classify_message(g[2])});
  }
  const auto rs = category_shares(
      reasoning, [](const ReasoningRow& r) { return std::string(to_string(r.treatment)); }, kReasoningCategories);
  const auto ms = category_shares(messages, [](const MessageRow& r) { return r.model_id; }, kMessageCategories);
  for (const auto& [g, row] : rs) {
    double sum = 0;
    for (double v : row) sum += v;
    c.near(sum, 100.0, 1e-9, "reasoning shares for " + g);
  }
  for (const auto& [g, row] : ms) {
    double sum = 0;
    for (double v : row) sum += v;
    c.near(sum, 100.0, 1e-9, "message shares for " + g);
  }
}

void gateway_contract(Check& c) {
  mock::Provider server;
  const auto body = read_fixture("provider_reply_valid.txt");
  server.route("/valid", mock::always(body));
  server.route("/limited", [](int call, const httplib::Request&, httplib::Response& res) {
    if (call <= 2) {
      res.status = 429;
      return;
    }
    res.set_content(mock::openai_reply(R"({"action":"ATTACK","message":"","reasoning":"x"})"), "application/json");
  });
  server.route("/garbage", mock::always("I refuse to answer in JSON."));
  server.route("/peace", mock::always(R"({"action":"DO_NOTHING","message":"","reasoning":"wait"})"));
  Gateway gw;

  try {
    const auto raw = gw.complete(mock::spec_for(server, "/valid"), "p");
    c.expect(raw.text == body, "valid fixture did not round-trip verbatim");
  } catch (const std::exception& e) {
    c.expect(false, std::string("valid fixture: ") + e.what());
  }

  try {
    const auto raw = gw.complete(mock::spec_for(server, "/limited"), "p");
    c.expect(raw.attempt == 3, "429-429-200 succeeded at attempt " + std::to_string(raw.attempt));
    c.expect(server.calls("/limited") == 3, "429-429-200 issued " + std::to_string(server.calls("/limited")) + " requests");
  } catch (const std::exception& e) {
    c.expect(false, std::string("429-then-200: ") + e.what());
  }

  const auto config = GameConfig::for_treatment(Treatment::Baseline);
  std::vector<RecordedGame> games;
  for (int rep = 1; rep <= 5; ++rep) {
    AgentRoster roster;
    roster["A"] = llm_agent(gw, mock::spec_for(server, rep == 3 ? "/garbage" : "/peace"), "k");
    roster["B"] = make_scripted(rep % 2 ? PolicySpec::always_peace() : PolicySpec::always_attack());
    games.push_back({RunKey{"mock", Treatment::Baseline, rep}, play(config, roster, std::uint64_t(rep)), {}, {}});
  }
  const auto spec = mock::spec_for(server, "/garbage");
  c.expect(games[2].transcript.aborted(), "persistent malformed output did not abort the game");
  c.expect(server.calls("/garbage") == spec.retry.max_attempts,
           "malformed output asked " + std::to_string(server.calls("/garbage")) + " times, max_attempts is " +
               std::to_string(spec.retry.max_attempts));
  const auto coded = code_corpus(games);
  c.expect(coded.outcomes.size() == 4 && coded.rejected.size() == 1, "aborted game not excluded from coding");
  const auto table = incidence_table(coded.outcomes);
  c.expect(table.overall.games == 4, "incidence denominator is " + std::to_string(table.overall.games));
  c.expect(table.treatment_pct(Treatment::Baseline) == 50.0,
           "baseline rate over complete games is " + pct1(table.treatment_pct(Treatment::Baseline)));
  const auto timing = timing_stats(coded.outcomes);
  c.expect(timing[0].war_games == 2, "timing counted " + std::to_string(timing[0].war_games) + " wars");
}

void prompt_fidelity(Check& c) {
  const auto rules = rules_for(Treatment::Baseline);
  c.expect(rules == read_fixture("baseline_rules_block.txt"), "baseline rules differ from the published block");
  c.expect(rules.find("Return valid JSON only with exactly these keys") != std::string::npos,
           "baseline rules lack the JSON instruction");

  const auto base = oracle::lines(rules);
  auto only = [&](const std::vector<std::string>& changed, const std::regex& allowed, const std::string& what) {
    for (const auto& l : changed) c.expect(l.empty() || std::regex_search(l, allowed), what + " touches: " + l);
  };
  const auto multi = oracle::diff(base, oracle::lines(rules_for(Treatment::Multipolar)));
  c.expect(!multi.added.empty(), "multipolar rules identical to baseline");
  only(multi.removed, std::regex("two agents|other agent|both agents"), "multipolar diff");
  only(multi.added, std::regex("three agents|other agents|all agents|other agent"), "multipolar diff");

  const auto finite = oracle::diff(base, oracle::lines(rules_for(Treatment::FinitePeriods)));
  c.expect(finite.removed.size() == 1 && finite.added.size() == 1, "finite diff is not a single-line change");
  only(finite.removed, std::regex("unknown number of periods"), "finite diff");
  only(finite.added, std::regex("exactly 10 periods"), "finite diff");

  const auto comm = oracle::diff(base, oracle::lines(rules_for(Treatment::Communication)));
  c.expect(comm.removed.empty(), "communication diff removes baseline lines");
  c.expect(!comm.added.empty(), "communication rules identical to baseline");
  only(comm.added, std::regex("Communication|[Mm]essage"), "communication diff");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"incidence marginals by treatment and model", incidence_marginals},
      {"linear probability model coefficients, R-squared, robust SEs, bootstrap", lpm_replication},
      {"leave-one-model-out pooled rates", leave_one_out},
      {"within-model treatment deltas", within_model},
      {"war timing and attack structure", timing_and_structure},
      {"outcome coder agrees with brute-force scanner (1,000 games)", coder_oracle},
      {"engine properties on 1,000 randomized games", engine_properties},
      {"classifier golden set, determinism, shares sum to 100", classifier_golden},
      {"gateway contract under a local mock provider", gateway_contract},
      {"prompt fidelity and cross-treatment diffs", prompt_fidelity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = c.failures.empty();
    failed += !ok;
    std::printf("%s  %2zu  %s\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str());
    for (const auto& n : c.notes) std::printf("        %s\n", n.c_str());
    for (const auto& f : c.failures) std::printf("        %s\n", f.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
