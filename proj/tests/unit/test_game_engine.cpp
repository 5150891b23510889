#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dilemma/agents.hpp"
#include "dilemma/game_engine.hpp"
#include "dilemma/record.hpp"
#include "../support/oracles.hpp"

using namespace dilemma;

namespace {

Decision peace() { return {Action::DoNothing, "", "hold"}; }
Decision attack() { return {Action::Attack, "", "strike"}; }

Transcript self_play(Treatment t, const PolicySpec& a, const PolicySpec& b, std::uint64_t seed = 1) {
  const auto c = GameConfig::for_treatment(t);
  std::vector<PolicySpec> specs{a, b, b};
  specs.resize(c.agent_ids.size());
  auto roster = oracle::roster_for(c, specs);
  return play(c, roster, seed, true);
}

}  // namespace

TEST(GameConfig, TreatmentsFixStructure) {
  const auto base = GameConfig::for_treatment(Treatment::Baseline);
  EXPECT_EQ(base.n_agents, 2);
  EXPECT_FALSE(base.horizon_disclosed);
  EXPECT_FALSE(base.communication_enabled);
  const auto multi = GameConfig::for_treatment(Treatment::Multipolar);
  EXPECT_EQ(multi.n_agents, 3);
  EXPECT_EQ(multi.agent_ids, (std::vector<AgentId>{"A", "B", "C"}));
  EXPECT_TRUE(GameConfig::for_treatment(Treatment::FinitePeriods).horizon_disclosed);
  EXPECT_TRUE(GameConfig::for_treatment(Treatment::Communication).communication_enabled);
}

TEST(GameConfig, RejectsInvalid) {
  auto c = GameConfig::for_treatment(Treatment::Baseline);
  c.n_agents = 1;
  c.agent_ids = {"A"};
  EXPECT_THROW(new_game(c), ConfigError);

  auto longer = GameConfig::for_treatment(Treatment::Baseline, 12);
  EXPECT_NO_THROW(new_game(longer));
  EXPECT_THROW(new_game(longer, 0, true), ConfigError);

  auto mixed = GameConfig::for_treatment(Treatment::Baseline);
  mixed.communication_enabled = true;
  EXPECT_THROW(new_game(mixed), ConfigError);
}

TEST(GameState, InitialContextIsEmpty) {
  auto g = new_game(GameConfig::for_treatment(Treatment::Baseline));
  EXPECT_EQ(g.current_period(), 1);
  const auto ctx = g.context_for("A");
  EXPECT_TRUE(ctx.private_history.empty());
  EXPECT_FALSE(ctx.public_log.has_value());
  EXPECT_EQ(ctx.rules.horizon_text, "unknown number of periods");
  EXPECT_THROW(g.context_for("Z"), LookupError);
}

TEST(GameState, PrivateHistoryHoldsOnlyOwnEntries) {
  auto g = new_game(GameConfig::for_treatment(Treatment::Baseline));
  g.resolve_period(std::map<AgentId, Decision>{{"A", {Action::DoNothing, "", "a1"}},
                                               {"B", {Action::DoNothing, "", "b1"}}});
  g.resolve_period(std::map<AgentId, Decision>{{"A", {Action::DoNothing, "", "a2"}},
                                               {"B", {Action::DoNothing, "", "b2"}}});
  const auto ctx = g.context_for("A");
  EXPECT_EQ(ctx.current_period, 3);
  ASSERT_EQ(ctx.private_history.size(), 2u);
  EXPECT_EQ(ctx.private_history[0].reasoning, "a1");
  EXPECT_EQ(ctx.private_history[1].reasoning, "a2");
}

TEST(GameState, CommunicationLogIsShared) {
  auto g = new_game(GameConfig::for_treatment(Treatment::Communication));
  g.resolve_period(std::map<AgentId, Decision>{{"A", {Action::DoNothing, "peace?", "x"}},
                                               {"B", {Action::DoNothing, "agreed", "y"}}});
  for (const AgentId id : {"A", "B"}) {
    const auto ctx = g.context_for(id);
    ASSERT_TRUE(ctx.public_log);
    ASSERT_EQ(ctx.public_log->size(), 2u);
    EXPECT_EQ((*ctx.public_log)[0].agent_id, "A");
    EXPECT_EQ((*ctx.public_log)[1].message, "agreed");
  }
}

TEST(GameState, BlankMessagesAreNotLogged) {
  auto g = new_game(GameConfig::for_treatment(Treatment::Communication));
  g.resolve_period(std::map<AgentId, Decision>{{"A", {Action::DoNothing, "  ", "x"}},
                                               {"B", {Action::DoNothing, "hi", "y"}}});
  EXPECT_EQ(g.public_log().size(), 1u);
}

TEST(GameState, ResolutionOutcomes) {
  auto g = new_game(GameConfig::for_treatment(Treatment::Baseline));
  for (int p = 1; p <= 3; ++p) {
    EXPECT_FALSE(g.resolve_period(std::map<AgentId, Decision>{{"A", peace()}, {"B", peace()}}).terminated);
  }
  const auto r4 = g.resolve_period(std::map<AgentId, Decision>{{"A", peace()}, {"B", peace()}});
  EXPECT_FALSE(r4.terminated);

  auto h = new_game(GameConfig::for_treatment(Treatment::Baseline));
  const auto r = h.resolve_period(std::map<AgentId, Decision>{{"A", attack()}, {"B", peace()}});
  EXPECT_TRUE(r.terminated);
  EXPECT_EQ(r.cause, Termination::AttackEnded);
  EXPECT_THROW(h.context_for("A"), StateError);
  EXPECT_THROW(h.resolve_period(std::map<AgentId, Decision>{{"A", peace()}, {"B", peace()}}), StateError);

  auto k = new_game(GameConfig::for_treatment(Treatment::Baseline));
  PeriodResult last;
  for (int p = 1; p <= 10; ++p) last = k.resolve_period(std::map<AgentId, Decision>{{"A", peace()}, {"B", peace()}});
  EXPECT_EQ(last.cause, Termination::CapReached);
  EXPECT_EQ(k.transcript().periods.size(), 10u);
}

TEST(GameState, ProtocolErrors) {
  auto g = new_game(GameConfig::for_treatment(Treatment::Baseline));
  using Subs = std::vector<std::pair<AgentId, Decision>>;
  EXPECT_THROW(g.resolve_period(Subs{{"A", peace()}}), ProtocolError);
  EXPECT_THROW(g.resolve_period(Subs{{"A", peace()}, {"A", peace()}}), ProtocolError);
  EXPECT_THROW(g.resolve_period(Subs{{"A", peace()}, {"Q", peace()}}), ProtocolError);
  EXPECT_EQ(g.current_period(), 1);
}

TEST(Play, ForcedExamples) {
  const auto peaceful = self_play(Treatment::Baseline, PolicySpec::always_peace(), PolicySpec::always_peace());
  EXPECT_EQ(peaceful.periods.size(), 10u);
  EXPECT_EQ(peaceful.termination, Termination::CapReached);

  const auto at3 = self_play(Treatment::Baseline, PolicySpec::attack_at(3), PolicySpec::always_peace());
  EXPECT_EQ(at3.periods.size(), 3u);
  EXPECT_EQ(at3.termination, Termination::AttackEnded);
  EXPECT_EQ(at3.periods.back().attackers(), 1);

  const auto hawks = self_play(Treatment::Multipolar, PolicySpec::always_attack(), PolicySpec::always_attack());
  EXPECT_EQ(hawks.periods.size(), 1u);
  EXPECT_EQ(hawks.periods.back().attackers(), 3);
}

TEST(Play, AgentFailureAbortsGame) {
  class Failing : public Agent {
   public:
    Decision decide(const DecisionContext& c) override {
      if (c.current_period == 2) throw AgentFailure("parse: no JSON");
      return {Action::DoNothing, "", "ok"};
    }
  };
  const auto c = GameConfig::for_treatment(Treatment::Baseline);
  AgentRoster r;
  r["A"] = std::make_unique<Failing>();
  r["B"] = make_scripted(PolicySpec::always_peace());
  const auto t = play(c, r, 0);
  EXPECT_TRUE(t.aborted());
  EXPECT_EQ(t.periods.size(), 1u);
  EXPECT_NE(t.abort_reason.find("period 2"), std::string::npos);
  EXPECT_FALSE(find_invariant_violation(t));
}

TEST(Play, RejectsMismatchedRoster) {
  const auto c = GameConfig::for_treatment(Treatment::Baseline);
  AgentRoster r;
  r["A"] = make_scripted(PolicySpec::always_peace());
  EXPECT_THROW(play(c, r, 0), ConfigError);
}

TEST(Invariants, DetectsPeriodAfterAttack) {
  auto t = self_play(Treatment::Baseline, PolicySpec::attack_at(2), PolicySpec::always_peace());
  EXPECT_FALSE(find_invariant_violation(t));
  auto broken = t;
  broken.periods.push_back({3, {{"A", peace()}, {"B", peace()}}});
  EXPECT_TRUE(find_invariant_violation(broken));
  auto wrong_cause = t;
  wrong_cause.termination = Termination::CapReached;
  EXPECT_TRUE(find_invariant_violation(wrong_cause));
}

// Property sweep over randomized scripted games.
class RandomGames : public ::testing::TestWithParam<Treatment> {};

TEST_P(RandomGames, StructuralInvariants) {
  std::mt19937_64 rng(0xC0FFEE + index_of(GetParam()));
  for (int i = 0; i < 150; ++i) {
    const auto c = GameConfig::for_treatment(GetParam());
    std::vector<PolicySpec> specs;
    for (std::size_t a = 0; a < c.agent_ids.size(); ++a) specs.push_back(oracle::random_policy(rng, GetParam()));
    const auto seed = rng();
    auto r1 = oracle::roster_for(c, specs);
    const auto t = play(c, r1, seed, true);

    EXPECT_FALSE(find_invariant_violation(t)) << *find_invariant_violation(t);
    EXPECT_LE(t.periods.size(), 10u);
    for (std::size_t p = 0; p + 1 < t.periods.size(); ++p) EXPECT_FALSE(t.periods[p].any_attack());
    const bool full_peace = t.periods.size() == 10 && !t.periods.back().any_attack();
    EXPECT_EQ(full_peace, t.termination == Termination::CapReached);

    auto r2 = oracle::roster_for(c, specs);
    const auto again = play(c, r2, seed, true);
    EXPECT_EQ(serialize({RunKey{"m", GetParam(), 1}, t, {}, {}}),
              serialize({RunKey{"m", GetParam(), 1}, again, {}, {}}));
  }
}

TEST_P(RandomGames, SubmissionOrderDoesNotMatter) {
  std::mt19937_64 rng(77 + index_of(GetParam()));
  for (int i = 0; i < 100; ++i) {
    const auto c = GameConfig::for_treatment(GetParam());
    std::vector<PolicySpec> specs;
    for (std::size_t a = 0; a < c.agent_ids.size(); ++a) specs.push_back(oracle::random_policy(rng, GetParam()));
    const auto seed = rng();
    auto ra = oracle::roster_for(c, specs);
    auto rb = oracle::roster_for(c, specs);
    auto ga = new_game(c, seed);
    auto gb = new_game(c, seed);
    while (!ga.terminated()) {
      std::vector<std::pair<AgentId, Decision>> subs;
      std::vector<DecisionContext> ctxs;
      for (const auto& id : c.agent_ids) ctxs.push_back(ga.context_for(id));
      for (const auto& ctx : ctxs) subs.emplace_back(ctx.agent_id, ra.at(ctx.agent_id)->decide(ctx));
      ga.resolve_period(subs);

      std::vector<DecisionContext> ctxb;
      for (const auto& id : c.agent_ids) ctxb.push_back(gb.context_for(id));
      std::vector<std::pair<AgentId, Decision>> rev;
      for (auto it = ctxb.rbegin(); it != ctxb.rend(); ++it) rev.emplace_back(it->agent_id, rb.at(it->agent_id)->decide(*it));
      std::shuffle(rev.begin(), rev.end(), rng);
      gb.resolve_period(rev);
    }
    EXPECT_EQ(ga.transcript(), gb.transcript());
  }
}

INSTANTIATE_TEST_SUITE_P(AllTreatments, RandomGames, ::testing::ValuesIn(kAllTreatments),
                         [](const auto& info) { return std::string(slug(info.param)); });

TEST(Isolation, NoCrossAgentTextOutsideCommunication) {
  for (Treatment t : kAllTreatments) {
    const auto c = GameConfig::for_treatment(t);
    std::map<AgentId, std::shared_ptr<std::vector<DecisionContext>>> seen;
    AgentRoster r;
    for (const auto& id : c.agent_ids) {
      seen[id] = std::make_shared<std::vector<DecisionContext>>();
      r[id] = std::make_unique<oracle::SentinelAgent>("S" + id, seen[id]);
    }
    play(c, r, 3);
    for (const auto& [id, contexts] : seen) {
      ASSERT_EQ(contexts->size(), 10u);
      for (const auto& ctx : *contexts) {
        std::string blob;
        for (const auto& h : ctx.private_history) blob += h.message + "|" + h.reasoning + "|";
        if (ctx.public_log) {
          for (const auto& e : *ctx.public_log) blob += e.message + "|";
        }
        for (const auto& other : c.agent_ids) {
          if (other == id) continue;
          EXPECT_EQ(blob.find("REASON-S" + other), std::string::npos);
          if (t != Treatment::Communication) {
            EXPECT_EQ(blob.find("MSG-S" + other), std::string::npos);
          }
        }
        if (t == Treatment::Communication && ctx.current_period > 1) {
          EXPECT_NE(blob.find("MSG-S" + std::string(id == "A" ? "B" : "A")), std::string::npos);
        }
      }
    }
  }
}
