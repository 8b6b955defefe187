// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <map>
#include <random>

#include "ethrev/committee/committee.hpp"
#include "ethrev/common/io.hpp"
#include "ethrev/review/dossier.hpp"
#include "fixtures.hpp"

using namespace ethrev;
using namespace ethrev::committee;
using ethrev::testing::fixture;
using nlohmann::json;

namespace {

review::Dossier d1() { return review::load_dossier(fixture("dossiers/d1")); }

const std::vector<Role> kVoting = {Role::ethics_reviewer, Role::life_sciences, Role::medical,
                                   Role::legal,           Role::disciplinary,  Role::social_representative};

// A scripted session: which cells raise an issue and in which round (if any)
// the raiser is satisfied.
struct Session {
  gateway::Playbook playbook;
  std::map<std::string, int> satisfied_round;  // issue id -> round, 0 = never
};

Session scripted_session(std::mt19937& rng, int max_rounds) {
  Session s;
  s.playbook.set_json("review:*", {{"issues", json::array()}});
  s.playbook.set_json("synthesis:*", {{"summary", "Scripted synthesis."},
                                      {"recommendations", {{{"category", "further_review"}, {"text", "Revisit."}}}}});
  std::uniform_int_distribution<std::size_t> role(0, kVoting.size() - 1), dim(0, dimensions().size() - 1);
  std::uniform_int_distribution<int> cells(1, 6), outcome(0, max_rounds), per_cell(1, 2);
  int n = cells(rng);
  for (int i = 0; i < n; ++i) {
    std::string r(to_string(kVoting[role(rng)]));
    const auto& d = dimensions()[dim(rng)];
    std::string key = "review:" + r + ":" + d;
    if (s.playbook.resolve(key) && *s.playbook.resolve(key) == key) continue;
    json issues = json::array();
    int k = per_cell(rng);
    for (int j = 1; j <= k; ++j) {
      std::string id = r + "/" + d + "/" + std::to_string(j);
      issues.push_back({{"description", "Concern " + id}});
      int sat = outcome(rng);
      s.satisfied_round[id] = sat;
      for (int round = 1; round <= max_rounds; ++round) {
        std::string base = "debate:" + id + ":";
        s.playbook.set_reply(base + "expert:" + std::to_string(round), "expert " + id + " round " + std::to_string(round));
        s.playbook.set_reply(base + "pi:" + std::to_string(round), "pi " + id + " round " + std::to_string(round));
        s.playbook.set_json(base + "judge:" + std::to_string(round),
                            {{"satisfied", sat == round}, {"position", "position " + std::to_string(round)}});
      }
    }
    s.playbook.set_json(key, {{"issues", issues}});
  }
  return s;
}

std::vector<Issue> all_issues(const CommitteeReport& r) {
  std::vector<Issue> out = r.resolved;
  for (const auto& u : r.unresolved) out.push_back(u.issue);
  return out;
}

}  // namespace

TEST(Roster, EightAgentsWithSeededGenders) {
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 987654321ull}) {
    auto roster = convene_committee(seed);
    ASSERT_EQ(roster.size(), 8u);
    std::mt19937_64 oracle(seed);
    for (std::size_t i = 0; i < roster.size(); ++i) {
      EXPECT_EQ(roster[i].role, all_roles()[i]);
      Gender want = (oracle() >> 63) ? Gender::female : Gender::male;
      EXPECT_EQ(roster[i].gender, want) << "seed " << seed << " agent " << i;
      EXPECT_EQ(roster[i].voting, i < 6);
      EXPECT_FALSE(roster[i].persona_prompt.empty());
    }
  }
}

TEST(Roster, SameSeedSameRoster) {
  auto a = convene_committee(42), b = convene_committee(42);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].gender, b[i].gender);
    EXPECT_EQ(a[i].persona_prompt, b[i].persona_prompt);
  }
}

TEST(Roster, MissingPersonaTemplateIsRejected) {
  auto t = Templates::builtin();
  t.personas.erase(Role::legal);
  EXPECT_THROW(convene_committee(1, t), std::invalid_argument);
  EXPECT_THROW(Templates::load(fixture("no-such-templates")), std::exception);
}

TEST(Roles, DomainsAndVoting) {
  EXPECT_TRUE(is_voting(Role::medical));
  EXPECT_FALSE(is_voting(Role::secretary));
  EXPECT_FALSE(is_voting(Role::pi));
  EXPECT_EQ(parse_role("social_representative"), Role::social_representative);
  EXPECT_THROW(parse_role("janitor"), std::invalid_argument);
  EXPECT_EQ(dimensions().size(), 10u);
}

TEST(Session, ScriptedSessionsConserveIssuesAndRespectTheRoundBound) {
  std::mt19937 rng(4242);
  auto dossier = d1();
  for (int session = 0; session < 10; ++session) {
    const int max_rounds = 1 + session % 3;
    auto s = scripted_session(rng, max_rounds);
    auto gw = ethrev::testing::mock_gateway(s.playbook);
    gw->set_recording(true);
    CommitteeOptions opts;
    opts.seed = static_cast<std::uint64_t>(session);
    opts.max_rounds = max_rounds;
    auto r = run_committee_review(*gw, dossier, opts);

    // Every Phase-I issue ends in exactly one bucket.
    ASSERT_EQ(r.phase1_issue_count, s.satisfied_round.size()) << "session " << session;
    ASSERT_EQ(r.resolved.size() + r.unresolved.size(), r.phase1_issue_count);
    for (const auto& is : all_issues(r)) {
      ASSERT_TRUE(s.satisfied_round.count(is.issue_id)) << is.issue_id;
      int sat = s.satisfied_round.at(is.issue_id);
      int rounds = sat ? sat : max_rounds;
      EXPECT_EQ(is.status, sat ? IssueStatus::provisionally_resolved : IssueStatus::unresolved);
      // Strict expert/PI alternation, never past the bound.
      ASSERT_EQ(is.transcript.size(), static_cast<std::size_t>(2 * rounds)) << is.issue_id;
      for (std::size_t t = 0; t < is.transcript.size(); ++t) {
        EXPECT_EQ(is.transcript[t].speaker, t % 2 == 0 ? is.raised_by : Role::pi);
        EXPECT_EQ(is.transcript[t].round, static_cast<int>(t / 2 + 1));
        EXPECT_LE(is.transcript[t].round, max_rounds);
      }
    }
    for (const auto& u : r.unresolved) EXPECT_EQ(u.domain, domain_of(u.issue.raised_by));
    if (r.unresolved.empty()) EXPECT_NE(r.summary, "Scripted synthesis.");

    // Phase I prompts carry only the expert's own persona and no deliberation.
    auto calls = gw->recorded();
    auto roster = convene_committee(opts.seed);
    std::size_t last_review = 0, first_debate = calls.size();
    for (std::size_t i = 0; i < calls.size(); ++i) {
      const auto& req = calls[i].request;
      if (req.tag.rfind("debate:", 0) == 0) first_debate = std::min(first_debate, i);
      if (req.tag.rfind("review:", 0) != 0) continue;
      last_review = i;
      std::string prompt;
      for (const auto& m : req.messages) prompt += m.text + "\n";
      std::string own = req.tag.substr(7, req.tag.find(':', 7) - 7);
      for (const auto& agent : roster) {
        bool mine = to_string(agent.role) == own;
        EXPECT_EQ(prompt.find(agent.persona_prompt) != std::string::npos, mine) << req.tag;
      }
      EXPECT_EQ(prompt.find("Concern "), std::string::npos) << req.tag;
    }
    EXPECT_LT(last_review, first_debate);
    EXPECT_EQ(std::count_if(calls.begin(), calls.end(),
                            [](const auto& c) { return c.request.tag.rfind("review:", 0) == 0; }),
              60);
  }
}

TEST(Debate, EveryPromptCarriesThePriorTurns) {
  gateway::Playbook pb;
  for (int r = 1; r <= 2; ++r) {
    pb.set_reply("debate:legal/compensation/1:expert:" + std::to_string(r), "E" + std::to_string(r) + " says");
    pb.set_reply("debate:legal/compensation/1:pi:" + std::to_string(r), "P" + std::to_string(r) + " says");
    pb.set_json("debate:legal/compensation/1:judge:" + std::to_string(r), {{"satisfied", r == 2}, {"position", "ok"}});
  }
  auto gw = ethrev::testing::mock_gateway(pb);
  gw->set_recording(true);
  auto roster = convene_committee(1);
  Issue is{"legal/compensation/1", "compensation", Role::legal, "Repayment", IssueStatus::open, {}, {}, {}};
  auto out = debate_issue(*gw, is, roster[3], roster[7], d1(), 3);
  EXPECT_EQ(out.status, IssueStatus::provisionally_resolved);
  EXPECT_EQ(out.position, "ok");
  auto calls = gw->recorded();
  ASSERT_EQ(calls.size(), 6u);
  // Round-2 expert prompt holds both round-1 turns.
  auto prompt = calls[3].request.messages.back().text;
  EXPECT_EQ(calls[3].request.tag, "debate:legal/compensation/1:expert:2");
  EXPECT_NE(prompt.find("E1 says"), std::string::npos);
  EXPECT_NE(prompt.find("P1 says"), std::string::npos);
}

TEST(Debate, GatewayFailureLeavesIssueUnresolvedWithNote) {
  gateway::Playbook pb;
  pb.set_reply("debate:*", "anything");
  pb.set_sequence("debate:legal/compensation/1:judge:1", {gateway::ScriptedReply{"", true}});
  auto gw = ethrev::testing::mock_gateway(pb, 1);
  auto roster = convene_committee(1);
  Issue is{"legal/compensation/1", "compensation", Role::legal, "Repayment", IssueStatus::open, {}, {}, {}};
  auto out = debate_issue(*gw, is, roster[3], roster[7], d1(), 3);
  EXPECT_EQ(out.status, IssueStatus::unresolved);
  EXPECT_FALSE(out.note.empty());
}

TEST(Debate, OnlyTheRaiserDebatesThePi) {
  auto gw = ethrev::testing::mock_gateway(gateway::Playbook{});
  auto roster = convene_committee(1);
  Issue is{"legal/compensation/1", "compensation", Role::legal, "Repayment", IssueStatus::open, {}, {}, {}};
  EXPECT_THROW(debate_issue(*gw, is, roster[2], roster[7], d1()), std::invalid_argument);
  EXPECT_THROW(debate_issue(*gw, is, roster[3], roster[6], d1()), std::invalid_argument);
  EXPECT_THROW(debate_issue(*gw, is, roster[3], roster[7], d1(), 0), std::invalid_argument);
}

TEST(Synthesis, FailureFallsBackToMechanicalSummary) {
  gateway::Playbook pb;
  pb.set_reply("synthesis:*", "not json");
  auto gw = ethrev::testing::mock_gateway(pb, 1);
  auto roster = convene_committee(1);
  Issue a{"legal/compensation/1", "compensation", Role::legal, "Repayment", IssueStatus::unresolved, {}, "remove", {}};
  Issue b{"medical/risk_minimization/1", "risk_minimization", Role::medical, "Burden",
          IssueStatus::provisionally_resolved, {}, "fine", {}};
  Diagnostics diag;
  auto r = synthesize(*gw, "x", {a, b}, roster[6], diag);
  EXPECT_TRUE(r.summary_flagged);
  EXPECT_FALSE(r.summary.empty());
  ASSERT_EQ(r.recommendations.size(), 1u);
  EXPECT_EQ(r.recommendations[0].category, "further_review");
  EXPECT_EQ(r.unresolved[0].domain, domain_of(Role::legal));
  EXPECT_FALSE(diag.empty());
}

TEST(Synthesis, OpenIssuesAndDuplicatesAreRejected) {
  auto gw = ethrev::testing::mock_gateway(gateway::Playbook{});
  auto roster = convene_committee(1);
  Issue open{"legal/compensation/1", "compensation", Role::legal, "x", IssueStatus::open, {}, {}, {}};
  Diagnostics diag;
  EXPECT_THROW(synthesize(*gw, "x", {open}, roster[6], diag), std::invalid_argument);
  open.status = IssueStatus::unresolved;
  EXPECT_THROW(synthesize(*gw, "x", {open, open}, roster[6], diag), std::invalid_argument);
  EXPECT_THROW(synthesize(*gw, "x", {}, roster[0], diag), std::invalid_argument);
}

TEST(Dissent, SplitWithinADimensionIsRecorded) {
  Issue a{"legal/compensation/1", "compensation", Role::legal, "x", IssueStatus::unresolved, {}, "remove it", {}};
  Issue b{"social_representative/compensation/1", "compensation", Role::social_representative, "y",
          IssueStatus::provisionally_resolved, {}, "fine", {}};
  Issue c{"medical/risk_minimization/1", "risk_minimization", Role::medical, "z", IssueStatus::unresolved, {}, "", {}};
  std::vector<Issue> issues = {a, b, c};
  auto d = find_dissent(issues);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].role, Role::legal);
  EXPECT_EQ(d[1].role, Role::social_representative);
}

TEST(CommitteeReview, FixtureSessionMatchesGolden) {
  auto run = [] {
    auto gw = ethrev::testing::mock_gateway("playbooks/pipeline.json");
    return run_committee_review(*gw, d1(), {42, 3, 4, false});
  };
  auto a = run();
  auto b = run();
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_EQ(render_minutes(a), render_minutes(b));
  EXPECT_EQ(a.phase1_issue_count, 4u);
  EXPECT_EQ(a.resolved.size(), 3u);
  ASSERT_EQ(a.unresolved.size(), 1u);
  EXPECT_EQ(a.unresolved[0].issue.issue_id, "legal/compensation/1");
  EXPECT_EQ(a.unresolved[0].issue.transcript.size(), 6u);
  EXPECT_EQ(a.dissent.size(), 2u);
  auto golden = io::read_json(fixture("golden/committee.json"));
  auto got = to_json(a);
  golden.erase("provenance");
  EXPECT_EQ(got, golden);
}
