// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "ethrev/common/io.hpp"
#include "ethrev/common/text.hpp"
#include "ethrev/graph/graph.hpp"
#include "ethrev/review/dossier.hpp"
#include "ethrev/review/expedited.hpp"
#include "ethrev/rules/vocabulary.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ethrev;
using namespace ethrev::review;
using ethrev::testing::fixture;
using nlohmann::json;

namespace {

graph::RuleGraph golden_graph() { return graph::load_graph(fixture("golden/graph.json")); }

std::vector<std::string> ids(const std::vector<rules::CanonicalRule>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.rule_id);
  return out;
}

// Every subject label that occurs in the graph plus one that never does.
std::vector<std::string> label_universe(const graph::RuleGraph& g) {
  std::set<std::string> s = {"sponsor"};
  for (const auto& r : g.rules) s.insert(r.subject.label);
  return {s.begin(), s.end()};
}

const std::vector<std::string> kTopics = {
    "Written informed consent is obtained from each participant before enrolment by the study nurse.",
    "Saliva samples are stored in the hospital biobank under a coded identifier.",
    "Participants may withdraw at any time and keep their vouchers.",
    "The ethics committee receives reports of serious adverse events within 30 days.",
    "Identifiable data never leave the institution without committee approval.",
    "Adolescents give assent on a separate form read aloud by the investigator.",
    "Parents sign the parental consent form before any procedure.",
    "Questionnaires are completed on a tablet in a private room.",
    "Travel costs are reimbursed at a flat rate per visit.",
    "Results are shared with schools only in aggregate form.",
};

// 25 single-chunk sections mixing the topics with filler sentences.
Dossier large_dossier() {
  std::vector<Section> sections;
  for (int i = 0; i < 25; ++i) {
    char name[8];
    std::snprintf(name, sizeof name, "s%02d", i + 1);
    std::string body = kTopics[static_cast<std::size_t>(i) % kTopics.size()];
    if (i >= 10) body += " Section " + std::to_string(i) + " repeats administrative details for the sponsor.";
    sections.push_back({name, body});
  }
  return make_dossier("big", {{"population", "adolescents"}}, sections, {400, 80});
}

}  // namespace

TEST(Dossier, LoadsDirectoryLayout) {
  auto d = load_dossier(fixture("dossiers/d1"));
  EXPECT_EQ(d.dossier_id, "d1");
  ASSERT_EQ(d.sections.size(), 4u);
  EXPECT_EQ(d.sections[0].name, "01_summary");
  EXPECT_EQ(d.metadata.at("principal_investigator"), "Dr. R. Okafor");
  EXPECT_FALSE(d.metadata.count("# Synthetic application used by the end-to-end fixtures."));
  ASSERT_EQ(d.chunks.size(), 4u);
  EXPECT_NE(d.find_chunk("03_procedures:1"), nullptr);
  EXPECT_EQ(d.find_chunk("03_procedures:2"), nullptr);
}

TEST(Dossier, LoadsJsonLayout) {
  ethrev::testing::TempDir dir("dossier");
  json j = {{"dossier_id", "j1"},
            {"metadata", {{"population", "adults"}}},
            {"sections", {{{"name", "methods"}, {"text", "We interview adults."}}}}};
  io::write_file_atomic(dir.path() / "d.json", j.dump());
  auto d = load_dossier(dir.path() / "d.json");
  EXPECT_EQ(d.dossier_id, "j1");
  ASSERT_EQ(d.chunks.size(), 1u);
  EXPECT_EQ(d.chunks[0].chunk_id, "methods:1");
}

TEST(Chunking, WindowsOverlapAndCoverEveryWord) {
  std::string text;
  for (int i = 0; i < 25; ++i) text += "w" + std::to_string(i) + (i % 4 == 3 ? "\n  " : " ");
  auto chunks = chunk_sections({{"a", text}, {"b", "one two"}}, {10, 3});
  ASSERT_EQ(chunks.size(), 5u);
  std::vector<std::vector<std::string>> words;
  for (const auto& c : chunks) words.push_back(text::words(c.text));
  EXPECT_EQ(words[0].front(), "w0");
  EXPECT_EQ(words[1].front(), "w7");
  EXPECT_EQ(words[3].front(), "w21");
  EXPECT_EQ(words[3].back(), "w24");
  for (std::size_t i = 0; i + 1 < 3; ++i) {
    EXPECT_EQ(words[i].size(), 10u);
    EXPECT_TRUE(std::equal(words[i].end() - 3, words[i].end(), words[i + 1].begin()));
  }
  // No chunk straddles sections.
  EXPECT_EQ(chunks[4].chunk_id, "b:1");
  EXPECT_EQ(chunks[4].text, "one two");
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(text::collapse_whitespace(text.substr(chunks[i].span.start, chunks[i].span.end - chunks[i].span.start)),
              chunks[i].text);
  }
}

TEST(Chunking, RejectsOverlapNotBelowSize) {
  EXPECT_THROW(chunk_sections({{"a", "x"}}, {5, 5}), std::invalid_argument);
  EXPECT_THROW(chunk_sections({{"a", "x"}, {"a", "y"}}, {5, 1}), std::invalid_argument);
}

TEST(ClassifyScenario, UsesModelAnswerAboveFloor) {
  auto gw = ethrev::testing::mock_gateway("playbooks/pipeline.json");
  auto d = load_dossier(fixture("dossiers/d1"));
  Diagnostics diag;
  EXPECT_EQ(classify_scenario(*gw, d, {}, {}, diag).tag(), "biomedical");
  EXPECT_TRUE(diag.empty());
}

TEST(ClassifyScenario, FallsBackToGeneral) {
  gateway::Playbook pb;
  pb.set_json("classify-scenario:low", {{"scenario", "biomedical"}, {"confidence", 0.3}});
  pb.set_reply("classify-scenario:bad", "???");
  auto gw = ethrev::testing::mock_gateway(pb, 1);
  Diagnostics diag;
  auto low = make_dossier("low", {{"k", "v"}}, {{"s", "text"}});
  auto bad = make_dossier("bad", {{"k", "v"}}, {{"s", "text"}});
  auto empty = make_dossier("empty", {}, {{"s", "text"}});
  EXPECT_EQ(classify_scenario(*gw, low, {}, {}, diag).tag(), "general");
  EXPECT_EQ(classify_scenario(*gw, bad, {}, {}, diag).tag(), "general");
  EXPECT_EQ(classify_scenario(*gw, empty, {}, {}, diag).tag(), "general");
  EXPECT_GE(diag.warnings().size(), 3u);
}

TEST(IdentifySubjects, AlwaysIncludesFloorAndFallsBackToVocabulary) {
  gateway::Playbook pb;
  pb.set_json("identify-subjects:a", {{"subjects", {"Sponsor"}}});
  pb.set_reply("identify-subjects:b", "nope");
  auto gw = ethrev::testing::mock_gateway(pb, 1);
  Diagnostics diag;
  auto a = identify_subjects(*gw, make_dossier("a", {}, {{"s", "t"}}), diag);
  EXPECT_EQ(a, (std::vector<std::string>{"investigator", "participant", "sponsor"}));
  auto b = identify_subjects(*gw, make_dossier("b", {}, {{"s", "t"}}), diag);
  auto vocab = rules::subject_vocabulary();
  std::sort(vocab.begin(), vocab.end());
  EXPECT_EQ(b, vocab);
}

TEST(MatchRules, AgreesWithBruteForceOnEverySubjectSubset) {
  auto g = golden_graph();
  auto universe = label_universe(g);
  ASSERT_LE(universe.size(), 10u);
  for (const auto& scenario : g.taxonomy) {
    for (std::size_t mask = 0; mask < (1u << universe.size()); ++mask) {
      std::vector<std::string> subjects;
      for (std::size_t i = 0; i < universe.size(); ++i) {
        if (mask & (1u << i)) subjects.push_back(universe[i]);
      }
      auto got = ids(match_rules(rules::Scenario(scenario), subjects, g));
      auto want = oracle::brute_force_match(g.rules, scenario, {subjects.begin(), subjects.end()});
      ASSERT_EQ(got, want) << scenario << " mask " << mask;
    }
  }
}

TEST(MatchRules, MonotoneInTheSubjectSet) {
  auto g = golden_graph();
  auto universe = label_universe(g);
  for (const auto& scenario : g.taxonomy) {
    for (std::size_t mask = 0; mask < (1u << universe.size()); ++mask) {
      for (std::size_t extra = 0; extra < universe.size(); ++extra) {
        std::vector<std::string> small, big;
        for (std::size_t i = 0; i < universe.size(); ++i) {
          if (mask & (1u << i)) small.push_back(universe[i]);
          if ((mask & (1u << i)) || i == extra) big.push_back(universe[i]);
        }
        auto a = ids(match_rules(rules::Scenario(scenario), small, g));
        auto b = ids(match_rules(rules::Scenario(scenario), big, g));
        ASSERT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
      }
    }
  }
}

TEST(MatchRules, FixtureDossierSelection) {
  auto g = golden_graph();
  std::vector<std::string> subjects = {"data_controller", "investigator", "participant"};
  EXPECT_EQ(ids(match_rules(rules::Scenario::biomedical(), subjects, g)),
            (std::vector<std::string>{"R001", "R003", "R004", "R005", "R006"}));
}

TEST(Retrieval, CandidatesAreTheCosineTopK) {
  auto gw = ethrev::testing::mock_gateway(gateway::Playbook{});
  auto d = large_dossier();
  ASSERT_EQ(d.chunks.size(), 25u);
  ChunkIndex index(*gw, d);
  std::vector<std::string> chunk_texts;
  for (const auto& c : d.chunks) chunk_texts.push_back(c.text);
  auto chunk_vecs = gw->embed(chunk_texts);
  for (const auto& rule : golden_graph().rules) {
    auto q = gw->embed(std::vector<std::string>{rules::quadruple_text(rule)})[0];
    auto want = oracle::top_k_cosine(q, chunk_vecs, 20);
    auto got = retrieval_candidates(*gw, rule, index, 20);
    ASSERT_EQ(got.size(), 20u);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].chunk_id, d.chunks[want[i]].chunk_id) << rule.rule_id;
  }
}

TEST(Retrieval, EvidenceIsTheRerankedHeadOfTheCandidates) {
  auto gw = ethrev::testing::mock_gateway(gateway::Playbook{});
  auto d = large_dossier();
  ChunkIndex index(*gw, d);
  for (const auto& rule : golden_graph().rules) {
    auto cands = retrieval_candidates(*gw, rule, index, 20);
    auto ev = retrieve_evidence(*gw, rule, index, {});
    ASSERT_EQ(ev.size(), 5u);
    std::vector<double> scores;
    for (const auto& c : cands) scores.push_back(gateway::lexical_overlap(rules::quadruple_text(rule), c.text));
    std::sort(scores.rbegin(), scores.rend());
    for (std::size_t i = 0; i < ev.size(); ++i) {
      EXPECT_EQ(ev[i].rank, static_cast<int>(i + 1));
      EXPECT_NE(d.find_chunk(ev[i].chunk_id), nullptr);
      EXPECT_TRUE(std::any_of(cands.begin(), cands.end(), [&](const auto& c) { return c.chunk_id == ev[i].chunk_id; }));
      EXPECT_DOUBLE_EQ(ev[i].rerank_score, scores[i]) << rule.rule_id;
    }
  }
}

TEST(Retrieval, FewerChunksThanK) {
  auto gw = ethrev::testing::mock_gateway(gateway::Playbook{});
  auto d = load_dossier(fixture("dossiers/d1"));
  ChunkIndex index(*gw, d);
  auto rule = golden_graph().rules[0];
  EXPECT_EQ(retrieval_candidates(*gw, rule, index, 20).size(), 4u);
  EXPECT_EQ(retrieve_evidence(*gw, rule, index, {}).size(), 4u);
}

TEST(CheckRule, UnparseableVerdictFailsSafe) {
  gateway::Playbook pb;
  pb.set_reply("verdict:*", "The protocol looks fine to me.");
  auto gw = ethrev::testing::mock_gateway(pb);
  auto rule = golden_graph().rules[0];
  std::vector<EvidenceSpan> ev = {{"a:1", "text", 0.5, 1.0, 1}};
  auto v = check_rule(*gw, rule, ev, {});
  EXPECT_EQ(v.status, VerdictStatus::violation);
  EXPECT_EQ(v.rationale, kUnparseableRationale);
  EXPECT_TRUE(v.needs_manual_review);
  EXPECT_FALSE(v.model_raw.empty());
}

TEST(CheckRule, NotApplicableFoldsUnderBinaryStrict) {
  auto gw = ethrev::testing::mock_gateway("playbooks/pipeline.json");
  auto rule = golden_graph().rules[6];
  ReviewOptions strict;
  strict.binary_strict = true;
  EXPECT_EQ(check_rule(*gw, rule, {}, {}).status, VerdictStatus::not_applicable);
  EXPECT_EQ(check_rule(*gw, rule, {}, {}, strict).status, VerdictStatus::compliant);
}

TEST(CheckRule, EvidenceIsTheCitedSpans) {
  auto gw = ethrev::testing::mock_gateway("playbooks/pipeline.json");
  auto rule = *golden_graph().find_rule("R003");
  std::vector<EvidenceSpan> ev = {{"a:1", "x", 0.9, 3, 1}, {"b:1", "y", 0.8, 2, 2}, {"c:1", "z", 0.7, 1, 3}};
  auto v = check_rule(*gw, rule, ev, {});
  EXPECT_EQ(v.status, VerdictStatus::violation);
  ASSERT_EQ(v.evidence.size(), 1u);
  EXPECT_EQ(v.evidence[0].chunk_id, "b:1");
}

TEST(ExpeditedReview, FixtureDossierReport) {
  auto gw = ethrev::testing::mock_gateway("playbooks/pipeline.json");
  auto g = golden_graph();
  auto r = run_expedited_review(*gw, load_dossier(fixture("dossiers/d1")), g);
  EXPECT_EQ(r.scenario, "biomedical");
  EXPECT_EQ(r.counts, (ReportCounts{5, 2, 3, 0}));
  EXPECT_EQ(r.graph_version, g.version());
  // Violations first, then compliant, each by rule id.
  std::vector<std::string> order;
  for (const auto& e : r.entries) order.push_back(e.rule_id);
  EXPECT_EQ(order, (std::vector<std::string>{"R003", "R005", "R001", "R004", "R006"}));
  for (const auto& e : r.entries) {
    for (const auto& s : e.evidence) EXPECT_NE(load_dossier(fixture("dossiers/d1")).find_chunk(s.chunk_id), nullptr);
  }
}

TEST(ExpeditedReview, MatchesGoldenReport) {
  auto gw = ethrev::testing::mock_gateway("playbooks/pipeline.json");
  auto r = run_expedited_review(*gw, load_dossier(fixture("dossiers/d1")), golden_graph());
  auto golden = io::read_json(fixture("golden/report.json"));
  auto got = to_json(r);
  for (auto* j : {&golden, &got}) {
    j->erase("provenance");
    j->erase("config_hash");
  }
  EXPECT_EQ(got, golden);
}

TEST(ExpeditedReview, SummaryFailureIsFlaggedNotFatal) {
  auto doc = json::parse(ethrev::testing::slurp(fixture("playbooks/pipeline.json")));
  doc["entries"]["summary:d1"] = {{"$fault", "transport"}};
  auto gw = ethrev::testing::mock_gateway(gateway::Playbook::from_json(doc), 1);
  auto r = run_expedited_review(*gw, load_dossier(fixture("dossiers/d1")), golden_graph());
  EXPECT_TRUE(r.summary_flagged);
  EXPECT_EQ(r.counts.violations, 2u);
}

TEST(ExpeditedReview, ReportJsonRoundTrip) {
  auto gw = ethrev::testing::mock_gateway("playbooks/pipeline.json");
  auto r = run_expedited_review(*gw, load_dossier(fixture("dossiers/d1")), golden_graph(), {}, "abc");
  auto back = report_from_json(to_json(r));
  EXPECT_EQ(to_json(back), to_json(r));
  EXPECT_EQ(render_report(back), render_report(r));
  auto text = render_report(r);
  EXPECT_NE(text.find("EXECUTIVE SUMMARY"), std::string::npos);
  EXPECT_NE(text.find("APPENDIX"), std::string::npos);
}
