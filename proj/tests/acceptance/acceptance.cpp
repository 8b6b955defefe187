// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Mock backend only.
#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ethrev/cli/cli.hpp"
#include "ethrev/committee/committee.hpp"
#include "ethrev/common/cluster.hpp"
#include "ethrev/common/io.hpp"
#include "ethrev/common/text.hpp"
#include "ethrev/corpus/forge.hpp"
#include "ethrev/eval/eval.hpp"
#include "ethrev/graph/graph.hpp"
#include "ethrev/review/expedited.hpp"
#include "ethrev/rules/forge.hpp"
#include "ethrev/rules/store.hpp"
#include "ethrev/rules/vocabulary.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ethrev;
using ethrev::testing::fixture;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Thrown by require() with the reason a criterion failed.
struct Failure {
  std::string what;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

bool run_criterion(const std::string& name, const std::function<void()>& body) {
  try {
    body();
    std::cout << name << " PASS\n";
    return true;
  } catch (const Failure& f) {
    std::cout << name << " FAIL: " << f.what << "\n";
  } catch (const std::exception& e) {
    std::cout << name << " FAIL: exception: " << e.what() << "\n";
  }
  return false;
}

std::string pipeline_backend() { return "mock:" + fixture("playbooks/pipeline.json").string(); }

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), {"ethrev", "--log-level", "off"});
  return cli::dispatch(args);
}

// AC1 -------------------------------------------------------------------

void clustering_oracle() {
  const std::vector<std::string> bases = {
      "investigators must obtain written informed consent before enrolment",
      "identifiable data must not leave the institution without approval",
      "participants may withdraw at any time without penalty",
      "samples in the biobank must be stored under coded identifiers",
  };
  auto gw = testing::mock_gateway(gateway::Playbook{});
  std::mt19937 rng(1729);
  int merged = 0;
  for (int trial = 0; trial < 25; ++trial) {
    std::size_t n = 2 + rng() % 9;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < n; ++i) {
      auto words = text::words(bases[rng() % bases.size()]);
      if (rng() % 2) words.erase(words.begin() + static_cast<std::ptrdiff_t>(rng() % words.size()));
      else words.push_back("note" + std::to_string(rng() % 50));
      texts.push_back(text::join(words, " "));
    }
    auto vecs = gw->embed(texts);
    auto got = oracle::canonical(cluster::agglomerate(vecs, {0.75, cluster::Linkage::average}));
    auto want = oracle::brute_force_clusters(oracle::cosine_matrix(vecs), 0.75, cluster::Linkage::average);
    require(got == want, "partition differs from oracle in trial " + std::to_string(trial));
    if (got.size() < n) ++merged;

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<EmbeddingVector> shuffled;
    for (auto i : perm) shuffled.push_back(vecs[i]);
    oracle::Partition back;
    for (const auto& c : cluster::agglomerate(shuffled, {0.75, cluster::Linkage::average})) {
      std::vector<std::size_t> m;
      for (auto i : c) m.push_back(perm[i]);
      back.push_back(m);
    }
    require(oracle::canonical(back) == got, "partition changes under permutation in trial " + std::to_string(trial));
  }
  require(merged >= 5, "too few fixtures exercise merging");
}

// AC2 -------------------------------------------------------------------

std::string build_rules(std::vector<rules::RegulatoryDocument> docs) {
  auto gw = testing::mock_gateway("playbooks/pipeline.json");
  return rules::serialize_rule_base(rules::build_rule_base(*gw, std::move(docs)));
}

void rule_base_determinism() {
  auto golden = testing::slurp(fixture("golden/rule_base.jsonl"));
  auto docs = rules::load_documents(fixture("regulations"));
  require(build_rules(docs) == golden, "first run differs from golden");
  require(build_rules(docs) == golden, "second run differs from golden");
  auto dup = docs;
  dup.insert(dup.end(), docs.begin(), docs.end());
  require(build_rules(dup) == golden, "duplicated input differs from golden");
}

// AC3 -------------------------------------------------------------------

void matching_recall() {
  auto g = graph::load_graph(fixture("golden/graph.json"));
  require(g.rules.size() == 7, "fixture graph does not hold 7 rules");
  std::set<std::string> labels = {"sponsor"};
  for (const auto& r : g.rules) labels.insert(r.subject.label);
  std::vector<std::string> universe(labels.begin(), labels.end());
  auto ids = [&](const std::vector<std::string>& subjects, const std::string& scenario) {
    std::vector<std::string> out;
    for (const auto& r : review::match_rules(rules::Scenario(scenario), subjects, g)) out.push_back(r.rule_id);
    return out;
  };
  for (const auto& scenario : g.taxonomy) {
    for (std::size_t mask = 0; mask < (1u << universe.size()); ++mask) {
      std::vector<std::string> subjects;
      for (std::size_t i = 0; i < universe.size(); ++i) {
        if (mask & (1u << i)) subjects.push_back(universe[i]);
      }
      auto got = ids(subjects, scenario);
      require(got == oracle::brute_force_match(g.rules, scenario, {subjects.begin(), subjects.end()}),
              "match differs from brute force for " + scenario);
      for (const auto& extra : universe) {
        auto bigger = subjects;
        if (std::find(bigger.begin(), bigger.end(), extra) == bigger.end()) bigger.push_back(extra);
        auto more = ids(bigger, scenario);
        require(std::includes(more.begin(), more.end(), got.begin(), got.end()), "match is not monotone");
      }
    }
  }
}

// AC4 -------------------------------------------------------------------

void retrieval_shape() {
  const std::vector<std::string> topics = {
      "Written informed consent is obtained from each participant before enrolment.",
      "Saliva samples are stored in the biobank under a coded identifier.",
      "Participants may withdraw at any time without penalty.",
      "Serious adverse events are reported to the committee within 30 days.",
      "Identifiable data stay inside the institution.",
      "Adolescents give assent on a separate form.",
      "Parents sign a consent form before any procedure.",
  };
  std::vector<review::Section> sections;
  for (int i = 0; i < 25; ++i) {
    sections.push_back({"s" + std::to_string(100 + i),
                        topics[static_cast<std::size_t>(i) % topics.size()] + " Paragraph " + std::to_string(i) + "."});
  }
  auto d = review::make_dossier("ret", {}, sections);
  require(d.chunks.size() == 25, "fixture does not hold 25 chunks");
  auto gw = testing::mock_gateway(gateway::Playbook{});
  review::ChunkIndex index(*gw, d);
  std::vector<std::string> texts;
  for (const auto& c : d.chunks) texts.push_back(c.text);
  auto vecs = gw->embed(texts);
  for (const auto& rule : graph::load_graph(fixture("golden/graph.json")).rules) {
    auto q = gw->embed(std::vector<std::string>{rules::quadruple_text(rule)})[0];
    auto want = oracle::top_k_cosine(q, vecs, 20);
    auto cands = review::retrieval_candidates(*gw, rule, index, 20);
    require(cands.size() == 20, "candidate count is not 20");
    for (std::size_t i = 0; i < 20; ++i) {
      require(cands[i].chunk_id == d.chunks[want[i]].chunk_id, "candidate order differs for " + rule.rule_id);
    }
    auto ev = review::retrieve_evidence(*gw, rule, index);
    require(!ev.empty() && ev.size() <= 5, "evidence list length out of range");
    for (std::size_t i = 0; i < ev.size(); ++i) {
      require(d.find_chunk(ev[i].chunk_id) != nullptr, "unresolvable chunk id " + ev[i].chunk_id);
      if (i > 0) require(ev[i - 1].rerank_score >= ev[i].rerank_score, "evidence not ordered by rerank score");
    }
  }
}

// AC5 -------------------------------------------------------------------

void metric_identities() {
  auto m = eval::compute_quality(std::set<std::string>{"R1", "R2", "R9"}, std::set<std::string>{"R1", "R2", "R3", "R4"});
  require(std::abs(m.precision - 2.0 / 3.0) <= 1e-9, "precision");
  require(std::abs(m.recall - 0.5) <= 1e-9, "recall");
  require(std::abs(m.f1 - 4.0 / 7.0) <= 1e-9, "f1");
  require(std::abs(eval::f1_score(0.7640, 0.9444) - 0.8447) <= 1e-4, "reported F1 row");
}

// AC6 -------------------------------------------------------------------

void leakage_soundness() {
  auto cases = io::read_jsonl(fixture("leakage_cases.jsonl"));
  require(cases.size() == 50, "fixture does not hold 50 cases");
  std::size_t leaking = 0, caught = 0, clean = 0, false_pos = 0;
  for (const auto& c : cases) {
    bool flagged = corpus::detect_leakage(c["cot"].get<std::string>(), c["answer"].get<std::string>());
    if (c["leaking"].get<bool>()) {
      ++leaking;
      caught += flagged;
    } else {
      ++clean;
      false_pos += flagged;
    }
  }
  require(leaking == 25 && clean == 25, "fixture is not 25/25");
  require(caught == leaking, "missed " + std::to_string(leaking - caught) + " leaking cases");
  require(false_pos == 0, std::to_string(false_pos) + " false positives");

  testing::TempDir dir("acc-sft");
  auto out = dir.path() / "sft";
  require(cli({"--backend", "mock:" + fixture("playbooks/corpus.json").string(), "forge-corpus", "--corpus",
               fixture("corpus").string(), "--out", out.string()}) == 0,
          "forge-corpus failed");
  auto records = io::read_jsonl(out / "sft.jsonl");
  require(!records.empty(), "no SFT records");
  for (const auto& r : records) {
    if (!r.contains("cot")) continue;
    require(!corpus::detect_leakage(r["cot"].get<std::string>(), r["answer"].get<std::string>()),
            "leaking SFT record " + r.value("id", std::string()));
  }
}

// AC7 -------------------------------------------------------------------

void committee_invariants() {
  using namespace committee;
  auto dossier = review::load_dossier(fixture("dossiers/d1"));
  const std::vector<Role> voting = {Role::ethics_reviewer, Role::life_sciences, Role::medical,
                                    Role::legal,           Role::disciplinary,  Role::social_representative};
  std::mt19937 rng(77);
  for (int session = 0; session < 10; ++session) {
    const int max_rounds = 1 + session % 3;
    gateway::Playbook pb;
    pb.set_json("review:*", {{"issues", json::array()}});
    pb.set_json("synthesis:*", {{"summary", "Synthesis."}, {"recommendations", json::array()}});
    std::set<std::string> cells;
    std::size_t raised = 0;
    for (int i = 0; i < 4; ++i) {
      std::string role(to_string(voting[rng() % voting.size()]));
      std::string dim = dimensions()[rng() % dimensions().size()];
      if (!cells.insert(role + ":" + dim).second) continue;
      std::string id = role + "/" + dim + "/1";
      pb.set_json("review:" + role + ":" + dim, {{"issues", {{{"description", "Issue " + id}}}}});
      ++raised;
      int sat = static_cast<int>(rng() % static_cast<unsigned>(max_rounds + 1));
      for (int r = 1; r <= max_rounds; ++r) {
        auto base = "debate:" + id + ":";
        pb.set_reply(base + "expert:" + std::to_string(r), "expert turn " + std::to_string(r));
        pb.set_reply(base + "pi:" + std::to_string(r), "pi turn " + std::to_string(r));
        pb.set_json(base + "judge:" + std::to_string(r), {{"satisfied", r == sat}, {"position", "p"}});
      }
    }
    auto gw = testing::mock_gateway(pb);
    gw->set_recording(true);
    CommitteeOptions opts;
    opts.max_rounds = max_rounds;
    opts.seed = static_cast<std::uint64_t>(session);
    auto rep = run_committee_review(*gw, dossier, opts);
    require(rep.phase1_issue_count == raised, "phase-I count differs from the scripted issues");
    require(rep.resolved.size() + rep.unresolved.size() == rep.phase1_issue_count, "issues not conserved");
    std::vector<Issue> all = rep.resolved;
    for (const auto& u : rep.unresolved) all.push_back(u.issue);
    for (const auto& is : all) {
      require(!is.transcript.empty() && is.transcript.size() % 2 == 0, "odd transcript for " + is.issue_id);
      for (std::size_t t = 0; t < is.transcript.size(); ++t) {
        require(is.transcript[t].round <= max_rounds, "round bound exceeded");
        require(is.transcript[t].speaker == (t % 2 ? Role::pi : is.raised_by), "turns do not alternate");
      }
    }
    auto roster = convene_committee(opts.seed);
    for (const auto& call : gw->recorded()) {
      if (call.request.tag.rfind("review:", 0) != 0) continue;
      std::string own = call.request.tag.substr(7, call.request.tag.find(':', 7) - 7);
      std::string prompt;
      for (const auto& m : call.request.messages) prompt += m.text;
      for (const auto& agent : roster) {
        if (to_string(agent.role) == own) continue;
        require(prompt.find(agent.persona_prompt) == std::string::npos, "foreign persona in " + call.request.tag);
      }
      require(prompt.find("Issue ") == std::string::npos, "issue text leaked into " + call.request.tag);
    }
  }
  auto once = [&] {
    auto gw = testing::mock_gateway("playbooks/pipeline.json");
    return run_committee_review(*gw, dossier, {42, 3, 4, false});
  };
  auto a = once(), b = once();
  require(to_json(a) == to_json(b), "seed 42 reports differ");
  for (std::size_t i = 0; i < a.roster.size(); ++i) {
    require(a.roster[i].gender == b.roster[i].gender, "seed 42 rosters differ");
  }
}

// AC8 -------------------------------------------------------------------

void golden_runs() {
  testing::TempDir dir("acc-golden");
  auto er = dir.path() / "er", cr = dir.path() / "cr";
  require(cli({"--backend", pipeline_backend(), "review", "er", "--dossier", fixture("dossiers/d1").string(), "--graph",
               fixture("golden/graph.json").string(), "--out", er.string()}) == 0,
          "review er failed");
  require(cli({"--backend", pipeline_backend(), "review", "cr", "--dossier", fixture("dossiers/d1").string(), "--seed",
               "42", "--out", cr.string()}) == 0,
          "review cr failed");
  for (const auto& [got, want] : std::vector<std::pair<fs::path, std::string>>{{er / "report.json", "report.json"},
                                                                               {er / "report.txt", "report.txt"},
                                                                               {cr / "committee.json", "committee.json"},
                                                                               {cr / "minutes.txt", "minutes.txt"}}) {
    require(testing::slurp(got) == testing::slurp(fixture("golden/" + want)), want + " differs from golden");
  }
  auto report = io::read_json(er / "report.json");
  auto version = graph::load_graph(fixture("golden/graph.json")).version();
  require(report.value("graph_version", "") == version, "report lacks the graph version");
  require(!report["provenance"].value("config_hash", "").empty(), "report lacks the config hash");
  require(testing::slurp(er / "report.txt").find(report["provenance"]["config_hash"].get<std::string>()) !=
              std::string::npos,
          "text report lacks the config hash");
  require(!io::read_json(cr / "committee.json")["provenance"].value("config_hash", "").empty(),
          "committee report lacks the config hash");
}

// AC9 -------------------------------------------------------------------

void fail_safe() {
  gateway::Playbook pb;
  pb.set_reply("verdict:*", "I think it is fine.");
  pb.set_reply("identify-subjects:*", "investigators and such");
  pb.set_reply("debate:*", "a turn");
  pb.set_reply("debate:legal/compensation/1:judge:*", "{\"satisfied\": \"maybe\"}");
  auto gw = testing::mock_gateway(pb);
  auto dossier = review::load_dossier(fixture("dossiers/d1"));
  auto g = graph::load_graph(fixture("golden/graph.json"));

  for (const auto& rule : g.rules) {
    auto v = review::check_rule(*gw, rule, {}, dossier.metadata);
    require(v.status == review::VerdictStatus::violation && v.needs_manual_review,
            "unparseable verdict for " + rule.rule_id + " was not a flagged violation");
  }

  Diagnostics diag;
  auto subjects = review::identify_subjects(*gw, dossier, diag);
  auto vocab = rules::subject_vocabulary();
  std::sort(vocab.begin(), vocab.end());
  require(subjects == vocab, "subject identification did not fall back to the vocabulary");

  auto roster = committee::convene_committee(42);
  committee::Issue is{"legal/compensation/1", "compensation", committee::Role::legal, "Repayment",
                      committee::IssueStatus::open, {}, {}, {}};
  auto out = committee::debate_issue(*gw, is, roster[3], roster[7], dossier, 3);
  require(out.status == committee::IssueStatus::unresolved, "failed debate did not end unresolved");
}

}  // namespace

int main() {
  bool ok = true;
  ok &= run_criterion("AC1 clustering matches brute-force oracle", clustering_oracle);
  ok &= run_criterion("AC2 rule base deterministic and golden", rule_base_determinism);
  ok &= run_criterion("AC3 rule matching is recall-complete and monotone", matching_recall);
  ok &= run_criterion("AC4 retrieval top-k and evidence shape", retrieval_shape);
  ok &= run_criterion("AC5 metric identities", metric_identities);
  ok &= run_criterion("AC6 leakage filter soundness", leakage_soundness);
  ok &= run_criterion("AC7 committee state-machine invariants", committee_invariants);
  ok &= run_criterion("AC8 end-to-end golden runs", golden_runs);
  ok &= run_criterion("AC9 fail-safe posture", fail_safe);
  return ok ? 0 : 1;
}
