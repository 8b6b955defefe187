// SPDX-License-Identifier: Apache-2.0
#include "ethrev/rules/forge.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "ethrev/common/io.hpp"
#include "ethrev/common/parallel.hpp"
#include "ethrev/common/text.hpp"
#include "ethrev/rules/segment.hpp"
#include "ethrev/rules/vocabulary.hpp"

namespace ethrev::rules {
namespace {

using gateway::ChatRequest;
using gateway::FieldKind;
using gateway::GatewayError;
using gateway::ResponseSchema;
using gateway::Role;

ResponseSchema extraction_schema() {
  return {"rule_candidates", {{"candidates", FieldKind::array, true, {}, FieldKind::string}}};
}

ResponseSchema fusion_schema() {
  return {"canonical_rule", {{"canonical_text", FieldKind::string}}};
}

ResponseSchema quadruple_schema() {
  return {"rule_quadruple",
          {{"condition", FieldKind::string},
           {"subject", FieldKind::string},
           {"deontic", FieldKind::string},
           {"action", FieldKind::string}}};
}

std::string pad2(std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02zu", n);
  return buf;
}

// Sorted by doc_id, identical copies collapsed.
std::vector<RegulatoryDocument> canonical_documents(std::vector<RegulatoryDocument> docs) {
  for (const auto& d : docs) validate(d);
  std::stable_sort(docs.begin(), docs.end(),
                   [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; });
  std::vector<RegulatoryDocument> out;
  for (auto& d : docs) {
    if (!out.empty() && out.back().doc_id == d.doc_id) {
      if (out.back().body != d.body) {
        throw std::invalid_argument("documents share doc_id " + d.doc_id + " but differ in content");
      }
      spdlog::info("collapsed duplicate copy of document {}", d.doc_id);
      continue;
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<RuleCandidate> extract_all(gateway::Gateway& gw, const std::vector<RegulatoryDocument>& docs,
                                       const RuleForgeOptions& options, Diagnostics& diag) {
  std::vector<Clause> clauses;
  for (const auto& d : docs) {
    auto cs = segment_clauses(d);
    if (cs.empty()) diag.warn("document " + d.doc_id + " yielded no clauses");
    clauses.insert(clauses.end(), cs.begin(), cs.end());
  }
  auto per_clause = parallel_map(clauses.size(), options.workers,
                                 [&](std::size_t i) { return extract_candidates(gw, clauses[i], diag); });
  std::vector<RuleCandidate> out;
  for (auto& group : per_clause) {
    for (auto& c : group) out.push_back(std::move(c));
  }
  return out;
}

void merge_clusters(gateway::Gateway& gw, std::span<const RuleCandidate> cands, std::size_t first_number,
                    const RuleForgeOptions& options, Diagnostics& diag, std::vector<CanonicalRule>& out) {
  if (cands.empty()) return;
  auto clusters = cluster_candidates(cands, options.cluster_threshold, options.linkage);
  std::size_t n = first_number;
  for (const auto& members : clusters) {
    if (auto rule = merge_cluster(gw, members, make_rule_id(n++), diag)) out.push_back(std::move(*rule));
  }
}

}  // namespace

std::vector<RegulatoryDocument> load_documents(const std::filesystem::path& dir) {
  auto manifest = io::read_json(dir / "manifest.json");
  if (!manifest.is_array()) throw io::IoError("document manifest must be a JSON array");
  std::vector<RegulatoryDocument> out;
  for (const auto& entry : manifest) {
    RegulatoryDocument d;
    d.doc_id = entry.at("doc_id").get<std::string>();
    d.title = entry.value("title", "");
    d.issued_date = entry.value("issued_date", "");
    d.body = io::read_file(dir / entry.at("file").get<std::string>());
    validate(d);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<RuleCandidate> extract_candidates(gateway::Gateway& gw, const Clause& clause, Diagnostics& diag) {
  ChatRequest req;
  req.tag = "extract:" + clause.clause_id;
  req.messages = {
      {Role::system,
       "You decompose regulatory text into atomic, decoupled candidate rules. Each candidate states "
       "exactly one obligation, permission or prohibition as a self-contained sentence naming who is "
       "bound, the deontic force (must, must not, may, should) and the required action, with any "
       "triggering condition. Split conjoined duties into separate candidates. Return an empty list "
       "for descriptive text such as definitions, scope statements or headings."},
      {Role::user, "Clause " + clause.clause_id + ":\n" + clause.text}};
  req.response_schema = extraction_schema();

  nlohmann::json reply;
  try {
    reply = gw.chat_json(req);
  } catch (const GatewayError& e) {
    diag.warn("clause " + clause.clause_id + " flagged: extraction failed: " + e.what());
    return {};
  }

  std::vector<std::string> texts;
  for (const auto& c : reply["candidates"]) {
    auto t = text::collapse_whitespace(c.get<std::string>());
    if (t.empty()) continue;
    if (count_deontic_markers(t) > 1) {
      diag.warn("candidate from " + clause.clause_id + " may not be atomic: " + t);
    }
    texts.push_back(std::move(t));
  }
  if (texts.empty()) return {};

  std::vector<EmbeddingVector> vectors;
  try {
    vectors = gw.embed(texts);
  } catch (const GatewayError& e) {
    diag.warn("clause " + clause.clause_id + " flagged: embedding failed: " + e.what());
    return {};
  }
  std::vector<RuleCandidate> out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.push_back({clause.clause_id + "/k" + pad2(i + 1), ref_of(clause), texts[i], std::move(vectors[i])});
  }
  return out;
}

std::vector<std::vector<RuleCandidate>> cluster_candidates(std::span<const RuleCandidate> cands,
                                                           double threshold, cluster::Linkage linkage) {
  if (cands.empty()) throw std::invalid_argument("cluster_candidates needs at least one candidate");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in (0, 1]");
  std::vector<EmbeddingVector> vectors;
  vectors.reserve(cands.size());
  for (const auto& c : cands) vectors.push_back(c.embedding);
  std::vector<std::vector<RuleCandidate>> out;
  for (const auto& members : cluster::agglomerate(vectors, {threshold, linkage})) {
    auto& group = out.emplace_back();
    for (std::size_t m : members) group.push_back(cands[m]);
  }
  return out;
}

std::optional<CanonicalRule> merge_cluster(gateway::Gateway& gw, std::span<const RuleCandidate> cluster,
                                           const std::string& rule_id, Diagnostics& diag) {
  if (cluster.empty()) throw std::invalid_argument("merge_cluster needs a non-empty cluster");
  CanonicalRule rule;
  rule.rule_id = rule_id;

  if (cluster.size() == 1) {
    rule.text = cluster.front().text;
  } else {
    std::string members;
    for (const auto& c : cluster) members += "- " + c.text + "\n";
    ChatRequest req;
    req.tag = "merge:" + rule_id;
    req.messages = {{Role::system,
                     "The statements below were grouped as semantically equivalent regulatory rules. "
                     "Fuse them into one canonical rule that preserves every condition and the "
                     "strictest deontic force among them. Do not add requirements."},
                    {Role::user, members}};
    req.response_schema = fusion_schema();
    try {
      rule.text = text::collapse_whitespace(gw.chat_json(req)["canonical_text"].get<std::string>());
    } catch (const GatewayError& e) {
      diag.warn("cluster " + rule_id + " flagged for manual authoring: fusion failed: " + e.what());
      return std::nullopt;
    }
    if (rule.text.empty()) {
      diag.warn("cluster " + rule_id + " flagged for manual authoring: empty canonical text");
      return std::nullopt;
    }
  }

  ChatRequest req;
  req.tag = "quadruple:" + rule_id;
  req.messages = {{Role::system,
                   "Decompose the rule into condition (the circumstances under which it applies, empty "
                   "if unconditional), subject (who is bound), deontic (one of must, must_not, may, "
                   "should) and action (what the subject must, must not, may or should do)."},
                  {Role::user, rule.text}};
  req.response_schema = quadruple_schema();
  nlohmann::json q;
  try {
    q = gw.chat_json(req);
  } catch (const GatewayError& e) {
    diag.warn("cluster " + rule_id + " flagged for manual authoring: quadruple extraction failed: " + e.what());
    return std::nullopt;
  }
  auto deontic = parse_deontic(q["deontic"].get<std::string>());
  rule.condition = text::collapse_whitespace(q["condition"].get<std::string>());
  rule.subject.raw = text::collapse_whitespace(q["subject"].get<std::string>());
  rule.subject.label = normalize_subject(rule.subject.raw);
  rule.action = text::collapse_whitespace(q["action"].get<std::string>());
  if (!deontic || rule.subject.raw.empty() || rule.action.empty() || rule.subject.label.empty()) {
    diag.warn("cluster " + rule_id + " flagged for manual authoring: incomplete quadruple");
    return std::nullopt;
  }
  rule.deontic = *deontic;

  for (const auto& c : cluster) {
    rule.source_refs.push_back(c.clause);
    rule.merged_from.push_back(c.cand_id);
  }
  std::sort(rule.source_refs.begin(), rule.source_refs.end());
  rule.source_refs.erase(std::unique(rule.source_refs.begin(), rule.source_refs.end()), rule.source_refs.end());
  rule.condition_reviewed = false;
  return rule;
}

RuleBase build_rule_base(gateway::Gateway& gw, std::vector<RegulatoryDocument> docs,
                         const RuleForgeOptions& options) {
  if (docs.empty()) throw std::invalid_argument("build_rule_base needs at least one document");
  Diagnostics diag;
  auto canonical = canonical_documents(std::move(docs));
  auto cands = extract_all(gw, canonical, options, diag);
  RuleBase base;
  if (cands.empty()) diag.warn("no rule candidates extracted");
  merge_clusters(gw, cands, 1, options, diag, base.rules);
  sort_rules(base.rules);
  base.warnings = diag.warnings();
  return base;
}

RuleBase update_rule_base(gateway::Gateway& gw, std::vector<CanonicalRule> existing,
                          std::vector<RegulatoryDocument> new_docs, const RuleForgeOptions& options) {
  sort_rules(existing);
  for (std::size_t i = 1; i < existing.size(); ++i) {
    if (existing[i].rule_id == existing[i - 1].rule_id) {
      throw std::invalid_argument("duplicate rule id " + existing[i].rule_id);
    }
  }
  RuleBase base;
  base.rules = std::move(existing);
  if (new_docs.empty()) return base;

  Diagnostics diag;
  auto cands = extract_all(gw, canonical_documents(std::move(new_docs)), options, diag);

  std::vector<EmbeddingVector> rule_vectors;
  if (!base.rules.empty() && !cands.empty()) {
    std::vector<std::string> texts;
    for (const auto& r : base.rules) texts.push_back(text::is_blank(r.text) ? quadruple_text(r) : r.text);
    rule_vectors = gw.embed(texts);
  }

  std::vector<RuleCandidate> unmatched;
  for (auto& cand : cands) {
    std::size_t best = base.rules.size();
    double best_sim = -2.0;
    for (std::size_t r = 0; r < rule_vectors.size(); ++r) {
      double sim = cosine(cand.embedding, rule_vectors[r]);
      if (sim > best_sim + cluster::kTieEpsilon) {
        best_sim = sim;
        best = r;
      }
    }
    if (best == base.rules.size() || best_sim + cluster::kTieEpsilon < options.cluster_threshold) {
      unmatched.push_back(std::move(cand));
      continue;
    }
    auto& rule = base.rules[best];
    if (std::find(rule.source_refs.begin(), rule.source_refs.end(), cand.clause) == rule.source_refs.end()) {
      rule.source_refs.push_back(cand.clause);
    }
    if (std::find(rule.merged_from.begin(), rule.merged_from.end(), cand.cand_id) == rule.merged_from.end()) {
      rule.merged_from.push_back(cand.cand_id);
    }
    if (text::normalize(cand.text) != text::normalize(rule.text)) rule.condition_reviewed = false;
  }

  std::size_t next = 1;
  for (const auto& r : base.rules) next = std::max(next, rule_number(r.rule_id) + 1);
  merge_clusters(gw, unmatched, next, options, diag, base.rules);
  sort_rules(base.rules);
  base.warnings = diag.warnings();
  return base;
}

std::size_t rule_number(const std::string& rule_id) {
  if (rule_id.size() < 2 || rule_id[0] != 'R' ||
      !std::all_of(rule_id.begin() + 1, rule_id.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw std::invalid_argument("malformed rule id " + rule_id);
  }
  return std::stoul(rule_id.substr(1));
}

std::string make_rule_id(std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "R%03zu", n);
  return buf;
}

void sort_rules(std::vector<CanonicalRule>& rules) {
  std::sort(rules.begin(), rules.end(), [](const CanonicalRule& a, const CanonicalRule& b) {
    return rule_number(a.rule_id) < rule_number(b.rule_id);
  });
}

}  // namespace ethrev::rules
