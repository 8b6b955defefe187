// SPDX-License-Identifier: Apache-2.0
#include "ethrev/review/expedited.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ethrev/common/parallel.hpp"
#include "ethrev/common/text.hpp"
#include "ethrev/rules/forge.hpp"
#include "ethrev/rules/vocabulary.hpp"

namespace ethrev::review {
namespace {

using gateway::ChatRequest;
using gateway::FieldKind;
using gateway::GatewayError;
using gateway::ResponseSchema;
using gateway::Role;
using rules::CanonicalRule;

constexpr std::string_view kRetrievalFailed = "evidence retrieval failed; manual review required";

std::string metadata_lines(const std::map<std::string, std::string>& metadata) {
  std::string out;
  for (const auto& [k, v] : metadata) out += k + ": " + v + "\n";
  return out;
}

int status_order(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::violation: return 0;
    case VerdictStatus::compliant: return 1;
    case VerdictStatus::not_applicable: return 2;
  }
  return 0;
}

std::string rule_block(const CanonicalRule& rule) {
  return "Rule " + rule.rule_id + ": " + rule.text + "\nCondition: " +
         (rule.condition.empty() ? std::string("(none)") : rule.condition) + "\nSubject: " + rule.subject.raw +
         "\nDeontic: " + std::string(rules::to_string(rule.deontic)) + "\nAction: " + rule.action;
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string_view to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::violation: return "violation";
    case VerdictStatus::compliant: return "compliant";
    case VerdictStatus::not_applicable: return "not_applicable";
  }
  return "violation";
}

VerdictStatus parse_verdict_status(std::string_view s) {
  if (s == "violation") return VerdictStatus::violation;
  if (s == "compliant") return VerdictStatus::compliant;
  if (s == "not_applicable") return VerdictStatus::not_applicable;
  throw std::invalid_argument("unknown verdict status: " + std::string(s));
}

rules::Scenario classify_scenario(gateway::Gateway& gw, const Dossier& dossier,
                                  const rules::ScenarioTaxonomy& taxonomy, const ReviewOptions& options,
                                  Diagnostics& diag) {
  if (dossier.metadata.empty()) {
    diag.warn("dossier " + dossier.dossier_id + " has no metadata; scenario defaults to general");
    return rules::Scenario::general();
  }
  auto tags = taxonomy.tags();
  ChatRequest req;
  req.tag = "classify-scenario:" + dossier.dossier_id;
  req.messages = {{Role::system,
                   "Identify the research scenario of a study from its metadata (study type, participant "
                   "population, intervention). Answer with one of: " +
                       text::join(tags, ", ") +
                       ", and your confidence between 0 and 1. Use general when no specific scenario fits."},
                  {Role::user, metadata_lines(dossier.metadata)}};
  req.response_schema = ResponseSchema{
      "scenario_classification",
      {{"scenario", FieldKind::string, true, tags},
       {"confidence", FieldKind::number, true, {}, std::nullopt, 0.0, 1.0}}};
  try {
    auto reply = gw.chat_json(req);
    auto tag = reply["scenario"].get<std::string>();
    double confidence = reply["confidence"].get<double>();
    if (confidence < options.min_scenario_confidence) {
      diag.warn("scenario '" + tag + "' below confidence floor for " + dossier.dossier_id + "; using general");
      return rules::Scenario::general();
    }
    return taxonomy.resolve(tag);
  } catch (const GatewayError& e) {
    diag.warn("scenario classification failed for " + dossier.dossier_id + "; using general: " + e.what());
    return rules::Scenario::general();
  }
}

std::vector<std::string> identify_subjects(gateway::Gateway& gw, const Dossier& dossier, Diagnostics& diag) {
  ChatRequest req;
  req.tag = "identify-subjects:" + dossier.dossier_id;
  req.messages = {{Role::system,
                   "List the regulatory subjects involved in this research project. Use these labels where "
                   "they fit: " +
                       text::join(rules::subject_vocabulary(), ", ") +
                       ". Name any other bound party in a few words."},
                  {Role::user, dossier_digest(dossier, 1200)}};
  req.response_schema =
      ResponseSchema{"subjects", {{"subjects", FieldKind::array, true, {}, FieldKind::string}}};
  std::set<std::string> out = {"investigator", "participant"};
  try {
    auto reply = gw.chat_json(req);
    for (const auto& s : reply["subjects"]) {
      auto label = rules::normalize_subject(s.get<std::string>());
      if (!label.empty()) out.insert(label);
    }
  } catch (const GatewayError& e) {
    diag.warn("subject identification failed for " + dossier.dossier_id + "; using every subject: " + e.what());
    const auto& vocab = rules::subject_vocabulary();
    out.insert(vocab.begin(), vocab.end());
  }
  return {out.begin(), out.end()};
}

std::vector<CanonicalRule> match_rules(const rules::Scenario& scenario, std::span<const std::string> subjects,
                                       const graph::RuleGraph& graph, Diagnostics* diag) {
  const auto& sg = graph::subgraph_for(graph, scenario.tag(), diag);
  std::set<std::string> wanted(subjects.begin(), subjects.end());
  std::set<std::string> ids;
  for (const auto& e : sg.edges) {
    if (wanted.count(e.subject)) ids.insert(e.rule_id);
  }
  std::vector<CanonicalRule> out;
  for (const auto& id : ids) {
    const auto* r = graph.find_rule(id);
    if (!r) throw std::logic_error("graph edge references missing rule " + id);
    out.push_back(*r);
  }
  rules::sort_rules(out);
  return out;
}

ChunkIndex::ChunkIndex(gateway::Gateway& gw, const Dossier& dossier) : dossier_(dossier) {
  if (dossier.chunks.empty()) throw std::invalid_argument("dossier " + dossier.dossier_id + " has no text");
  std::vector<std::string> texts;
  texts.reserve(dossier.chunks.size());
  for (const auto& c : dossier.chunks) texts.push_back(c.text);
  vectors_ = gw.embed(texts);
}

std::vector<EvidenceSpan> retrieval_candidates(gateway::Gateway& gw, const CanonicalRule& rule,
                                               const ChunkIndex& index, std::size_t k) {
  std::vector<std::string> query = {rules::quadruple_text(rule)};
  auto q = gw.embed(query).front();
  const auto& chunks = index.dossier().chunks;
  std::vector<double> scores(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) scores[i] = cosine(q, index.vectors()[i]);
  std::vector<std::size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  std::vector<EvidenceSpan> out;
  for (std::size_t i : order) out.push_back({chunks[i].chunk_id, chunks[i].text, scores[i], 0.0, 0});
  return out;
}

std::vector<EvidenceSpan> retrieve_evidence(gateway::Gateway& gw, const CanonicalRule& rule, const ChunkIndex& index,
                                            const ReviewOptions& options) {
  auto cands = retrieval_candidates(gw, rule, index, options.retrieve_k);
  if (cands.empty()) return {};
  std::vector<gateway::RerankCandidate> rr;
  for (const auto& c : cands) rr.push_back({c.chunk_id, c.text});
  auto scores = gw.rerank(rules::quadruple_text(rule), rr);
  std::vector<EvidenceSpan> out;
  for (const auto& s : scores) {
    if (out.size() == options.rerank_k) break;
    auto it = std::find_if(cands.begin(), cands.end(), [&](const auto& c) { return c.chunk_id == s.candidate_id; });
    if (it == cands.end()) throw std::logic_error("rerank returned unknown chunk " + s.candidate_id);
    EvidenceSpan e = *it;
    e.rerank_score = s.score;
    e.rank = static_cast<int>(out.size()) + 1;
    out.push_back(std::move(e));
  }
  return out;
}

RuleVerdict check_rule(gateway::Gateway& gw, const CanonicalRule& rule, std::span<const EvidenceSpan> evidence,
                       const std::map<std::string, std::string>& metadata, const ReviewOptions& options) {
  std::string ev;
  for (const auto& e : evidence) ev += "[" + std::to_string(e.rank) + "] (" + e.chunk_id + ") " + e.text + "\n";
  if (ev.empty()) ev = "(no evidence retrieved)\n";

  ChatRequest req;
  req.tag = "verdict:" + rule.rule_id;
  req.messages = {
      {Role::system,
       "You are an ethics reviewer checking a research protocol against one regulatory rule. First decide "
       "whether the rule applies to this study given its condition. If it applies, decide whether the "
       "protocol complies, using only the numbered evidence. Cite the evidence ranks you rely on. If "
       "required content is absent from the protocol, say so explicitly in the rationale."},
      {Role::user, rule_block(rule) + "\n\nStudy metadata:\n" + metadata_lines(metadata) + "\nEvidence:\n" + ev}};
  req.response_schema = ResponseSchema{
      "rule_verdict",
      {{"applicability", FieldKind::string, true, {"yes", "no"}},
       {"status", FieldKind::string, true, {"compliant", "violation"}},
       {"rationale", FieldKind::string},
       {"cited_evidence_ranks", FieldKind::array, true, {}, FieldKind::integer}}};

  RuleVerdict v;
  v.rule_id = rule.rule_id;
  try {
    v.model_raw = gw.chat(req);
  } catch (const GatewayError& e) {
    v.status = VerdictStatus::violation;
    v.rationale = std::string(kUnparseableRationale);
    v.evidence.assign(evidence.begin(), evidence.end());
    v.model_raw = e.what();
    v.needs_manual_review = true;
    return v;
  }
  auto reply = *gateway::parse_json_reply(v.model_raw);
  v.rationale = text::collapse_whitespace(reply["rationale"].get<std::string>());
  if (reply["applicability"] == "no") {
    v.status = options.binary_strict ? VerdictStatus::compliant : VerdictStatus::not_applicable;
  } else {
    v.status = parse_verdict_status(reply["status"].get<std::string>());
  }
  std::set<long long> cited;
  for (const auto& r : reply["cited_evidence_ranks"]) cited.insert(r.get<long long>());
  for (const auto& e : evidence) {
    if (cited.count(e.rank)) v.evidence.push_back(e);
  }
  if (v.rationale.empty()) {
    v.status = VerdictStatus::violation;
    v.rationale = std::string(kUnparseableRationale);
    v.needs_manual_review = true;
  }
  return v;
}

ComplianceReport compile_report(gateway::Gateway& gw, std::vector<RuleVerdict> verdicts, ReportContext context) {
  ComplianceReport r;
  r.dossier_id = std::move(context.dossier_id);
  r.scenario = std::move(context.scenario);
  r.subjects = std::move(context.subjects);
  r.graph_version = std::move(context.graph_version);
  r.config_hash = std::move(context.config_hash);
  r.rule_text = std::move(context.rule_text);

  std::set<std::string> ids;
  for (const auto& v : verdicts) {
    if (!ids.insert(v.rule_id).second) throw std::invalid_argument("two verdicts for rule " + v.rule_id);
  }
  std::sort(verdicts.begin(), verdicts.end(), [](const RuleVerdict& a, const RuleVerdict& b) {
    if (status_order(a.status) != status_order(b.status)) return status_order(a.status) < status_order(b.status);
    return rules::rule_number(a.rule_id) < rules::rule_number(b.rule_id);
  });
  r.entries = std::move(verdicts);
  r.counts.checked = r.entries.size();
  for (const auto& v : r.entries) {
    switch (v.status) {
      case VerdictStatus::violation: ++r.counts.violations; break;
      case VerdictStatus::compliant: ++r.counts.compliant; break;
      case VerdictStatus::not_applicable: ++r.counts.not_applicable; break;
    }
  }

  Diagnostics diag;
  for (auto& w : context.warnings) diag.warn(std::move(w));
  if (r.counts.violations == 0) {
    r.executive_summary = "No violations were found. " + std::to_string(r.counts.checked) + " rules were checked: " +
                          std::to_string(r.counts.compliant) + " compliant, " +
                          std::to_string(r.counts.not_applicable) + " not applicable.";
  } else {
    std::string listing;
    for (const auto& v : r.entries) {
      if (v.status != VerdictStatus::violation) break;
      auto it = r.rule_text.find(v.rule_id);
      listing += "- " + v.rule_id + (it != r.rule_text.end() ? " (" + it->second + ")" : std::string()) + ": " +
                 v.rationale + "\n";
    }
    ChatRequest req;
    req.tag = "summary:" + r.dossier_id;
    req.messages = {{Role::system,
                     "Write a short executive summary for an ethics committee highlighting the major risks "
                     "in the violations below and what the investigators must change. Plain prose."},
                    {Role::user, listing}};
    try {
      r.executive_summary = text::trim(gw.chat(req));
    } catch (const GatewayError& e) {
      diag.warn("executive summary generation failed: " + std::string(e.what()));
    }
    if (r.executive_summary.empty()) {
      r.summary_flagged = true;
      r.executive_summary = std::to_string(r.counts.violations) + " of " + std::to_string(r.counts.checked) +
                            " checked rules were found violated:\n" + listing +
                            "This summary was compiled mechanically; manual review required.";
    }
  }
  r.warnings = diag.warnings();
  return r;
}

ComplianceReport run_expedited_review(gateway::Gateway& gw, const Dossier& dossier, const graph::RuleGraph& graph,
                                      const ReviewOptions& options, std::string config_hash) {
  Diagnostics diag;
  rules::ScenarioTaxonomy taxonomy;
  for (const auto& t : graph.taxonomy) taxonomy.extend(t);
  auto scenario = classify_scenario(gw, dossier, taxonomy, options, diag);
  auto subjects = identify_subjects(gw, dossier, diag);
  auto matched = match_rules(scenario, subjects, graph, &diag);

  std::vector<RuleVerdict> verdicts;
  if (!matched.empty()) {
    ChunkIndex index(gw, dossier);
    verdicts = parallel_map(matched.size(), options.workers, [&](std::size_t i) {
      const auto& rule = matched[i];
      std::vector<EvidenceSpan> evidence;
      try {
        evidence = retrieve_evidence(gw, rule, index, options);
      } catch (const GatewayError& e) {
        diag.warn("rule " + rule.rule_id + ": " + std::string(kRetrievalFailed) + ": " + e.what());
        RuleVerdict v;
        v.rule_id = rule.rule_id;
        v.status = VerdictStatus::violation;
        v.rationale = std::string(kRetrievalFailed);
        v.model_raw = e.what();
        v.needs_manual_review = true;
        return v;
      }
      return check_rule(gw, rule, evidence, dossier.metadata, options);
    });
  }

  ReportContext ctx;
  ctx.dossier_id = dossier.dossier_id;
  ctx.scenario = scenario.tag();
  ctx.subjects = subjects;
  ctx.graph_version = graph.version();
  ctx.config_hash = std::move(config_hash);
  ctx.warnings = diag.warnings();
  for (const auto& r : matched) ctx.rule_text[r.rule_id] = r.text;
  return compile_report(gw, std::move(verdicts), std::move(ctx));
}

nlohmann::json to_json(const EvidenceSpan& e) {
  return {{"chunk_id", e.chunk_id},
          {"text", e.text},
          {"retrieval_score", e.retrieval_score},
          {"rerank_score", e.rerank_score},
          {"rank", e.rank}};
}

nlohmann::json to_json(const RuleVerdict& v) {
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : v.evidence) ev.push_back(to_json(e));
  return {{"rule_id", v.rule_id},
          {"status", to_string(v.status)},
          {"rationale", v.rationale},
          {"evidence", ev},
          {"model_raw", v.model_raw},
          {"needs_manual_review", v.needs_manual_review}};
}

nlohmann::json to_json(const ComplianceReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& v : r.entries) {
    auto j = to_json(v);
    auto it = r.rule_text.find(v.rule_id);
    j["rule_text"] = it == r.rule_text.end() ? std::string() : it->second;
    entries.push_back(std::move(j));
  }
  return {{"dossier_id", r.dossier_id},
          {"scenario", r.scenario},
          {"subjects", r.subjects},
          {"executive_summary", r.executive_summary},
          {"summary_flagged", r.summary_flagged},
          {"counts",
           {{"checked", r.counts.checked},
            {"violations", r.counts.violations},
            {"compliant", r.counts.compliant},
            {"not_applicable", r.counts.not_applicable}}},
          {"graph_version", r.graph_version},
          {"config_hash", r.config_hash},
          {"warnings", r.warnings},
          {"entries", entries}};
}

ComplianceReport report_from_json(const nlohmann::json& j) {
  ComplianceReport r;
  r.dossier_id = j.at("dossier_id").get<std::string>();
  r.scenario = j.value("scenario", "");
  r.subjects = j.value("subjects", std::vector<std::string>{});
  r.executive_summary = j.value("executive_summary", "");
  r.summary_flagged = j.value("summary_flagged", false);
  r.graph_version = j.value("graph_version", "");
  r.config_hash = j.value("config_hash", "");
  r.warnings = j.value("warnings", std::vector<std::string>{});
  for (const auto& e : j.at("entries")) {
    RuleVerdict v;
    v.rule_id = e.at("rule_id").get<std::string>();
    v.status = parse_verdict_status(e.at("status").get<std::string>());
    v.rationale = e.value("rationale", "");
    v.model_raw = e.value("model_raw", "");
    v.needs_manual_review = e.value("needs_manual_review", false);
    for (const auto& s : e.value("evidence", nlohmann::json::array())) {
      v.evidence.push_back({s.at("chunk_id").get<std::string>(), s.value("text", ""), s.value("retrieval_score", 0.0),
                            s.value("rerank_score", 0.0), s.value("rank", 0)});
    }
    if (e.contains("rule_text")) r.rule_text[v.rule_id] = e["rule_text"].get<std::string>();
    switch (v.status) {
      case VerdictStatus::violation: ++r.counts.violations; break;
      case VerdictStatus::compliant: ++r.counts.compliant; break;
      case VerdictStatus::not_applicable: ++r.counts.not_applicable; break;
    }
    r.entries.push_back(std::move(v));
  }
  r.counts.checked = r.entries.size();
  return r;
}

std::string render_report(const ComplianceReport& r) {
  std::ostringstream out;
  out << "ETHICS COMPLIANCE REPORT\n"
      << "Dossier: " << r.dossier_id << "\n"
      << "Scenario: " << r.scenario << "\n"
      << "Subjects: " << text::join(r.subjects, ", ") << "\n"
      << "Rule graph version: " << r.graph_version << "\n"
      << "Rules checked: " << r.counts.checked << "  Violations: " << r.counts.violations
      << "  Compliant: " << r.counts.compliant << "  Not applicable: " << r.counts.not_applicable << "\n\n"
      << "EXECUTIVE SUMMARY\n"
      << r.executive_summary << "\n";
  if (r.summary_flagged) out << "(summary compiled mechanically)\n";
  out << "\nAPPENDIX\n";
  for (const auto& v : r.entries) {
    std::string status(to_string(v.status));
    std::transform(status.begin(), status.end(), status.begin(), [](unsigned char c) { return std::toupper(c); });
    out << "\n[" << v.rule_id << "] " << status << (v.needs_manual_review ? " (manual review)" : "") << "\n";
    if (auto it = r.rule_text.find(v.rule_id); it != r.rule_text.end()) out << "  Rule: " << it->second << "\n";
    out << "  Rationale: " << v.rationale << "\n";
    for (const auto& e : v.evidence) {
      out << "  Evidence " << e.rank << " [" << e.chunk_id << ", rerank " << format_score(e.rerank_score)
          << "]: " << e.text << "\n";
    }
  }
  if (!r.warnings.empty()) {
    out << "\nWARNINGS\n";
    for (const auto& w : r.warnings) out << "- " << w << "\n";
  }
  return out.str();
}

}  // namespace ethrev::review
