// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethrev/common/diagnostics.hpp"
#include "ethrev/gateway/gateway.hpp"
#include "ethrev/graph/graph.hpp"
#include "ethrev/review/dossier.hpp"

// Expedited review of one dossier: scenario classification, subject
// identification, recall-complete rule matching, evidence retrieval with
// reranking, per-rule verdicts and the compliance report.
namespace ethrev::review {

struct ReviewOptions {
  std::size_t retrieve_k = 20;
  std::size_t rerank_k = 5;
  double min_scenario_confidence = 0.5;
  // Fold not_applicable into compliant.
  bool binary_strict = false;
  std::size_t workers = 8;
};

struct EvidenceSpan {
  std::string chunk_id;
  std::string text;
  double retrieval_score = 0.0;
  double rerank_score = 0.0;
  int rank = 0;  // 1-based
};

enum class VerdictStatus { violation, compliant, not_applicable };

std::string_view to_string(VerdictStatus s);
VerdictStatus parse_verdict_status(std::string_view s);

struct RuleVerdict {
  std::string rule_id;
  VerdictStatus status = VerdictStatus::violation;
  std::string rationale;
  std::vector<EvidenceSpan> evidence;  // spans the verdict cites
  std::string model_raw;
  bool needs_manual_review = false;
};

inline constexpr std::string_view kUnparseableRationale = "model output unparseable; manual review required";

struct ReportCounts {
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::size_t compliant = 0;
  std::size_t not_applicable = 0;
  bool operator==(const ReportCounts&) const = default;
};

struct ComplianceReport {
  std::string dossier_id;
  std::string scenario;
  std::vector<std::string> subjects;
  std::string executive_summary;
  bool summary_flagged = false;
  std::vector<RuleVerdict> entries;  // violations, compliant, not_applicable; each by rule id
  ReportCounts counts;
  std::string graph_version;
  std::string config_hash;
  std::vector<std::string> warnings;
  // Rule texts for rendering, keyed by rule id.
  std::map<std::string, std::string> rule_text;
};

// Empty metadata or a failed call yields general with a warning; answers
// below the confidence floor also yield general.
rules::Scenario classify_scenario(gateway::Gateway& gw, const Dossier& dossier,
                                  const rules::ScenarioTaxonomy& taxonomy, const ReviewOptions& options,
                                  Diagnostics& diag);

// Sorted labels; always contains investigator and participant. A failed call
// returns the whole subject vocabulary.
std::vector<std::string> identify_subjects(gateway::Gateway& gw, const Dossier& dossier, Diagnostics& diag);

// Every rule of the scenario's subgraph whose subject node is in `subjects`,
// ordered by rule id. No ranking and no truncation.
std::vector<rules::CanonicalRule> match_rules(const rules::Scenario& scenario, std::span<const std::string> subjects,
                                              const graph::RuleGraph& graph, Diagnostics* diag = nullptr);

// Chunk embeddings computed once per dossier and shared by every rule.
class ChunkIndex {
 public:
  ChunkIndex(gateway::Gateway& gw, const Dossier& dossier);
  const Dossier& dossier() const { return dossier_; }
  const std::vector<EmbeddingVector>& vectors() const { return vectors_; }

 private:
  const Dossier& dossier_;
  std::vector<EmbeddingVector> vectors_;
};

// Cosine top min(retrieve_k, chunks) against the rule's quadruple text, ties
// by chunk order; reranked; the best min(rerank_k, candidates) get ranks 1..n.
std::vector<EvidenceSpan> retrieve_evidence(gateway::Gateway& gw, const rules::CanonicalRule& rule,
                                            const ChunkIndex& index, const ReviewOptions& options = {});

// Same as retrieve_evidence but returns the cosine candidates before
// reranking (highest first). Exposed for tests.
std::vector<EvidenceSpan> retrieval_candidates(gateway::Gateway& gw, const rules::CanonicalRule& rule,
                                               const ChunkIndex& index, std::size_t k);

RuleVerdict check_rule(gateway::Gateway& gw, const rules::CanonicalRule& rule, std::span<const EvidenceSpan> evidence,
                       const std::map<std::string, std::string>& metadata, const ReviewOptions& options = {});

struct ReportContext {
  std::string dossier_id;
  std::string scenario;
  std::vector<std::string> subjects;
  std::string graph_version;
  std::string config_hash;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> rule_text;
};

ComplianceReport compile_report(gateway::Gateway& gw, std::vector<RuleVerdict> verdicts, ReportContext context);

ComplianceReport run_expedited_review(gateway::Gateway& gw, const Dossier& dossier, const graph::RuleGraph& graph,
                                      const ReviewOptions& options = {}, std::string config_hash = {});

nlohmann::json to_json(const EvidenceSpan& e);
nlohmann::json to_json(const RuleVerdict& v);
nlohmann::json to_json(const ComplianceReport& r);
ComplianceReport report_from_json(const nlohmann::json& j);
// Plain-text report: header, EXECUTIVE SUMMARY, APPENDIX.
std::string render_report(const ComplianceReport& r);

}  // namespace ethrev::review
