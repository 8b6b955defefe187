// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethrev/common/diagnostics.hpp"
#include "ethrev/gateway/gateway.hpp"
#include "ethrev/review/expedited.hpp"

namespace ethrev::eval {

struct GoldAnnotation {
  std::string dossier_id;
  std::set<std::string> violated_rule_ids;
  std::map<std::string, std::vector<std::string>> evidence_spans;  // by rule id
  std::map<std::string, std::string> rationales;                   // by rule id
  std::string graph_version;  // optional; checked against the report when set
};

GoldAnnotation gold_from_json(const nlohmann::json& j);
GoldAnnotation load_gold(const std::filesystem::path& path);

struct QualityMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  // No predictions: precision reported as 0.
  bool precision_undefined = false;
  // No gold violations: recall reported as 1.
  bool recall_undefined = false;
};

// 2PR/(P+R), or 0 when P+R is 0.
double f1_score(double precision, double recall);

QualityMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// Set-membership scoring of predicted against gold rule ids.
QualityMetrics compute_quality(const std::set<std::string>& predicted, const std::set<std::string>& gold);

// Predicted = rule ids with status violation. Throws std::invalid_argument
// when the gold annotation pins a different graph version or dossier.
QualityMetrics compute_quality(const review::ComplianceReport& report, const GoldAnnotation& gold);

// Evidence-span scoring: a span pair matches when it belongs to the same
// violated rule and at least half of the gold span's tokens occur in the
// predicted span.
QualityMetrics span_quality(const review::ComplianceReport& report, const GoldAnnotation& gold);

// Professionalism value reported for human expert raters. The judge below is
// a proxy and is not expected to reproduce it.
inline constexpr double kReferenceProfessionalism = 0.7917;

inline constexpr std::string_view kDefaultProfessionalismRubric =
    "Rate the ethics review report from 0 to 10 for clarity, completeness and expert-likeness: does it state "
    "the applicable obligations, ground each finding in the protocol, and read like a report a professional "
    "ethics reviewer would sign?";

// One judge call returning an integer 0..10, divided by 10. nullopt (flagged
// in diag) when the judge output is unusable.
std::optional<double> judge_professionalism(gateway::Gateway& gw, const std::string& report_id,
                                            const std::string& report_text, std::string_view rubric,
                                            Diagnostics& diag);

enum class QuestionType { multiple_choice, true_false, cloze, open };
std::string_view to_string(QuestionType t);
QuestionType parse_question_type(std::string_view s);

struct KeyEntry {
  std::string question_id;
  QuestionType type = QuestionType::multiple_choice;
  std::string answer;
  std::string question;
};

struct Prediction {
  std::string question_id;
  std::string answer;
};

struct ItemScore {
  std::string question_id;
  QuestionType type = QuestionType::multiple_choice;
  double score = 0.0;
  bool flagged = false;
};

struct QAResult {
  double accuracy = 0.0;
  std::vector<ItemScore> items;
};

// Closed-form items: normalized exact match (1 or 0). Open items: judge score
// 0..10 divided by 10; a failed judgment scores 0 and is flagged. Throws when
// a prediction has no key entry.
QAResult score_qa(gateway::Gateway& gw, std::span<const Prediction> predictions,
                  const std::map<std::string, KeyEntry>& key, Diagnostics& diag, std::size_t workers = 8);

std::map<std::string, KeyEntry> load_answer_key(const std::filesystem::path& path);  // JSON-Lines
std::vector<Prediction> load_predictions(const std::filesystem::path& path);         // JSON-Lines

struct SystemRow {
  std::string system;
  QualityMetrics metrics;  // micro-averaged over dossiers
  std::optional<double> professionalism;
  std::size_t dossiers = 0;
};

// `reports_dir` holds one subdirectory of report JSON files per system, or
// report files directly (a single system named after the directory).
// Every report must have a gold file with the same dossier_id in `gold_dir`.
std::vector<SystemRow> evaluate_reports(const std::filesystem::path& reports_dir, const std::filesystem::path& gold_dir,
                                        gateway::Gateway* judge, Diagnostics& diag);

nlohmann::json rows_json(std::span<const SystemRow> rows);
// Rows = systems; columns R, P, F1, Prof.
std::string render_table(std::span<const SystemRow> rows);

}  // namespace ethrev::eval
