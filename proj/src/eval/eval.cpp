// SPDX-License-Identifier: Apache-2.0
#include "ethrev/eval/eval.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ethrev/common/io.hpp"
#include "ethrev/common/parallel.hpp"
#include "ethrev/common/text.hpp"

namespace ethrev::eval {
namespace {

using gateway::ChatRequest;
using gateway::FieldKind;
using gateway::GatewayError;
using gateway::ResponseSchema;
using gateway::Role;

ResponseSchema score_schema() {
  return {"judge_score", {{"score", FieldKind::integer, true, {}, std::nullopt, 0.0, 10.0}}};
}

std::optional<double> judge_score(gateway::Gateway& gw, const std::string& tag, const std::string& system_prompt,
                                  const std::string& user_prompt) {
  ChatRequest req;
  req.tag = tag;
  req.messages = {{Role::system, system_prompt}, {Role::user, user_prompt}};
  req.response_schema = score_schema();
  try {
    return gw.chat_json(req)["score"].get<long long>() / 10.0;
  } catch (const GatewayError&) {
    return std::nullopt;
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

GoldAnnotation gold_from_json(const nlohmann::json& j) {
  GoldAnnotation g;
  g.dossier_id = j.at("dossier_id").get<std::string>();
  g.violated_rule_ids = j.at("violated_rule_ids").get<std::set<std::string>>();
  g.evidence_spans = j.value("evidence_spans", std::map<std::string, std::vector<std::string>>{});
  g.rationales = j.value("rationales", std::map<std::string, std::string>{});
  g.graph_version = j.value("graph_version", "");
  for (const auto& [rule, _] : g.evidence_spans) {
    if (!g.violated_rule_ids.count(rule)) {
      throw std::invalid_argument("gold " + g.dossier_id + " has evidence for non-violated rule " + rule);
    }
  }
  return g;
}

GoldAnnotation load_gold(const std::filesystem::path& path) { return gold_from_json(io::read_json(path)); }

double f1_score(double precision, double recall) {
  double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

QualityMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  QualityMetrics m;
  m.true_positives = tp;
  m.false_positives = fp;
  m.false_negatives = fn;
  if (tp + fp == 0) {
    m.precision = 0.0;
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall = 1.0;
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

QualityMetrics compute_quality(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
  std::size_t tp = 0;
  for (const auto& p : predicted) tp += gold.count(p);
  return metrics_from_counts(tp, predicted.size() - tp, gold.size() - tp);
}

QualityMetrics compute_quality(const review::ComplianceReport& report, const GoldAnnotation& gold) {
  if (report.dossier_id != gold.dossier_id) {
    throw std::invalid_argument("report for " + report.dossier_id + " scored against gold for " + gold.dossier_id);
  }
  if (!gold.graph_version.empty() && gold.graph_version != report.graph_version) {
    throw std::invalid_argument("rule graph version mismatch for " + gold.dossier_id + ": report " +
                                report.graph_version + ", gold " + gold.graph_version);
  }
  std::set<std::string> predicted;
  for (const auto& v : report.entries) {
    if (v.status == review::VerdictStatus::violation) predicted.insert(v.rule_id);
  }
  return compute_quality(predicted, gold.violated_rule_ids);
}

QualityMetrics span_quality(const review::ComplianceReport& report, const GoldAnnotation& gold) {
  auto covers = [](const std::string& predicted, const std::string& gold_span) {
    auto g = text::words(gold_span);
    if (g.empty()) return false;
    auto p = text::words(predicted);
    std::set<std::string> ps(p.begin(), p.end());
    std::size_t hit = 0;
    for (const auto& w : g) hit += ps.count(w);
    return 2 * hit >= g.size();
  };
  std::size_t pred_total = 0, pred_hit = 0, gold_total = 0, gold_hit = 0;
  std::map<std::string, std::vector<std::string>> predicted;
  for (const auto& v : report.entries) {
    if (v.status != review::VerdictStatus::violation) continue;
    for (const auto& e : v.evidence) predicted[v.rule_id].push_back(e.text);
  }
  for (const auto& [rule, spans] : predicted) {
    auto it = gold.evidence_spans.find(rule);
    for (const auto& p : spans) {
      ++pred_total;
      if (it == gold.evidence_spans.end()) continue;
      for (const auto& g : it->second) {
        if (covers(p, g)) {
          ++pred_hit;
          break;
        }
      }
    }
  }
  for (const auto& [rule, spans] : gold.evidence_spans) {
    auto it = predicted.find(rule);
    for (const auto& g : spans) {
      ++gold_total;
      if (it == predicted.end()) continue;
      for (const auto& p : it->second) {
        if (covers(p, g)) {
          ++gold_hit;
          break;
        }
      }
    }
  }
  QualityMetrics m = metrics_from_counts(pred_hit, pred_total - pred_hit, gold_total - gold_hit);
  // Precision and recall are counted on different sides, so recompute recall
  // from matched gold spans.
  if (gold_total > 0) m.recall = static_cast<double>(gold_hit) / static_cast<double>(gold_total);
  m.false_negatives = gold_total - gold_hit;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

std::optional<double> judge_professionalism(gateway::Gateway& gw, const std::string& report_id,
                                            const std::string& report_text, std::string_view rubric,
                                            Diagnostics& diag) {
  auto s = judge_score(gw, "judge-professionalism:" + report_id,
                       "You are an experienced research ethics reviewer grading review reports. " + std::string(rubric) +
                           " Answer with an integer score from 0 to 10.",
                       report_text);
  if (!s) diag.warn("professionalism judgment failed for " + report_id);
  return s;
}

std::string_view to_string(QuestionType t) {
  switch (t) {
    case QuestionType::multiple_choice: return "multiple_choice";
    case QuestionType::true_false: return "true_false";
    case QuestionType::cloze: return "cloze";
    case QuestionType::open: return "open";
  }
  return "open";
}

QuestionType parse_question_type(std::string_view s) {
  if (s == "multiple_choice") return QuestionType::multiple_choice;
  if (s == "true_false") return QuestionType::true_false;
  if (s == "cloze") return QuestionType::cloze;
  if (s == "open") return QuestionType::open;
  throw std::invalid_argument("unknown question type: " + std::string(s));
}

QAResult score_qa(gateway::Gateway& gw, std::span<const Prediction> predictions,
                  const std::map<std::string, KeyEntry>& key, Diagnostics& diag, std::size_t workers) {
  if (predictions.empty()) throw std::invalid_argument("no predictions to score");
  for (const auto& p : predictions) {
    if (!key.count(p.question_id)) throw std::invalid_argument("no answer key entry for " + p.question_id);
  }
  QAResult out;
  out.items = parallel_map(predictions.size(), workers, [&](std::size_t i) {
    const auto& p = predictions[i];
    const auto& k = key.at(p.question_id);
    ItemScore s{p.question_id, k.type, 0.0, false};
    if (k.type != QuestionType::open) {
      s.score = text::normalize(p.answer) == text::normalize(k.answer) ? 1.0 : 0.0;
      return s;
    }
    auto judged = judge_score(gw, "judge-qa:" + p.question_id,
                              "You grade answers to research-ethics questions against a reference answer. Score "
                              "0 to 10 for correctness and completeness.",
                              "Question: " + k.question + "\nReference answer: " + k.answer +
                                  "\nCandidate answer: " + p.answer);
    if (judged) {
      s.score = *judged;
    } else {
      s.flagged = true;
      diag.warn("open answer judgment failed for " + p.question_id + "; scored 0");
    }
    return s;
  });
  double sum = 0.0;
  for (const auto& s : out.items) sum += s.score;
  out.accuracy = sum / static_cast<double>(out.items.size());
  return out;
}

std::map<std::string, KeyEntry> load_answer_key(const std::filesystem::path& path) {
  std::map<std::string, KeyEntry> out;
  for (const auto& j : io::read_jsonl(path)) {
    KeyEntry k{j.at("question_id").get<std::string>(), parse_question_type(j.at("type").get<std::string>()),
               j.at("answer").get<std::string>(), j.value("question", "")};
    if (!out.emplace(k.question_id, k).second) throw std::invalid_argument("duplicate key entry " + k.question_id);
  }
  return out;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  for (const auto& j : io::read_jsonl(path)) {
    out.push_back({j.at("question_id").get<std::string>(), j.at("answer").get<std::string>()});
  }
  return out;
}

std::vector<SystemRow> evaluate_reports(const std::filesystem::path& reports_dir, const std::filesystem::path& gold_dir,
                                        gateway::Gateway* judge, Diagnostics& diag) {
  std::map<std::string, GoldAnnotation> gold;
  for (const auto& f : io::list_files(gold_dir, ".json")) {
    auto g = load_gold(f);
    auto id = g.dossier_id;
    if (!gold.emplace(id, std::move(g)).second) throw std::invalid_argument("two gold files for " + id);
  }

  std::vector<std::pair<std::string, std::filesystem::path>> systems;
  std::vector<std::filesystem::path> subdirs;
  for (const auto& e : std::filesystem::directory_iterator(reports_dir)) {
    if (e.is_directory()) subdirs.push_back(e.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) {
    systems.push_back({reports_dir.filename().string(), reports_dir});
  } else {
    for (const auto& d : subdirs) systems.push_back({d.filename().string(), d});
  }

  std::vector<SystemRow> rows;
  for (const auto& [name, dir] : systems) {
    SystemRow row;
    row.system = name;
    std::size_t tp = 0, fp = 0, fn = 0;
    double prof_sum = 0.0;
    std::size_t prof_n = 0;
    for (const auto& f : io::list_files(dir, ".json")) {
      auto report = review::report_from_json(io::read_json(f));
      auto g = gold.find(report.dossier_id);
      if (g == gold.end()) throw std::invalid_argument("no gold annotation for dossier " + report.dossier_id);
      auto m = compute_quality(report, g->second);
      tp += m.true_positives;
      fp += m.false_positives;
      fn += m.false_negatives;
      ++row.dossiers;
      if (judge) {
        if (auto s = judge_professionalism(*judge, name + "/" + report.dossier_id, review::render_report(report),
                                           kDefaultProfessionalismRubric, diag)) {
          prof_sum += *s;
          ++prof_n;
        }
      }
    }
    if (row.dossiers == 0) diag.warn("system " + name + " has no reports");
    row.metrics = metrics_from_counts(tp, fp, fn);
    if (prof_n > 0) row.professionalism = prof_sum / static_cast<double>(prof_n);
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json rows_json(std::span<const SystemRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"system", r.system},
                   {"dossiers", r.dossiers},
                   {"recall", r.metrics.recall},
                   {"precision", r.metrics.precision},
                   {"f1", r.metrics.f1},
                   {"true_positives", r.metrics.true_positives},
                   {"false_positives", r.metrics.false_positives},
                   {"false_negatives", r.metrics.false_negatives},
                   {"precision_undefined", r.metrics.precision_undefined},
                   {"recall_undefined", r.metrics.recall_undefined},
                   {"professionalism", r.professionalism ? nlohmann::json(*r.professionalism) : nlohmann::json()}});
  }
  return out;
}

std::string render_table(std::span<const SystemRow> rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %8s %8s %8s %8s\n", "system", "R", "P", "F1", "Prof");
  out << line;
  for (const auto& r : rows) {
    std::string prof = r.professionalism ? fmt(*r.professionalism) : "-";
    std::snprintf(line, sizeof line, "%-24s %8s %8s %8s %8s\n", r.system.c_str(), fmt(r.metrics.recall).c_str(),
                  fmt(r.metrics.precision).c_str(), fmt(r.metrics.f1).c_str(), prof.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace ethrev::eval
