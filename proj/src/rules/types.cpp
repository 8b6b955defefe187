// SPDX-License-Identifier: Apache-2.0
#include "ethrev/rules/types.hpp"

#include <chrono>
#include <regex>
#include <stdexcept>

#include "ethrev/common/text.hpp"
#include "ethrev/rules/vocabulary.hpp"

namespace ethrev::rules {

Scenario::Scenario(std::string tag) : tag_(std::move(tag)) {
  if (tag_.empty()) throw std::invalid_argument("empty scenario tag");
}

ScenarioTaxonomy::ScenarioTaxonomy()
    : tags_{"biomedical", "social_behavioral", "data_driven", "general"} {}

void ScenarioTaxonomy::extend(std::string_view tag) {
  static const std::regex kTag("[a-z][a-z0-9_]*");
  if (!std::regex_match(tag.begin(), tag.end(), kTag)) {
    throw std::invalid_argument("scenario tags are lowercase identifiers: " + std::string(tag));
  }
  tags_.emplace(tag);
}

bool ScenarioTaxonomy::contains(std::string_view tag) const { return tags_.find(tag) != tags_.end(); }

Scenario ScenarioTaxonomy::resolve(std::string_view tag) const {
  return contains(tag) ? Scenario(std::string(tag)) : Scenario::general();
}

std::vector<std::string> ScenarioTaxonomy::tags() const { return {tags_.begin(), tags_.end()}; }

void validate(const RegulatoryDocument& doc) {
  static const std::regex kDate(R"(\d{4}-\d{2}-\d{2})");
  if (doc.doc_id.empty()) throw std::invalid_argument("regulatory document without doc_id");
  if (text::is_blank(doc.body)) throw std::invalid_argument("document " + doc.doc_id + " has a blank body");
  auto calendar_ok = [](const std::string& d) {
    using namespace std::chrono;
    year_month_day ymd{year{std::stoi(d.substr(0, 4))}, month{static_cast<unsigned>(std::stoi(d.substr(5, 2)))},
                       day{static_cast<unsigned>(std::stoi(d.substr(8, 2)))}};
    return ymd.ok();
  };
  if (!doc.issued_date.empty() && !(std::regex_match(doc.issued_date, kDate) && calendar_ok(doc.issued_date))) {
    throw std::invalid_argument("document " + doc.doc_id + " has malformed issued_date " + doc.issued_date);
  }
}

ClauseRef ref_of(const Clause& c) { return {c.doc_id, c.clause_id, c.span}; }

std::string_view to_string(Deontic d) {
  switch (d) {
    case Deontic::must: return "must";
    case Deontic::must_not: return "must_not";
    case Deontic::may: return "may";
    case Deontic::should: return "should";
  }
  return "must";
}

std::string quadruple_text(const CanonicalRule& rule) {
  std::vector<std::string> parts;
  if (!text::is_blank(rule.condition)) parts.push_back(text::collapse_whitespace(rule.condition));
  parts.push_back(text::collapse_whitespace(rule.subject.raw.empty() ? rule.subject.label : rule.subject.raw));
  parts.push_back(rule.deontic == Deontic::must_not ? "must not" : std::string(to_string(rule.deontic)));
  parts.push_back(text::collapse_whitespace(rule.action));
  return text::join(parts, " ");
}

nlohmann::json to_json(const ClauseRef& ref) {
  return {{"doc_id", ref.doc_id}, {"clause_id", ref.clause_id}, {"span", {ref.span.start, ref.span.end}}};
}

ClauseRef clause_ref_from_json(const nlohmann::json& j) {
  ClauseRef r;
  r.doc_id = j.at("doc_id").get<std::string>();
  r.clause_id = j.at("clause_id").get<std::string>();
  const auto& span = j.at("span");
  r.span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
  return r;
}

nlohmann::json to_json(const CanonicalRule& rule) {
  nlohmann::json refs = nlohmann::json::array();
  for (const auto& r : rule.source_refs) refs.push_back(to_json(r));
  return {{"rule_id", rule.rule_id},
          {"text", rule.text},
          {"condition", rule.condition},
          {"subject", {{"label", rule.subject.label}, {"raw", rule.subject.raw}}},
          {"deontic", to_string(rule.deontic)},
          {"action", rule.action},
          {"scenario_tags", rule.scenario_tags},
          {"source_refs", refs},
          {"merged_from", rule.merged_from},
          {"condition_reviewed", rule.condition_reviewed}};
}

CanonicalRule rule_from_json(const nlohmann::json& j) {
  CanonicalRule r;
  r.rule_id = j.at("rule_id").get<std::string>();
  r.text = j.value("text", "");
  r.condition = j.value("condition", "");
  r.subject.label = j.at("subject").at("label").get<std::string>();
  r.subject.raw = j.at("subject").at("raw").get<std::string>();
  auto d = parse_deontic(j.at("deontic").get<std::string>());
  if (!d) throw std::invalid_argument("rule " + r.rule_id + " has unknown deontic");
  r.deontic = *d;
  r.action = j.at("action").get<std::string>();
  r.scenario_tags = j.value("scenario_tags", std::set<std::string>{});
  for (const auto& ref : j.at("source_refs")) r.source_refs.push_back(clause_ref_from_json(ref));
  r.merged_from = j.value("merged_from", std::vector<std::string>{});
  r.condition_reviewed = j.value("condition_reviewed", false);
  if (text::is_blank(r.subject.raw) || text::is_blank(r.action)) {
    throw std::invalid_argument("rule " + r.rule_id + " lacks subject or action");
  }
  if (r.source_refs.empty()) throw std::invalid_argument("rule " + r.rule_id + " has no source_refs");
  return r;
}

}  // namespace ethrev::rules
