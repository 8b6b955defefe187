// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethrev/common/embedding.hpp"

namespace ethrev::rules {

// Research-context class gating which subgraph of rules applies. The four
// built-in tags can be extended at runtime through a ScenarioTaxonomy.
class Scenario {
 public:
  explicit Scenario(std::string tag);

  static Scenario biomedical() { return Scenario("biomedical"); }
  static Scenario social_behavioral() { return Scenario("social_behavioral"); }
  static Scenario data_driven() { return Scenario("data_driven"); }
  static Scenario general() { return Scenario("general"); }

  const std::string& tag() const { return tag_; }
  auto operator<=>(const Scenario&) const = default;

 private:
  std::string tag_;
};

class ScenarioTaxonomy {
 public:
  ScenarioTaxonomy();  // biomedical, social_behavioral, data_driven, general

  void extend(std::string_view tag);
  bool contains(std::string_view tag) const;
  // Known tag, or general for anything else.
  Scenario resolve(std::string_view tag) const;
  std::vector<std::string> tags() const;

 private:
  std::set<std::string, std::less<>> tags_;
};

struct RegulatoryDocument {
  std::string doc_id;
  std::string title;
  std::string body;
  std::string issued_date;  // YYYY-MM-DD

  bool operator==(const RegulatoryDocument&) const = default;
};

// Throws std::invalid_argument on blank body, empty id or malformed date.
void validate(const RegulatoryDocument& doc);

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  auto operator<=>(const CharSpan&) const = default;
};

struct Clause {
  std::string doc_id;
  std::string clause_id;
  std::string text;
  CharSpan span;
};

struct ClauseRef {
  std::string doc_id;
  std::string clause_id;
  CharSpan span;
  auto operator<=>(const ClauseRef&) const = default;
};

ClauseRef ref_of(const Clause& c);

struct RuleCandidate {
  std::string cand_id;
  ClauseRef clause;
  std::string text;
  EmbeddingVector embedding;
};

enum class Deontic { must, must_not, may, should };

std::string_view to_string(Deontic d);

struct Subject {
  std::string label;  // normalized vocabulary tag, or normalized raw text
  std::string raw;
  bool operator==(const Subject&) const = default;
};

// Canonical (condition, subject, deontic, action) rule with provenance.
struct CanonicalRule {
  std::string rule_id;
  std::string text;  // fused canonical statement
  std::string condition;
  Subject subject;
  Deontic deontic = Deontic::must;
  std::string action;
  std::set<std::string> scenario_tags;
  std::vector<ClauseRef> source_refs;
  std::vector<std::string> merged_from;
  bool condition_reviewed = false;

  bool operator==(const CanonicalRule&) const = default;
};

// Text used for retrieval and for update matching:
// "condition subject deontic action" (deontic rendered as words).
std::string quadruple_text(const CanonicalRule& rule);

nlohmann::json to_json(const ClauseRef& ref);
ClauseRef clause_ref_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CanonicalRule& rule);
CanonicalRule rule_from_json(const nlohmann::json& j);

}  // namespace ethrev::rules
