// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethrev/common/diagnostics.hpp"
#include "ethrev/gateway/gateway.hpp"
#include "ethrev/rules/types.hpp"

// Scenario-partitioned rule graph: per scenario, subject nodes linked to
// action nodes by one edge per rule. Used as an index by the reviewer.
namespace ethrev::graph {

struct Edge {
  std::string subject;  // subject node label
  std::string action;   // action node label
  std::string rule_id;
  rules::Deontic deontic = rules::Deontic::must;
  std::string condition;

  auto operator<=>(const Edge&) const = default;
};

struct Subgraph {
  std::vector<std::string> subject_nodes;  // sorted
  std::vector<std::string> action_nodes;   // sorted
  std::vector<Edge> edges;                 // sorted by (subject, action, rule_id)

  bool empty() const { return edges.empty(); }
  bool operator==(const Subgraph&) const = default;
};

enum class PatchField { condition, scenario_tags, subject_label };

std::string_view to_string(PatchField f);
PatchField parse_patch_field(std::string_view s);  // condition | scenario_tags | subject.label

struct RefinementPatch {
  std::string rule_id;
  PatchField field = PatchField::condition;
  nlohmann::json new_value;  // string, or array of tags for scenario_tags
  std::string reviewer;
  std::string timestamp;  // ISO 8601; ordering is lexicographic
};

RefinementPatch patch_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RefinementPatch& p);
std::vector<RefinementPatch> load_patches(const std::filesystem::path& path);  // JSON-Lines

struct ChangelogEntry {
  std::string rule_id;
  std::string field;
  nlohmann::json old_value;
  nlohmann::json new_value;
  std::string reviewer;
  std::string timestamp;
  std::string outcome;  // applied | rejected: <why>

  bool operator==(const ChangelogEntry&) const = default;
};

struct RuleGraph {
  std::map<std::string, Subgraph> subgraphs;  // every taxonomy tag, possibly empty
  std::vector<rules::CanonicalRule> rules;    // sorted by rule id
  std::vector<std::string> taxonomy;
  std::string source_rule_base;  // digest of the rule base the graph was built from
  int revision = 0;
  std::vector<ChangelogEntry> changelog;
  std::vector<std::string> warnings;

  // Short digest of the graph content; changes with every rule or patch.
  std::string version() const;
  const rules::CanonicalRule* find_rule(std::string_view rule_id) const;
};

// Tags every rule without scenario tags through one classification call;
// failures and empty answers fall back to general. Unknown tags are dropped.
std::vector<rules::CanonicalRule> assign_scenarios(gateway::Gateway& gw, std::vector<rules::CanonicalRule> rules,
                                                   const rules::ScenarioTaxonomy& taxonomy, Diagnostics& diag,
                                                   std::size_t workers = 8);

// Rules with an empty subject or action are rejected into `diag`. Rules with
// no usable tag are placed in general. A general rule is indexed into every
// scenario's subgraph.
RuleGraph build_graph(std::vector<rules::CanonicalRule> rules, const rules::ScenarioTaxonomy& taxonomy,
                      Diagnostics& diag, std::string source_rule_base = {});

// Unknown scenarios resolve to general; an empty subgraph is valid but warns.
const Subgraph& subgraph_for(const RuleGraph& graph, std::string_view scenario, Diagnostics* diag = nullptr);

struct RefinementResult {
  std::vector<rules::CanonicalRule> rules;
  std::vector<ChangelogEntry> changelog;  // one entry per patch, in application order
};

// Applies patches in timestamp order (stable for equal stamps). Patches on
// unknown rules or with invalid values are rejected and logged; the rest apply.
RefinementResult apply_refinements(std::vector<rules::CanonicalRule> rules,
                                   std::span<const RefinementPatch> patches,
                                   const rules::ScenarioTaxonomy& taxonomy = {});

// Applies patches and rebuilds the graph as the next revision.
RuleGraph refine_graph(const RuleGraph& graph, std::span<const RefinementPatch> patches, Diagnostics& diag);

nlohmann::json to_json(const RuleGraph& graph);
RuleGraph graph_from_json(const nlohmann::json& j);
void save_graph(const std::filesystem::path& path, const RuleGraph& graph);
RuleGraph load_graph(const std::filesystem::path& path);

// Per-scenario rule, node and edge counts.
nlohmann::json graph_stats(const RuleGraph& graph);
std::string render_stats(const RuleGraph& graph);

}  // namespace ethrev::graph
