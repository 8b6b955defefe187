// SPDX-License-Identifier: Apache-2.0
#include "ethrev/graph/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ethrev/common/hash.hpp"
#include "ethrev/common/io.hpp"
#include "ethrev/common/parallel.hpp"
#include "ethrev/common/text.hpp"
#include "ethrev/rules/forge.hpp"
#include "ethrev/rules/vocabulary.hpp"

namespace ethrev::graph {
namespace {

using gateway::ChatRequest;
using gateway::FieldKind;
using gateway::GatewayError;
using gateway::ResponseSchema;
using gateway::Role;
using rules::CanonicalRule;

constexpr std::string_view kFormat = "ethrev.rule_graph";
constexpr int kSchemaVersion = 1;

rules::ScenarioTaxonomy taxonomy_of(const std::vector<std::string>& tags) {
  rules::ScenarioTaxonomy t;
  for (const auto& tag : tags) t.extend(tag);
  return t;
}

nlohmann::json edge_json(const Edge& e) {
  return {{"subject", e.subject},
          {"action", e.action},
          {"rule_id", e.rule_id},
          {"deontic", rules::to_string(e.deontic)},
          {"condition", e.condition}};
}

Edge edge_from_json(const nlohmann::json& j) {
  Edge e;
  e.subject = j.at("subject").get<std::string>();
  e.action = j.at("action").get<std::string>();
  e.rule_id = j.at("rule_id").get<std::string>();
  auto d = rules::parse_deontic(j.at("deontic").get<std::string>());
  if (!d) throw io::IoError("edge " + e.rule_id + " has an unknown deontic");
  e.deontic = *d;
  e.condition = j.at("condition").get<std::string>();
  return e;
}

nlohmann::json changelog_json(const ChangelogEntry& c) {
  return {{"rule_id", c.rule_id},     {"field", c.field},         {"old_value", c.old_value},
          {"new_value", c.new_value}, {"reviewer", c.reviewer}, {"timestamp", c.timestamp},
          {"outcome", c.outcome}};
}

ChangelogEntry changelog_from_json(const nlohmann::json& j) {
  return {j.at("rule_id").get<std::string>(), j.at("field").get<std::string>(), j.at("old_value"),
          j.at("new_value"), j.at("reviewer").get<std::string>(), j.at("timestamp").get<std::string>(),
          j.at("outcome").get<std::string>()};
}

// Everything except the version itself.
nlohmann::json content_json(const RuleGraph& g) {
  nlohmann::json subgraphs = nlohmann::json::object();
  for (const auto& [tag, sg] : g.subgraphs) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : sg.edges) edges.push_back(edge_json(e));
    subgraphs[tag] = {{"subject_nodes", sg.subject_nodes}, {"action_nodes", sg.action_nodes}, {"edges", edges}};
  }
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : g.rules) rules.push_back(rules::to_json(r));
  nlohmann::json changelog = nlohmann::json::array();
  for (const auto& c : g.changelog) changelog.push_back(changelog_json(c));
  return {{"format", kFormat},
          {"schema_version", kSchemaVersion},
          {"revision", g.revision},
          {"source_rule_base", g.source_rule_base},
          {"taxonomy", g.taxonomy},
          {"subgraphs", subgraphs},
          {"rules", rules},
          {"changelog", changelog},
          {"warnings", g.warnings}};
}

std::string action_label(std::string_view action) { return text::normalize(action); }

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::string_view to_string(PatchField f) {
  switch (f) {
    case PatchField::condition: return "condition";
    case PatchField::scenario_tags: return "scenario_tags";
    case PatchField::subject_label: return "subject.label";
  }
  return "condition";
}

PatchField parse_patch_field(std::string_view s) {
  if (s == "condition") return PatchField::condition;
  if (s == "scenario_tags") return PatchField::scenario_tags;
  if (s == "subject.label") return PatchField::subject_label;
  throw std::invalid_argument("unknown patch field: " + std::string(s));
}

RefinementPatch patch_from_json(const nlohmann::json& j) {
  RefinementPatch p;
  p.rule_id = j.at("rule_id").get<std::string>();
  p.field = parse_patch_field(j.at("field").get<std::string>());
  p.new_value = j.at("new_value");
  p.reviewer = j.value("reviewer", "");
  p.timestamp = j.at("timestamp").get<std::string>();
  return p;
}

nlohmann::json to_json(const RefinementPatch& p) {
  return {{"rule_id", p.rule_id},
          {"field", to_string(p.field)},
          {"new_value", p.new_value},
          {"reviewer", p.reviewer},
          {"timestamp", p.timestamp}};
}

std::vector<RefinementPatch> load_patches(const std::filesystem::path& path) {
  std::vector<RefinementPatch> out;
  for (const auto& j : io::read_jsonl(path)) out.push_back(patch_from_json(j));
  return out;
}

std::string RuleGraph::version() const { return short_digest(content_json(*this).dump()); }

const CanonicalRule* RuleGraph::find_rule(std::string_view rule_id) const {
  for (const auto& r : rules) {
    if (r.rule_id == rule_id) return &r;
  }
  return nullptr;
}

std::vector<CanonicalRule> assign_scenarios(gateway::Gateway& gw, std::vector<CanonicalRule> rules,
                                            const rules::ScenarioTaxonomy& taxonomy, Diagnostics& diag,
                                            std::size_t workers) {
  auto tags = taxonomy.tags();
  ResponseSchema schema{"scenario_tags", {{"scenarios", FieldKind::array, true, {}, FieldKind::string}}};
  std::string menu = text::join(tags, ", ");
  return parallel_map(rules.size(), workers, [&](std::size_t i) {
    CanonicalRule rule = rules[i];
    if (!rule.scenario_tags.empty()) return rule;
    ChatRequest req;
    req.tag = "scenario-tags:" + rule.rule_id;
    req.messages = {{Role::system,
                     "Classify the research contexts in which this ethics rule applies. Choose one or more of: " +
                         menu + ". Use general when the rule applies to all research."},
                    {Role::user, "Rule: " + rule.text + "\nQuadruple: " + rules::quadruple_text(rule)}};
    req.response_schema = schema;
    try {
      auto reply = gw.chat_json(req);
      for (const auto& t : reply["scenarios"]) {
        auto tag = text::trim(t.get<std::string>());
        if (taxonomy.contains(tag)) {
          rule.scenario_tags.insert(tag);
        } else {
          diag.warn("rule " + rule.rule_id + ": dropped unknown scenario tag '" + tag + "'");
        }
      }
    } catch (const GatewayError& e) {
      diag.warn("rule " + rule.rule_id + ": scenario tagging failed, using general: " + e.what());
    }
    if (rule.scenario_tags.empty()) rule.scenario_tags.insert("general");
    return rule;
  });
}

RuleGraph build_graph(std::vector<CanonicalRule> rules, const rules::ScenarioTaxonomy& taxonomy, Diagnostics& diag,
                      std::string source_rule_base) {
  if (rules.empty()) throw std::invalid_argument("build_graph needs at least one rule");
  rules::sort_rules(rules);
  RuleGraph g;
  g.taxonomy = taxonomy.tags();
  g.source_rule_base = std::move(source_rule_base);
  for (const auto& tag : g.taxonomy) g.subgraphs[tag];
  const std::set<std::string> all_tags(g.taxonomy.begin(), g.taxonomy.end());

  std::set<std::string> seen;
  for (auto& rule : rules) {
    if (!seen.insert(rule.rule_id).second) throw std::invalid_argument("duplicate rule id " + rule.rule_id);
    if (text::is_blank(rule.subject.label) || text::is_blank(rule.subject.raw) || text::is_blank(rule.action)) {
      diag.warn("rule " + rule.rule_id + " rejected: empty subject or action");
      continue;
    }
    std::set<std::string> tags;
    for (const auto& t : rule.scenario_tags) {
      if (taxonomy.contains(t)) {
        tags.insert(t);
      } else {
        diag.warn("rule " + rule.rule_id + ": unknown scenario tag '" + t + "' replaced by general");
        tags.insert("general");
      }
    }
    if (tags.empty()) {
      diag.warn("rule " + rule.rule_id + " has no scenario tags; placed in general");
      tags.insert("general");
    }
    rule.scenario_tags = std::move(tags);
    // General rules bind in every scenario.
    const auto& targets = rule.scenario_tags.count("general") ? all_tags : rule.scenario_tags;
    for (const auto& t : targets) {
      auto& sg = g.subgraphs[t];
      Edge e{rule.subject.label, action_label(rule.action), rule.rule_id, rule.deontic, rule.condition};
      sg.subject_nodes.push_back(e.subject);
      sg.action_nodes.push_back(e.action);
      sg.edges.push_back(std::move(e));
    }
    g.rules.push_back(rule);
  }
  if (g.rules.empty()) throw std::invalid_argument("every rule was rejected; graph would be empty");
  for (auto& [_, sg] : g.subgraphs) {
    sort_unique(sg.subject_nodes);
    sort_unique(sg.action_nodes);
    std::sort(sg.edges.begin(), sg.edges.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.subject, a.action, a.rule_id) < std::tie(b.subject, b.action, b.rule_id);
    });
  }
  g.warnings = diag.warnings();
  return g;
}

const Subgraph& subgraph_for(const RuleGraph& graph, std::string_view scenario, Diagnostics* diag) {
  auto it = graph.subgraphs.find(std::string(scenario));
  if (it == graph.subgraphs.end()) {
    if (diag) diag->warn("unknown scenario '" + std::string(scenario) + "'; using general");
    it = graph.subgraphs.find("general");
    if (it == graph.subgraphs.end()) throw std::invalid_argument("graph has no general subgraph");
  }
  if (it->second.empty() && diag) diag->warn("scenario '" + it->first + "' has no rules");
  return it->second;
}

RefinementResult apply_refinements(std::vector<CanonicalRule> rules, std::span<const RefinementPatch> patches,
                                   const rules::ScenarioTaxonomy& taxonomy) {
  std::vector<const RefinementPatch*> order;
  for (const auto& p : patches) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->timestamp < b->timestamp; });

  RefinementResult out;
  for (const auto* p : order) {
    ChangelogEntry entry{p->rule_id, std::string(to_string(p->field)), nullptr, p->new_value,
                         p->reviewer,  p->timestamp,                   "applied"};
    auto it = std::find_if(rules.begin(), rules.end(), [&](const auto& r) { return r.rule_id == p->rule_id; });
    if (it == rules.end()) {
      entry.outcome = "rejected: unknown rule";
      out.changelog.push_back(std::move(entry));
      continue;
    }
    auto& rule = *it;
    switch (p->field) {
      case PatchField::condition:
        entry.old_value = rule.condition;
        if (!p->new_value.is_string()) {
          entry.outcome = "rejected: condition must be a string";
          break;
        }
        rule.condition = text::collapse_whitespace(p->new_value.get<std::string>());
        rule.condition_reviewed = true;
        break;
      case PatchField::subject_label:
        entry.old_value = rule.subject.label;
        if (!p->new_value.is_string() || text::is_blank(p->new_value.get<std::string>())) {
          entry.outcome = "rejected: subject.label must be a non-empty string";
          break;
        }
        rule.subject.label = text::trim(p->new_value.get<std::string>());
        break;
      case PatchField::scenario_tags: {
        entry.old_value = rule.scenario_tags;
        std::set<std::string> tags;
        bool ok = p->new_value.is_array() && !p->new_value.empty();
        if (ok) {
          for (const auto& t : p->new_value) {
            if (!t.is_string() || !taxonomy.contains(t.get<std::string>())) {
              ok = false;
              break;
            }
            tags.insert(t.get<std::string>());
          }
        }
        if (!ok) {
          entry.outcome = "rejected: scenario_tags must be a non-empty list of known scenarios";
          break;
        }
        rule.scenario_tags = std::move(tags);
        break;
      }
    }
    out.changelog.push_back(std::move(entry));
  }
  out.rules = std::move(rules);
  return out;
}

RuleGraph refine_graph(const RuleGraph& graph, std::span<const RefinementPatch> patches, Diagnostics& diag) {
  auto taxonomy = taxonomy_of(graph.taxonomy);
  auto result = apply_refinements(graph.rules, patches, taxonomy);
  for (const auto& c : result.changelog) {
    if (c.outcome != "applied") diag.warn("patch on " + c.rule_id + " " + c.field + " " + c.outcome);
  }
  auto next = build_graph(std::move(result.rules), taxonomy, diag, graph.source_rule_base);
  next.revision = graph.revision + 1;
  next.changelog = graph.changelog;
  next.changelog.insert(next.changelog.end(), result.changelog.begin(), result.changelog.end());
  return next;
}

nlohmann::json to_json(const RuleGraph& graph) {
  auto j = content_json(graph);
  j["version"] = short_digest(j.dump());
  return j;
}

RuleGraph graph_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != kFormat) throw io::IoError("not a rule graph file");
  if (j.value("schema_version", 0) != kSchemaVersion) throw io::IoError("unsupported rule graph schema_version");
  RuleGraph g;
  g.revision = j.at("revision").get<int>();
  g.source_rule_base = j.at("source_rule_base").get<std::string>();
  g.taxonomy = j.at("taxonomy").get<std::vector<std::string>>();
  for (const auto& r : j.at("rules")) g.rules.push_back(rules::rule_from_json(r));
  for (const auto& [tag, sg] : j.at("subgraphs").items()) {
    Subgraph s;
    s.subject_nodes = sg.at("subject_nodes").get<std::vector<std::string>>();
    s.action_nodes = sg.at("action_nodes").get<std::vector<std::string>>();
    for (const auto& e : sg.at("edges")) s.edges.push_back(edge_from_json(e));
    g.subgraphs[tag] = std::move(s);
  }
  for (const auto& c : j.at("changelog")) g.changelog.push_back(changelog_from_json(c));
  g.warnings = j.value("warnings", std::vector<std::string>{});

  // Integrity: the stored index must be exactly what the stored rules build.
  Diagnostics scratch;
  auto rebuilt = build_graph(g.rules, taxonomy_of(g.taxonomy), scratch, g.source_rule_base);
  if (rebuilt.subgraphs != g.subgraphs) throw io::IoError("rule graph index does not match its rules");
  if (j.contains("version") && j.at("version").get<std::string>() != g.version()) {
    throw io::IoError("rule graph version does not match its content");
  }
  return g;
}

void save_graph(const std::filesystem::path& path, const RuleGraph& graph) {
  io::write_file_atomic(path, io::dump_pretty(to_json(graph)));
}

RuleGraph load_graph(const std::filesystem::path& path) { return graph_from_json(io::read_json(path)); }

nlohmann::json graph_stats(const RuleGraph& graph) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [tag, sg] : graph.subgraphs) {
    std::set<std::string> ids;
    for (const auto& e : sg.edges) ids.insert(e.rule_id);
    per[tag] = {{"rules", ids.size()},
                {"subject_nodes", sg.subject_nodes.size()},
                {"action_nodes", sg.action_nodes.size()},
                {"edges", sg.edges.size()}};
  }
  return {{"version", graph.version()},
          {"revision", graph.revision},
          {"total_rules", graph.rules.size()},
          {"scenarios", per}};
}

std::string render_stats(const RuleGraph& graph) {
  auto stats = graph_stats(graph);
  std::ostringstream out;
  out << "graph " << stats["version"].get<std::string>() << " revision " << graph.revision << ", "
      << graph.rules.size() << " rules\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-20s %8s %10s %10s %8s\n", "scenario", "rules", "subjects", "actions", "edges");
  out << line;
  for (const auto& [tag, s] : stats["scenarios"].items()) {
    std::snprintf(line, sizeof line, "%-20s %8zu %10zu %10zu %8zu\n", tag.c_str(), s["rules"].get<std::size_t>(),
                  s["subject_nodes"].get<std::size_t>(), s["action_nodes"].get<std::size_t>(),
                  s["edges"].get<std::size_t>());
    out << line;
  }
  return out.str();
}

}  // namespace ethrev::graph
