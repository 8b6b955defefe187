// SPDX-License-Identifier: Apache-2.0
#include "ethrev/cli/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ethrev/cli/config.hpp"
#include "ethrev/committee/committee.hpp"
#include "ethrev/common/hash.hpp"
#include "ethrev/common/io.hpp"
#include "ethrev/corpus/forge.hpp"
#include "ethrev/eval/eval.hpp"
#include "ethrev/graph/graph.hpp"
#include "ethrev/review/expedited.hpp"
#include "ethrev/rules/forge.hpp"
#include "ethrev/rules/store.hpp"

namespace ethrev::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Artifact {
  std::string name;
  std::string content;
};

// Everything a command needs besides its own flags.
struct Context {
  RunConfig config;
  std::unique_ptr<gateway::Gateway> gw;
  json config_json;
  std::string hash;

  json provenance(const json& versions = json::object()) const {
    json p = {{"tool", "ethrev"}, {"config_hash", hash}, {"config", config_json}};
    for (const auto& [k, v] : versions.items()) p[k] = v;
    return p;
  }
  std::string footer(const json& versions = json::object()) const {
    std::string out = "\n-- config " + hash;
    for (const auto& [k, v] : versions.items()) out += ", " + k + " " + (v.is_string() ? v.get<std::string>() : v.dump());
    return out + "\n";
  }
};

void write_artifacts(const fs::path& out, const std::vector<Artifact>& artifacts) {
  fs::create_directories(out);
  for (const auto& a : artifacts) {
    io::write_file_atomic(out / a.name, a.content);
    std::cout << (out / a.name).string() << "\n";
  }
}

rules::ScenarioTaxonomy taxonomy_from(const RunConfig& c) {
  rules::ScenarioTaxonomy t;
  for (const auto& s : c.extra_scenarios) t.extend(s);
  return t;
}

std::string render_rules(const rules::RuleBase& base) {
  std::ostringstream out;
  out << "RULE BASE (" << base.rules.size() << " rules)\n";
  for (const auto& r : base.rules) {
    out << r.rule_id << " [" << rules::to_string(r.deontic) << "] " << rules::quadruple_text(r) << "\n";
  }
  if (!base.warnings.empty()) {
    out << "\nWARNINGS\n";
    for (const auto& w : base.warnings) out << "- " << w << "\n";
  }
  return out.str();
}

std::string item_jsonl(std::span<const corpus::QAItem> items) {
  std::vector<json> lines;
  for (const auto& it : items) {
    lines.push_back({{"id", it.id},
                     {"question", it.question},
                     {"answer", it.answer},
                     {"cot", it.cot ? json(*it.cot) : json()},
                     {"doc_id", it.doc_id},
                     {"para_id", it.para_id},
                     {"source_class", corpus::to_string(it.source_class)},
                     {"cluster_id", it.cluster_id ? json(*it.cluster_id) : json()},
                     {"status", corpus::to_string(it.status)},
                     {"reason", it.reason},
                     {"needs_manual_review", it.needs_manual_review},
                     {"cot_attempts", it.cot_attempts},
                     {"cot_demoted", it.cot_demoted}});
  }
  return io::to_jsonl(lines);
}

std::string templates_digest(const committee::Templates& t) {
  json j;
  for (const auto& [role, text] : t.personas) j["personas"][std::string(committee::to_string(role))] = text;
  j["rubrics"] = t.rubrics;
  return short_digest(j.dump());
}

// ---- commands ----

void forge_corpus(Context& ctx, const fs::path& corpus_dir, const fs::path& out) {
  const auto& t = ctx.config.thresholds;
  auto corpus = corpus::load_corpus(corpus_dir);
  std::vector<corpus::Exemplar> exemplars;
  if (!ctx.config.exemplars.empty()) exemplars = corpus::load_exemplars(ctx.config.exemplars);
  corpus::ForgeOptions opts;
  opts.questions_per_paragraph = t.questions_per_paragraph;
  opts.dedup_threshold = t.cluster_threshold;
  opts.linkage = t.linkage;
  opts.cot_max_attempts = t.cot_max_attempts;
  opts.leakage.ngram = t.leakage_ngram;
  opts.workers = static_cast<std::size_t>(t.concurrency_cap);
  auto result = corpus::run_forge(*ctx.gw, corpus, exemplars, opts);

  auto stats = corpus::stats_json(result);
  stats["provenance"] = ctx.provenance();
  std::vector<corpus::QAItem> accepted;
  for (const auto& it : result.items) {
    if (it.status == corpus::ItemStatus::accepted) accepted.push_back(it);
  }
  // export_sft writes directly; stage it through a scratch file so every
  // artifact lands together.
  auto scratch = fs::temp_directory_path() / ("ethrev-sft-" + short_digest(out.string() + ctx.hash) + ".jsonl");
  auto records = corpus::export_sft(accepted, scratch, opts.leakage);
  auto sft = io::read_file(scratch);
  fs::remove(scratch);
  spdlog::info("forge-corpus: {} SFT records", records);
  write_artifacts(out, {{"items.jsonl", item_jsonl(result.items)},
                        {"sft.jsonl", sft},
                        {"stats.json", io::dump_pretty(stats)},
                        {"stats.txt", corpus::render_stats(result) + ctx.footer()}});
}

rules::RuleForgeOptions rule_options(const Context& ctx) {
  rules::RuleForgeOptions o;
  o.cluster_threshold = ctx.config.thresholds.cluster_threshold;
  o.linkage = ctx.config.thresholds.linkage;
  o.workers = static_cast<std::size_t>(ctx.config.thresholds.concurrency_cap);
  return o;
}

void emit_rule_base(const Context& ctx, const rules::RuleBase& base, const fs::path& out) {
  auto digest = rules::rule_base_digest(base.rules);
  json versions = {{"rule_base", digest}};
  write_artifacts(out, {{"rule_base.jsonl", rules::serialize_rule_base(base, ctx.provenance(versions).dump())},
                        {"rule_base.txt", render_rules(base) + ctx.footer(versions)}});
}

void forge_rules_build(Context& ctx, const fs::path& docs, const fs::path& out) {
  auto base = rules::build_rule_base(*ctx.gw, rules::load_documents(docs), rule_options(ctx));
  spdlog::info("forge-rules build: {} rules, {} warnings", base.rules.size(), base.warnings.size());
  emit_rule_base(ctx, base, out);
}

void forge_rules_update(Context& ctx, const fs::path& rules_path, const fs::path& docs, const fs::path& out) {
  auto existing = rules::load_rule_base(rules_path);
  auto base = rules::update_rule_base(*ctx.gw, existing.rules, rules::load_documents(docs), rule_options(ctx));
  spdlog::info("forge-rules update: {} -> {} rules", existing.rules.size(), base.rules.size());
  emit_rule_base(ctx, base, out);
}

void emit_graph(const Context& ctx, const graph::RuleGraph& g, const fs::path& out, std::vector<Artifact> extra = {}) {
  json versions = {{"graph_version", g.version()}, {"rule_base", g.source_rule_base}};
  auto j = graph::to_json(g);
  j["provenance"] = ctx.provenance(versions);
  std::vector<Artifact> artifacts = {{"graph.json", io::dump_pretty(j)},
                                     {"graph.txt", graph::render_stats(g) + ctx.footer(versions)}};
  for (auto& a : extra) {
    a.content += ctx.footer(versions);
    artifacts.push_back(std::move(a));
  }
  write_artifacts(out, artifacts);
}

void graph_build(Context& ctx, const fs::path& rules_path, const fs::path& out) {
  auto base = rules::load_rule_base(rules_path);
  auto taxonomy = taxonomy_from(ctx.config);
  Diagnostics diag;
  auto tagged = graph::assign_scenarios(*ctx.gw, base.rules, taxonomy, diag,
                                        static_cast<std::size_t>(ctx.config.thresholds.concurrency_cap));
  auto g = graph::build_graph(std::move(tagged), taxonomy, diag, rules::rule_base_digest(base.rules));
  spdlog::info("graph build: {} rules, version {}", g.rules.size(), g.version());
  emit_graph(ctx, g, out);
}

void graph_patch(Context& ctx, const fs::path& graph_path, const fs::path& patches, const fs::path& out) {
  auto g = graph::load_graph(graph_path);
  Diagnostics diag;
  auto next = graph::refine_graph(g, graph::load_patches(patches), diag);
  std::ostringstream log;
  log << "CHANGELOG (revision " << next.revision << ")\n";
  for (std::size_t i = g.changelog.size(); i < next.changelog.size(); ++i) {
    const auto& c = next.changelog[i];
    log << c.timestamp << " " << c.reviewer << " " << c.rule_id << " " << c.field << ": " << c.old_value.dump()
        << " -> " << c.new_value.dump() << " (" << c.outcome << ")\n";
  }
  spdlog::info("graph patch: revision {}, version {}", next.revision, next.version());
  emit_graph(ctx, next, out, {{"changelog.txt", log.str()}});
}

void graph_stats(Context& ctx, const fs::path& graph_path, const std::string& out) {
  auto g = graph::load_graph(graph_path);
  json versions = {{"graph_version", g.version()}};
  auto text = graph::render_stats(g);
  if (out.empty()) {
    std::cout << text;
    return;
  }
  auto j = graph::graph_stats(g);
  j["provenance"] = ctx.provenance(versions);
  write_artifacts(out, {{"stats.json", io::dump_pretty(j)}, {"stats.txt", text + ctx.footer(versions)}});
}

void review_er(Context& ctx, const fs::path& dossier_path, const fs::path& graph_path, const fs::path& out) {
  const auto& t = ctx.config.thresholds;
  auto dossier = review::load_dossier(dossier_path, {t.chunk_words, t.chunk_overlap});
  auto g = graph::load_graph(graph_path);
  review::ReviewOptions opts;
  opts.retrieve_k = t.retrieve_k;
  opts.rerank_k = t.rerank_k;
  opts.min_scenario_confidence = t.min_scenario_confidence;
  opts.binary_strict = t.binary_strict;
  opts.workers = static_cast<std::size_t>(t.concurrency_cap);
  auto report = review::run_expedited_review(*ctx.gw, dossier, g, opts, ctx.hash);
  spdlog::info("review er: {} rules checked, {} violations", report.counts.checked, report.counts.violations);
  json versions = {{"graph_version", g.version()}};
  auto j = review::to_json(report);
  j["provenance"] = ctx.provenance(versions);
  write_artifacts(out, {{"report.json", io::dump_pretty(j)},
                        {"report.txt", review::render_report(report) + ctx.footer(versions)}});
}

void review_cr(Context& ctx, const fs::path& dossier_path, std::optional<std::uint64_t> seed, const fs::path& out) {
  const auto& t = ctx.config.thresholds;
  auto dossier = review::load_dossier(dossier_path, {t.chunk_words, t.chunk_overlap});
  auto templates = ctx.config.templates.empty() ? committee::Templates::builtin()
                                                : committee::Templates::load(ctx.config.templates);
  committee::CommitteeOptions opts;
  opts.seed = seed.value_or(ctx.config.seeds.committee_seed);
  opts.max_rounds = t.debate_rounds;
  opts.workers = static_cast<std::size_t>(t.concurrency_cap);
  auto report = committee::run_committee_review(*ctx.gw, dossier, opts, templates);
  spdlog::info("review cr: {} issues, {} unresolved", report.phase1_issue_count, report.unresolved.size());
  json versions = {{"seed", opts.seed}, {"templates", templates_digest(templates)}};
  auto j = committee::to_json(report);
  j["provenance"] = ctx.provenance(versions);
  write_artifacts(out, {{"committee.json", io::dump_pretty(j)},
                        {"minutes.txt", committee::render_minutes(report) + ctx.footer(versions)}});
}

void eval_er(Context& ctx, const fs::path& reports, const fs::path& gold, bool judge, const fs::path& out) {
  Diagnostics diag;
  auto rows = eval::evaluate_reports(reports, gold, judge ? ctx.gw.get() : nullptr, diag);
  std::set<std::string> versions_seen;
  for (const auto& e : fs::recursive_directory_iterator(reports)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      versions_seen.insert(io::read_json(e.path()).value("graph_version", ""));
    }
  }
  json versions = {{"graph_versions", versions_seen}};
  json j = {{"systems", eval::rows_json(rows)},
            {"reference_professionalism", eval::kReferenceProfessionalism},
            {"warnings", diag.warnings()},
            {"provenance", ctx.provenance(versions)}};
  auto table = eval::render_table(rows);
  std::cout << table;
  write_artifacts(out, {{"metrics.json", io::dump_pretty(j)}, {"metrics.txt", table + ctx.footer(versions)}});
}

void eval_qa(Context& ctx, const fs::path& predictions, const fs::path& key, const fs::path& out) {
  Diagnostics diag;
  auto preds = eval::load_predictions(predictions);
  auto result = eval::score_qa(*ctx.gw, preds, eval::load_answer_key(key), diag,
                               static_cast<std::size_t>(ctx.config.thresholds.concurrency_cap));
  json items = json::array();
  std::ostringstream text;
  for (const auto& s : result.items) {
    items.push_back({{"question_id", s.question_id},
                     {"type", eval::to_string(s.type)},
                     {"score", s.score},
                     {"flagged", s.flagged}});
    text << s.question_id << " " << eval::to_string(s.type) << " " << s.score << (s.flagged ? " FLAGGED" : "")
         << "\n";
  }
  text << "accuracy " << result.accuracy << " over " << result.items.size() << " items\n";
  json j = {{"accuracy", result.accuracy},
            {"items", items},
            {"warnings", diag.warnings()},
            {"provenance", ctx.provenance()}};
  std::cout << "accuracy " << result.accuracy << "\n";
  write_artifacts(out, {{"qa.json", io::dump_pretty(j)}, {"qa.txt", text.str() + ctx.footer()}});
}

void setup_logging(const std::string& level) {
  auto logger = spdlog::get("ethrev");
  if (!logger) logger = spdlog::stderr_color_mt("ethrev");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"Research ethics review engine: rule forging, rule graphs, expedited and committee review, evaluation."};
  app.name("ethrev");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, backend, log_level = "info";
  app.add_option("--config", config_path, "Run configuration (JSON with comments)")->check(CLI::ExistingFile);
  app.add_option("--backend", backend, "Override every capability backend, e.g. mock:playbook.json");
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::string out, corpus_dir, docs, rules_path, graph_path, patches, dossier, reports, gold, predictions, key;
  std::optional<std::uint64_t> seed;
  bool judge = false;

  auto* fc = app.add_subcommand("forge-corpus", "Forge a supervised QA dataset from a source corpus");
  fc->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
  fc->add_option("--out", out)->required();

  auto* fr = app.add_subcommand("forge-rules", "Build or update the canonical rule base");
  fr->require_subcommand(1);
  auto* fr_build = fr->add_subcommand("build", "Extract a rule base from regulatory documents");
  fr_build->add_option("--docs", docs)->required()->check(CLI::ExistingDirectory);
  fr_build->add_option("--out", out)->required();
  auto* fr_update = fr->add_subcommand("update", "Fold new documents into an existing rule base");
  fr_update->add_option("--rules", rules_path)->required()->check(CLI::ExistingFile);
  fr_update->add_option("--docs", docs)->required()->check(CLI::ExistingDirectory);
  fr_update->add_option("--out", out)->required();

  auto* gr = app.add_subcommand("graph", "Rule graph management");
  gr->require_subcommand(1);
  auto* gr_build = gr->add_subcommand("build", "Tag rules with scenarios and index them");
  gr_build->add_option("--rules", rules_path)->required()->check(CLI::ExistingFile);
  gr_build->add_option("--out", out)->required();
  auto* gr_patch = gr->add_subcommand("patch", "Apply reviewer refinement patches");
  gr_patch->add_option("--graph", graph_path)->required()->check(CLI::ExistingFile);
  gr_patch->add_option("--patches", patches)->required()->check(CLI::ExistingFile);
  gr_patch->add_option("--out", out)->required();
  auto* gr_stats = gr->add_subcommand("stats", "Per-scenario node and edge counts");
  gr_stats->add_option("--graph", graph_path)->required()->check(CLI::ExistingFile);
  gr_stats->add_option("--out", out);

  auto* rv = app.add_subcommand("review", "Review a dossier");
  rv->require_subcommand(1);
  auto* rv_er = rv->add_subcommand("er", "Expedited review against the rule graph");
  rv_er->add_option("--dossier", dossier)->required()->check(CLI::ExistingPath);
  rv_er->add_option("--graph", graph_path)->required()->check(CLI::ExistingFile);
  rv_er->add_option("--out", out)->required();
  auto* rv_cr = rv->add_subcommand("cr", "Simulated committee review");
  rv_cr->add_option("--dossier", dossier)->required()->check(CLI::ExistingPath);
  rv_cr->add_option("--seed", seed, "Committee seed (overrides the config)");
  rv_cr->add_option("--out", out)->required();

  auto* ev = app.add_subcommand("eval", "Evaluation harness");
  ev->require_subcommand(1);
  auto* ev_er = ev->add_subcommand("er", "Score expedited-review reports against gold annotations");
  ev_er->add_option("--reports", reports)->required()->check(CLI::ExistingDirectory);
  ev_er->add_option("--gold", gold)->required()->check(CLI::ExistingDirectory);
  ev_er->add_flag("--judge", judge, "Also score professionalism with the chat backend");
  ev_er->add_option("--out", out)->required();
  auto* ev_qa = ev->add_subcommand("qa", "Score QA predictions against an answer key");
  ev_qa->add_option("--predictions", predictions)->required()->check(CLI::ExistingFile);
  ev_qa->add_option("--key", key)->required()->check(CLI::ExistingFile);
  ev_qa->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    setup_logging(log_level);
  } catch (const std::exception& e) {
    std::cerr << "ethrev: " << e.what() << "\n";
    return kUsageError;
  }

  bool offline = gr_patch->parsed() || gr_stats->parsed() || (ev_er->parsed() && !judge);
  Context ctx;
  try {
    if (!config_path.empty()) ctx.config = load_config(config_path);
    if (!backend.empty()) apply_backend_override(ctx.config, backend);
    validate(ctx.config, !offline);
    if (!offline) ctx.gw = make_gateway(ctx.config);
    ctx.config_json = provenance_config(ctx.config, ctx.gw.get());
    ctx.hash = config_hash(ctx.config_json);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    spdlog::error("configuration: {}", e.what());
    return kUsageError;
  }
  spdlog::info("config hash {}", ctx.hash);

  try {
    if (fc->parsed()) forge_corpus(ctx, corpus_dir, out);
    else if (fr_build->parsed()) forge_rules_build(ctx, docs, out);
    else if (fr_update->parsed()) forge_rules_update(ctx, rules_path, docs, out);
    else if (gr_build->parsed()) graph_build(ctx, rules_path, out);
    else if (gr_patch->parsed()) graph_patch(ctx, graph_path, patches, out);
    else if (gr_stats->parsed()) graph_stats(ctx, graph_path, out);
    else if (rv_er->parsed()) review_er(ctx, dossier, graph_path, out);
    else if (rv_cr->parsed()) review_cr(ctx, dossier, seed, out);
    else if (ev_er->parsed()) eval_er(ctx, reports, gold, judge, out);
    else if (ev_qa->parsed()) eval_qa(ctx, predictions, key, out);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kPipelineError;
  }
  return kOk;
}

int dispatch(const std::vector<std::string>& argv) {
  std::vector<std::string> copy = argv;
  std::vector<char*> ptrs;
  for (auto& a : copy) ptrs.push_back(a.data());
  ptrs.push_back(nullptr);
  return dispatch(static_cast<int>(copy.size()), ptrs.data());
}

}  // namespace ethrev::cli
