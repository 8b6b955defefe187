// SPDX-License-Identifier: Apache-2.0
#include "ethrev/corpus/forge.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "ethrev/common/io.hpp"
#include "ethrev/common/parallel.hpp"
#include "ethrev/common/text.hpp"

namespace ethrev::corpus {
namespace {

using gateway::ChatMessage;
using gateway::ChatRequest;
using gateway::FieldKind;
using gateway::GatewayError;
using gateway::ResponseSchema;
using gateway::Role;

constexpr std::string_view kCotInstruction =
    "Write the reasoning an ethics reviewer would follow to reach a conclusion on the question. "
    "You are shown the reference answer only so that your reasoning is correct. Do not reveal or "
    "depend on the known answer in an obvious manner: never restate it, quote it, or announce "
    "the conclusion verbatim. Reason from principles, regulatory obligations and procedural "
    "requirements.";

ResponseSchema generation_schema() {
  return {"question_candidates",
          {{"groundable", FieldKind::boolean},
           {"questions", FieldKind::array, true, {}, FieldKind::object}}};
}

ResponseSchema filter_schema() {
  return {"question_filter",
          {{"decision", FieldKind::string, true, {"accept", "reject"}},
           {"reason", FieldKind::string, false,
            {"none", "ambiguous", "insufficiently_grounded", "context_reliant"}},
           {"explanation", FieldKind::string, false}}};
}

std::string pad2(std::size_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02zu", n);
  return buf;
}

std::set<std::string> ngrams(const std::vector<std::string>& w, std::size_t n) {
  std::set<std::string> out;
  if (n == 0 || w.size() < n) return out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) {
    std::string g = w[i];
    for (std::size_t k = 1; k < n; ++k) g += " " + w[i + k];
    out.insert(std::move(g));
  }
  return out;
}

void sort_by_id(std::vector<QAItem>& items) {
  std::sort(items.begin(), items.end(), [](const QAItem& a, const QAItem& b) { return a.id < b.id; });
}

}  // namespace

std::string_view to_string(SourceClass c) {
  switch (c) {
    case SourceClass::book: return "book";
    case SourceClass::paper: return "paper";
    case SourceClass::regulation: return "regulation";
    case SourceClass::consensus: return "consensus";
  }
  return "book";
}

SourceClass parse_source_class(std::string_view s) {
  if (s == "book") return SourceClass::book;
  if (s == "paper") return SourceClass::paper;
  if (s == "regulation") return SourceClass::regulation;
  if (s == "consensus") return SourceClass::consensus;
  throw std::invalid_argument("unknown source_class: " + std::string(s));
}

std::string_view to_string(ItemStatus s) {
  switch (s) {
    case ItemStatus::candidate: return "candidate";
    case ItemStatus::deduped: return "deduped";
    case ItemStatus::filtered_out: return "filtered_out";
    case ItemStatus::accepted: return "accepted";
  }
  return "candidate";
}

std::vector<SourceParagraph> load_corpus(const std::filesystem::path& dir) {
  auto manifest = io::read_json(dir / "manifest.json");
  if (!manifest.is_array()) throw io::IoError("corpus manifest must be a JSON array");
  std::vector<SourceParagraph> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& entry : manifest) {
    auto doc_id = entry.at("doc_id").get<std::string>();
    auto cls = parse_source_class(entry.at("source_class").get<std::string>());
    auto body = io::read_file(dir / entry.at("file").get<std::string>());
    // Paragraphs are blank-line separated blocks.
    std::istringstream in(body);
    std::string line;
    std::string block;
    std::size_t n = 0;
    auto flush = [&] {
      if (!text::is_blank(block)) {
        SourceParagraph p{doc_id, "p" + pad2(++n), text::collapse_whitespace(block), cls};
        if (!seen.insert({p.doc_id, p.para_id}).second) {
          throw std::invalid_argument("duplicate paragraph id " + p.doc_id + "/" + p.para_id);
        }
        out.push_back(std::move(p));
      }
      block.clear();
    };
    while (std::getline(in, line)) {
      if (text::is_blank(line)) {
        flush();
      } else {
        block += line;
        block += '\n';
      }
    }
    flush();
  }
  return out;
}

std::vector<Exemplar> load_exemplars(const std::filesystem::path& path) {
  auto doc = io::read_json(path);
  if (!doc.is_array()) throw io::IoError("exemplar file must be a JSON array");
  std::vector<Exemplar> out;
  for (const auto& e : doc) {
    out.push_back({e.at("question").get<std::string>(), e.at("cot").get<std::string>()});
  }
  return out;
}

std::vector<QAItem> generate_questions(gateway::Gateway& gw, const SourceParagraph& para,
                                       std::size_t k, Diagnostics& diag) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  const std::string ref = para.doc_id + "/" + para.para_id;
  ChatRequest req;
  req.tag = "generate-questions:" + ref;
  req.messages = {
      {Role::system,
       "You build training questions for research-ethics reviewers. Propose up to " +
           std::to_string(k) +
           " open-ended questions that probe ethical principles, regulatory obligations, or "
           "procedural requirements stated in the paragraph, each with a concise answer grounded "
           "only in the paragraph. Questions must be self-contained. If the paragraph carries no "
           "normative content (boilerplate, references, headings), set groundable to false."},
      {Role::user, "Source (" + std::string(to_string(para.source_class)) + "):\n" + para.text}};
  req.response_schema = generation_schema();

  nlohmann::json reply;
  try {
    reply = gw.chat_json(req);
  } catch (const GatewayError& e) {
    diag.warn("generation skipped for " + ref + ": " + e.what());
    return {};
  }
  if (!reply["groundable"].get<bool>()) return {};

  std::vector<QAItem> out;
  for (const auto& q : reply["questions"]) {
    if (out.size() == k) break;
    auto question = text::trim(q.value("question", ""));
    auto answer = text::trim(q.value("answer", ""));
    if (question.empty() || answer.empty()) {
      diag.warn("dropped malformed question candidate for " + ref);
      continue;
    }
    QAItem item;
    item.id = ref + "/q" + pad2(out.size() + 1);
    item.question = std::move(question);
    item.answer = std::move(answer);
    item.doc_id = para.doc_id;
    item.para_id = para.para_id;
    item.source_class = para.source_class;
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<QAItem> deduplicate_questions(gateway::Gateway& gw, std::vector<QAItem> items,
                                          double threshold, cluster::Linkage linkage) {
  if (items.empty()) throw std::invalid_argument("deduplicate_questions needs at least one item");
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must be in (0, 1)");
  sort_by_id(items);
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].id == items[i - 1].id) throw std::invalid_argument("duplicate item id " + items[i].id);
  }

  std::vector<std::string> questions;
  questions.reserve(items.size());
  for (const auto& it : items) questions.push_back(it.question);
  auto vectors = gw.embed(questions);

  auto partition = cluster::agglomerate(vectors, {threshold, linkage});
  for (const auto& members : partition) {
    std::size_t rep = cluster::representative(members, vectors);
    for (std::size_t m : members) {
      items[m].cluster_id = items[rep].id;
      if (m != rep) items[m].status = ItemStatus::deduped;
    }
  }
  return items;
}

std::vector<QAItem> filter_questions(gateway::Gateway& gw, std::vector<QAItem> items,
                                     const ForgeOptions& options, Diagnostics& diag) {
  auto judged = parallel_map(items.size(), options.workers, [&](std::size_t i) {
    QAItem item = items[i];
    if (item.status != ItemStatus::candidate) return item;
    ChatRequest req;
    req.tag = "filter:" + item.id;
    req.messages = {{Role::system, "You audit candidate training questions for a research-ethics "
                                   "QA dataset. " + options.filter_rubric},
                    {Role::user, "Question: " + item.question + "\nAnswer: " + item.answer}};
    req.response_schema = filter_schema();
    try {
      auto reply = gw.chat_json(req);
      if (reply["decision"] == "reject") {
        item.status = ItemStatus::filtered_out;
        item.reason = reply.value("reason", std::string("unspecified"));
        if (item.reason == "none") item.reason = "unspecified";
      } else {
        item.status = ItemStatus::accepted;
      }
    } catch (const GatewayError& e) {
      item.status = ItemStatus::accepted;
      item.needs_manual_review = true;
      item.reason = std::string("filter unavailable: ") + e.what();
      diag.warn("filter failed open for " + item.id + ": " + e.what());
    }
    return item;
  });
  return judged;
}

bool detect_leakage(std::string_view cot, std::string_view answer, const LeakageOptions& options) {
  if (text::is_blank(cot) || text::is_blank(answer)) {
    throw std::invalid_argument("detect_leakage needs non-empty cot and answer");
  }
  const std::string norm_cot = " " + text::normalize(cot) + " ";
  const std::string norm_answer = text::normalize(answer);
  if (!norm_answer.empty() && norm_cot.find(" " + norm_answer + " ") != std::string::npos) return true;

  auto cot_grams = ngrams(text::words(cot), options.ngram);
  auto ans_grams = ngrams(text::words(answer), options.ngram);
  std::size_t shared = 0;
  for (const auto& g : ans_grams) {
    if (cot_grams.contains(g) && ++shared >= options.min_shared_ngrams) return true;
  }
  return false;
}

QAItem annotate_cot(gateway::Gateway& gw, QAItem item, std::span<const Exemplar> exemplars,
                    int max_attempts, Diagnostics& diag, const LeakageOptions& leakage) {
  if (item.status != ItemStatus::accepted) throw std::invalid_argument("annotate_cot needs an accepted item");
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be positive");

  std::string system(kCotInstruction);
  if (!exemplars.empty()) {
    system += "\n\nExamples of well-formed reasoning:";
    for (const auto& ex : exemplars) system += "\n\nQuestion: " + ex.question + "\nReasoning: " + ex.cot;
  }
  ChatRequest req;
  req.tag = "cot:" + item.id;
  req.messages = {{Role::system, system},
                  {Role::user, "Question: " + item.question +
                                   "\nReference answer (guidance only, do not reveal): " + item.answer}};

  item.cot.reset();
  item.cot_attempts = 0;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    item.cot_attempts = attempt;
    auto reply = text::trim(gw.chat(req));
    if (reply.empty()) continue;
    if (!detect_leakage(reply, item.answer, leakage)) {
      item.cot = std::move(reply);
      return item;
    }
  }
  item.cot_demoted = true;
  diag.warn("cot for " + item.id + " still leaked after " + std::to_string(max_attempts) +
            " attempts; kept as a direct-answer item");
  return item;
}

nlohmann::json sft_record(const QAItem& item) {
  nlohmann::json rec{{"id", item.id},
                     {"source", {{"doc_id", item.doc_id},
                                 {"para_id", item.para_id},
                                 {"source_class", to_string(item.source_class)}}},
                     {"prompt", item.question}};
  if (item.cot) {
    rec["type"] = "cot";
    rec["response"] = *item.cot + "\n\nAnswer: " + item.answer;
    rec["cot"] = *item.cot;
    rec["answer"] = item.answer;
  } else {
    rec["type"] = "direct";
    rec["response"] = item.answer;
  }
  return rec;
}

std::size_t export_sft(std::span<const QAItem> items, const std::filesystem::path& path,
                       const LeakageOptions& leakage) {
  std::vector<QAItem> sorted(items.begin(), items.end());
  sort_by_id(sorted);
  std::vector<nlohmann::json> records;
  for (auto& item : sorted) {
    if (item.status != ItemStatus::accepted) {
      throw std::invalid_argument("export_sft given non-accepted item " + item.id);
    }
    if (item.cot && detect_leakage(*item.cot, item.answer, leakage)) {
      spdlog::warn("leaking cot on {} exported as a direct item", item.id);
      item.cot.reset();
    }
    records.push_back(sft_record(item));
  }
  io::write_file_atomic(path, io::to_jsonl(records));
  return records.size();
}

ForgeResult run_forge(gateway::Gateway& gw, std::span<const SourceParagraph> corpus,
                      std::span<const Exemplar> exemplars, const ForgeOptions& options) {
  Diagnostics diag;
  ForgeResult result;

  auto generated = parallel_map(corpus.size(), options.workers, [&](std::size_t i) {
    return generate_questions(gw, corpus[i], options.questions_per_paragraph, diag);
  });
  std::vector<QAItem> items;
  for (auto& batch : generated) {
    for (auto& it : batch) items.push_back(std::move(it));
  }

  std::map<SourceClass, StageCounts> per;
  std::map<SourceClass, std::set<std::string>> docs;
  for (const auto& p : corpus) {
    docs[p.source_class].insert(p.doc_id);
    ++per[p.source_class].paragraphs;
  }
  for (auto& [cls, ids] : docs) per[cls].documents = ids.size();

  if (!items.empty()) {
    for (const auto& it : items) ++per[it.source_class].candidates;
    items = deduplicate_questions(gw, std::move(items), options.dedup_threshold, options.linkage);
    items = filter_questions(gw, std::move(items), options, diag);
    items = parallel_map(items.size(), options.workers, [&](std::size_t i) {
      QAItem item = items[i];
      if (item.status != ItemStatus::accepted) return item;
      try {
        return annotate_cot(gw, std::move(item), exemplars, options.cot_max_attempts, diag,
                            options.leakage);
      } catch (const GatewayError& e) {
        QAItem demoted = items[i];
        demoted.cot_demoted = true;
        diag.warn("cot generation failed for " + demoted.id + ": " + e.what());
        return demoted;
      }
    });
  }

  for (const auto& it : items) {
    auto& c = per[it.source_class];
    if (it.status != ItemStatus::deduped) ++c.after_dedup;
    if (it.status == ItemStatus::accepted) ++c.accepted;
    if (it.status == ItemStatus::filtered_out) ++c.filtered_out;
    if (it.cot) ++c.with_cot;
    if (it.cot_demoted) ++c.cot_demoted;
  }
  for (const auto& [cls, c] : per) {
    result.per_source.emplace_back(cls, c);
    result.total.documents += c.documents;
    result.total.paragraphs += c.paragraphs;
    result.total.candidates += c.candidates;
    result.total.after_dedup += c.after_dedup;
    result.total.accepted += c.accepted;
    result.total.filtered_out += c.filtered_out;
    result.total.with_cot += c.with_cot;
    result.total.cot_demoted += c.cot_demoted;
  }
  result.items = std::move(items);
  result.warnings = diag.warnings();
  return result;
}

namespace {

nlohmann::json counts_json(const StageCounts& c) {
  return {{"documents", c.documents},       {"paragraphs", c.paragraphs},
          {"candidates", c.candidates},     {"after_dedup", c.after_dedup},
          {"accepted", c.accepted},         {"filtered_out", c.filtered_out},
          {"with_cot", c.with_cot},         {"cot_demoted", c.cot_demoted}};
}

}  // namespace

nlohmann::json stats_json(const ForgeResult& result) {
  nlohmann::json j;
  j["per_source"] = nlohmann::json::object();
  for (const auto& [cls, c] : result.per_source) j["per_source"][std::string(to_string(cls))] = counts_json(c);
  j["total"] = counts_json(result.total);
  j["warnings"] = result.warnings;
  return j;
}

std::string render_stats(const ForgeResult& result) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %9s %10s %10s %10s %9s %8s\n", "Source", "Documents",
                "Paragraphs", "Candidates", "Deduped", "QA Pairs", "With CoT");
  out << line;
  auto row = [&](std::string_view name, const StageCounts& c) {
    std::snprintf(line, sizeof line, "%-12s %9zu %10zu %10zu %10zu %9zu %8zu\n",
                  std::string(name).c_str(), c.documents, c.paragraphs, c.candidates,
                  c.after_dedup, c.accepted, c.with_cot);
    out << line;
  };
  for (const auto& [cls, c] : result.per_source) row(to_string(cls), c);
  row("Total", result.total);
  return out.str();
}

}  // namespace ethrev::corpus
