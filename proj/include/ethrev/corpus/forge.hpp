// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethrev/common/cluster.hpp"
#include "ethrev/common/diagnostics.hpp"
#include "ethrev/gateway/gateway.hpp"

// Supervised QA dataset construction from normative text: question
// generation, cluster deduplication, groundedness filtering and
// leakage-filtered chain-of-thought annotation.
namespace ethrev::corpus {

enum class SourceClass { book, paper, regulation, consensus };

std::string_view to_string(SourceClass c);
SourceClass parse_source_class(std::string_view s);

struct SourceParagraph {
  std::string doc_id;
  std::string para_id;
  std::string text;
  SourceClass source_class = SourceClass::book;
};

enum class ItemStatus { candidate, deduped, filtered_out, accepted };

std::string_view to_string(ItemStatus s);

struct QAItem {
  std::string id;
  std::string question;
  std::string answer;
  std::optional<std::string> cot;
  std::string doc_id;
  std::string para_id;
  SourceClass source_class = SourceClass::book;
  std::optional<std::string> cluster_id;
  ItemStatus status = ItemStatus::candidate;
  // Rejection reason, or the note explaining a manual-review flag.
  std::string reason;
  bool needs_manual_review = false;
  int cot_attempts = 0;
  bool cot_demoted = false;
};

struct Exemplar {
  std::string question;
  std::string cot;
};

struct LeakageOptions {
  std::size_t ngram = 8;
  std::size_t min_shared_ngrams = 1;
};

struct ForgeOptions {
  std::size_t questions_per_paragraph = 3;
  double dedup_threshold = 0.75;
  cluster::Linkage linkage = cluster::Linkage::average;
  int cot_max_attempts = 5;
  LeakageOptions leakage;
  // Acceptance rubric for the second filtering stage.
  std::string filter_rubric =
      "Reject the question if it is ambiguous, if it is insufficiently grounded in the source "
      "paragraph, or if it relies on external context (for example 'the paragraph above', "
      "'this chapter', unnamed documents). Accept self-contained, well-grounded questions.";
  std::size_t workers = 8;
};

// Corpus directory: manifest.json listing {file, doc_id, source_class}; each
// file is UTF-8 text with one paragraph per blank-line-separated block.
std::vector<SourceParagraph> load_corpus(const std::filesystem::path& dir);

// JSON array of {question, cot}.
std::vector<Exemplar> load_exemplars(const std::filesystem::path& path);

// Up to k candidate QA pairs grounded in `para`. Unparseable generations skip
// the paragraph (logged); an ungroundable paragraph yields no items.
std::vector<QAItem> generate_questions(gateway::Gateway& gw, const SourceParagraph& para,
                                       std::size_t k, Diagnostics& diag);

// Clusters questions by embedding; the representative of each cluster keeps
// its status and every other member becomes `deduped`. Every item gets the
// representative's id as cluster_id. Output is sorted by id.
std::vector<QAItem> deduplicate_questions(gateway::Gateway& gw, std::vector<QAItem> items,
                                          double threshold = 0.75,
                                          cluster::Linkage linkage = cluster::Linkage::average);

// Judges every `candidate` item; rejected items become `filtered_out` with a
// reason, the rest `accepted`. Gateway failures fail open: the item is
// accepted and flagged for manual review. Other items pass through.
std::vector<QAItem> filter_questions(gateway::Gateway& gw, std::vector<QAItem> items,
                                     const ForgeOptions& options, Diagnostics& diag);

// True iff the normalized answer occurs in the normalized CoT on word
// boundaries, or the two share at least min_shared_ngrams word n-grams.
bool detect_leakage(std::string_view cot, std::string_view answer, const LeakageOptions& options = {});

// Generates a CoT conditioned on question and answer until one passes the
// leakage check; after max_attempts the item is demoted to a direct item.
QAItem annotate_cot(gateway::Gateway& gw, QAItem item, std::span<const Exemplar> exemplars,
                    int max_attempts, Diagnostics& diag, const LeakageOptions& leakage = {});

// One SFT record (see export_sft).
nlohmann::json sft_record(const QAItem& item);

// Writes JSON-Lines SFT records sorted by id and returns the record count.
// CoT items become (question -> cot + answer); others (question -> answer).
std::size_t export_sft(std::span<const QAItem> items, const std::filesystem::path& path,
                       const LeakageOptions& leakage = {});

struct StageCounts {
  std::size_t documents = 0;
  std::size_t paragraphs = 0;
  std::size_t candidates = 0;
  std::size_t after_dedup = 0;
  std::size_t accepted = 0;
  std::size_t filtered_out = 0;
  std::size_t with_cot = 0;
  std::size_t cot_demoted = 0;
};

struct ForgeResult {
  std::vector<QAItem> items;  // every item with its final status
  std::vector<std::pair<SourceClass, StageCounts>> per_source;
  StageCounts total;
  std::vector<std::string> warnings;
};

// generate -> deduplicate -> filter -> annotate over the whole corpus.
ForgeResult run_forge(gateway::Gateway& gw, std::span<const SourceParagraph> corpus,
                      std::span<const Exemplar> exemplars, const ForgeOptions& options);

nlohmann::json stats_json(const ForgeResult& result);
std::string render_stats(const ForgeResult& result);

}  // namespace ethrev::corpus
