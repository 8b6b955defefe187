// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ethrev/common/cluster.hpp"
#include "ethrev/common/diagnostics.hpp"
#include "ethrev/gateway/gateway.hpp"
#include "ethrev/rules/types.hpp"

// Regulation text -> canonical rule base: clause segmentation, atomic
// candidate extraction, semantic clustering, canonical merging and quadruple
// extraction, plus the incremental updater.
namespace ethrev::rules {

struct RuleForgeOptions {
  double cluster_threshold = 0.75;
  cluster::Linkage linkage = cluster::Linkage::average;
  std::size_t workers = 8;
};

struct RuleBase {
  std::vector<CanonicalRule> rules;  // sorted by rule id
  std::vector<std::string> warnings;
};

// Directory with manifest.json: [{file, doc_id, title, issued_date}].
std::vector<RegulatoryDocument> load_documents(const std::filesystem::path& dir);

// Atomic candidates of one clause with embeddings attached; ids are
// "{clause_id}/k01", ... On gateway failure the clause is flagged in `diag`
// and no candidates are returned.
std::vector<RuleCandidate> extract_candidates(gateway::Gateway& gw, const Clause& clause,
                                              Diagnostics& diag);

// Agglomerative clustering of the candidates in their given order.
std::vector<std::vector<RuleCandidate>> cluster_candidates(std::span<const RuleCandidate> cands,
                                                           double threshold = 0.75,
                                                           cluster::Linkage linkage = cluster::Linkage::average);

// Fuses a cluster into one canonical statement (skipped for singletons) and
// extracts its quadruple. Returns nullopt, with the cluster flagged for
// manual authoring, when either call fails.
std::optional<CanonicalRule> merge_cluster(gateway::Gateway& gw, std::span<const RuleCandidate> cluster,
                                           const std::string& rule_id, Diagnostics& diag);

// segment -> extract -> embed -> cluster -> merge over all documents.
// Identical duplicate documents are collapsed; conflicting documents sharing a
// doc_id are rejected.
RuleBase build_rule_base(gateway::Gateway& gw, std::vector<RegulatoryDocument> docs,
                         const RuleForgeOptions& options = {});

// Matches the new documents' candidates against the existing rules. A match
// extends that rule's provenance; the rest become new rules numbered after
// the current maximum. Existing rule ids never change.
RuleBase update_rule_base(gateway::Gateway& gw, std::vector<CanonicalRule> existing,
                          std::vector<RegulatoryDocument> new_docs, const RuleForgeOptions& options = {});

// "R001" -> 1. Throws on ids that do not follow the pattern.
std::size_t rule_number(const std::string& rule_id);
std::string make_rule_id(std::size_t n);
void sort_rules(std::vector<CanonicalRule>& rules);

}  // namespace ethrev::rules
