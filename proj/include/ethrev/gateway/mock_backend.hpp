// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethrev/gateway/gateway.hpp"

namespace ethrev::gateway {

struct ScriptedReply {
  std::string text;
  // Simulates a transport failure instead of replying.
  bool transport_fault = false;
};

// Scripted replies keyed by prompt tag.
//
// File format:
//   {
//     "embedding_seed": 7,
//     "embedding_dim": 256,
//     "entries": {
//       "verdict:R001": {"applicability": "yes", ...},   // object -> its JSON text
//       "summary:*": "plain reply",                       // prefix wildcard
//       "cot:Q1": ["first", "second", {"$fault": "transport"}]
//     }
//   }
//
// An array is a sequence consumed one reply per call; once exhausted the last
// reply repeats. Lookup prefers an exact tag, then the longest matching
// "prefix*" pattern. A tag that matches nothing is an error.
class Playbook {
 public:
  static Playbook from_json(const nlohmann::json& doc);
  static Playbook load(const std::filesystem::path& path);

  void set_sequence(std::string matcher, std::vector<ScriptedReply> replies);
  void set_reply(std::string matcher, std::string reply) {
    set_sequence(std::move(matcher), {ScriptedReply{std::move(reply)}});
  }
  void set_json(std::string matcher, const nlohmann::json& reply) {
    set_reply(std::move(matcher), reply.dump());
  }

  // Matcher key for `tag`, or nullptr.
  const std::string* resolve(std::string_view tag) const;
  const std::vector<ScriptedReply>& replies(const std::string& matcher) const;

  std::uint64_t embedding_seed = 0;
  std::size_t embedding_dim = 256;

  // Digest of the playbook content; part of the backend identity.
  std::string digest() const;

 private:
  std::map<std::string, std::vector<ScriptedReply>, std::less<>> entries_;
};

// Deterministic offline backend.
//   chat:   playbook lookup by request tag
//   embed:  hashed character-3-gram counts (seeded), normalized by the gateway
//   rerank: number of distinct query content tokens present in the candidate
class MockBackend final : public Backend {
 public:
  explicit MockBackend(Playbook playbook);

  std::string chat(const ChatRequest& request) override;
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;
  std::vector<double> rerank(std::string_view query,
                             std::span<const RerankCandidate> candidates) override;
  std::string identity() const override;

  Playbook& playbook() { return playbook_; }

 private:
  Playbook playbook_;
  std::mutex mu_;
  std::map<std::string, std::size_t, std::less<>> cursors_;
};

// The embedding the mock backend produces for `text`, before normalization.
std::vector<double> ngram_embedding(std::string_view text, std::uint64_t seed, std::size_t dim);

// The score the mock backend assigns to `candidate` for `query`.
double lexical_overlap(std::string_view query, std::string_view candidate);

}  // namespace ethrev::gateway
