// SPDX-License-Identifier: Apache-2.0
#include "ethrev/gateway/mock_backend.hpp"

#include <set>
#include <stdexcept>

#include "ethrev/common/hash.hpp"
#include "ethrev/common/io.hpp"
#include "ethrev/common/text.hpp"

namespace ethrev::gateway {
namespace {

ScriptedReply reply_from_json(const nlohmann::json& v) {
  if (v.is_string()) return {v.get<std::string>()};
  if (v.is_object() && v.contains("$fault")) return {"", true};
  return {v.dump()};
}

}  // namespace

Playbook Playbook::from_json(const nlohmann::json& doc) {
  Playbook pb;
  pb.embedding_seed = doc.value("embedding_seed", std::uint64_t{0});
  pb.embedding_dim = doc.value("embedding_dim", std::size_t{256});
  if (pb.embedding_dim == 0) throw std::invalid_argument("playbook embedding_dim must be positive");
  if (auto it = doc.find("entries"); it != doc.end()) {
    if (!it->is_object()) throw std::invalid_argument("playbook entries must be an object");
    for (const auto& [key, value] : it->items()) {
      std::vector<ScriptedReply> replies;
      if (value.is_array()) {
        for (const auto& el : value) replies.push_back(reply_from_json(el));
      } else {
        replies.push_back(reply_from_json(value));
      }
      if (replies.empty()) throw std::invalid_argument("playbook entry '" + key + "' has no replies");
      pb.entries_[key] = std::move(replies);
    }
  }
  return pb;
}

Playbook Playbook::load(const std::filesystem::path& path) { return from_json(io::read_json(path)); }

void Playbook::set_sequence(std::string matcher, std::vector<ScriptedReply> replies) {
  if (replies.empty()) throw std::invalid_argument("playbook entry needs at least one reply");
  entries_[std::move(matcher)] = std::move(replies);
}

const std::string* Playbook::resolve(std::string_view tag) const {
  if (auto it = entries_.find(tag); it != entries_.end()) return &it->first;
  const std::string* best = nullptr;
  for (const auto& [key, _] : entries_) {
    if (key.empty() || key.back() != '*') continue;
    std::string_view prefix(key.data(), key.size() - 1);
    if (tag.starts_with(prefix) && (!best || key.size() > best->size())) best = &key;
  }
  return best;
}

const std::vector<ScriptedReply>& Playbook::replies(const std::string& matcher) const {
  return entries_.at(matcher);
}

std::string Playbook::digest() const {
  nlohmann::json j;
  j["embedding_seed"] = embedding_seed;
  j["embedding_dim"] = embedding_dim;
  for (const auto& [key, replies] : entries_) {
    auto& arr = j["entries"][key];
    for (const auto& r : replies) arr.push_back(r.transport_fault ? "$fault" : r.text);
  }
  return short_digest(j.dump());
}

MockBackend::MockBackend(Playbook playbook) : playbook_(std::move(playbook)) {}

std::string MockBackend::chat(const ChatRequest& request) {
  const std::string* matcher = playbook_.resolve(request.tag);
  if (!matcher) {
    throw GatewayError(ErrorKind::playbook_miss, "no playbook entry for tag '" + request.tag + "'");
  }
  const auto& replies = playbook_.replies(*matcher);
  ScriptedReply reply;
  {
    // Sequences advance per concrete tag so wildcard entries script each
    // matching call independently.
    std::lock_guard lock(mu_);
    std::size_t& cursor = cursors_[request.tag];
    reply = replies[std::min(cursor, replies.size() - 1)];
    ++cursor;
  }
  if (reply.transport_fault) {
    throw GatewayError(ErrorKind::transport, "scripted transport fault for '" + request.tag + "'");
  }
  return reply.text;
}

std::vector<std::vector<double>> MockBackend::embed(std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(ngram_embedding(t, playbook_.embedding_seed, playbook_.embedding_dim));
  return out;
}

std::vector<double> MockBackend::rerank(std::string_view query,
                                        std::span<const RerankCandidate> candidates) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(lexical_overlap(query, c.text));
  return out;
}

std::string MockBackend::identity() const { return "mock:" + playbook_.digest(); }

std::vector<double> ngram_embedding(std::string_view text, std::uint64_t seed, std::size_t dim) {
  std::string padded = " " + text::collapse_whitespace(text::to_lower(text)) + " ";
  std::vector<double> v(dim, 0.0);
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    auto bucket = fnv1a64(std::string_view(padded).substr(i, 3), seed) % dim;
    v[bucket] += 1.0;
  }
  return v;
}

double lexical_overlap(std::string_view query, std::string_view candidate) {
  auto q = text::content_tokens(query);
  auto c = text::content_tokens(candidate);
  std::set<std::string> qset(q.begin(), q.end());
  std::set<std::string> cset(c.begin(), c.end());
  double shared = 0.0;
  for (const auto& t : qset) {
    if (cset.contains(t)) shared += 1.0;
  }
  return shared;
}

}  // namespace ethrev::gateway
