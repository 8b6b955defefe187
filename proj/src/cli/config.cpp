// SPDX-License-Identifier: Apache-2.0
#include "ethrev/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>

#include "ethrev/common/hash.hpp"
#include "ethrev/common/io.hpp"
#include "ethrev/gateway/http_backend.hpp"
#include "ethrev/gateway/mock_backend.hpp"

namespace ethrev::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw UsageError("unknown key '" + k + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("bad value for ") + where + "." + key);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

BackendSpec parse_backend(const json& j, const fs::path& base, const std::string& where) {
  reject_unknown(j, {"type", "playbook", "base_url", "model", "api_key_env", "timeout_seconds"}, where);
  BackendSpec b;
  read(j, "type", b.type, where);
  std::string playbook;
  read(j, "playbook", playbook, where);
  b.playbook = resolve(base, playbook);
  read(j, "base_url", b.base_url, where);
  read(j, "model", b.model, where);
  read(j, "api_key_env", b.api_key_env, where);
  read(j, "timeout_seconds", b.timeout_seconds, where);
  return b;
}

std::string to_string(cluster::Linkage l) {
  switch (l) {
    case cluster::Linkage::average: return "average";
    case cluster::Linkage::single: return "single";
    case cluster::Linkage::complete: return "complete";
  }
  return "average";
}

void validate_backend(const BackendSpec& b, const std::string& cap) {
  if (b.type == "mock") {
    if (b.playbook.empty()) throw UsageError(cap + " backend: mock requires a playbook");
    std::ifstream in(b.playbook);
    if (!in) throw UsageError(cap + " backend: playbook not readable: " + b.playbook.string());
  } else if (b.type == "http") {
    if (b.base_url.empty()) throw UsageError(cap + " backend: http requires base_url");
    if (b.timeout_seconds <= 0) throw UsageError(cap + " backend: timeout_seconds must be positive");
    if (!b.api_key_env.empty() && !std::getenv(b.api_key_env.c_str())) {
      throw UsageError(cap + " backend: environment variable " + b.api_key_env + " is not set");
    }
  } else {
    throw UsageError(cap + " backend: unknown type '" + b.type + "'");
  }
}

std::string backend_key(const BackendSpec& b) {
  return b.type + "|" + b.playbook.string() + "|" + b.base_url + "|" + b.model + "|" + b.api_key_env + "|" +
         std::to_string(b.timeout_seconds);
}

}  // namespace

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  reject_unknown(j, {"backends", "thresholds", "seeds", "scenarios", "paths"}, "config");
  RunConfig c;
  if (j.contains("backends")) {
    const auto& b = j.at("backends");
    reject_unknown(b, {"default", "chat", "embed", "rerank"}, "backends");
    BackendSpec def;
    if (b.contains("default")) def = parse_backend(b.at("default"), base_dir, "backends.default");
    c.chat = b.contains("chat") ? parse_backend(b.at("chat"), base_dir, "backends.chat") : def;
    c.embed = b.contains("embed") ? parse_backend(b.at("embed"), base_dir, "backends.embed") : def;
    c.rerank = b.contains("rerank") ? parse_backend(b.at("rerank"), base_dir, "backends.rerank") : def;
  }
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    const std::string w = "thresholds";
    reject_unknown(t,
                   {"cluster_threshold", "linkage", "retrieve_k", "rerank_k", "debate_rounds", "temperature",
                    "retry_cap", "concurrency_cap", "backoff_ms", "min_scenario_confidence", "binary_strict",
                    "chunk_words", "chunk_overlap", "questions_per_paragraph", "cot_max_attempts", "leakage_ngram"},
                   w);
    auto& th = c.thresholds;
    read(t, "cluster_threshold", th.cluster_threshold, w);
    if (t.contains("linkage")) {
      try {
        th.linkage = cluster::parse_linkage(t.at("linkage").get<std::string>());
      } catch (const std::exception&) {
        throw UsageError("bad value for thresholds.linkage");
      }
    }
    read(t, "retrieve_k", th.retrieve_k, w);
    read(t, "rerank_k", th.rerank_k, w);
    read(t, "debate_rounds", th.debate_rounds, w);
    read(t, "temperature", th.temperature, w);
    read(t, "retry_cap", th.retry_cap, w);
    read(t, "concurrency_cap", th.concurrency_cap, w);
    read(t, "backoff_ms", th.backoff_ms, w);
    read(t, "min_scenario_confidence", th.min_scenario_confidence, w);
    read(t, "binary_strict", th.binary_strict, w);
    read(t, "chunk_words", th.chunk_words, w);
    read(t, "chunk_overlap", th.chunk_overlap, w);
    read(t, "questions_per_paragraph", th.questions_per_paragraph, w);
    read(t, "cot_max_attempts", th.cot_max_attempts, w);
    read(t, "leakage_ngram", th.leakage_ngram, w);
  }
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    reject_unknown(s, {"committee_seed", "embedding_seed"}, "seeds");
    read(s, "committee_seed", c.seeds.committee_seed, "seeds");
    if (s.contains("embedding_seed")) {
      std::uint64_t seed = 0;
      read(s, "embedding_seed", seed, "seeds");
      c.seeds.embedding_seed = seed;
    }
  }
  read(j, "scenarios", c.extra_scenarios, "config");
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    reject_unknown(p, {"templates", "exemplars"}, "paths");
    std::string templates, exemplars;
    read(p, "templates", templates, "paths");
    read(p, "exemplars", exemplars, "paths");
    c.templates = resolve(base_dir, templates);
    c.exemplars = resolve(base_dir, exemplars);
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const io::IoError& e) {
    throw UsageError(std::string("config not readable: ") + e.what());
  }
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

void validate(const RunConfig& c, bool needs_backends) {
  if (needs_backends) {
    validate_backend(c.chat, "chat");
    validate_backend(c.embed, "embed");
    validate_backend(c.rerank, "rerank");
  }
  const auto& t = c.thresholds;
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("threshold out of range: " + what);
  };
  need(t.cluster_threshold > 0.0 && t.cluster_threshold <= 1.0, "cluster_threshold must be in (0, 1]");
  need(t.retrieve_k >= 1, "retrieve_k must be >= 1");
  need(t.rerank_k >= 1 && t.rerank_k <= t.retrieve_k, "rerank_k must be in [1, retrieve_k]");
  need(t.debate_rounds >= 1 && t.debate_rounds <= 20, "debate_rounds must be in [1, 20]");
  need(t.temperature >= 0.0 && t.temperature <= 2.0, "temperature must be in [0, 2]");
  need(t.retry_cap >= 1, "retry_cap must be >= 1");
  need(t.concurrency_cap >= 1, "concurrency_cap must be >= 1");
  need(t.backoff_ms >= 0, "backoff_ms must be >= 0");
  need(t.min_scenario_confidence >= 0.0 && t.min_scenario_confidence <= 1.0,
       "min_scenario_confidence must be in [0, 1]");
  need(t.chunk_words >= 1 && t.chunk_overlap < t.chunk_words, "chunk_overlap must be below chunk_words");
  need(t.questions_per_paragraph >= 1, "questions_per_paragraph must be >= 1");
  need(t.cot_max_attempts >= 1, "cot_max_attempts must be >= 1");
  need(t.leakage_ngram >= 1, "leakage_ngram must be >= 1");
  for (const auto& p : {c.templates, c.exemplars}) {
    if (!p.empty() && !fs::exists(p)) throw UsageError("path not readable: " + p.string());
  }
}

void apply_backend_override(RunConfig& config, const std::string& spec) {
  const std::string prefix = "mock:";
  if (spec.rfind(prefix, 0) != 0 || spec.size() == prefix.size()) {
    throw UsageError("--backend expects mock:<playbook.json>, got '" + spec + "'");
  }
  BackendSpec b;
  b.type = "mock";
  b.playbook = spec.substr(prefix.size());
  config.chat = config.embed = config.rerank = b;
}

std::unique_ptr<gateway::Gateway> make_gateway(const RunConfig& c) {
  std::map<std::string, std::shared_ptr<gateway::Backend>> built;
  auto backend = [&](const BackendSpec& b) {
    auto key = backend_key(b);
    if (auto it = built.find(key); it != built.end()) return it->second;
    std::shared_ptr<gateway::Backend> out;
    if (b.type == "mock") {
      auto playbook = gateway::Playbook::load(b.playbook);
      if (c.seeds.embedding_seed) playbook.embedding_seed = *c.seeds.embedding_seed;
      out = std::make_shared<gateway::MockBackend>(std::move(playbook));
    } else {
      gateway::EndpointConfig ep;
      ep.base_url = b.base_url;
      ep.model = b.model;
      if (!b.api_key_env.empty()) ep.api_key = std::getenv(b.api_key_env.c_str());
      ep.timeout_seconds = b.timeout_seconds;
      out = std::make_shared<gateway::HttpBackend>(std::move(ep));
    }
    built.emplace(key, out);
    return out;
  };
  gateway::GatewayOptions opts;
  opts.retry_cap = c.thresholds.retry_cap;
  opts.backoff_base = std::chrono::milliseconds(c.thresholds.backoff_ms);
  opts.concurrency_cap = c.thresholds.concurrency_cap;
  opts.default_temperature = c.thresholds.temperature;
  return std::make_unique<gateway::Gateway>(backend(c.chat), backend(c.embed), backend(c.rerank), opts);
}

json provenance_config(const RunConfig& c, const gateway::Gateway* gw) {
  const auto& t = c.thresholds;
  json j;
  j["backends"] = gw ? json(gw->identity()) : json();
  j["thresholds"] = {{"cluster_threshold", t.cluster_threshold},
                     {"linkage", to_string(t.linkage)},
                     {"retrieve_k", t.retrieve_k},
                     {"rerank_k", t.rerank_k},
                     {"debate_rounds", t.debate_rounds},
                     {"temperature", t.temperature},
                     {"retry_cap", t.retry_cap},
                     {"concurrency_cap", t.concurrency_cap},
                     {"min_scenario_confidence", t.min_scenario_confidence},
                     {"binary_strict", t.binary_strict},
                     {"chunk_words", t.chunk_words},
                     {"chunk_overlap", t.chunk_overlap},
                     {"questions_per_paragraph", t.questions_per_paragraph},
                     {"cot_max_attempts", t.cot_max_attempts},
                     {"leakage_ngram", t.leakage_ngram}};
  j["seeds"] = {{"committee_seed", c.seeds.committee_seed},
                {"embedding_seed", c.seeds.embedding_seed ? json(*c.seeds.embedding_seed) : json()}};
  j["scenarios"] = c.extra_scenarios;
  return j;
}

std::string config_hash(const json& provenance_config) { return short_digest(provenance_config.dump()); }

}  // namespace ethrev::cli
