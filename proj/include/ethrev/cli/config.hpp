// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethrev/common/cluster.hpp"
#include "ethrev/gateway/gateway.hpp"

namespace ethrev::cli {

// Bad configuration or flags; maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BackendSpec {
  std::string type = "mock";  // mock | http
  std::filesystem::path playbook;
  std::string base_url;
  std::string model;
  std::string api_key_env;  // name of the environment variable holding the key
  int timeout_seconds = 120;
};

struct Thresholds {
  double cluster_threshold = 0.75;
  cluster::Linkage linkage = cluster::Linkage::average;
  std::size_t retrieve_k = 20;
  std::size_t rerank_k = 5;
  int debate_rounds = 3;
  double temperature = 0.1;
  int retry_cap = 3;
  int concurrency_cap = 8;
  int backoff_ms = 200;
  double min_scenario_confidence = 0.5;
  bool binary_strict = false;
  std::size_t chunk_words = 400;
  std::size_t chunk_overlap = 80;
  std::size_t questions_per_paragraph = 3;
  int cot_max_attempts = 5;
  std::size_t leakage_ngram = 8;
};

struct Seeds {
  std::uint64_t committee_seed = 42;
  std::optional<std::uint64_t> embedding_seed;  // overrides the playbook's seed when set
};

struct RunConfig {
  BackendSpec chat;
  BackendSpec embed;
  BackendSpec rerank;
  Thresholds thresholds;
  Seeds seeds;
  std::vector<std::string> extra_scenarios;
  std::filesystem::path templates;  // committee persona/rubric directory; empty = built-in
  std::filesystem::path exemplars;  // CoT exemplars for forge-corpus; empty = none
};

// Accepts // and /* */ comments. Relative paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Throws UsageError on out-of-range thresholds or unreadable paths. Backend
// specs are checked only when the command needs a gateway.
void validate(const RunConfig& config, bool needs_backends = true);

// "mock:<playbook>" applied to every capability.
void apply_backend_override(RunConfig& config, const std::string& spec);

// One gateway over the configured backends. Capabilities sharing a backend
// spec share one backend instance.
std::unique_ptr<gateway::Gateway> make_gateway(const RunConfig& config);

// Resolved configuration with backend identities in place of paths and
// secrets. Embedded in every artifact. `gw` is null for offline commands.
nlohmann::json provenance_config(const RunConfig& config, const gateway::Gateway* gw);
std::string config_hash(const nlohmann::json& provenance_config);

}  // namespace ethrev::cli
