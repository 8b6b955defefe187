// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "ethrev/gateway/gateway.hpp"

namespace ethrev::gateway {

struct EndpointConfig {
  // e.g. "http://localhost:8000" or "https://api.example.com/v1-prefix"
  std::string base_url;
  std::string model;
  std::string api_key;
  std::string chat_path = "/v1/chat/completions";
  std::string embed_path = "/v1/embeddings";
  std::string rerank_path = "/v1/rerank";
  int timeout_seconds = 120;
};

// Client for OpenAI-compatible inference servers:
//   chat    POST {base}{chat_path}   {model, messages, temperature, max_tokens[, response_format]}
//   embed   POST {base}{embed_path}  {model, input: [...]}        -> data[].embedding
//   rerank  POST {base}{rerank_path} {model, query, documents}    -> results[].{index, relevance_score}
// Network errors, non-2xx statuses and malformed envelopes surface as
// transport errors so the gateway retries them.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(EndpointConfig config);

  std::string chat(const ChatRequest& request) override;
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;
  std::vector<double> rerank(std::string_view query,
                             std::span<const RerankCandidate> candidates) override;
  std::string identity() const override;

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body);

  EndpointConfig config_;
  std::string origin_;
  std::string prefix_;
};

}  // namespace ethrev::gateway
