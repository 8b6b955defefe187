// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ethrev/common/embedding.hpp"
#include "ethrev/gateway/types.hpp"

namespace ethrev::gateway {

// One model provider. Implementations may support only some capabilities;
// the gateway routes each capability to its configured backend.
class Backend {
 public:
  virtual ~Backend() = default;

  // `request.temperature` is always set when the gateway calls this.
  virtual std::string chat(const ChatRequest& request) = 0;
  // Raw (not necessarily normalized) vectors, one per text, same order.
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
  // One relevance score per candidate, same order as the input.
  virtual std::vector<double> rerank(std::string_view query,
                                     std::span<const RerankCandidate> candidates) = 0;
  // Stable description used in provenance hashes (no secrets).
  virtual std::string identity() const = 0;
};

struct GatewayOptions {
  int retry_cap = 3;
  std::chrono::milliseconds backoff_base{200};
  int concurrency_cap = 8;
  double default_temperature = 0.1;
};

struct GatewayMetrics {
  std::size_t chat_calls = 0;
  std::size_t embed_calls = 0;
  std::size_t rerank_calls = 0;
  std::size_t retries = 0;
  std::size_t failures = 0;
};

// A chat request as the backend received it, kept when recording is on.
struct RecordedCall {
  ChatRequest request;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> chat_backend, std::shared_ptr<Backend> embed_backend,
          std::shared_ptr<Backend> rerank_backend, GatewayOptions options = {});
  explicit Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Returns the reply text. With a response schema the reply is guaranteed to
  // parse and validate; otherwise a schema_violation error is thrown once the
  // retry cap is exhausted.
  std::string chat(const ChatRequest& request);

  // chat() for schema-bearing requests, returning the parsed object.
  nlohmann::json chat_json(const ChatRequest& request);

  // Unit vectors, one per input, order preserved. Blank input is rejected.
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts);

  // Scores sorted by score descending, ties by candidate id ascending.
  std::vector<RerankScore> rerank(std::string_view query,
                                  std::span<const RerankCandidate> candidates);

  void set_recording(bool on);
  std::vector<RecordedCall> recorded() const;

  GatewayMetrics metrics() const;
  const GatewayOptions& options() const { return options_; }
  std::string identity() const;

 private:
  template <class Fn>
  auto with_retries(std::string_view what, Fn&& fn);
  void backoff(int attempt) const;

  std::shared_ptr<Backend> chat_;
  std::shared_ptr<Backend> embed_;
  std::shared_ptr<Backend> rerank_;
  GatewayOptions options_;
  std::counting_semaphore<1 << 20> inflight_;

  mutable std::mutex record_mu_;
  std::atomic<bool> recording_{false};
  std::vector<RecordedCall> recorded_;

  std::atomic<std::size_t> chat_calls_{0};
  std::atomic<std::size_t> embed_calls_{0};
  std::atomic<std::size_t> rerank_calls_{0};
  std::atomic<std::size_t> retries_{0};
  std::atomic<std::size_t> failures_{0};
};

}  // namespace ethrev::gateway
