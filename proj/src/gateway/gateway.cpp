// SPDX-License-Identifier: Apache-2.0
#include "ethrev/gateway/gateway.hpp"

#include <algorithm>
#include <optional>
#include <thread>

#include <spdlog/spdlog.h>

#include "ethrev/common/text.hpp"

namespace ethrev::gateway {
namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1 << 20>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1 << 20>& sem_;
};

void validate(const ChatRequest& req) {
  if (req.messages.empty()) throw GatewayError(ErrorKind::invalid_request, "chat request has no messages");
  if (req.messages.front().role == Role::assistant) {
    throw GatewayError(ErrorKind::invalid_request, "first chat message must be system or user");
  }
  if (req.temperature && (*req.temperature < 0.0 || *req.temperature > 2.0)) {
    throw GatewayError(ErrorKind::invalid_request, "temperature outside [0, 2]");
  }
  if (req.max_tokens <= 0) throw GatewayError(ErrorKind::invalid_request, "max_tokens must be positive");
}

}  // namespace

Gateway::Gateway(std::shared_ptr<Backend> chat_backend, std::shared_ptr<Backend> embed_backend,
                 std::shared_ptr<Backend> rerank_backend, GatewayOptions options)
    : chat_(std::move(chat_backend)),
      embed_(std::move(embed_backend)),
      rerank_(std::move(rerank_backend)),
      options_(options),
      inflight_(std::max(1, options.concurrency_cap)) {
  if (!chat_ || !embed_ || !rerank_) throw std::invalid_argument("gateway needs a backend per capability");
  if (options_.retry_cap < 1) throw std::invalid_argument("retry cap must be >= 1");
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : Gateway(backend, backend, backend, options) {}

void Gateway::backoff(int attempt) const {
  if (options_.backoff_base.count() <= 0) return;
  std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
}

template <class Fn>
auto Gateway::with_retries(std::string_view what, Fn&& fn) {
  std::optional<GatewayError> last;
  for (int attempt = 1; attempt <= options_.retry_cap; ++attempt) {
    if (attempt > 1) {
      ++retries_;
      backoff(attempt - 1);
    }
    try {
      SlotGuard slot(inflight_);
      return fn();
    } catch (const GatewayError& e) {
      if (e.kind() != ErrorKind::transport) {
        ++failures_;
        throw;
      }
      spdlog::debug("{}: transport failure on attempt {}: {}", what, attempt, e.what());
      last = e;
    }
  }
  ++failures_;
  throw GatewayError(ErrorKind::transport, std::string(what) + ": " + last->what());
}

std::string Gateway::chat(const ChatRequest& request) {
  validate(request);
  ChatRequest resolved = request;
  resolved.temperature = request.temperature.value_or(options_.default_temperature);
  if (resolved.response_schema) {
    auto& last = resolved.messages.back();
    last.text += "\n\n" + resolved.response_schema->describe();
  }
  ++chat_calls_;

  std::string last_violation;
  for (int attempt = 1; attempt <= options_.retry_cap; ++attempt) {
    if (attempt > 1) {
      ++retries_;
      backoff(attempt - 1);
    }
    if (recording_) {
      std::lock_guard lock(record_mu_);
      recorded_.push_back({resolved});
    }
    std::string reply;
    try {
      SlotGuard slot(inflight_);
      reply = chat_->chat(resolved);
    } catch (const GatewayError& e) {
      if (e.kind() != ErrorKind::transport) {
        ++failures_;
        throw;
      }
      spdlog::debug("chat {}: transport failure on attempt {}: {}", request.tag, attempt, e.what());
      if (attempt == options_.retry_cap) {
        ++failures_;
        throw GatewayError(ErrorKind::transport, "chat " + request.tag + ": " + e.what());
      }
      continue;
    }
    if (!resolved.response_schema) return reply;

    auto parsed = parse_json_reply(reply);
    if (!parsed) {
      last_violation = "reply is not a JSON object";
    } else if (auto v = resolved.response_schema->violation(*parsed)) {
      last_violation = *v;
    } else {
      return reply;
    }
    spdlog::debug("chat {}: schema violation on attempt {}: {}", request.tag, attempt, last_violation);
  }
  ++failures_;
  throw GatewayError(ErrorKind::schema_violation,
                     "chat " + request.tag + ": " + last_violation + " after " +
                         std::to_string(options_.retry_cap) + " attempts");
}

nlohmann::json Gateway::chat_json(const ChatRequest& request) {
  if (!request.response_schema) {
    throw GatewayError(ErrorKind::invalid_request, "chat_json requires a response schema");
  }
  return *parse_json_reply(chat(request));
}

std::vector<EmbeddingVector> Gateway::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw GatewayError(ErrorKind::invalid_request, "embed called with no texts");
  for (const auto& t : texts) {
    if (text::is_blank(t)) throw GatewayError(ErrorKind::invalid_request, "embed called with blank text");
  }
  ++embed_calls_;
  auto raw = with_retries("embed", [&] { return embed_->embed(texts); });
  if (raw.size() != texts.size()) {
    throw GatewayError(ErrorKind::transport, "embedding backend returned wrong number of vectors");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(raw.size());
  for (auto& r : raw) {
    EmbeddingVector v{std::move(r)};
    if (!out.empty() && v.dim() != out.front().dim()) {
      throw GatewayError(ErrorKind::transport, "embedding backend returned mixed dimensions");
    }
    normalize(v);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<RerankScore> Gateway::rerank(std::string_view query,
                                         std::span<const RerankCandidate> candidates) {
  if (candidates.empty()) throw GatewayError(ErrorKind::invalid_request, "rerank called with no candidates");
  ++rerank_calls_;
  auto scores = with_retries("rerank", [&] { return rerank_->rerank(query, candidates); });
  if (scores.size() != candidates.size()) {
    throw GatewayError(ErrorKind::transport, "rerank backend returned wrong number of scores");
  }
  std::vector<RerankScore> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({candidates[i].id, scores[i]});
  std::sort(out.begin(), out.end(), [](const RerankScore& a, const RerankScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.candidate_id < b.candidate_id;
  });
  return out;
}

void Gateway::set_recording(bool on) { recording_ = on; }

std::vector<RecordedCall> Gateway::recorded() const {
  std::lock_guard lock(record_mu_);
  return recorded_;
}

GatewayMetrics Gateway::metrics() const {
  return {chat_calls_.load(), embed_calls_.load(), rerank_calls_.load(), retries_.load(),
          failures_.load()};
}

std::string Gateway::identity() const {
  return "chat=" + chat_->identity() + ";embed=" + embed_->identity() +
         ";rerank=" + rerank_->identity();
}

}  // namespace ethrev::gateway
