// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "ethrev/gateway/http_backend.hpp"

#include <httplib.h>

#include <algorithm>

namespace ethrev::gateway {

HttpBackend::HttpBackend(EndpointConfig config) : config_(std::move(config)) {
  const auto& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint base_url needs a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

nlohmann::json HttpBackend::post(const std::string& path, const nlohmann::json& body) {
  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(prefix_ + path, headers, body.dump(), "application/json");
  if (!res) {
    throw GatewayError(ErrorKind::transport,
                       "POST " + origin_ + prefix_ + path + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw GatewayError(ErrorKind::transport, "POST " + origin_ + prefix_ + path + ": HTTP " +
                                                 std::to_string(res->status));
  }
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) {
    throw GatewayError(ErrorKind::transport, "POST " + path + ": response body is not JSON");
  }
  return parsed;
}

std::string HttpBackend::chat(const ChatRequest& request) {
  nlohmann::json body{{"model", config_.model},
                      {"temperature", request.temperature.value_or(0.1)},
                      {"max_tokens", request.max_tokens},
                      {"messages", nlohmann::json::array()}};
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
  }
  if (request.response_schema) body["response_format"] = {{"type", "json_object"}};

  auto res = post(config_.chat_path, body);
  try {
    return res.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw GatewayError(ErrorKind::transport, "chat response lacks choices[0].message.content");
  }
}

std::vector<std::vector<double>> HttpBackend::embed(std::span<const std::string> texts) {
  nlohmann::json body{{"model", config_.model}, {"input", texts}};
  auto res = post(config_.embed_path, body);
  try {
    const auto& data = res.at("data");
    std::vector<std::vector<double>> out(texts.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::size_t idx = data[i].value("index", i);
      if (idx >= out.size()) throw GatewayError(ErrorKind::transport, "embedding index out of range");
      out[idx] = data[i].at("embedding").get<std::vector<double>>();
    }
    return out;
  } catch (const nlohmann::json::exception&) {
    throw GatewayError(ErrorKind::transport, "embedding response lacks data[].embedding");
  }
}

std::vector<double> HttpBackend::rerank(std::string_view query,
                                        std::span<const RerankCandidate> candidates) {
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& c : candidates) docs.push_back(c.text);
  nlohmann::json body{{"model", config_.model}, {"query", query}, {"documents", docs}};
  auto res = post(config_.rerank_path, body);
  try {
    std::vector<double> out(candidates.size(), 0.0);
    std::vector<bool> seen(candidates.size(), false);
    for (const auto& r : res.at("results")) {
      auto idx = r.at("index").get<std::size_t>();
      if (idx >= out.size()) throw GatewayError(ErrorKind::transport, "rerank index out of range");
      out[idx] = r.at("relevance_score").get<double>();
      seen[idx] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw GatewayError(ErrorKind::transport, "rerank response omitted candidates");
    }
    return out;
  } catch (const nlohmann::json::exception&) {
    throw GatewayError(ErrorKind::transport, "rerank response lacks results[].relevance_score");
  }
}

std::string HttpBackend::identity() const {
  return "http:" + origin_ + prefix_ + "#" + config_.model;
}

}  // namespace ethrev::gateway
