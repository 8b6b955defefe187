// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "ethrev/gateway/gateway.hpp"
#include "ethrev/gateway/mock_backend.hpp"

namespace ethrev::testing {

inline std::filesystem::path fixture(std::string_view rel) { return std::filesystem::path(ETHREV_FIXTURES) / rel; }

// Mock gateway with no backoff so fault-injection tests stay fast.
inline std::unique_ptr<gateway::Gateway> mock_gateway(gateway::Playbook playbook, int retry_cap = 3) {
  gateway::GatewayOptions opts;
  opts.retry_cap = retry_cap;
  opts.backoff_base = std::chrono::milliseconds(0);
  return std::make_unique<gateway::Gateway>(std::make_shared<gateway::MockBackend>(std::move(playbook)), opts);
}

inline std::unique_ptr<gateway::Gateway> mock_gateway(std::string_view playbook_fixture) {
  return mock_gateway(gateway::Playbook::load(fixture(playbook_fixture)));
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view name);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& p);

}  // namespace ethrev::testing
