// SPDX-License-Identifier: Apache-2.0
#include "ethrev/common/diagnostics.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

namespace ethrev {

void Diagnostics::warn(std::string message) {
  spdlog::warn("{}", message);
  std::lock_guard lock(mu_);
  warnings_.push_back(std::move(message));
}

std::vector<std::string> Diagnostics::warnings() const {
  std::vector<std::string> out;
  {
    std::lock_guard lock(mu_);
    out = warnings_;
  }
  // Concurrent stages record in completion order; sort for stable artifacts.
  std::sort(out.begin(), out.end());
  return out;
}

bool Diagnostics::empty() const {
  std::lock_guard lock(mu_);
  return warnings_.empty();
}

}  // namespace ethrev
