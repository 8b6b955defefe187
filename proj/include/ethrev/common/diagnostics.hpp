// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace ethrev {

// Thread-safe warning sink. Pipelines flag and continue; the collected
// warnings are written into their output artifacts.
class Diagnostics {
 public:
  void warn(std::string message);
  // Sorted, so artifacts do not depend on completion order.
  std::vector<std::string> warnings() const;
  bool empty() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> warnings_;
};

}  // namespace ethrev
