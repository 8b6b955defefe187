// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace ethrev::cli {

enum ExitStatus { kOk = 0, kPipelineError = 1, kUsageError = 2 };

// forge-corpus | forge-rules build|update | graph build|patch|stats |
// review er|cr | eval er|qa
int dispatch(int argc, char** argv);
// argv[0] is the program name.
int dispatch(const std::vector<std::string>& argv);

}  // namespace ethrev::cli
