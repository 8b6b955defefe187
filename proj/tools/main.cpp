// SPDX-License-Identifier: Apache-2.0
#include "ethrev/cli/cli.hpp"

int main(int argc, char** argv) { return ethrev::cli::dispatch(argc, argv); }
