// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Subcommand driver behind the `trimlp` binary. Exit codes: 0 success,
// 1 runtime failure, 2 usage error. Failures print one line
// "trimlp-error[<kind>]: <message>" to the error stream.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace trimlp {

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace trimlp
