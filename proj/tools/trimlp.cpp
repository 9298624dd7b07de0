// Copyright 2026 The TriMLP Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "trimlp/cli.hpp"

int main(int argc, char** argv) {
  return trimlp::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
