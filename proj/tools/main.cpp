// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "codeadv/cli.hpp"

int main(int argc, char** argv) {
  return codeadv::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
