// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace codeadv {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

// args[0] is the program name. Subcommands: gen-data, train-bpe, train,
// evaluate, attack, transform, grad-check, report. Human-readable summaries go
// to `out`, diagnostics and usage text to `err`; results go to files.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace codeadv
