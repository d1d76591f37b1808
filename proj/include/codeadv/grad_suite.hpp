// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "codeadv/grad_check.hpp"

namespace codeadv {

struct GradSuiteEntry {
  std::string name;       // "matmul_lhs", "encoder.layer0.attn.wq", "encoder.delta.scatter", ...
  int bits = 64;          // 64 or 32
  GradCheckResult result;
  double threshold = 0.0;
  // The true gradient is identically zero; result.max_relative_error then
  // holds the largest absolute analytic or numeric entry instead.
  bool zero_gradient = false;
  bool passed() const { return result.max_relative_error < threshold; }
};

struct GradSuiteReport {
  std::vector<GradSuiteEntry> entries;
  double seconds = 0.0;

  bool passed() const;
  // Worst relative error over the entries checked relatively.
  double worst(int bits) const;
  nlohmann::json to_json() const;
};

struct GradSuiteOptions {
  std::uint64_t seed = 1;
  std::size_t primitive_trials = 5;  // random instances per primitive
  double threshold64 = 1e-6;
  double threshold32 = 1e-3;
};

// Every autodiff primitive, then a d=16, L=1 encoder cross-entropy loss with
// respect to each parameter tensor and to tied perturbations fed through
// scatter_rows. Both at 64 bits and at 32 bits (central differences for the
// 32-bit case are evaluated at 64 bits).
GradSuiteReport run_grad_suite(const GradSuiteOptions& options = {});

}  // namespace codeadv
