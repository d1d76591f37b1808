// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "codeadv/autodiff.hpp"

namespace codeadv {

// Builds a scalar loss from the variable bound to the checked point.
template <class T>
using ScalarFn = std::function<Var(Graph<T>&, Var)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
};

enum class DifferenceScheme {
  kCentral,     // (f(x+h) - f(x-h)) / 2h
  kRichardson,  // central differences at h and h/2 combined to cancel the h^2 error
};

// Compares the reverse-mode gradient of f at `point` against central
// differences with per-coordinate step h_i = step * (1 + |x_i|). The error of
// a coordinate is |a - c| / (|a| + |c| + 1e-12); the maximum is reported.
// Throws std::domain_error if f(point) is not finite.
template <class T>
GradCheckResult grad_check(const ScalarFn<T>& f, const Tensor<T>& point, double step,
                           DifferenceScheme scheme = DifferenceScheme::kCentral);

// Same comparison, but the central differences are evaluated through
// `reference` at precision R. Used to check 32-bit gradients against an
// oracle whose own rounding does not dominate the comparison.
template <class T, class R>
GradCheckResult grad_check(const ScalarFn<T>& f, const ScalarFn<R>& reference, const Tensor<T>& point,
                           double step, DifferenceScheme scheme = DifferenceScheme::kCentral);

extern template GradCheckResult grad_check<float>(const ScalarFn<float>&, const Tensor<float>&, double,
                                                  DifferenceScheme);
extern template GradCheckResult grad_check<double>(const ScalarFn<double>&, const Tensor<double>&, double,
                                                   DifferenceScheme);
extern template GradCheckResult grad_check<float, double>(const ScalarFn<float>&, const ScalarFn<double>&,
                                                          const Tensor<float>&, double, DifferenceScheme);

}  // namespace codeadv
