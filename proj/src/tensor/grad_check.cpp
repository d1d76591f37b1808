// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace codeadv {

namespace {

template <class R>
double evaluate(const ScalarFn<R>& f, const Tensor<R>& x) {
  Graph<R> g(false);
  Var v = g.input(x, false);
  Var loss = f(g, v);
  const auto& out = g.value(loss);
  if (out.size() != 1) throw ShapeError("grad_check: function is not scalar, shape " + shape_string(out.shape()));
  return static_cast<double>(out[0]);
}

// Central difference divided by the realised step, so representation error
// in x0 +- h does not leak in.
template <class R>
double central(const ScalarFn<R>& f, Tensor<R>& probe, std::size_t i, double step) {
  const R x0 = probe[i];
  const R h = static_cast<R>(step * (1.0 + std::abs(static_cast<double>(x0))));
  probe[i] = x0 + h;
  const double up = evaluate(f, probe);
  probe[i] = x0 - h;
  const double down = evaluate(f, probe);
  probe[i] = x0;
  return (up - down) / (static_cast<double>(x0 + h) - static_cast<double>(x0 - h));
}

}  // namespace

template <class T, class R>
GradCheckResult grad_check(const ScalarFn<T>& f, const ScalarFn<R>& reference, const Tensor<T>& point,
                           double step, DifferenceScheme scheme) {
  if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

  Graph<T> g;
  Var x = g.input(point, true);
  Var loss = f(g, x);
  const double f0 = static_cast<double>(g.value(loss)[0]);
  if (!std::isfinite(f0)) throw std::domain_error("grad_check: f(point) is not finite");
  const Tensor<T> analytic = g.backward(loss, std::span<const Var>(&x, 1)).front();

  Tensor<R> probe = point.template cast<R>();
  GradCheckResult result;
  result.coordinates = point.size();
  for (std::size_t i = 0; i < point.size(); ++i) {
    double numeric = central(reference, probe, i, step);
    if (scheme == DifferenceScheme::kRichardson) {
      // Cancels the h^2 term of the central difference.
      numeric = (4.0 * central(reference, probe, i, step / 2) - numeric) / 3.0;
    }
    const double a = static_cast<double>(analytic[i]);
    const double err = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
    if (i == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

template <class T>
GradCheckResult grad_check(const ScalarFn<T>& f, const Tensor<T>& point, double step, DifferenceScheme scheme) {
  return grad_check<T, T>(f, f, point, step, scheme);
}

template GradCheckResult grad_check<float>(const ScalarFn<float>&, const Tensor<float>&, double, DifferenceScheme);
template GradCheckResult grad_check<double>(const ScalarFn<double>&, const Tensor<double>&, double,
                                            DifferenceScheme);
template GradCheckResult grad_check<float, double>(const ScalarFn<float>&, const ScalarFn<double>&,
                                                   const Tensor<float>&, double, DifferenceScheme);

}  // namespace codeadv
