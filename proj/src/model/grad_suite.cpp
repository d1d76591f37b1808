// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/grad_suite.hpp"

#include <algorithm>
#include <chrono>

#include "codeadv/encoder.hpp"
#include "codeadv/rng.hpp"

namespace codeadv {

namespace {

constexpr double kStep64 = 1e-5;
constexpr double kStep32 = 1e-3;
// The composite checks use Richardson-extrapolated differences: small
// gradient entries (1e-7) need an oracle accurate to ~1e-13 absolute.
constexpr double kStepComposite = 1e-3;
// Absolute bounds for tensors whose gradient is identically zero.
constexpr double kZero64 = 1e-10;
constexpr double kZero32 = 1e-6;

template <class G>
struct ScalarOf;
template <class T>
struct ScalarOf<Graph<T>> {
  using type = T;
};

Tensor<double> uniform(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = lo + (hi - lo) * rng.uniform01();
  return t;
}

// Reduces y to a scalar with fixed weights so every output coordinate counts.
template <class T>
Var weighted_sum(Graph<T>& g, Var y, const Tensor<double>& w) {
  return g.reduce_sum(g.mul(y, g.constant(w.cast<T>())));
}

struct Case {
  std::string name;
  Tensor<double> point;
  // Same closure body for both precisions.
  ScalarFn<double> f64;
  ScalarFn<float> f32;
};

template <class Build>
Case make_case(std::string name, Tensor<double> point, Build build) {
  return {std::move(name), std::move(point), ScalarFn<double>(build), ScalarFn<float>(build)};
}

std::vector<Case> primitive_cases(Rng& rng) {
  std::vector<Case> cases;
  const std::size_t n = 1 + rng.uniform_int(5), m = 2 + rng.uniform_int(5), k = 1 + rng.uniform_int(5);
  const auto other = uniform({m, k}, rng);
  const auto other2 = uniform({n, m}, rng);
  const auto w_nk = uniform({n, k}, rng);
  const auto w_nm = uniform({n, m}, rng);
  const auto w_nm2 = uniform({n, m + 2}, rng);
  const auto w_cat = uniform({n, m + k}, rng);

  cases.push_back(make_case("matmul_lhs", uniform({n, m}, rng), [=](auto& g, Var x) {
    using T = typename ScalarOf<std::decay_t<decltype(g)>>::type;
    return weighted_sum(g, g.matmul(x, g.constant(other.cast<T>())), w_nk);
  }));
  cases.push_back(make_case("matmul_rhs", uniform({m, k}, rng), [=](auto& g, Var x) {
    using T = typename ScalarOf<std::decay_t<decltype(g)>>::type;
    return weighted_sum(g, g.matmul(g.constant(other2.cast<T>()), x), w_nk);
  }));
  cases.push_back(make_case("add", uniform({n, m}, rng), [=](auto& g, Var x) {
    using T = typename ScalarOf<std::decay_t<decltype(g)>>::type;
    return weighted_sum(g, g.add(x, g.constant(other2.cast<T>())), w_nm);
  }));
  cases.push_back(make_case("scale", uniform({n, m}, rng),
                            [=](auto& g, Var x) { return weighted_sum(g, g.scale(x, -1.7), w_nm); }));
  // relu is checked away from its kink.
  auto relu_point = uniform({n, m}, rng, 0.1, 1.0);
  for (auto& v : relu_point.values()) v = rng.bernoulli(0.5) ? -v : v;
  cases.push_back(make_case("relu", relu_point, [=](auto& g, Var x) { return weighted_sum(g, g.relu(x), w_nm); }));
  cases.push_back(make_case("gelu", uniform({n, m}, rng, -3, 3),
                            [=](auto& g, Var x) { return weighted_sum(g, g.gelu(x), w_nm); }));
  cases.push_back(make_case("softmax_lastdim", uniform({n, m}, rng, -2, 2),
                            [=](auto& g, Var x) { return weighted_sum(g, g.softmax_lastdim(x), w_nm); }));
  cases.push_back(make_case("layer_norm_lastdim", uniform({n, m + 2}, rng, -2, 2),
                            [=](auto& g, Var x) { return weighted_sum(g, g.layer_norm_lastdim(x), w_nm2); }));
  std::vector<std::int32_t> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(static_cast<std::int32_t>(rng.uniform_int(m)));
  cases.push_back(make_case("embedding_gather", uniform({m, k}, rng),
                            [=](auto& g, Var x) { return weighted_sum(g, g.embedding_gather(x, ids), w_nk); }));
  cases.push_back(make_case("concat", uniform({n, k}, rng), [=](auto& g, Var x) {
    using T = typename ScalarOf<std::decay_t<decltype(g)>>::type;
    Var parts[] = {g.constant(other2.cast<T>()), x};
    return weighted_sum(g, g.concat(parts), w_cat);
  }));
  const std::size_t label = rng.uniform_int(m);
  cases.push_back(make_case("cross_entropy_with_logits", uniform({1, m}, rng, -3, 3),
                            [=](auto& g, Var x) { return g.cross_entropy_with_logits(x, label); }));
  cases.push_back(make_case("reduce_mean", uniform({n, m}, rng),
                            [=](auto& g, Var x) { return g.reduce_mean(g.mul(x, x)); }));
  return cases;
}

EncoderConfig composite_config() {
  EncoderConfig c;
  c.d = 16;
  c.layers = 1;
  c.heads = 2;
  c.d_ff = 32;
  c.max_len = 8;
  c.vocab = 12;
  c.dropout = 0.0;
  return c;
}

// Loss of the composite encoder with tensor `slot` replaced by the checked
// point; slot == size() means the point is the tied perturbation instead.
template <class T>
ScalarFn<T> encoder_loss(const EncoderParams<T>& params, std::size_t slot, const std::vector<std::int32_t>& ids,
                         const std::vector<Tensor<T>>& parts, const std::vector<std::vector<std::size_t>>& starts,
                         std::size_t label) {
  return [&params, slot, ids, parts, starts, label](Graph<T>& g, Var x) {
    auto bound = bind_params(g, params);
    std::vector<Var> pv;
    if (slot < params.size()) {
      bound.vars[slot] = x;
      for (const auto& p : parts) pv.push_back(g.constant(p));
    } else {
      // The point is both perturbation blocks concatenated by rows.
      std::size_t row = 0;
      for (const auto& p : parts) {
        pv.push_back(g.slice_rows(x, row, p.rows()));
        row += p.rows();
      }
    }
    Var delta = g.scatter_rows(pv, starts, ids.size(), params.config().d);
    return g.cross_entropy_with_logits(forward(g, bound, params, ids, delta), label);
  };
}

// Largest |analytic| and |central difference| over all coordinates, for a
// tensor whose true gradient is zero.
template <class T, class R>
GradCheckResult zero_check(const ScalarFn<T>& f, const ScalarFn<R>& reference, const Tensor<T>& point) {
  Graph<T> g;
  Var x = g.input(point, true);
  const auto analytic = g.backward(f(g, x), std::span<const Var>(&x, 1)).front();
  Tensor<R> probe = point.template cast<R>();
  GradCheckResult r;
  r.coordinates = point.size();
  for (std::size_t i = 0; i < point.size(); ++i) {
    const R x0 = probe[i];
    const R h = static_cast<R>(kStepComposite);
    auto eval = [&](R v) {
      probe[i] = v;
      Graph<R> gr(false);
      return static_cast<double>(gr.value(reference(gr, gr.input(probe, false)))[0]);
    };
    const double numeric = (eval(x0 + h) - eval(x0 - h)) / (2.0 * static_cast<double>(h));
    probe[i] = x0;
    const double worst = std::max(std::abs(static_cast<double>(analytic[i])), std::abs(numeric));
    if (worst >= r.max_relative_error) {
      r.max_relative_error = worst;
      r.worst_index = i;
      r.worst_analytic = static_cast<double>(analytic[i]);
      r.worst_numeric = numeric;
    }
  }
  return r;
}

}  // namespace

bool GradSuiteReport::passed() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed(); });
}

double GradSuiteReport::worst(int bits) const {
  double w = 0.0;
  for (const auto& e : entries) {
    if (e.bits == bits && !e.zero_gradient) w = std::max(w, e.result.max_relative_error);
  }
  return w;
}

nlohmann::json GradSuiteReport::to_json() const {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& e : entries) {
    checks.push_back({{"name", e.name},
                      {"bits", e.bits},
                      {"max_relative_error", e.result.max_relative_error},
                      {"threshold", e.threshold},
                      {"coordinates", e.result.coordinates},
                      {"zero_gradient", e.zero_gradient},
                      {"passed", e.passed()}});
  }
  return {{"passed", passed()}, {"worst_64", worst(64)}, {"worst_32", worst(32)}, {"checks", checks}};
}

GradSuiteReport run_grad_suite(const GradSuiteOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  GradSuiteReport report;
  Rng rng(derive_seed(options.seed, "grad_suite"));

  // Keep the worst trial per primitive and precision.
  std::vector<GradSuiteEntry> prim;
  for (std::size_t trial = 0; trial < options.primitive_trials; ++trial) {
    auto cases = primitive_cases(rng);
    if (prim.empty()) {
      for (const auto& c : cases) {
        prim.push_back({c.name, 64, {}, options.threshold64});
        prim.push_back({c.name, 32, {}, options.threshold32});
      }
    }
    for (std::size_t i = 0; i < cases.size(); ++i) {
      auto r64 = grad_check<double>(cases[i].f64, cases[i].point, kStep64);
      auto r32 = grad_check<float, double>(cases[i].f32, cases[i].f64, cases[i].point.cast<float>(), kStep32);
      if (r64.max_relative_error >= prim[2 * i].result.max_relative_error) prim[2 * i].result = r64;
      if (r32.max_relative_error >= prim[2 * i + 1].result.max_relative_error) prim[2 * i + 1].result = r32;
    }
  }
  report.entries = std::move(prim);

  // Composite encoder. Parameters drawn wider than init so no block is
  // numerically flat.
  const auto cfg = composite_config();
  EncoderParams<double> p64(cfg);
  for (std::size_t i = 0; i < p64.size(); ++i) p64[i] = uniform(p64[i].shape(), rng, -0.5, 0.5);
  const auto p32 = p64.cast<float>();
  const auto p64r = p32.cast<double>();  // exactly the 32-bit point, for the reference
  const std::vector<std::int32_t> ids = {0, 3, 4, 7, 3, 4, 9};
  // Identifier a: two sub-words at positions 1 and 4; identifier b: position 3.
  const std::vector<std::vector<std::size_t>> starts = {{1, 4}, {3}};
  std::vector<Tensor<double>> parts64 = {uniform({2, cfg.d}, rng, -0.3, 0.3), uniform({1, cfg.d}, rng, -0.3, 0.3)};
  std::vector<Tensor<float>> parts32;
  std::vector<Tensor<double>> parts64r;
  for (const auto& t : parts64) {
    parts32.push_back(t.cast<float>());
    parts64r.push_back(parts32.back().cast<double>());
  }
  const std::size_t label = 1;

  for (std::size_t slot = 0; slot <= p64.size(); ++slot) {
    const bool is_delta = slot == p64.size();
    const std::string name = "encoder." + (is_delta ? std::string("delta.scatter") : p64.name(slot));
    Tensor<double> point64;
    if (is_delta) {
      point64 = Tensor<double>({3, cfg.d});
      std::copy(parts64[0].values().begin(), parts64[0].values().end(), point64.values().begin());
      std::copy(parts64[1].values().begin(), parts64[1].values().end(), point64.values().begin() + 2 * cfg.d);
    } else {
      point64 = p64[slot];
    }
    auto f64 = encoder_loss<double>(p64, slot, ids, parts64, starts, label);
    auto f32 = encoder_loss<float>(p32, slot, ids, parts32, starts, label);
    auto ref = encoder_loss<double>(p64r, slot, ids, parts64r, starts, label);
    // A key bias shifts every score in a row equally, which softmax ignores:
    // its gradient is exactly zero and a relative error is undefined.
    if (!is_delta && p64.name(slot).ends_with("attn.bk")) {
      report.entries.push_back({name + " (zero)", 64, zero_check<double, double>(f64, f64, point64), kZero64, true});
      report.entries.push_back(
          {name + " (zero)", 32, zero_check<float, double>(f32, ref, point64.cast<float>()), kZero32, true});
      continue;
    }
    constexpr auto kRich = DifferenceScheme::kRichardson;
    report.entries.push_back(
        {name, 64, grad_check<double>(f64, point64, kStepComposite, kRich), options.threshold64});
    report.entries.push_back({name, 32, grad_check<float, double>(f32, ref, point64.cast<float>(), kStepComposite, kRich),
                              options.threshold32});
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace codeadv
