// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "codeadv/corpus/generator.hpp"
#include "codeadv/trainer.hpp"
#include "test_util.hpp"

using namespace codeadv;
using codeadv::testing::random_tensor;

namespace {

struct Fixture {
  Tokenizer tokenizer;
  std::vector<TrainExample> examples;
  EncoderConfig encoder;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    corpus::GenConfig gc;
    gc.max_motifs = 1;
    auto samples = corpus::generate_corpus(77, 120, gc);
    std::vector<std::string> texts;
    for (const auto& s : samples) texts.push_back(s.program.source());
    auto profile = frontend::LanguageProfile::minilang();
    Tokenizer tok(frontend::train_bpe(texts, 150, profile), profile, 96);
    std::vector<TrainExample> ex;
    for (const auto& s : samples) ex.push_back(make_example(tok, s.id, s.program.source(), s.label));
    EncoderConfig ec;
    ec.d = 16;
    ec.layers = 1;
    ec.heads = 2;
    ec.d_ff = 32;
    ec.max_len = 96;
    ec.vocab = tok.vocab_size();
    return Fixture{std::move(tok), std::move(ex), ec};
  }();
  return f;
}

Batch first_batch(std::size_t n, std::size_t offset = 0) {
  Batch b;
  for (std::size_t i = 0; i < n; ++i) b.push_back(&fixture().examples[offset + i]);
  return b;
}

TrainConfig config(TrainMode mode, double eps, std::size_t k) {
  TrainConfig c;
  c.mode = mode;
  c.epsilon = eps;
  c.steps = k;
  c.eta = 1e-2;
  return c;
}

template <class T>
double max_relative_error(const std::vector<Tensor<T>>& a, const std::vector<Tensor<T>>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].size(); ++k) {
      num = std::max(num, std::abs(double(a[i][k]) - double(b[i][k])));
      den = std::max(den, std::abs(double(b[i][k])));
    }
  return num / std::max(den, 1e-300);
}

frontend::IdentifierMap two_identifiers() {
  frontend::IdentifierMap m;
  m.entries.push_back({"add", {5, 6}, {1}});
  m.entries.push_back({"x", {7}, {4}});
  return m;
}

}  // namespace

TEST_CASE("scatter places rows at occurrences and zeros elsewhere") {
  const std::size_t d = 3;
  std::vector<Tensor<double>> parts{Tensor<double>({2, d}, {1, 2, 3, 4, 5, 6}), Tensor<double>({1, d}, {7, 8, 9})};
  auto delta = scatter(parts, two_identifiers(), 6, d);
  CHECK(delta.shape() == Shape{6, d});
  for (std::size_t j = 0; j < d; ++j) {
    CHECK(delta.at(1, j) == parts[0].at(0, j));
    CHECK(delta.at(2, j) == parts[0].at(1, j));
    CHECK(delta.at(4, j) == parts[1].at(0, j));
    CHECK(delta.at(0, j) == 0.0);
    CHECK(delta.at(3, j) == 0.0);
    CHECK(delta.at(5, j) == 0.0);
  }
  auto empty = scatter<double>({}, frontend::IdentifierMap{}, 4, d);
  for (double v : empty.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(scatter<double>({parts[0]}, two_identifiers(), 6, d), std::invalid_argument);
  CHECK_THROWS_AS(scatter(parts, two_identifiers(), 4, d), ShapeError);
}

TEST_CASE("scatter gradient sums occurrences (finite-difference oracle)") {
  frontend::IdentifierMap m;
  m.entries.push_back({"v", {1, 2}, {0, 3}});
  std::mt19937_64 rng(5);
  const auto part = random_tensor<double>({2, 3}, rng);
  const auto weights = random_tensor<double>({6, 3}, rng);
  auto loss_of = [&](const Tensor<double>& p) {
    auto delta = scatter<double>({p}, m, 6, 3);
    double s = 0;
    for (std::size_t k = 0; k < delta.size(); ++k) s += delta[k] * weights[k];
    return s;
  };
  Graph<double> g;
  Var pv = g.input(part);
  Var parts[] = {pv};
  Var out = g.scatter_rows(parts, m.placements(), 6, 3);
  auto grads = g.backward(g.reduce_sum(g.mul(out, g.constant(weights))), std::span<const Var>(&pv, 1));
  for (std::size_t k = 0; k < part.size(); ++k) {
    auto hi = part, lo = part;
    hi[k] += 1e-6;
    lo[k] -= 1e-6;
    const double fd = (loss_of(hi) - loss_of(lo)) / 2e-6;
    CHECK(grads[0][k] == doctest::Approx(fd).epsilon(1e-6));
    // Linear map: the gradient is the sum of the two weight rows.
    CHECK(grads[0][k] == doctest::Approx(weights[k] + weights[k + 9]));
  }
}

TEST_CASE("project examples") {
  auto p = project(Tensor<double>({1, 2}, {3, 4}), 1.0);
  CHECK(p[0] == doctest::Approx(0.6));
  CHECK(p[1] == doctest::Approx(0.8));
  Tensor<double> inside({1, 2}, {0.1, 0});
  CHECK(project(inside, 1.0) == inside);
  const auto collapsed = project(Tensor<double>({2, 2}, {1, -2, 3, 4}), 0.0);
  for (double v : collapsed.values()) CHECK(v == 0.0);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    auto x = random_tensor<float>({3, 5}, rng, -4, 4);
    const double eps = 0.1 + double(t % 7) * 0.5;
    auto once = project(x, eps);
    CHECK(frobenius_norm(once) <= eps);
    CHECK(project(once, eps) == once);
  }
}

TEST_CASE("ascent_step examples") {
  auto a = ascent_step(Tensor<double>({1, 2}), Tensor<double>({1, 2}, {2, 0}), 0.1, 1.0);
  CHECK(a[0] == doctest::Approx(0.1));
  CHECK(a[1] == 0.0);
  auto b = ascent_step(Tensor<double>({1, 2}, {0.95, 0}), Tensor<double>({1, 2}, {1, 0}), 0.1, 1.0);
  CHECK(b[0] == doctest::Approx(1.0));
  Tensor<double> start({1, 2}, {0.3, -0.2});
  CHECK(ascent_step(start, Tensor<double>({1, 2}), 0.1, 1.0) == start);
  CHECK(ascent_step(start, Tensor<double>({1, 2}, {1e-14, 0}), 0.1, 1.0) == start);
  CHECK_THROWS_AS(ascent_step(start, Tensor<double>({2, 1}), 0.1, 1.0), ShapeError);
}

TEST_CASE("config validation and json") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.steps = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.epsilon = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.mode = TrainMode::kSpace;
  c.eta = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.mode = TrainMode::kRandSpace;
  CHECK_NOTHROW(c.validate());
  c = config(TrainMode::kAdv, 0.5, 2);
  auto back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(TrainConfig::from_json({{"mode", "space"}}), std::invalid_argument);
  CHECK_THROWS_AS(TrainConfig::from_json({{"mode", "baseline"}, {"typo", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(parse_train_mode("freelb"), std::invalid_argument);
  for (auto m : {TrainMode::kBaseline, TrainMode::kAdv, TrainMode::kSpace, TrainMode::kRandAdv,
                 TrainMode::kRandSpace, TrainMode::kAugment}) {
    CHECK(parse_train_mode(mode_name(m)) == m);
  }
}

TEST_CASE("epsilon zero reduces every perturbing mode to the clean gradient") {
  const auto& f = fixture();
  auto params = init_params<double>(f.encoder, 3);
  auto batch = first_batch(6);
  BatchContext ctx{11};
  auto clean = clean_minibatch(params, batch, config(TrainMode::kBaseline, 0, 1), ctx);
  for (auto mode : {TrainMode::kSpace, TrainMode::kAdv, TrainMode::kRandSpace, TrainMode::kRandAdv}) {
    CAPTURE(mode_name(mode));
    auto g = minibatch_gradient(params, batch, config(mode, 0.0, 3), ctx);
    CHECK(max_relative_error(g.grads, clean.grads) < 1e-6);
    CHECK(g.loss == doctest::Approx(clean.loss).epsilon(1e-9));
  }
}

TEST_CASE("one step from zero gives exactly the clean gradient") {
  const auto& f = fixture();
  auto params = init_params<float>(f.encoder, 4);
  auto batch = first_batch(5);
  BatchContext ctx{2};
  auto clean = clean_minibatch(params, batch, config(TrainMode::kBaseline, 1, 1), ctx);
  for (auto mode : {TrainMode::kSpace, TrainMode::kAdv}) {
    auto g = minibatch_gradient(params, batch, config(mode, 1.0, 1), ctx);
    CHECK(g.grads == clean.grads);
    CHECK(g.loss == clean.loss);
  }
}

TEST_CASE("accumulated gradient is the mean of the per-step gradients") {
  const auto& f = fixture();
  auto params = init_params<double>(f.encoder, 5);
  auto batch = first_batch(3);
  MinibatchTrace<double> trace;
  trace.record_param_grads = true;
  auto g = space_minibatch(params, batch, config(TrainMode::kSpace, 1.0, 3), BatchContext{8}, &trace);
  REQUIRE(trace.passes.size() == 9);
  std::vector<Tensor<double>> mean;
  for (std::size_t i = 0; i < params.size(); ++i) mean.emplace_back(params[i].shape());
  for (const auto& p : trace.passes)
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t k = 0; k < mean[i].size(); ++k) mean[i][k] += p.param_grads[i][k] / 9.0;
  CHECK(max_relative_error(g.grads, mean) < 1e-12);
  // The steps are not all the same pass: the perturbation moved.
  CHECK(trace.passes[0].loss != trace.passes[2].loss);
}

TEST_CASE("tying, keyword rows and ball constraint hold through ascent") {
  const auto& f = fixture();
  auto params = init_params<float>(f.encoder, 6);
  for (auto mode : {TrainMode::kSpace, TrainMode::kRandSpace, TrainMode::kAdv, TrainMode::kRandAdv}) {
    CAPTURE(mode_name(mode));
    auto cfg = config(mode, 0.3, 4);
    cfg.eta = 0.2;  // large enough that the ball is hit
    MinibatchTrace<float> trace;
    minibatch_gradient(params, first_batch(8, 10), cfg, BatchContext{21}, &trace);
    const bool tied = mode == TrainMode::kSpace || mode == TrainMode::kRandSpace;
    bool saw_boundary = false;
    for (const auto& p : trace.passes) {
      const auto& ex = *first_batch(8, 10)[p.sample];
      const auto covered = ex.map.covered_positions(ex.ids.size());
      for (const auto& part : p.updated.empty() ? p.perturbation : p.updated) {
        CHECK(frobenius_norm(part) <= cfg.epsilon + 1e-6);
        saw_boundary |= frobenius_norm(part) > cfg.epsilon - 1e-4;
      }
      if (p.scattered.empty()) {
        CHECK(ex.map.empty());
        continue;
      }
      if (!tied) continue;
      for (std::size_t r = 0; r < ex.ids.size(); ++r) {
        if (covered[r]) continue;
        for (float v : p.scattered.row(r)) CHECK(v == 0.0f);
      }
      for (const auto& e : ex.map.entries)
        for (std::size_t o = 1; o < e.occurrences.size(); ++o)
          for (std::size_t r = 0; r < e.length(); ++r) {
            auto a = p.scattered.row(e.occurrences[0] + r);
            auto b = p.scattered.row(e.occurrences[o] + r);
            CHECK(std::equal(a.begin(), a.end(), b.begin()));
          }
      CHECK(scatter(p.perturbation, ex.map, ex.ids.size(), f.encoder.d) == p.scattered);
    }
    CHECK(saw_boundary);
  }
}

TEST_CASE("no mode perturbs the sentinel position") {
  const auto& f = fixture();
  auto params = init_params<float>(f.encoder, 6);
  for (auto mode : {TrainMode::kSpace, TrainMode::kRandSpace, TrainMode::kAdv, TrainMode::kRandAdv}) {
    CAPTURE(mode_name(mode));
    MinibatchTrace<float> trace;
    minibatch_gradient(params, first_batch(6), config(mode, 0.5, 2), BatchContext{4}, &trace);
    for (const auto& p : trace.passes) {
      if (p.scattered.empty()) continue;
      for (float v : p.scattered.row(0)) REQUIRE(v == 0.0f);
    }
  }
}

TEST_CASE("program without identifiers: space is clean, adv is not") {
  const auto& f = fixture();
  auto params = init_params<double>(f.encoder, 7);
  // Keywords and literals only; every real function has at least its name.
  TrainExample bare = make_example(f.tokenizer, "bare", "return 1 + 2 ;", 1);
  REQUIRE(bare.map.empty());
  Batch b{&bare};
  BatchContext ctx{4};
  auto clean = clean_minibatch(params, b, config(TrainMode::kBaseline, 1, 1), ctx);
  auto cfg = config(TrainMode::kSpace, 1.0, 3);
  CHECK(max_relative_error(space_minibatch(params, b, cfg, ctx).grads, clean.grads) < 1e-12);
  cfg.mode = TrainMode::kAdv;
  CHECK(max_relative_error(adv_minibatch(params, b, cfg, ctx).grads, clean.grads) > 1e-6);
}

TEST_CASE("ascent raises the loss on a frozen model") {
  const auto& f = fixture();
  auto enc = f.encoder;
  enc.dropout = 0.0;
  auto params = init_params<double>(enc, 8);
  std::mt19937_64 rng(1);
  // Larger weights than init so the loss surface is not flat.
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].rank() == 2) params[i] = random_tensor<double>(params[i].shape(), rng, -0.3, 0.3);
  for (double eta : {1e-4, 1e-3}) {
    std::size_t ok = 0, total = 0;
    for (std::size_t s = 0; s < 100; ++s) {
      const auto& ex = f.examples[s];
      if (ex.map.empty()) continue;
      auto cfg = config(TrainMode::kSpace, 1.0, 2);
      cfg.eta = eta;
      MinibatchTrace<double> trace;
      space_minibatch(params, Batch{&ex}, cfg, BatchContext{s}, &trace);
      double g = 0;
      for (double x : trace.passes[0].perturbation_grad_norms) g += x * x;
      g = std::sqrt(g);
      const double rise = trace.passes[1].loss - trace.passes[0].loss;
      CHECK(rise >= -1e-4);
      ok += rise >= 0.5 * eta * g;
      ++total;
    }
    CHECK(double(ok) >= 0.9 * double(total));
  }
}

TEST_CASE("random perturbations are tied and confined for rand_space") {
  const auto& f = fixture();
  auto params = init_params<float>(f.encoder, 9);
  MinibatchTrace<float> trace;
  auto cfg = config(TrainMode::kRandSpace, 0.5, 3);
  random_perturb_minibatch(params, first_batch(4), cfg, BatchContext{3}, &trace);
  REQUIRE(trace.passes.size() == 12);
  // Draws differ between passes.
  CHECK_FALSE(trace.passes[0].perturbation == trace.passes[1].perturbation);
  for (const auto& p : trace.passes)
    for (const auto& part : p.perturbation) CHECK(frobenius_norm(part) == doctest::Approx(0.5).epsilon(1e-5));
  cfg.mode = TrainMode::kSpace;
  CHECK_THROWS_AS(random_perturb_minibatch(params, first_batch(1), cfg, BatchContext{}), std::invalid_argument);
}

TEST_CASE("augment: one variant is baseline, identity transforms are clean") {
  const auto& f = fixture();
  auto params = init_params<double>(f.encoder, 10);
  auto batch = first_batch(4);
  BatchContext ctx{5, &f.tokenizer};
  auto clean = clean_minibatch(params, batch, config(TrainMode::kBaseline, 1, 1), ctx);
  auto one = augment_minibatch(params, batch, config(TrainMode::kAugment, 1, 1), ctx);
  CHECK(one.grads == clean.grads);
  std::vector<corpus::TransformSpec> none;
  BatchContext identity{5, &f.tokenizer, &none};
  auto same = augment_minibatch(params, batch, config(TrainMode::kAugment, 1, 3), identity);
  CHECK(max_relative_error(same.grads, clean.grads) < 1e-9);
  MinibatchTrace<double> trace;
  auto real = augment_minibatch(params, batch, config(TrainMode::kAugment, 1, 3), ctx, &trace);
  CHECK(real.fallbacks == 0);
  CHECK(max_relative_error(real.grads, clean.grads) > 1e-6);
  CHECK(trace.passes[1].loss != trace.passes[0].loss);
}

TEST_CASE("augment falls back to the original on unparsable source") {
  const auto& f = fixture();
  auto params = init_params<double>(f.encoder, 10);
  TrainExample broken = f.examples[0];
  broken.source = "int f( {";
  BatchContext ctx{5, &f.tokenizer};
  auto g = augment_minibatch(params, Batch{&broken}, config(TrainMode::kAugment, 1, 3), ctx);
  CHECK(g.fallbacks == 2);
  auto clean = clean_minibatch(params, Batch{&broken}, config(TrainMode::kBaseline, 1, 1), ctx);
  CHECK(max_relative_error(g.grads, clean.grads) < 1e-9);
}

TEST_CASE("thread count does not change the gradient") {
  const auto& f = fixture();
  auto params = init_params<float>(f.encoder, 11);
  auto cfg = config(TrainMode::kSpace, 1.0, 2);
  auto one = space_minibatch(params, first_batch(7), cfg, BatchContext{1});
  cfg.threads = 4;
  auto four = space_minibatch(params, first_batch(7), cfg, BatchContext{1});
  CHECK(one.grads == four.grads);
  CHECK(one.loss == four.loss);
}

TEST_CASE("adam and sgd updates") {
  EncoderConfig ec = fixture().encoder;
  auto p = init_params<double>(ec, 1);
  auto q = p;
  std::vector<Tensor<double>> grads;
  for (std::size_t i = 0; i < p.size(); ++i) grads.push_back(Tensor<double>::filled(p[i].shape(), 0.5));
  Optimizer<double> adam("adam", 0.01);
  adam.step(p, grads);
  // First Adam step moves every coordinate by lr * g / (|g| + eps).
  CHECK(p[0][0] == doctest::Approx(q[0][0] - 0.01 * 0.5 / (0.5 + 1e-8)));
  Optimizer<double> sgd("sgd", 0.1);
  auto r = q;
  sgd.step(r, grads);
  CHECK(r[0][0] == doctest::Approx(q[0][0] - 0.05));
  CHECK_THROWS_AS(Optimizer<double>("lion", 0.1), std::invalid_argument);
}

TEST_CASE("epoch batches cover every sample once and follow the seed") {
  const auto& ex = fixture().examples;
  auto a = epoch_batches(ex, 16, 3, 1);
  std::vector<int> seen(ex.size(), 0);
  for (const auto& b : a) {
    CHECK(b.size() <= 16);
    for (auto i : b) ++seen[i];
  }
  for (int s : seen) CHECK(s == 1);
  CHECK(a == epoch_batches(ex, 16, 3, 1));
  CHECK(a != epoch_batches(ex, 16, 3, 2));
}

TEST_CASE("training: zero epochs, determinism, degenerate space equals baseline") {
  const auto& f = fixture();
  std::vector<TrainExample> tr(f.examples.begin(), f.examples.begin() + 80);
  std::vector<TrainExample> dev(f.examples.begin() + 80, f.examples.end());
  auto cfg = config(TrainMode::kBaseline, 0, 1);
  cfg.epochs = 0;
  auto zero = train<float>(cfg, f.encoder, tr, dev);
  CHECK(zero.params == init_params<float>(f.encoder, cfg.seed));
  CHECK(zero.history.empty());

  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.lr = 1e-3;
  std::vector<EpochMetrics> seen;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochMetrics& m) { seen.push_back(m); };
  auto base = train<float>(cfg, f.encoder, tr, dev, hooks);
  REQUIRE(base.history.size() == 3);
  CHECK(seen.size() == 3);
  CHECK(base.history[0].to_json().contains("wall_ms"));
  auto again = train<float>(cfg, f.encoder, tr, dev);
  auto space = cfg;
  space.mode = TrainMode::kSpace;
  space.steps = 1;
  auto sp = train<float>(space, f.encoder, tr, dev);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(again.history[e].dev_acc == base.history[e].dev_acc);
    CHECK(again.history[e].train_loss == base.history[e].train_loss);
    CHECK(sp.history[e].dev_acc == base.history[e].dev_acc);
    CHECK(sp.history[e].train_loss == base.history[e].train_loss);
  }
  CHECK(again.params == base.params);
  CHECK(sp.params == base.params);
  CHECK(base.best_dev_acc == accuracy(base.params, dev));
}

TEST_CASE("training rejects empty sets and reports non-finite losses") {
  const auto& f = fixture();
  std::vector<TrainExample> tr(f.examples.begin(), f.examples.begin() + 20);
  auto cfg = config(TrainMode::kBaseline, 0, 1);
  cfg.epochs = 1;
  CHECK_THROWS_AS(train<float>(cfg, f.encoder, {}, tr), std::invalid_argument);
  cfg.lr = 1e35;
  cfg.batch_size = 2;
  cfg.optimizer = "sgd";
  try {
    train<float>(cfg, f.encoder, tr, tr);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(e.epoch == 1);
    CHECK(e.mode == TrainMode::kBaseline);
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}
