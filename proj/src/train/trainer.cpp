// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "codeadv/corpus/program.hpp"
#include "codeadv/rng.hpp"

namespace codeadv {

namespace {

constexpr double kSkipNorm = 1e-12;

constexpr std::string_view kModeNames[] = {"baseline", "adv", "space", "rand_adv", "rand_space", "augment"};

const std::vector<std::string> kConfigKeys = {"mode", "epsilon",   "eta",       "steps",     "lr",
                                              "epochs", "batch_size", "seed", "optimizer", "threads"};

template <class T>
void axpy(Tensor<T>& acc, T w, const Tensor<T>& x) {
  auto a = acc.values();
  auto b = x.values();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += w * b[k];
}

template <class T>
std::vector<Tensor<T>> zero_like(const EncoderParams<T>& params) {
  std::vector<Tensor<T>> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back(params[i].shape());
  return out;
}

template <class T>
struct SampleGradient {
  std::vector<Tensor<T>> grads;
  double loss = 0.0;
  std::size_t fallbacks = 0;
  std::vector<PassRecord<T>> records;
};

// One forward/backward pass. Parameter gradients are added to acc with
// `weight`; gradients of the perturbation parts go to part_grads if given.
template <class T>
double run_pass(const EncoderParams<T>& params, std::span<const std::int32_t> ids, int label,
                const std::vector<Tensor<T>>& parts, const std::vector<std::vector<std::size_t>>& placements,
                std::uint64_t dropout_seed, T weight, std::vector<Tensor<T>>& acc,
                std::vector<Tensor<T>>* part_grads, PassRecord<T>* record, bool record_param_grads) {
  Graph<T> g;
  const auto bound = bind_params(g, params);
  std::vector<Var> pv;
  pv.reserve(parts.size());
  for (const auto& p : parts) pv.push_back(g.input(p, part_grads != nullptr));
  Var delta = pv.empty() ? Var{} : g.scatter_rows(pv, placements, ids.size(), params.config().d);
  ForwardOptions opts;
  opts.dropout_seed = dropout_seed;
  Var loss = g.cross_entropy_with_logits(forward(g, bound, params, ids, delta, opts), static_cast<std::size_t>(label));
  g.backward(loss);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto gi = g.grad(bound.vars[i]);
    axpy(acc[i], weight, gi);
    if (record != nullptr && record_param_grads) record->param_grads.push_back(std::move(gi));
  }
  if (part_grads != nullptr) {
    part_grads->clear();
    for (Var v : pv) part_grads->push_back(g.grad(v));
  }
  const double value = static_cast<double>(g.value(loss)[0]);
  if (record != nullptr) {
    record->loss = value;
    record->perturbation = parts;
    if (delta.valid()) record->scattered = g.value(delta);
  }
  return value;
}

std::uint64_t dropout_seed(const BatchContext& ctx, std::size_t sample) {
  return derive_seed(ctx.seed, "dropout", sample);
}

template <class T>
using SampleFn = std::function<SampleGradient<T>(std::size_t sample, const TrainExample& ex, bool record)>;

// Runs fn on every sample (possibly in parallel) and reduces in sample order.
template <class T>
BatchGradient<T> reduce_batch(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                              MinibatchTrace<T>* trace, const SampleFn<T>& fn) {
  if (batch.empty()) throw std::invalid_argument("minibatch: empty batch");
  std::vector<SampleGradient<T>> per(batch.size());
  parallel_for(batch.size(), cfg.threads, [&](std::size_t s) { per[s] = fn(s, *batch[s], trace != nullptr); });
  BatchGradient<T> out;
  out.grads = zero_like(params);
  for (std::size_t s = 0; s < per.size(); ++s) {
    for (std::size_t i = 0; i < out.grads.size(); ++i) axpy(out.grads[i], T{1}, per[s].grads[i]);
    out.loss += per[s].loss;
    out.fallbacks += per[s].fallbacks;
    if (trace != nullptr) {
      for (auto& r : per[s].records) trace->passes.push_back(std::move(r));
    }
  }
  const T inv = static_cast<T>(1.0 / static_cast<double>(batch.size()));
  if (batch.size() > 1) {
    for (auto& gr : out.grads) {
      for (auto& v : gr.values()) v *= inv;
    }
  }
  out.loss /= static_cast<double>(batch.size());
  return out;
}

// Shared K-step ascent loop for adv and space.
template <class T>
BatchGradient<T> ascent_minibatch(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                                  const BatchContext& ctx, MinibatchTrace<T>* trace, bool tied) {
  const bool want_grads = trace != nullptr && trace->record_param_grads;
  const std::size_t d = params.config().d;
  return reduce_batch<T>(params, batch, cfg, trace, [&](std::size_t s, const TrainExample& ex, bool record) {
    SampleGradient<T> out;
    out.grads = zero_like(params);
    const std::size_t n = ex.ids.size();
    std::vector<Tensor<T>> parts;
    std::vector<std::vector<std::size_t>> placements;
    if (tied) {
      parts = zero_perturbations<T>(ex.map, d);
      placements = ex.map.placements();
    } else if (n > 1) {
      parts.emplace_back(Shape{n - 1, d});  // every position but the sentinel
      placements = {{1}};
    }
    const T weight = static_cast<T>(1.0 / static_cast<double>(cfg.steps));
    std::vector<Tensor<T>> part_grads;
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
      PassRecord<T> rec;
      rec.sample = s;
      rec.step = t;
      out.loss += run_pass(params, ex.ids, ex.label, parts, placements, dropout_seed(ctx, s), weight, out.grads,
                           &part_grads, record ? &rec : nullptr, want_grads);
      for (std::size_t j = 0; j < parts.size(); ++j) {
        if (record) rec.perturbation_grad_norms.push_back(frobenius_norm(part_grads[j]));
        parts[j] = ascent_step(parts[j], part_grads[j], cfg.eta, cfg.epsilon);
      }
      if (record) {
        rec.updated = parts;
        out.records.push_back(std::move(rec));
      }
    }
    out.loss /= static_cast<double>(cfg.steps);
    return out;
  });
}

template <class T>
Tensor<T> gaussian(Shape shape, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.normal());
  return t;
}

template <class T>
bool grads_finite(const std::vector<Tensor<T>>& grads) {
  return std::all_of(grads.begin(), grads.end(), [](const Tensor<T>& t) { return all_finite(t); });
}

}  // namespace

std::string_view mode_name(TrainMode mode) { return kModeNames[static_cast<std::size_t>(mode)]; }

TrainMode parse_train_mode(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kModeNames); ++i) {
    if (kModeNames[i] == name) return static_cast<TrainMode>(i);
  }
  throw std::invalid_argument("unknown training mode '" + std::string(name) + "'");
}

bool uses_ascent(TrainMode mode) { return mode == TrainMode::kAdv || mode == TrainMode::kSpace; }

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("train config: " + m); };
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) fail("epsilon must be finite and >= 0");
  if (uses_ascent(mode) && !(eta > 0.0)) fail("eta must be > 0 for ascent modes");
  if (steps < 1) fail("steps must be >= 1");
  if (!(lr > 0.0)) fail("lr must be > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (optimizer != "adam" && optimizer != "sgd") fail("optimizer must be adam or sgd");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"mode", mode_name(mode)}, {"epsilon", epsilon}, {"eta", eta},
          {"steps", steps},          {"lr", lr},           {"epochs", epochs},
          {"batch_size", batch_size}, {"seed", seed},      {"optimizer", optimizer},
          {"threads", threads}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("train config: expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
      throw std::invalid_argument("train config: unknown key '" + key + "'");
    }
  }
  TrainConfig c;
  c.mode = parse_train_mode(j.at("mode").get<std::string>());
  // The radius has no sensible default, so perturbing modes must state it.
  const bool perturbs = c.mode != TrainMode::kBaseline && c.mode != TrainMode::kAugment;
  if (perturbs && !j.contains("epsilon")) throw std::invalid_argument("train config: epsilon is required for this mode");
  c.epsilon = j.value("epsilon", c.epsilon);
  c.eta = j.value("eta", c.eta);
  c.steps = j.value("steps", c.steps);
  c.lr = j.value("lr", c.lr);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.optimizer = j.value("optimizer", c.optimizer);
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

TrainExample make_example(const Tokenizer& tokenizer, std::string id, std::string source, int label) {
  auto w = tokenizer.encode(source);
  return {std::move(id), std::move(w.ids), std::move(w.map), label, std::move(source)};
}

template <class T>
std::vector<Tensor<T>> zero_perturbations(const frontend::IdentifierMap& map, std::size_t d) {
  std::vector<Tensor<T>> parts;
  parts.reserve(map.size());
  for (const auto& e : map.entries) parts.emplace_back(Shape{e.length(), d});
  return parts;
}

template <class T>
Tensor<T> scatter(const std::vector<Tensor<T>>& parts, const frontend::IdentifierMap& map, std::size_t n,
                  std::size_t d) {
  if (parts.size() != map.size()) {
    throw std::invalid_argument("scatter: " + std::to_string(parts.size()) + " perturbations for " +
                                std::to_string(map.size()) + " identifiers");
  }
  Tensor<T> out(Shape{n, d});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& e = map.entries[i];
    if (parts[i].shape() != Shape{e.length(), d}) {
      throw ShapeError("scatter: perturbation " + std::to_string(i) + " has shape " +
                       shape_string(parts[i].shape()) + ", expected " + shape_string(Shape{e.length(), d}));
    }
    for (std::size_t start : e.occurrences) {
      if (start + e.length() > n) throw ShapeError("scatter: occurrence past the window");
      for (std::size_t r = 0; r < e.length(); ++r) {
        std::copy_n(parts[i].row(r).begin(), d, out.row(start + r).begin());
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> project(const Tensor<T>& delta, double eps) {
  if (eps <= 0.0) return Tensor<T>(delta.shape());
  const double norm = frobenius_norm(delta);
  if (norm <= eps) return delta;
  Tensor<T> out = delta;
  const double s = eps / norm;
  for (auto& v : out.values()) v = static_cast<T>(static_cast<double>(v) * s);
  // Rounding can leave the result a hair outside; shrink until it is not.
  while (frobenius_norm(out) > eps) {
    for (auto& v : out.values()) v = static_cast<T>(static_cast<double>(v) * (1.0 - 1e-7));
  }
  return out;
}

template <class T>
Tensor<T> ascent_step(const Tensor<T>& delta, const Tensor<T>& g, double eta, double eps) {
  if (delta.shape() != g.shape()) {
    throw ShapeError("ascent_step: shapes " + shape_string(delta.shape()) + " and " + shape_string(g.shape()));
  }
  const double norm = frobenius_norm(g);
  if (norm < kSkipNorm) return delta;
  Tensor<T> moved = delta;
  const double s = eta / norm;
  auto out = moved.values();
  auto gv = g.values();
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = static_cast<T>(static_cast<double>(out[k]) + s * static_cast<double>(gv[k]));
  }
  return project(moved, eps);
}

template <class T>
BatchGradient<T> clean_minibatch(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                                 const BatchContext& ctx, MinibatchTrace<T>* trace) {
  const bool want_grads = trace != nullptr && trace->record_param_grads;
  return reduce_batch<T>(params, batch, cfg, trace, [&](std::size_t s, const TrainExample& ex, bool record) {
    SampleGradient<T> out;
    out.grads = zero_like(params);
    PassRecord<T> rec;
    rec.sample = s;
    rec.step = 1;
    out.loss = run_pass<T>(params, ex.ids, ex.label, {}, {}, dropout_seed(ctx, s), T{1}, out.grads, nullptr,
                           record ? &rec : nullptr, want_grads);
    if (record) out.records.push_back(std::move(rec));
    return out;
  });
}

template <class T>
BatchGradient<T> space_minibatch(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                                 const BatchContext& ctx, MinibatchTrace<T>* trace) {
  return ascent_minibatch(params, batch, cfg, ctx, trace, true);
}

template <class T>
BatchGradient<T> adv_minibatch(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                               const BatchContext& ctx, MinibatchTrace<T>* trace) {
  return ascent_minibatch(params, batch, cfg, ctx, trace, false);
}

template <class T>
BatchGradient<T> random_perturb_minibatch(const EncoderParams<T>& params, const Batch& batch,
                                          const TrainConfig& cfg, const BatchContext& ctx,
                                          MinibatchTrace<T>* trace) {
  if (cfg.mode != TrainMode::kRandAdv && cfg.mode != TrainMode::kRandSpace) {
    throw std::invalid_argument("random_perturb_minibatch: mode must be rand_adv or rand_space");
  }
  const bool tied = cfg.mode == TrainMode::kRandSpace;
  const bool want_grads = trace != nullptr && trace->record_param_grads;
  const std::size_t d = params.config().d;
  return reduce_batch<T>(params, batch, cfg, trace, [&](std::size_t s, const TrainExample& ex, bool record) {
    SampleGradient<T> out;
    out.grads = zero_like(params);
    const std::size_t n = ex.ids.size();
    // Untied draws cover every position but the sentinel.
    const bool untied_empty = !tied && n < 2;
    const auto placements = tied           ? ex.map.placements()
                            : untied_empty ? std::vector<std::vector<std::size_t>>{}
                                           : std::vector<std::vector<std::size_t>>{{1}};
    const T weight = static_cast<T>(1.0 / static_cast<double>(cfg.steps));
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
      Rng rng(derive_seed(ctx.seed, "noise", s, t));
      std::vector<Tensor<T>> parts;
      if (tied) {
        for (const auto& e : ex.map.entries) parts.push_back(project(gaussian<T>({e.length(), d}, rng), cfg.epsilon));
      } else if (!untied_empty) {
        parts.push_back(project(gaussian<T>({n - 1, d}, rng), cfg.epsilon));
      }
      PassRecord<T> rec;
      rec.sample = s;
      rec.step = t;
      out.loss += run_pass<T>(params, ex.ids, ex.label, parts, placements, dropout_seed(ctx, s), weight, out.grads,
                           nullptr, record ? &rec : nullptr, want_grads);
      if (record) out.records.push_back(std::move(rec));
    }
    out.loss /= static_cast<double>(cfg.steps);
    return out;
  });
}

template <class T>
BatchGradient<T> augment_minibatch(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                                   const BatchContext& ctx, MinibatchTrace<T>* trace) {
  if (cfg.steps > 1 && ctx.tokenizer == nullptr) throw std::invalid_argument("augment_minibatch: tokenizer required");
  const auto specs = ctx.transforms != nullptr ? *ctx.transforms : corpus::default_transform_specs(0);
  const bool want_grads = trace != nullptr && trace->record_param_grads;
  return reduce_batch<T>(params, batch, cfg, trace, [&](std::size_t s, const TrainExample& ex, bool record) {
    SampleGradient<T> out;
    out.grads = zero_like(params);
    const T weight = static_cast<T>(1.0 / static_cast<double>(cfg.steps));
    std::optional<corpus::Program> original;
    for (std::size_t k = 1; k <= cfg.steps; ++k) {
      std::vector<std::int32_t> ids = ex.ids;
      if (k > 1) {
        try {
          if (!original) original = corpus::Program::from_source(ex.source);
          const auto variant = corpus::apply_transforms(*original, specs, ctx.seed, s * cfg.steps + k);
          ids = ctx.tokenizer->encode(variant.source()).ids;
        } catch (const std::exception&) {
          ++out.fallbacks;  // keep the original window in this slot
        }
      }
      PassRecord<T> rec;
      rec.sample = s;
      rec.step = k;
      out.loss += run_pass<T>(params, ids, ex.label, {}, {}, dropout_seed(ctx, s), weight, out.grads, nullptr,
                              record ? &rec : nullptr, want_grads);
      if (record) out.records.push_back(std::move(rec));
    }
    out.loss /= static_cast<double>(cfg.steps);
    return out;
  });
}

template <class T>
BatchGradient<T> minibatch_gradient(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                                    const BatchContext& ctx, MinibatchTrace<T>* trace) {
  switch (cfg.mode) {
    case TrainMode::kBaseline: return clean_minibatch(params, batch, cfg, ctx, trace);
    case TrainMode::kAdv: return adv_minibatch(params, batch, cfg, ctx, trace);
    case TrainMode::kSpace: return space_minibatch(params, batch, cfg, ctx, trace);
    case TrainMode::kRandAdv:
    case TrainMode::kRandSpace: return random_perturb_minibatch(params, batch, cfg, ctx, trace);
    case TrainMode::kAugment: return augment_minibatch(params, batch, cfg, ctx, trace);
  }
  throw std::logic_error("unreachable");
}

template <class T>
Optimizer<T>::Optimizer(std::string kind, double lr, double beta1, double beta2, double eps)
    : kind_(std::move(kind)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (kind_ != "adam" && kind_ != "sgd") throw std::invalid_argument("optimizer: unknown kind '" + kind_ + "'");
}

template <class T>
void Optimizer<T>::step(EncoderParams<T>& params, const std::vector<Tensor<T>>& grads) {
  if (grads.size() != params.size()) throw std::invalid_argument("optimizer: gradient count mismatch");
  ++t_;
  if (kind_ == "sgd") {
    for (std::size_t i = 0; i < params.size(); ++i) axpy(params[i], static_cast<T>(-lr_), grads[i]);
    return;
  }
  if (m_.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.emplace_back(params[i].size(), 0.0);
      v_.emplace_back(params[i].size(), 0.0);
    }
  }
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].values();
    auto g = grads[i].values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = static_cast<double>(g[k]);
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * gk;
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * gk * gk;
      p[k] = static_cast<T>(static_cast<double>(p[k]) - lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_));
    }
  }
}

nlohmann::json EpochMetrics::to_json() const {
  return {{"epoch", epoch}, {"mode", mode_name(mode)}, {"train_loss", train_loss}, {"dev_acc", dev_acc},
          {"wall_ms", wall_ms}};
}

std::vector<std::vector<std::size_t>> epoch_batches(const std::vector<TrainExample>& set, std::size_t batch_size,
                                                    std::uint64_t seed, std::size_t epoch) {
  if (batch_size == 0) throw std::invalid_argument("epoch_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "shuffle", epoch));
  rng.shuffle(order);
  // Sort within windows of a few batches so neighbours have similar length
  // while the epoch order stays random.
  const std::size_t window = 8 * batch_size;
  for (std::size_t start = 0; start < order.size(); start += window) {
    auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + window));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) { return set[a].ids.size() < set[b].ids.size(); });
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const auto end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  rng.shuffle(batches);
  return batches;
}

template <class T>
TrainResult<T> train(const TrainConfig& cfg, const EncoderConfig& encoder, const std::vector<TrainExample>& train_set,
                     const std::vector<TrainExample>& dev_set, const TrainHooks& hooks) {
  cfg.validate();
  encoder.validate();
  if (train_set.empty() || dev_set.empty()) throw std::invalid_argument("train: datasets must be nonempty");
  if (cfg.mode == TrainMode::kAugment && cfg.steps > 1 && hooks.tokenizer == nullptr) {
    throw std::invalid_argument("train: augment mode needs a tokenizer");
  }
  auto params = init_params<T>(encoder, cfg.seed);
  TrainResult<T> result;
  result.params = params;
  Optimizer<T> opt(cfg.optimizer, cfg.lr);
  BatchContext ctx;
  ctx.tokenizer = hooks.tokenizer;
  if (!hooks.transforms.empty()) ctx.transforms = &hooks.transforms;
  double best = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches = epoch_batches(train_set, cfg.batch_size, cfg.seed, epoch);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      Batch batch;
      for (std::size_t i : batches[b]) batch.push_back(&train_set[i]);
      ctx.seed = derive_seed(cfg.seed, "batch", epoch, b);
      auto bg = minibatch_gradient(params, batch, cfg, ctx);
      auto where = [&] {
        return " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) + " (mode " +
               std::string(mode_name(cfg.mode)) + ")";
      };
      if (!std::isfinite(bg.loss)) throw TrainingError("non-finite loss" + where(), epoch, b, cfg.mode);
      if (!grads_finite(bg.grads)) throw TrainingError("non-finite gradient" + where(), epoch, b, cfg.mode);
      opt.step(params, bg.grads);
      if (!params.all_finite()) throw TrainingError("non-finite parameters" + where(), epoch, b, cfg.mode);
      loss_sum += bg.loss * static_cast<double>(batch.size());
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.mode = cfg.mode;
    m.train_loss = loss_sum / static_cast<double>(train_set.size());
    m.dev_acc = accuracy(params, dev_set, cfg.threads);
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(m);
    if (m.dev_acc > best) {
      best = m.dev_acc;
      result.params = params;
      result.best_epoch = epoch;
      result.best_dev_acc = m.dev_acc;
    }
    if (hooks.on_epoch) hooks.on_epoch(m);
  }
  return result;
}

std::size_t argmax(std::span<const double> logits) {
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

template <class T>
double accuracy(const EncoderParams<T>& params, const std::vector<TrainExample>& set, std::size_t threads) {
  if (set.empty()) return 0.0;
  std::vector<char> hit(set.size(), 0);
  parallel_for(set.size(), threads, [&](std::size_t i) {
    hit[i] = argmax(infer_logits(params, set[i].ids)) == static_cast<std::size_t>(set[i].label);
  });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(set.size());
}

#define CODEADV_TRAINER_INSTANTIATE(T)                                                                              \
  template std::vector<Tensor<T>> zero_perturbations<T>(const frontend::IdentifierMap&, std::size_t);             \
  template Tensor<T> scatter<T>(const std::vector<Tensor<T>>&, const frontend::IdentifierMap&, std::size_t,       \
                                std::size_t);                                                                     \
  template Tensor<T> project<T>(const Tensor<T>&, double);                                                         \
  template Tensor<T> ascent_step<T>(const Tensor<T>&, const Tensor<T>&, double, double);                          \
  template BatchGradient<T> clean_minibatch<T>(const EncoderParams<T>&, const Batch&, const TrainConfig&,         \
                                               const BatchContext&, MinibatchTrace<T>*);                          \
  template BatchGradient<T> space_minibatch<T>(const EncoderParams<T>&, const Batch&, const TrainConfig&,         \
                                               const BatchContext&, MinibatchTrace<T>*);                          \
  template BatchGradient<T> adv_minibatch<T>(const EncoderParams<T>&, const Batch&, const TrainConfig&,           \
                                             const BatchContext&, MinibatchTrace<T>*);                            \
  template BatchGradient<T> random_perturb_minibatch<T>(const EncoderParams<T>&, const Batch&, const TrainConfig&, \
                                                        const BatchContext&, MinibatchTrace<T>*);                 \
  template BatchGradient<T> augment_minibatch<T>(const EncoderParams<T>&, const Batch&, const TrainConfig&,       \
                                                 const BatchContext&, MinibatchTrace<T>*);                        \
  template BatchGradient<T> minibatch_gradient<T>(const EncoderParams<T>&, const Batch&, const TrainConfig&,      \
                                                  const BatchContext&, MinibatchTrace<T>*);                       \
  template class Optimizer<T>;                                                                                     \
  template TrainResult<T> train<T>(const TrainConfig&, const EncoderConfig&, const std::vector<TrainExample>&,    \
                                   const std::vector<TrainExample>&, const TrainHooks&);                           \
  template double accuracy<T>(const EncoderParams<T>&, const std::vector<TrainExample>&, std::size_t);

CODEADV_TRAINER_INSTANTIATE(float)
CODEADV_TRAINER_INSTANTIATE(double)

}  // namespace codeadv
