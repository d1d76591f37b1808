// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "codeadv/corpus/transforms.hpp"
#include "codeadv/encoder.hpp"
#include "codeadv/frontend/identifier_map.hpp"
#include "codeadv/parallel.hpp"
#include "codeadv/tokenizer.hpp"

namespace codeadv {

enum class TrainMode { kBaseline, kAdv, kSpace, kRandAdv, kRandSpace, kAugment };

std::string_view mode_name(TrainMode mode);
// Throws std::invalid_argument on an unknown name.
TrainMode parse_train_mode(std::string_view name);
// adv and space take gradient ascent steps on the perturbation.
bool uses_ascent(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::kBaseline;
  double epsilon = 1.0;  // Frobenius radius of each perturbation ball
  double eta = 5e-4;     // ascent step length
  std::size_t steps = 3; // K: ascent steps, random draws or augmented variants
  double lr = 3e-4;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";  // or "sgd"
  // Worker threads for the per-sample passes of a batch; 0 = all cores.
  // Results do not depend on this value.
  std::size_t threads = 1;

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainExample {
  std::string id;
  std::vector<std::int32_t> ids;
  frontend::IdentifierMap map;
  int label = 0;
  // Program text; only read by augment mode.
  std::string source;
};

TrainExample make_example(const Tokenizer& tokenizer, std::string id, std::string source, int label);

using Batch = std::vector<const TrainExample*>;

// --- perturbation primitives -------------------------------------------------

// Zero k_i x d matrix for each identifier entry.
template <class T>
std::vector<Tensor<T>> zero_perturbations(const frontend::IdentifierMap& map, std::size_t d);

// Rows of parts[i] copied to every occurrence of entry i in an n x d matrix,
// zero elsewhere. Throws std::invalid_argument on a count mismatch and
// ShapeError on a row-count mismatch or an occurrence past n.
template <class T>
Tensor<T> scatter(const std::vector<Tensor<T>>& parts, const frontend::IdentifierMap& map, std::size_t n,
                  std::size_t d);

// Radial projection onto the Frobenius ball of radius eps.
template <class T>
Tensor<T> project(const Tensor<T>& delta, double eps);

// project(delta + eta * g / |g|), or delta itself when |g| < 1e-12.
template <class T>
Tensor<T> ascent_step(const Tensor<T>& delta, const Tensor<T>& g, double eta, double eps);

// --- minibatch gradients ------------------------------------------------------

template <class T>
struct BatchGradient {
  std::vector<Tensor<T>> grads;  // parameter layout, averaged over passes and samples
  double loss = 0.0;             // mean loss over all passes and samples
  std::size_t fallbacks = 0;     // augment variants replaced by the original
};

// What one forward/backward pass saw. Filled only when a trace is passed.
template <class T>
struct PassRecord {
  std::size_t sample = 0;
  std::size_t step = 0;  // 1-based
  double loss = 0.0;
  std::vector<Tensor<T>> perturbation;  // the parts fed to this pass
  std::vector<Tensor<T>> updated;       // the parts after this pass's ascent step
  Tensor<T> scattered;                  // n x d matrix added to the embeddings, empty if none
  std::vector<Tensor<T>> param_grads;   // unscaled, only with record_param_grads
  std::vector<double> perturbation_grad_norms;  // |d loss / d part| per part, ascent modes only
};

template <class T>
struct MinibatchTrace {
  bool record_param_grads = false;
  std::vector<PassRecord<T>> passes;
};

// Inputs that only some modes read.
struct BatchContext {
  std::uint64_t seed = 0;  // per-batch stream for dropout, noise and transforms
  const Tokenizer* tokenizer = nullptr;                   // augment
  const std::vector<corpus::TransformSpec>* transforms = nullptr;  // augment; null = defaults
};

// One pass per sample with no perturbation.
template <class T>
BatchGradient<T> clean_minibatch(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                                 const BatchContext& ctx, MinibatchTrace<T>* trace = nullptr);
// Tied per-identifier perturbations, zero-initialised, K ascent steps.
template <class T>
BatchGradient<T> space_minibatch(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                                 const BatchContext& ctx, MinibatchTrace<T>* trace = nullptr);
// One untied (n-1) x d perturbation over every position after the <cls>
// sentinel, K ascent steps.
template <class T>
BatchGradient<T> adv_minibatch(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                               const BatchContext& ctx, MinibatchTrace<T>* trace = nullptr);
// K Gaussian draws projected into the ball (tied for rand_space).
template <class T>
BatchGradient<T> random_perturb_minibatch(const EncoderParams<T>& params, const Batch& batch,
                                          const TrainConfig& cfg, const BatchContext& ctx,
                                          MinibatchTrace<T>* trace = nullptr);
// K transformed variants per sample, the first being the original.
template <class T>
BatchGradient<T> augment_minibatch(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                                   const BatchContext& ctx, MinibatchTrace<T>* trace = nullptr);

// Dispatches on cfg.mode.
template <class T>
BatchGradient<T> minibatch_gradient(const EncoderParams<T>& params, const Batch& batch, const TrainConfig& cfg,
                                    const BatchContext& ctx, MinibatchTrace<T>* trace = nullptr);

// --- optimisation -------------------------------------------------------------

template <class T>
class Optimizer {
 public:
  Optimizer(std::string kind, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(EncoderParams<T>& params, const std::vector<Tensor<T>>& grads);
  std::size_t steps() const { return t_; }

 private:
  std::string kind_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  TrainMode mode = TrainMode::kBaseline;
  double train_loss = 0.0;
  double dev_acc = 0.0;
  double wall_ms = 0.0;

  nlohmann::json to_json() const;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::size_t epoch, std::size_t batch, TrainMode mode)
      : std::runtime_error(what), epoch(epoch), batch(batch), mode(mode) {}
  std::size_t epoch, batch;
  TrainMode mode;
};

struct TrainHooks {
  const Tokenizer* tokenizer = nullptr;  // required for augment
  std::vector<corpus::TransformSpec> transforms;  // augment; empty = defaults
  std::function<void(const EpochMetrics&)> on_epoch;
};

template <class T>
struct TrainResult {
  EncoderParams<T> params;  // best dev accuracy; initial params when epochs == 0
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;
  double best_dev_acc = 0.0;
};

// Shuffled, length-grouped minibatches for one epoch (indices into the set).
std::vector<std::vector<std::size_t>> epoch_batches(const std::vector<TrainExample>& set, std::size_t batch_size,
                                                    std::uint64_t seed, std::size_t epoch);

// Throws std::invalid_argument on empty sets and TrainingError on a
// non-finite loss, gradient or parameter.
template <class T>
TrainResult<T> train(const TrainConfig& cfg, const EncoderConfig& encoder, const std::vector<TrainExample>& train_set,
                     const std::vector<TrainExample>& dev_set, const TrainHooks& hooks = {});

// Index of the largest logit (first on ties).
std::size_t argmax(std::span<const double> logits);

template <class T>
double accuracy(const EncoderParams<T>& params, const std::vector<TrainExample>& set, std::size_t threads = 1);

}  // namespace codeadv
