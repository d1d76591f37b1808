// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codeadv/autodiff.hpp"
#include "codeadv/tensor.hpp"

namespace codeadv {

struct EncoderConfig {
  std::size_t d = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_len = 256;
  std::size_t vocab = 0;
  std::size_t classes = 2;
  double dropout = 0.1;

  // Throws std::invalid_argument on d % heads != 0, max_len < 2, classes < 2,
  // vocab == 0 or dropout outside [0, 1).
  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// All trainable tensors in a fixed order. Matrices multiply from the right
// (x * W, W is in x out).
template <class T>
class EncoderParams {
 public:
  // Per-layer tensor offsets.
  enum LayerSlot : std::size_t {
    kWq, kBq, kWk, kBk, kWv, kBv, kWo, kBo, kLn1Gain, kLn1Bias,
    kW1, kB1, kW2, kB2, kLn2Gain, kLn2Bias, kLayerSlots
  };
  static constexpr std::size_t kTokenEmbedding = 0;
  static constexpr std::size_t kPositionEmbedding = 1;
  static constexpr std::size_t kEmbLnGain = 2;
  static constexpr std::size_t kEmbLnBias = 3;
  static constexpr std::size_t kFirstLayer = 4;

  EncoderParams() = default;
  // Zero tensors with the right shapes; layer-norm gains are one.
  explicit EncoderParams(const EncoderConfig& config);

  const EncoderConfig& config() const { return config_; }
  std::size_t size() const { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  Tensor<T>& operator[](std::size_t i) { return tensors_.at(i); }
  const Tensor<T>& operator[](std::size_t i) const { return tensors_.at(i); }
  Tensor<T>& get(std::string_view name);
  const Tensor<T>& get(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  static std::size_t layer(std::size_t l, LayerSlot slot) { return kFirstLayer + l * kLayerSlots + slot; }
  std::size_t classifier_weight() const { return kFirstLayer + config_.layers * kLayerSlots; }  // C x d
  std::size_t classifier_bias() const { return classifier_weight() + 1; }                      // C

  std::size_t parameter_count() const;
  bool all_finite() const;

  template <class U>
  EncoderParams<U> cast() const {
    EncoderParams<U> out(config_);
    for (std::size_t i = 0; i < size(); ++i) out[i] = tensors_[i].template cast<U>();
    return out;
  }

  friend bool operator==(const EncoderParams& a, const EncoderParams& b) {
    return a.config_ == b.config_ && a.tensors_ == b.tensors_;
  }

 private:
  EncoderConfig config_;
  std::vector<std::string> names_;
  std::vector<Tensor<T>> tensors_;
};

// Truncated normal (resampled beyond two standard deviations), std 0.02, for
// every matrix; biases zero; layer-norm affines identity.
template <class T>
EncoderParams<T> init_params(const EncoderConfig& config, std::uint64_t seed);

// Parameters bound as graph leaves.
struct BoundParams {
  std::vector<Var> vars;
};

template <class T>
BoundParams bind_params(Graph<T>& g, const EncoderParams<T>& params);

struct ForwardOptions {
  // Dropout masks are drawn from this seed, so repeated passes over the same
  // sample with the same seed see the same masks. Absent = no dropout.
  std::optional<std::uint64_t> dropout_seed;
};

// token + positional (+ delta) embedding rows, before the embedding norm.
template <class T>
Var embedding_sum(Graph<T>& g, const BoundParams& bound, const EncoderParams<T>& params,
                  std::span<const std::int32_t> ids, Var delta = {});

// Logits (1 x C) of one window. `delta`, when valid, must be n x d and is
// added to token + positional embeddings before the embedding layer norm.
template <class T>
Var forward(Graph<T>& g, const BoundParams& bound, const EncoderParams<T>& params, std::span<const std::int32_t> ids,
            Var delta = {}, const ForwardOptions& options = {});

// Graph-free inference (dropout off). `delta` may be null.
template <class T>
std::vector<double> infer_logits(const EncoderParams<T>& params, std::span<const std::int32_t> ids,
                                 const Tensor<T>* delta = nullptr);

std::vector<double> softmax(std::span<const double> logits);
// Log-sum-exp stabilised softmax cross entropy.
double cross_entropy(std::span<const double> logits, std::size_t label);

}  // namespace codeadv
