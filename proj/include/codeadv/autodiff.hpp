// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "codeadv/tensor.hpp"

namespace codeadv {

enum class Primitive {
  kMatmul,
  kAdd,
  kScale,
  kRelu,
  kGelu,
  kSoftmaxLastDim,
  kLayerNormLastDim,
  kEmbeddingGather,
  kConcat,
  kCrossEntropyWithLogits,
  kReduceMean,
};

std::string_view primitive_name(Primitive kind);

// Non-tensor arguments of a primitive. Only the fields relevant to the
// primitive kind are read.
struct PrimitiveAttrs {
  double scale = 1.0;
  std::vector<std::int32_t> ids;  // embedding_gather
  std::size_t label = 0;          // cross_entropy_with_logits
};

template <class T>
class Graph;

// Handle to a node of a Graph. Only meaningful together with the graph that
// produced it.
struct Var {
  static constexpr std::uint32_t kNone = UINT32_MAX;
  std::uint32_t index = kNone;
  bool valid() const { return index != kNone; }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the node
// vector is already a topological order and backward() walks it in reverse.
//
// Leaf gradients accumulate across backward() calls until zero_grad(); the
// caller owns the reset. Intermediate gradients are recomputed every call.
template <class T>
class Graph {
 public:
  explicit Graph(bool track_gradients = true) : track_(track_gradients) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) noexcept = default;
  Graph& operator=(Graph&&) noexcept = default;

  // Leaf that references external storage. The tensor must outlive the graph
  // and stay unmodified while the graph is in use.
  Var param(const Tensor<T>& source);
  Var input(Tensor<T> value, bool requires_grad = true);
  Var constant(Tensor<T> value);

  Var matmul(Var a, Var b);
  // a * b^T
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  // Adds a length-m vector to every row of an n x m matrix.
  Var add_row(Var a, Var row);
  Var mul(Var a, Var b);
  // x * gamma + beta, row-broadcast.
  Var affine_rows(Var x, Var gamma, Var beta);
  Var scale(Var a, double s);
  Var relu(Var a);
  Var gelu(Var a);
  Var softmax_lastdim(Var a);
  Var layer_norm_lastdim(Var a, double eps = 1e-5);
  Var embedding_gather(Var table, std::span<const std::int32_t> ids);
  Var concat(std::span<const Var> parts);
  Var slice_cols(Var a, std::size_t start, std::size_t count);
  Var slice_rows(Var a, std::size_t start, std::size_t count);
  Var cross_entropy_with_logits(Var logits, std::size_t label);
  Var reduce_mean(Var a);
  Var reduce_sum(Var a);

  // Copies every row of parts[i] to the positions [s, s + rows_i) for each
  // start s in starts[i]; all other rows of the n x d result are zero. The
  // gradient of parts[i] is the sum over its occurrences.
  Var scatter_rows(std::span<const Var> parts, const std::vector<std::vector<std::size_t>>& starts,
                   std::size_t n, std::size_t d);

  Var apply(Primitive kind, std::span<const Var> inputs, const PrimitiveAttrs& attrs = {});

  // Propagates d(loss)/d(node) from a scalar loss. Leaf gradients accumulate.
  void backward(Var loss);
  std::vector<Tensor<T>> backward(Var loss, std::span<const Var> leaves);

  const Tensor<T>& value(Var v) const;
  // Zero tensor of the right shape if nothing reached the node.
  Tensor<T> grad(Var v) const;
  bool has_grad(Var v) const;
  void zero_grad();

  bool tracks_gradients() const { return track_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* borrowed = nullptr;
    Tensor<T> grad;
    std::vector<std::uint32_t> inputs;
    std::function<void(Graph&, std::uint32_t)> backward_fn;
    bool requires_grad = false;
    bool leaf = false;

    const Tensor<T>& value() const { return borrowed != nullptr ? *borrowed : owned; }
  };

  Node& node(Var v);
  const Node& node(Var v) const;
  Var push(Tensor<T> value, std::vector<std::uint32_t> inputs,
           std::function<void(Graph&, std::uint32_t)> backward_fn);
  // Gradient buffer of node `index`, allocated on first use.
  Tensor<T>& grad_buffer(std::uint32_t index);
  bool needs_grad(std::uint32_t index) const { return nodes_[index].requires_grad; }

  bool track_;
  std::vector<Node> nodes_;
};

// Evaluates one primitive on concrete tensors without recording gradients.
template <class T>
Tensor<T> primitive_forward(Primitive kind, std::span<const Tensor<T>> inputs,
                            const PrimitiveAttrs& attrs = {});

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace codeadv
