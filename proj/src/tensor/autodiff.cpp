// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace codeadv {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::string_view primitive_name(Primitive kind) {
  switch (kind) {
    case Primitive::kMatmul: return "matmul";
    case Primitive::kAdd: return "add";
    case Primitive::kScale: return "scale";
    case Primitive::kRelu: return "relu";
    case Primitive::kGelu: return "gelu";
    case Primitive::kSoftmaxLastDim: return "softmax_lastdim";
    case Primitive::kLayerNormLastDim: return "layer_norm_lastdim";
    case Primitive::kEmbeddingGather: return "embedding_gather";
    case Primitive::kConcat: return "concat";
    case Primitive::kCrossEntropyWithLogits: return "cross_entropy_with_logits";
    case Primitive::kReduceMean: return "reduce_mean";
  }
  return "unknown";
}

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <class T>
using MutMap = Eigen::Map<RowMat<T>>;

template <class T>
ConstMap<T> as_matrix(const Tensor<T>& t) {
  return ConstMap<T>(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

template <class T>
MutMap<T> as_matrix(Tensor<T>& t) {
  return MutMap<T>(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_mismatch(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

void require_matrix(std::string_view op, const Shape& s) {
  if (s.size() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(s));
}

std::size_t row_vector_length(const Shape& s) {
  // Accept [m] or [1, m].
  if (s.size() == 1) return s[0];
  if (s.size() == 2 && s[0] == 1) return s[1];
  return 0;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

template <class T>
typename Graph<T>::Node& Graph<T>::node(Var v) {
  if (!v.valid() || v.index >= nodes_.size()) throw std::out_of_range("invalid graph variable");
  return nodes_[v.index];
}

template <class T>
const typename Graph<T>::Node& Graph<T>::node(Var v) const {
  if (!v.valid() || v.index >= nodes_.size()) throw std::out_of_range("invalid graph variable");
  return nodes_[v.index];
}

template <class T>
Var Graph<T>::push(Tensor<T> value, std::vector<std::uint32_t> inputs,
                   std::function<void(Graph&, std::uint32_t)> backward_fn) {
  Node n;
  n.owned = std::move(value);
  bool any = false;
  for (auto i : inputs) any = any || nodes_[i].requires_grad;
  n.requires_grad = track_ && any;
  if (n.requires_grad) {
    n.backward_fn = std::move(backward_fn);
    n.inputs = std::move(inputs);
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class T>
Tensor<T>& Graph<T>::grad_buffer(std::uint32_t index) {
  Node& n = nodes_[index];
  if (n.grad.empty() && n.value().size() > 0) n.grad = Tensor<T>(n.value().shape());
  return n.grad;
}

template <class T>
Var Graph<T>::param(const Tensor<T>& source) {
  Node n;
  n.borrowed = &source;
  n.requires_grad = track_;
  n.leaf = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class T>
Var Graph<T>::input(Tensor<T> value, bool requires_grad) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = track_ && requires_grad;
  n.leaf = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <class T>
Var Graph<T>::constant(Tensor<T> value) {
  return input(std::move(value), false);
}

template <class T>
const Tensor<T>& Graph<T>::value(Var v) const {
  return node(v).value();
}

template <class T>
Tensor<T> Graph<T>::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) return Tensor<T>(n.value().shape());
  return n.grad;
}

template <class T>
bool Graph<T>::has_grad(Var v) const {
  return !node(v).grad.empty();
}

template <class T>
void Graph<T>::zero_grad() {
  for (Node& n : nodes_) n.grad = Tensor<T>();
}

template <class T>
Var Graph<T>::matmul(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  require_matrix("matmul", A.shape());
  require_matrix("matmul", B.shape());
  if (A.cols() != B.rows()) shape_mismatch("matmul", A.shape(), B.shape());
  Tensor<T> out({A.rows(), B.cols()});
  as_matrix(out).noalias() = as_matrix(A) * as_matrix(B);
  return push(std::move(out), {a.index, b.index}, [](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    const auto ia = n.inputs[0], ib = n.inputs[1];
    auto G = as_matrix(n.grad);
    if (g.needs_grad(ia)) as_matrix(g.grad_buffer(ia)).noalias() += G * as_matrix(g.nodes_[ib].value()).transpose();
    if (g.needs_grad(ib)) as_matrix(g.grad_buffer(ib)).noalias() += as_matrix(g.nodes_[ia].value()).transpose() * G;
  });
}

template <class T>
Var Graph<T>::matmul_nt(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  require_matrix("matmul_nt", A.shape());
  require_matrix("matmul_nt", B.shape());
  if (A.cols() != B.cols()) shape_mismatch("matmul_nt", A.shape(), B.shape());
  Tensor<T> out({A.rows(), B.rows()});
  as_matrix(out).noalias() = as_matrix(A) * as_matrix(B).transpose();
  return push(std::move(out), {a.index, b.index}, [](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    const auto ia = n.inputs[0], ib = n.inputs[1];
    auto G = as_matrix(n.grad);
    if (g.needs_grad(ia)) as_matrix(g.grad_buffer(ia)).noalias() += G * as_matrix(g.nodes_[ib].value());
    if (g.needs_grad(ib)) as_matrix(g.grad_buffer(ib)).noalias() += G.transpose() * as_matrix(g.nodes_[ia].value());
  });
}

template <class T>
Var Graph<T>::add(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.shape() != B.shape()) shape_mismatch("add", A.shape(), B.shape());
  Tensor<T> out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  return push(std::move(out), {a.index, b.index}, [](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    for (auto in : n.inputs) {
      if (!g.needs_grad(in)) continue;
      auto& dst = g.grad_buffer(in);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
    }
  });
}

template <class T>
Var Graph<T>::add_row(Var a, Var row) {
  const auto& A = value(a);
  const auto& R = value(row);
  if (row_vector_length(R.shape()) != A.cols() || A.cols() == 0) shape_mismatch("add_row", A.shape(), R.shape());
  Tensor<T> out = A;
  const std::size_t m = A.cols();
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] += R[c];
  return push(std::move(out), {a.index, row.index}, [](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    const auto ia = n.inputs[0], ir = n.inputs[1];
    if (g.needs_grad(ia)) {
      auto& dst = g.grad_buffer(ia);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
    }
    if (g.needs_grad(ir)) {
      auto& dst = g.grad_buffer(ir);
      const std::size_t m = n.grad.cols();
      for (std::size_t r = 0; r < n.grad.rows(); ++r)
        for (std::size_t c = 0; c < m; ++c) dst[c] += n.grad[r * m + c];
    }
  });
}

template <class T>
Var Graph<T>::mul(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.shape() != B.shape()) shape_mismatch("mul", A.shape(), B.shape());
  Tensor<T> out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  return push(std::move(out), {a.index, b.index}, [](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    const auto ia = n.inputs[0], ib = n.inputs[1];
    if (g.needs_grad(ia)) {
      auto& dst = g.grad_buffer(ia);
      const auto& other = g.nodes_[ib].value();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i] * other[i];
    }
    if (g.needs_grad(ib)) {
      auto& dst = g.grad_buffer(ib);
      const auto& other = g.nodes_[ia].value();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i] * other[i];
    }
  });
}

template <class T>
Var Graph<T>::affine_rows(Var x, Var gamma, Var beta) {
  const auto& X = value(x);
  const auto& G = value(gamma);
  const auto& B = value(beta);
  const std::size_t m = X.cols();
  if (row_vector_length(G.shape()) != m) shape_mismatch("affine_rows", X.shape(), G.shape());
  if (row_vector_length(B.shape()) != m) shape_mismatch("affine_rows", X.shape(), B.shape());
  Tensor<T> out(X.shape());
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = X[r * m + c] * G[c] + B[c];
  return push(std::move(out), {x.index, gamma.index, beta.index}, [](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    const auto ix = n.inputs[0], ig = n.inputs[1], ib = n.inputs[2];
    const auto& X = g.nodes_[ix].value();
    const auto& Gm = g.nodes_[ig].value();
    const std::size_t m = X.cols();
    const std::size_t rows = X.rows();
    if (g.needs_grad(ix)) {
      auto& dst = g.grad_buffer(ix);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < m; ++c) dst[r * m + c] += n.grad[r * m + c] * Gm[c];
    }
    if (g.needs_grad(ig)) {
      auto& dst = g.grad_buffer(ig);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < m; ++c) dst[c] += n.grad[r * m + c] * X[r * m + c];
    }
    if (g.needs_grad(ib)) {
      auto& dst = g.grad_buffer(ib);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < m; ++c) dst[c] += n.grad[r * m + c];
    }
  });
}

template <class T>
Var Graph<T>::scale(Var a, double s) {
  Tensor<T> out = value(a);
  const T k = static_cast<T>(s);
  for (auto& v : out.values()) v *= k;
  return push(std::move(out), {a.index}, [k](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i] * k;
  });
}

template <class T>
Var Graph<T>::relu(Var a) {
  Tensor<T> out = value(a);
  for (auto& v : out.values()) v = v > T{0} ? v : T{0};
  return push(std::move(out), {a.index}, [](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    const auto& X = g.nodes_[n.inputs[0]].value();
    for (std::size_t i = 0; i < dst.size(); ++i)
      if (X[i] > T{0}) dst[i] += n.grad[i];
  });
}

template <class T>
Var Graph<T>::gelu(Var a) {
  const auto& X = value(a);
  Tensor<T> out(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const T x = X[i];
    const T t = std::tanh(static_cast<T>(kGeluC) * (x + static_cast<T>(kGeluA) * x * x * x));
    out[i] = T{0.5} * x * (T{1} + t);
  }
  return push(std::move(out), {a.index}, [](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    const auto& X = g.nodes_[n.inputs[0]].value();
    const T c = static_cast<T>(kGeluC);
    const T k = static_cast<T>(kGeluA);
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const T x = X[i];
      const T t = std::tanh(c * (x + k * x * x * x));
      const T dt = (T{1} - t * t) * c * (T{1} + T{3} * k * x * x);
      dst[i] += n.grad[i] * (T{0.5} * (T{1} + t) + T{0.5} * x * dt);
    }
  });
}

template <class T>
Var Graph<T>::softmax_lastdim(Var a) {
  const auto& X = value(a);
  Tensor<T> out(X.shape());
  const std::size_t m = X.cols();
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const T* x = X.data() + r * m;
    T* y = out.data() + r * m;
    const T mx = *std::max_element(x, x + m);
    T sum = 0;
    for (std::size_t c = 0; c < m; ++c) {
      y[c] = std::exp(x[c] - mx);
      sum += y[c];
    }
    for (std::size_t c = 0; c < m; ++c) y[c] /= sum;
  }
  return push(std::move(out), {a.index}, [](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    const auto& Y = n.value();
    const std::size_t m = Y.cols();
    for (std::size_t r = 0; r < Y.rows(); ++r) {
      const T* y = Y.data() + r * m;
      const T* gy = n.grad.data() + r * m;
      T dot = 0;
      for (std::size_t c = 0; c < m; ++c) dot += gy[c] * y[c];
      T* dx = dst.data() + r * m;
      for (std::size_t c = 0; c < m; ++c) dx[c] += y[c] * (gy[c] - dot);
    }
  });
}

template <class T>
Var Graph<T>::layer_norm_lastdim(Var a, double eps) {
  const auto& X = value(a);
  const std::size_t m = X.cols();
  const std::size_t rows = X.rows();
  if (m == 0) throw ShapeError("layer_norm_lastdim: empty last dimension " + shape_string(X.shape()));
  Tensor<T> out(X.shape());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* x = X.data() + r * m;
    T mean = 0;
    for (std::size_t c = 0; c < m; ++c) mean += x[c];
    mean /= static_cast<T>(m);
    T var = 0;
    for (std::size_t c = 0; c < m; ++c) var += (x[c] - mean) * (x[c] - mean);
    var /= static_cast<T>(m);
    const T is = T{1} / std::sqrt(var + static_cast<T>(eps));
    inv_std[r] = is;
    for (std::size_t c = 0; c < m; ++c) out[r * m + c] = (x[c] - mean) * is;
  }
  return push(std::move(out), {a.index}, [inv_std = std::move(inv_std)](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    const auto& Y = n.value();
    const std::size_t m = Y.cols();
    for (std::size_t r = 0; r < Y.rows(); ++r) {
      const T* y = Y.data() + r * m;
      const T* gy = n.grad.data() + r * m;
      T mean_g = 0, mean_gy = 0;
      for (std::size_t c = 0; c < m; ++c) {
        mean_g += gy[c];
        mean_gy += gy[c] * y[c];
      }
      mean_g /= static_cast<T>(m);
      mean_gy /= static_cast<T>(m);
      T* dx = dst.data() + r * m;
      for (std::size_t c = 0; c < m; ++c) dx[c] += inv_std[r] * (gy[c] - mean_g - y[c] * mean_gy);
    }
  });
}

template <class T>
Var Graph<T>::embedding_gather(Var table, std::span<const std::int32_t> ids) {
  const auto& W = value(table);
  require_matrix("embedding_gather", W.shape());
  const std::size_t d = W.cols();
  Tensor<T> out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= W.rows()) {
      throw ShapeError("embedding_gather: id " + std::to_string(ids[i]) + " outside table " +
                       shape_string(W.shape()));
    }
    std::copy_n(W.data() + static_cast<std::size_t>(ids[i]) * d, d, out.data() + i * d);
  }
  std::vector<std::int32_t> keep(ids.begin(), ids.end());
  return push(std::move(out), {table.index}, [keep = std::move(keep)](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    const std::size_t d = dst.cols();
    for (std::size_t i = 0; i < keep.size(); ++i) {
      T* row = dst.data() + static_cast<std::size_t>(keep[i]) * d;
      const T* gr = n.grad.data() + i * d;
      for (std::size_t c = 0; c < d; ++c) row[c] += gr[c];
    }
  });
}

template <class T>
Var Graph<T>::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t total = 0;
  std::vector<std::uint32_t> inputs;
  std::vector<std::size_t> widths;
  for (Var p : parts) {
    const auto& P = value(p);
    require_matrix("concat", P.shape());
    if (P.rows() != rows) shape_mismatch("concat", value(parts[0]).shape(), P.shape());
    total += P.cols();
    inputs.push_back(p.index);
    widths.push_back(P.cols());
  }
  Tensor<T> out({rows, total});
  std::size_t offset = 0;
  for (Var p : parts) {
    const auto& P = value(p);
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(P.data() + r * P.cols(), P.cols(), out.data() + r * total + offset);
    offset += P.cols();
  }
  return push(std::move(out), std::move(inputs), [widths = std::move(widths)](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    const std::size_t total = n.grad.cols();
    std::size_t offset = 0;
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const auto in = n.inputs[k];
      if (g.needs_grad(in)) {
        auto& dst = g.grad_buffer(in);
        for (std::size_t r = 0; r < n.grad.rows(); ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) dst[r * widths[k] + c] += n.grad[r * total + offset + c];
      }
      offset += widths[k];
    }
  });
}

template <class T>
Var Graph<T>::slice_cols(Var a, std::size_t start, std::size_t count) {
  const auto& A = value(a);
  require_matrix("slice_cols", A.shape());
  if (start + count > A.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + "," + std::to_string(start + count) +
                     ") outside " + shape_string(A.shape()));
  }
  Tensor<T> out({A.rows(), count});
  for (std::size_t r = 0; r < A.rows(); ++r) std::copy_n(A.data() + r * A.cols() + start, count, out.data() + r * count);
  return push(std::move(out), {a.index}, [start](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    const std::size_t count = n.grad.cols();
    for (std::size_t r = 0; r < n.grad.rows(); ++r)
      for (std::size_t c = 0; c < count; ++c) dst[r * dst.cols() + start + c] += n.grad[r * count + c];
  });
}

template <class T>
Var Graph<T>::slice_rows(Var a, std::size_t start, std::size_t count) {
  const auto& A = value(a);
  require_matrix("slice_rows", A.shape());
  if (start + count > A.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(start) + "," + std::to_string(start + count) +
                     ") outside " + shape_string(A.shape()));
  }
  const std::size_t m = A.cols();
  Tensor<T> out({count, m});
  std::copy_n(A.data() + start * m, count * m, out.data());
  return push(std::move(out), {a.index}, [start](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    const std::size_t m = n.grad.cols();
    T* base = dst.data() + start * m;
    for (std::size_t i = 0; i < n.grad.size(); ++i) base[i] += n.grad[i];
  });
}

template <class T>
Var Graph<T>::cross_entropy_with_logits(Var logits, std::size_t label) {
  const auto& Z = value(logits);
  if (Z.rows() != 1 || Z.cols() < 1) throw ShapeError("cross_entropy_with_logits: expected one row of logits, got " + shape_string(Z.shape()));
  if (label >= Z.cols()) {
    throw std::invalid_argument("cross_entropy_with_logits: label " + std::to_string(label) + " outside " +
                                std::to_string(Z.cols()) + " classes");
  }
  const std::size_t c = Z.cols();
  const T mx = *std::max_element(Z.data(), Z.data() + c);
  T sum = 0;
  for (std::size_t i = 0; i < c; ++i) sum += std::exp(Z[i] - mx);
  const T lse = mx + std::log(sum);
  Tensor<T> out = Tensor<T>::scalar(lse - Z[label]);
  return push(std::move(out), {logits.index}, [label, lse](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    const auto& Z = g.nodes_[n.inputs[0]].value();
    const T up = n.grad[0];
    for (std::size_t i = 0; i < Z.size(); ++i) {
      const T p = std::exp(Z[i] - lse);
      dst[i] += up * (p - (i == label ? T{1} : T{0}));
    }
  });
}

template <class T>
Var Graph<T>::reduce_sum(Var a) {
  const auto& A = value(a);
  T s = 0;
  for (T v : A.values()) s += v;
  return push(Tensor<T>::scalar(s), {a.index}, [](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    for (auto& v : dst.values()) v += n.grad[0];
  });
}

template <class T>
Var Graph<T>::reduce_mean(Var a) {
  const auto& A = value(a);
  if (A.size() == 0) throw ShapeError("reduce_mean: empty tensor");
  T s = 0;
  for (T v : A.values()) s += v;
  const T inv = T{1} / static_cast<T>(A.size());
  return push(Tensor<T>::scalar(s * inv), {a.index}, [inv](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    auto& dst = g.grad_buffer(n.inputs[0]);
    for (auto& v : dst.values()) v += n.grad[0] * inv;
  });
}

template <class T>
Var Graph<T>::scatter_rows(std::span<const Var> parts, const std::vector<std::vector<std::size_t>>& starts,
                           std::size_t n, std::size_t d) {
  if (parts.size() != starts.size()) {
    throw std::invalid_argument("scatter_rows: " + std::to_string(parts.size()) + " parts but " +
                                std::to_string(starts.size()) + " placement lists");
  }
  Tensor<T> out({n, d});
  std::vector<std::uint32_t> inputs;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& P = value(parts[i]);
    if (P.rank() != 2 || P.cols() != d) shape_mismatch("scatter_rows", P.shape(), Shape{P.rows(), d});
    for (std::size_t s : starts[i]) {
      if (s + P.rows() > n) {
        throw ShapeError("scatter_rows: occurrence [" + std::to_string(s) + "," + std::to_string(s + P.rows()) +
                         ") outside " + std::to_string(n) + " positions");
      }
      std::copy_n(P.data(), P.size(), out.data() + s * d);
    }
    inputs.push_back(parts[i].index);
  }
  return push(std::move(out), std::move(inputs), [starts](Graph& g, std::uint32_t self) {
    const Node& n = g.nodes_[self];
    const std::size_t d = n.grad.cols();
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      if (!g.needs_grad(n.inputs[i])) continue;
      auto& dst = g.grad_buffer(n.inputs[i]);
      for (std::size_t s : starts[i]) {
        const T* src = n.grad.data() + s * d;
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
  });
}

template <class T>
Var Graph<T>::apply(Primitive kind, std::span<const Var> in, const PrimitiveAttrs& attrs) {
  auto need = [&](std::size_t count) {
    if (in.size() != count) {
      throw std::invalid_argument(std::string(primitive_name(kind)) + ": expected " + std::to_string(count) +
                                  " inputs, got " + std::to_string(in.size()));
    }
  };
  switch (kind) {
    case Primitive::kMatmul: need(2); return matmul(in[0], in[1]);
    case Primitive::kAdd: need(2); return add(in[0], in[1]);
    case Primitive::kScale: need(1); return scale(in[0], attrs.scale);
    case Primitive::kRelu: need(1); return relu(in[0]);
    case Primitive::kGelu: need(1); return gelu(in[0]);
    case Primitive::kSoftmaxLastDim: need(1); return softmax_lastdim(in[0]);
    case Primitive::kLayerNormLastDim: need(1); return layer_norm_lastdim(in[0]);
    case Primitive::kEmbeddingGather: need(1); return embedding_gather(in[0], attrs.ids);
    case Primitive::kConcat: return concat(in);
    case Primitive::kCrossEntropyWithLogits: need(1); return cross_entropy_with_logits(in[0], attrs.label);
    case Primitive::kReduceMean: need(1); return reduce_mean(in[0]);
  }
  throw std::invalid_argument("unknown primitive");
}

template <class T>
void Graph<T>::backward(Var loss) {
  const Node& l = node(loss);
  if (l.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_string(l.value().shape()));
  }
  for (Node& n : nodes_) {
    if (!n.leaf) n.grad = Tensor<T>();
  }
  if (!l.requires_grad) return;
  grad_buffer(loss.index)[0] += T{1};
  for (std::uint32_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.leaf || !n.requires_grad || n.grad.empty() || !n.backward_fn) continue;
    n.backward_fn(*this, i);
  }
}

template <class T>
std::vector<Tensor<T>> Graph<T>::backward(Var loss, std::span<const Var> leaves) {
  backward(loss);
  std::vector<Tensor<T>> out;
  out.reserve(leaves.size());
  for (Var v : leaves) out.push_back(grad(v));
  return out;
}

template <class T>
Tensor<T> primitive_forward(Primitive kind, std::span<const Tensor<T>> inputs, const PrimitiveAttrs& attrs) {
  Graph<T> g(false);
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(g.param(t));
  return g.value(g.apply(kind, vars, attrs));
}

template class Graph<float>;
template class Graph<double>;
template Tensor<float> primitive_forward(Primitive, std::span<const Tensor<float>>, const PrimitiveAttrs&);
template Tensor<double> primitive_forward(Primitive, std::span<const Tensor<double>>, const PrimitiveAttrs&);

}  // namespace codeadv
