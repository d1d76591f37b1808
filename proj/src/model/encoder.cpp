// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/encoder.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "codeadv/rng.hpp"

namespace codeadv {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

constexpr const char* kSlotNames[] = {"attn.wq", "attn.bq", "attn.wk", "attn.bk", "attn.wv", "attn.bv",
                                      "attn.wo", "attn.bo", "ln1.gain", "ln1.bias", "ffn.w1", "ffn.b1",
                                      "ffn.w2", "ffn.b2", "ln2.gain", "ln2.bias"};

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <class T>
Eigen::Map<const RowMat<T>> mat(const Tensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
template <class T>
Eigen::Map<const RowVec<T>> vec(const Tensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.size())};
}

template <class T>
void layer_norm_affine(RowMat<T>& h, const Tensor<T>& gain, const Tensor<T>& bias) {
  const auto m = h.cols();
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    T* x = h.data() + r * m;
    T mean = 0;
    for (Eigen::Index c = 0; c < m; ++c) mean += x[c];
    mean /= static_cast<T>(m);
    T var = 0;
    for (Eigen::Index c = 0; c < m; ++c) var += (x[c] - mean) * (x[c] - mean);
    var /= static_cast<T>(m);
    const T is = T{1} / std::sqrt(var + static_cast<T>(kLnEps));
    for (Eigen::Index c = 0; c < m; ++c) x[c] = (x[c] - mean) * is * gain[c] + bias[c];
  }
}

template <class T>
Tensor<T> truncated_normal(Shape shape, double std, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) {
    double x;
    do {
      x = rng.normal();
    } while (std::abs(x) > 2.0);
    v = static_cast<T>(x * std);
  }
  return t;
}

template <class T>
Tensor<T> dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  Tensor<T> mask({rows, cols});
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& v : mask.values()) v = rng.bernoulli(rate) ? T{0} : keep;
  return mask;
}

}  // namespace

void EncoderConfig::validate() const {
  if (d == 0 || heads == 0 || d % heads != 0) throw std::invalid_argument("encoder: d must be a positive multiple of heads");
  if (layers == 0 || d_ff == 0) throw std::invalid_argument("encoder: layers and d_ff must be positive");
  if (max_len < 2) throw std::invalid_argument("encoder: max_len must be at least 2");
  if (classes < 2) throw std::invalid_argument("encoder: at least two classes required");
  if (vocab == 0) throw std::invalid_argument("encoder: vocab size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("encoder: dropout must be in [0, 1)");
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"d", d},         {"layers", layers},   {"heads", heads},     {"d_ff", d_ff},
          {"max_len", max_len}, {"vocab", vocab}, {"classes", classes}, {"dropout", dropout}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.d = j.value("d", c.d);
  c.layers = j.value("layers", c.layers);
  c.heads = j.value("heads", c.heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.max_len = j.value("max_len", c.max_len);
  c.vocab = j.value("vocab", c.vocab);
  c.classes = j.value("classes", c.classes);
  c.dropout = j.value("dropout", c.dropout);
  return c;
}

template <class T>
EncoderParams<T>::EncoderParams(const EncoderConfig& config) : config_(config) {
  config.validate();
  const std::size_t d = config.d;
  auto add = [&](std::string name, Shape shape, T fill = T{0}) {
    names_.push_back(std::move(name));
    tensors_.push_back(Tensor<T>::filled(std::move(shape), fill));
  };
  add("embed.token", {config.vocab, d});
  add("embed.position", {config.max_len, d});
  add("embed.ln.gain", {d}, T{1});
  add("embed.ln.bias", {d});
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    for (std::size_t s = 0; s < kLayerSlots; ++s) {
      const std::string name = p + kSlotNames[s];
      switch (s) {
        case kWq:
        case kWk:
        case kWv:
        case kWo:
          add(name, {d, d});
          break;
        case kW1:
          add(name, {d, config.d_ff});
          break;
        case kB1:
          add(name, {config.d_ff});
          break;
        case kW2:
          add(name, {config.d_ff, d});
          break;
        case kLn1Gain:
        case kLn2Gain:
          add(name, {d}, T{1});
          break;
        default:
          add(name, {d});
          break;
      }
    }
  }
  add("classifier.weight", {config.classes, d});
  add("classifier.bias", {config.classes});
}

template <class T>
std::size_t EncoderParams<T>::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

template <class T>
Tensor<T>& EncoderParams<T>::get(std::string_view name) {
  return tensors_[index_of(name)];
}

template <class T>
const Tensor<T>& EncoderParams<T>::get(std::string_view name) const {
  return tensors_[index_of(name)];
}

template <class T>
std::size_t EncoderParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

template <class T>
bool EncoderParams<T>::all_finite() const {
  for (const auto& t : tensors_) {
    if (!codeadv::all_finite(t)) return false;
  }
  return true;
}

template <class T>
EncoderParams<T> init_params(const EncoderConfig& config, std::uint64_t seed) {
  EncoderParams<T> p(config);
  Rng rng(derive_seed(seed, "init_params"));
  for (std::size_t i = 0; i < p.size(); ++i) {
    // Matrices get the truncated normal; vectors keep their identity values.
    if (p[i].rank() == 2) p[i] = truncated_normal<T>(p[i].shape(), 0.02, rng);
  }
  return p;
}

template <class T>
BoundParams bind_params(Graph<T>& g, const EncoderParams<T>& params) {
  BoundParams b;
  b.vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) b.vars.push_back(g.param(params[i]));
  return b;
}

template <class T>
Var embedding_sum(Graph<T>& g, const BoundParams& bound, const EncoderParams<T>& params,
                  std::span<const std::int32_t> ids, Var delta) {
  using P = EncoderParams<T>;
  const auto& cfg = params.config();
  const std::size_t n = ids.size();
  if (n == 0 || n > cfg.max_len) {
    throw ShapeError("forward: sequence length " + std::to_string(n) + " outside [1, " + std::to_string(cfg.max_len) + "]");
  }
  if (delta.valid() && g.value(delta).shape() != Shape{n, cfg.d}) {
    throw ShapeError("forward: delta shape " + shape_string(g.value(delta).shape()) + " does not match " +
                     shape_string(Shape{n, cfg.d}));
  }
  const auto& v = bound.vars;
  Var h = g.add(g.embedding_gather(v[P::kTokenEmbedding], ids), g.slice_rows(v[P::kPositionEmbedding], 0, n));
  if (delta.valid()) h = g.add(h, delta);
  return h;
}

template <class T>
Var forward(Graph<T>& g, const BoundParams& bound, const EncoderParams<T>& params, std::span<const std::int32_t> ids,
            Var delta, const ForwardOptions& options) {
  using P = EncoderParams<T>;
  const auto& cfg = params.config();
  const std::size_t n = ids.size();
  const std::size_t d = cfg.d;
  Var h = embedding_sum(g, bound, params, ids, delta);
  const auto& v = bound.vars;
  const bool drop = options.dropout_seed.has_value() && cfg.dropout > 0.0;
  Rng rng(drop ? *options.dropout_seed : 0);
  auto dropout = [&](Var x) {
    if (!drop) return x;
    return g.mul(x, g.constant(dropout_mask<T>(g.value(x).rows(), g.value(x).cols(), cfg.dropout, rng)));
  };
  auto linear = [&](Var x, std::size_t w, std::size_t b) { return g.add_row(g.matmul(x, v[w]), v[b]); };
  auto norm = [&](Var x, std::size_t gain, std::size_t bias) {
    return g.affine_rows(g.layer_norm_lastdim(x, kLnEps), v[gain], v[bias]);
  };

  h = dropout(norm(h, P::kEmbLnGain, P::kEmbLnBias));

  const std::size_t dh = d / cfg.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const Var k = linear(h, P::layer(l, P::kWk), P::layer(l, P::kBk));
    const Var val = linear(h, P::layer(l, P::kWv), P::layer(l, P::kBv));
    // Only the <cls> row reaches the classifier, so the last layer computes
    // queries, attention output and feed-forward for that row alone.
    if (l + 1 == cfg.layers && n > 1) h = g.slice_rows(h, 0, 1);
    const Var q = linear(h, P::layer(l, P::kWq), P::layer(l, P::kBq));
    std::vector<Var> heads;
    for (std::size_t hd = 0; hd < cfg.heads; ++hd) {
      const Var qh = g.slice_cols(q, hd * dh, dh);
      const Var kh = g.slice_cols(k, hd * dh, dh);
      const Var vh = g.slice_cols(val, hd * dh, dh);
      const Var att = g.softmax_lastdim(g.scale(g.matmul_nt(qh, kh), inv_sqrt));
      heads.push_back(g.matmul(att, vh));
    }
    const Var joined = cfg.heads == 1 ? heads[0] : g.concat(heads);
    const Var attn = dropout(linear(joined, P::layer(l, P::kWo), P::layer(l, P::kBo)));
    h = norm(g.add(h, attn), P::layer(l, P::kLn1Gain), P::layer(l, P::kLn1Bias));
    const Var ff = g.gelu(linear(h, P::layer(l, P::kW1), P::layer(l, P::kB1)));
    const Var out = dropout(linear(ff, P::layer(l, P::kW2), P::layer(l, P::kB2)));
    h = norm(g.add(h, out), P::layer(l, P::kLn2Gain), P::layer(l, P::kLn2Bias));
  }
  const Var pooled = g.value(h).rows() == 1 ? h : g.slice_rows(h, 0, 1);
  return g.add_row(g.matmul_nt(pooled, v[params.classifier_weight()]), v[params.classifier_bias()]);
}

template <class T>
std::vector<double> infer_logits(const EncoderParams<T>& params, std::span<const std::int32_t> ids,
                                 const Tensor<T>* delta) {
  using P = EncoderParams<T>;
  const auto& cfg = params.config();
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto d = static_cast<Eigen::Index>(cfg.d);
  if (n == 0 || ids.size() > cfg.max_len) throw ShapeError("infer_logits: sequence length out of range");
  if (delta != nullptr && delta->shape() != Shape{ids.size(), cfg.d}) {
    throw ShapeError("infer_logits: delta shape " + shape_string(delta->shape()) + " does not match " +
                     shape_string(Shape{ids.size(), cfg.d}));
  }
  const auto tok = mat(params[P::kTokenEmbedding]);
  const auto pos = mat(params[P::kPositionEmbedding]);
  RowMat<T> h(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto id = ids[static_cast<std::size_t>(i)];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab) throw ShapeError("infer_logits: id outside vocabulary");
    h.row(i) = tok.row(id) + pos.row(i);
  }
  if (delta != nullptr) h += mat(*delta);
  layer_norm_affine(h, params[P::kEmbLnGain], params[P::kEmbLnBias]);

  const auto dh = d / static_cast<Eigen::Index>(cfg.heads);
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  RowMat<T> q, k, v, joined, scores, ff;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    auto w = [&](typename P::LayerSlot s) { return mat(params[P::layer(l, s)]); };
    auto b = [&](typename P::LayerSlot s) { return vec(params[P::layer(l, s)]); };
    k.noalias() = h * w(P::kWk);
    k.rowwise() += b(P::kBk);
    v.noalias() = h * w(P::kWv);
    v.rowwise() += b(P::kBv);
    if (l + 1 == cfg.layers && n > 1) h = RowMat<T>(h.topRows(1));  // <cls> row only, as in forward()
    q.noalias() = h * w(P::kWq);
    q.rowwise() += b(P::kBq);
    joined.resize(h.rows(), d);
    for (Eigen::Index hd = 0; hd < static_cast<Eigen::Index>(cfg.heads); ++hd) {
      scores.noalias() = q.middleCols(hd * dh, dh) * k.middleCols(hd * dh, dh).transpose();
      scores *= inv_sqrt;
      for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        const T mx = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - mx).exp();
        scores.row(r) /= scores.row(r).sum();
      }
      joined.middleCols(hd * dh, dh).noalias() = scores * v.middleCols(hd * dh, dh);
    }
    RowMat<T> attn = joined * w(P::kWo);
    attn.rowwise() += b(P::kBo);
    h += attn;
    layer_norm_affine(h, params[P::layer(l, P::kLn1Gain)], params[P::layer(l, P::kLn1Bias)]);
    ff.noalias() = h * w(P::kW1);
    ff.rowwise() += b(P::kB1);
    ff = ff.unaryExpr([](T x) {
      return static_cast<T>(0.5) * x *
             (T{1} + std::tanh(static_cast<T>(kGeluC) * (x + static_cast<T>(kGeluA) * x * x * x)));
    });
    RowMat<T> out = ff * w(P::kW2);
    out.rowwise() += b(P::kB2);
    h += out;
    layer_norm_affine(h, params[P::layer(l, P::kLn2Gain)], params[P::layer(l, P::kLn2Bias)]);
  }
  const auto cw = mat(params[params.classifier_weight()]);
  const auto cb = params[params.classifier_bias()];
  std::vector<double> logits(cfg.classes);
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    logits[c] = static_cast<double>(h.row(0).dot(cw.row(static_cast<Eigen::Index>(c))) + cb[c]);
  }
  return logits;
}

std::vector<double> softmax(std::span<const double> logits) {
  double mx = -INFINITY;
  for (double z : logits) mx = std::max(mx, z);
  std::vector<double> p(logits.size());
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] = std::exp(logits[i] - mx));
  for (auto& x : p) x /= s;
  return p;
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) throw std::invalid_argument("cross_entropy: label outside logits");
  double mx = -INFINITY;
  for (double z : logits) mx = std::max(mx, z);
  double s = 0;
  for (double z : logits) s += std::exp(z - mx);
  return mx + std::log(s) - logits[label];
}

template class EncoderParams<float>;
template class EncoderParams<double>;
template EncoderParams<float> init_params<float>(const EncoderConfig&, std::uint64_t);
template EncoderParams<double> init_params<double>(const EncoderConfig&, std::uint64_t);
template BoundParams bind_params<float>(Graph<float>&, const EncoderParams<float>&);
template BoundParams bind_params<double>(Graph<double>&, const EncoderParams<double>&);
template Var embedding_sum<float>(Graph<float>&, const BoundParams&, const EncoderParams<float>&,
                                  std::span<const std::int32_t>, Var);
template Var embedding_sum<double>(Graph<double>&, const BoundParams&, const EncoderParams<double>&,
                                   std::span<const std::int32_t>, Var);
template Var forward<float>(Graph<float>&, const BoundParams&, const EncoderParams<float>&,
                            std::span<const std::int32_t>, Var, const ForwardOptions&);
template Var forward<double>(Graph<double>&, const BoundParams&, const EncoderParams<double>&,
                             std::span<const std::int32_t>, Var, const ForwardOptions&);
template std::vector<double> infer_logits<float>(const EncoderParams<float>&, std::span<const std::int32_t>,
                                                 const Tensor<float>*);
template std::vector<double> infer_logits<double>(const EncoderParams<double>&, std::span<const std::int32_t>,
                                                  const Tensor<double>*);

}  // namespace codeadv
