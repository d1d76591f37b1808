// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/corpus/generator.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <set>
#include <stdexcept>

#include "codeadv/frontend/profile.hpp"

namespace codeadv::corpus {

namespace {

constexpr std::array<std::string_view, 48> kWords = {
    "count", "index", "value", "total", "item",   "node",   "buffer", "data",  "size",   "offset", "result", "temp",
    "accum", "step",  "limit", "ratio", "weight", "score",  "input",  "output", "cursor", "entry", "key",    "flag",
    "level", "depth", "width", "height", "block", "chunk",  "frame",  "packet", "record", "token", "state",  "mode",
    "delta", "base",  "scale", "factor", "queue", "stack",  "slot",   "span",   "target", "source", "head",  "tail"};

std::string capitalize(std::string_view w) {
  std::string s(w);
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

Expr N(const std::string& n) { return Expr::name(n); }
Expr I(long long v) { return Expr::integer(v); }
Expr B(const std::string& op, Expr l, Expr r) { return make_binary(op, std::move(l), std::move(r)); }

Stmt decl(const std::string& type, const std::string& name, Expr init) {
  Stmt s;
  s.kind = Stmt::Kind::kDecl;
  s.type = type;
  s.name = name;
  s.exprs.push_back(std::move(init));
  return s;
}
Stmt assign(const std::string& name, Expr value) {
  Stmt s;
  s.kind = Stmt::Kind::kAssign;
  s.name = name;
  s.exprs.push_back(std::move(value));
  return s;
}
Stmt store(const std::string& name, Expr index, Expr value) {
  Stmt s;
  s.kind = Stmt::Kind::kStore;
  s.name = name;
  s.exprs.push_back(std::move(index));
  s.exprs.push_back(std::move(value));
  return s;
}
Stmt if_stmt(Expr cond, std::vector<Stmt> body, std::optional<std::vector<Stmt>> else_body = std::nullopt) {
  Stmt s;
  s.kind = Stmt::Kind::kIf;
  s.exprs.push_back(std::move(cond));
  s.body = std::move(body);
  if (else_body) {
    s.has_else = true;
    s.else_body = std::move(*else_body);
  }
  return s;
}
Stmt for_stmt(const std::string& var, Expr init, Expr cond, Expr step, std::vector<Stmt> body) {
  Stmt s;
  s.kind = Stmt::Kind::kFor;
  s.type = "int";
  s.name = var;
  s.step_name = var;
  s.exprs = {std::move(init), std::move(cond), std::move(step)};
  s.body = std::move(body);
  return s;
}
Stmt while_stmt(Expr cond, std::vector<Stmt> body) {
  Stmt s;
  s.kind = Stmt::Kind::kWhile;
  s.exprs.push_back(std::move(cond));
  s.body = std::move(body);
  return s;
}
Stmt ret(Expr e) {
  Stmt s;
  s.kind = Stmt::Kind::kReturn;
  s.exprs.push_back(std::move(e));
  return s;
}
Stmt expr_stmt(Expr e) {
  Stmt s;
  s.kind = Stmt::Kind::kExpr;
  s.exprs.push_back(std::move(e));
  return s;
}

// Builds one function. Every name comes from the pool, distinct within the
// function. Pointers are owned by a single motif so releases never leak into
// other motifs.
class Builder {
 public:
  Builder(Rng& rng, const GenConfig& config, const std::vector<std::string>& pool, int label)
      : rng_(rng), config_(config), pool_(pool) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (name_group(pool[i]) == label) biased_.push_back(i);
    }
    acc_ = fresh();
  }

  std::string fresh() {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      std::size_t k;
      if (!biased_.empty() && rng_.bernoulli(config_.name_bias)) {
        k = biased_[rng_.uniform_int(biased_.size())];
      } else {
        k = rng_.uniform_int(pool_.size());
      }
      if (used_.insert(pool_[k]).second) return pool_[k];
    }
    throw std::runtime_error("name pool too small for program");
  }

  // An int parameter; new with probability decreasing in the current count.
  std::string int_param(const std::set<std::string>& avoid = {}) {
    std::vector<std::string> options;
    for (const auto& n : ints_) {
      if (!avoid.contains(n)) options.push_back(n);
    }
    if (options.empty() || (ints_.size() < 3 && rng_.bernoulli(0.4))) {
      auto n = fresh();
      ints_.push_back(n);
      params_.push_back({"int", n});
      return n;
    }
    return options[rng_.uniform_int(options.size())];
  }
  std::string ptr_param() {
    auto n = fresh();
    params_.push_back({"ptr", n});
    return n;
  }
  long long small_int() { return rng_.uniform_range(2, 9); }

  std::vector<Stmt> division(bool defective) {
    const auto x = int_param();
    const auto y = int_param({x});
    const Expr num = N(x);
    const std::string op = rng_.bernoulli(0.75) ? "/" : "%";
    auto use = [&](Expr divisor) { return assign(acc_, B("+", N(acc_), B(op, num, std::move(divisor)))); };
    auto nonzero = [&](const std::string& v) { return B("!=", N(v), I(0)); };
    std::vector<Stmt> out;
    if (!defective) {
      switch (rng_.uniform_int(4)) {
        case 0:
          out.push_back(if_stmt(nonzero(y), {use(N(y))}));
          break;
        case 1:
          out.push_back(if_stmt(B("==", N(y), I(0)), {ret(N(acc_))}));
          out.push_back(use(N(y)));
          break;
        case 2:
          out.push_back(use(I(small_int())));
          break;
        default:
          out.push_back(if_stmt(B("&&", nonzero(y), B(">", N(x), I(small_int()))), {use(N(y))},
                                std::vector<Stmt>{assign(acc_, B("-", N(acc_), I(1)))}));
          break;
      }
    } else {
      switch (rng_.uniform_int(4)) {
        case 0:
          out.push_back(use(N(y)));
          break;
        case 1: {
          const auto z = int_param({x, y});
          out.push_back(if_stmt(nonzero(z), {use(N(y))}));
          break;
        }
        case 2:
          out.push_back(if_stmt(B("==", N(y), I(0)), {assign(acc_, I(small_int()))}));
          out.push_back(use(N(y)));
          break;
        default:
          out.push_back(if_stmt(nonzero(y), {assign(acc_, B("+", N(acc_), I(1)))}));
          out.push_back(use(N(y)));
          break;
      }
    }
    return out;
  }

  std::vector<Stmt> loop(bool defective) {
    const auto arr = ptr_param();
    const auto i = fresh();
    auto step_up = B("+", N(i), I(1));
    auto length = Expr::call("len", {N(arr)});
    auto sum_body = [&] { return std::vector<Stmt>{assign(acc_, B("+", N(acc_), Expr::index(arr, N(i))))}; };
    std::vector<Stmt> out;
    if (!defective) {
      switch (rng_.uniform_int(4)) {
        case 0:
          out.push_back(for_stmt(i, I(0), B("<", N(i), length), step_up, sum_body()));
          break;
        case 1:
          out.push_back(for_stmt(i, I(0), B("<=", N(i), B("-", length, I(1))), step_up, sum_body()));
          break;
        case 2: {
          const auto bound = int_param();
          out.push_back(for_stmt(i, I(0), B("<=", N(i), N(bound)), step_up,
                                 {assign(acc_, B("+", N(acc_), N(i)))}));
          break;
        }
        default:
          out.push_back(
              for_stmt(i, B("-", length, I(1)), B(">=", N(i), I(0)), B("-", N(i), I(1)), sum_body()));
          break;
      }
    } else {
      switch (rng_.uniform_int(3)) {
        case 0:
          out.push_back(for_stmt(i, I(0), B("<=", N(i), length), step_up, sum_body()));
          break;
        case 1:
          out.push_back(for_stmt(i, I(1), B("<=", N(i), length), step_up,
                                 {store(arr, N(i), N(acc_))}));
          break;
        default:
          out.push_back(for_stmt(i, I(0), B(">=", length, N(i)), step_up, sum_body()));
          break;
      }
    }
    return out;
  }

  std::vector<Stmt> release(bool defective) {
    const auto p = ptr_param();
    auto free_p = [&](const std::string& v) { return expr_stmt(Expr::call("free", {N(v)})); };
    std::vector<Stmt> out;
    if (!defective) {
      switch (rng_.uniform_int(3)) {
        case 0:
          out.push_back(assign(acc_, B("+", N(acc_), Expr::index(p, I(0)))));
          out.push_back(free_p(p));
          break;
        case 1:
          out.push_back(free_p(p));
          out.push_back(assign(p, Expr::call("alloc", {I(small_int())})));
          out.push_back(store(p, I(0), N(acc_)));
          break;
        default: {
          const auto q = ptr_param();
          out.push_back(free_p(q));
          out.push_back(assign(acc_, B("+", N(acc_), Expr::index(p, I(1)))));
          break;
        }
      }
    } else {
      switch (rng_.uniform_int(3)) {
        case 0:
          out.push_back(free_p(p));
          out.push_back(assign(acc_, B("+", N(acc_), Expr::index(p, I(0)))));
          break;
        case 1:
          out.push_back(free_p(p));
          out.push_back(store(p, I(0), N(acc_)));
          break;
        default:
          out.push_back(free_p(p));
          out.push_back(expr_stmt(Expr::call("print", {Expr::index(p, I(small_int()))})));
          break;
      }
    }
    return out;
  }

  std::vector<Stmt> filler() {
    const auto x = int_param();
    switch (rng_.uniform_int(5)) {
      case 0:
        return {assign(acc_, B("+", N(acc_), B("*", N(x), I(small_int()))))};
      case 1: {
        const auto y = int_param({x});
        return {if_stmt(B(">", N(x), N(y)), {assign(acc_, B("-", N(acc_), I(small_int())))})};
      }
      case 2: {
        const auto t = fresh();
        return {decl("int", t, B("+", N(x), I(small_int()))), while_stmt(B(">", N(t), I(0)), {assign(t, B("-", N(t), I(1)))})};
      }
      case 3:
        return {expr_stmt(Expr::call("print", {N(acc_)}))};
      default:
        return {assign(acc_, Expr::call("max", {N(acc_), N(x)}))};
    }
  }

  Ast build(std::optional<DefectKind> defect) {
    const std::size_t motifs =
        static_cast<std::size_t>(rng_.uniform_range(static_cast<std::int64_t>(config_.min_motifs),
                                                    static_cast<std::int64_t>(config_.max_motifs)));
    const std::size_t fillers =
        static_cast<std::size_t>(rng_.uniform_range(static_cast<std::int64_t>(config_.min_fillers),
                                                    static_cast<std::int64_t>(config_.max_fillers)));
    std::vector<std::vector<Stmt>> units;
    const std::size_t bad_slot = defect ? rng_.uniform_int(motifs) : motifs;
    for (std::size_t m = 0; m < motifs; ++m) {
      const bool defective = m == bad_slot;
      std::uint64_t kind = rng_.uniform_int(3);
      if (defective) kind = static_cast<std::uint64_t>(*defect);
      if (kind == 0) units.push_back(division(defective));
      if (kind == 1) units.push_back(loop(defective));
      if (kind == 2) units.push_back(release(defective));
    }
    for (std::size_t f = 0; f < fillers; ++f) units.push_back(filler());
    rng_.shuffle(units);

    Function fn;
    fn.return_type = "int";
    fn.name = fresh();
    fn.body.push_back(decl("int", acc_, I(0)));
    for (auto& u : units)
      for (auto& s : u) fn.body.push_back(std::move(s));
    fn.body.push_back(ret(N(acc_)));
    fn.params = params_;
    Ast ast;
    ast.functions.push_back(std::move(fn));
    return ast;
  }

 private:
  Rng& rng_;
  const GenConfig& config_;
  const std::vector<std::string>& pool_;
  std::vector<std::size_t> biased_;
  std::set<std::string> used_;
  std::vector<std::string> ints_;
  std::vector<Param> params_;
  std::string acc_;
};

}  // namespace

nlohmann::json GenConfig::to_json() const {
  nlohmann::json j = {{"defect_rate", defect_rate}, {"min_motifs", min_motifs}, {"max_motifs", max_motifs},
                      {"min_fillers", min_fillers}, {"max_fillers", max_fillers}, {"name_bias", name_bias}};
  if (!name_pool.empty()) j["name_pool"] = name_pool;
  return j;
}

GenConfig GenConfig::from_json(const nlohmann::json& j) {
  static const std::vector<std::string> keys = {"defect_rate", "min_motifs",  "max_motifs", "min_fillers",
                                                "max_fillers", "name_bias",   "name_pool"};
  if (!j.is_object()) throw std::invalid_argument("generator config: expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw std::invalid_argument("generator config: unknown key '" + key + "'");
    }
  }
  GenConfig c;
  c.defect_rate = j.value("defect_rate", c.defect_rate);
  c.min_motifs = j.value("min_motifs", c.min_motifs);
  c.max_motifs = j.value("max_motifs", c.max_motifs);
  c.min_fillers = j.value("min_fillers", c.min_fillers);
  c.max_fillers = j.value("max_fillers", c.max_fillers);
  c.name_bias = j.value("name_bias", c.name_bias);
  c.name_pool = j.value("name_pool", c.name_pool);
  if (c.defect_rate < 0 || c.defect_rate > 1) throw std::invalid_argument("defect_rate must be in [0, 1]");
  if (c.min_motifs < 1 || c.max_motifs < c.min_motifs) throw std::invalid_argument("bad motif range");
  if (c.max_fillers < c.min_fillers) throw std::invalid_argument("bad filler range");
  if (c.name_bias < 0 || c.name_bias > 1) throw std::invalid_argument("name_bias must be in [0, 1]");
  return c;
}

const std::vector<std::string>& default_name_pool() {
  static const std::vector<std::string> pool = [] {
    std::vector<std::string> out;
    for (auto w : kWords) out.emplace_back(w);
    for (auto a : kWords)
      for (auto b : kWords)
        if (a != b) out.push_back(std::string(a) + capitalize(b));
    for (auto a : kWords)
      for (auto b : kWords)
        if (a != b) out.push_back(std::string(a) + "_" + std::string(b));
    return out;
  }();
  return pool;
}

int name_group(std::string_view name) {
  std::size_t end = 0;
  while (end < name.size() && std::islower(static_cast<unsigned char>(name[end]))) ++end;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name.substr(0, end == 0 ? name.size() : end)) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return static_cast<int>(splitmix64(h) & 1);
}

LabeledSample generate(std::uint64_t seed, const GenConfig& config) {
  const auto& pool = config.name_pool.empty() ? default_name_pool() : config.name_pool;
  const auto profile = frontend::LanguageProfile::minilang();
  for (const auto& n : pool) {
    if (!profile.is_valid_identifier(n)) throw std::invalid_argument("name pool entry '" + n + "' is not an identifier");
  }
  Rng rng(seed);
  const int label = rng.bernoulli(config.defect_rate) ? 1 : 0;
  std::optional<DefectKind> kind;
  if (label == 1) kind = static_cast<DefectKind>(rng.uniform_int(3));
  // Motif templates are built to agree with the oracle; the loop is a guard.
  for (int attempt = 0; attempt < 100; ++attempt) {
    Builder b(rng, config, pool, label);
    Program program(b.build(kind));
    const auto verdict = analyze(program.ast());
    if (verdict.label() == label && (!kind || verdict.defects.front() == *kind)) {
      return {"", std::move(program), label, kind};
    }
  }
  throw std::logic_error("generator could not produce a program matching its label");
}

std::vector<LabeledSample> generate_corpus(std::uint64_t seed, std::size_t count, const GenConfig& config,
                                           const std::string& id_prefix) {
  std::vector<LabeledSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(generate(derive_seed(seed, "corpus", i), config));
    out.back().id = id_prefix + std::to_string(i);
  }
  return out;
}

}  // namespace codeadv::corpus
