// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/corpus/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "codeadv/frontend/profile.hpp"

namespace codeadv::corpus {

namespace {

const frontend::LanguageProfile& profile() {
  static const auto p = frontend::LanguageProfile::minilang();
  return p;
}

void rename_in(std::string& name, const RenameMap& map) {
  if (auto it = map.find(name); it != map.end()) name = it->second;
}

void rename_expr(Expr& e, const RenameMap& map) {
  switch (e.kind) {
    case Expr::Kind::kName:
    case Expr::Kind::kIndex:
      rename_in(e.text, map);
      break;
    case Expr::Kind::kCall:
      if (!profile().is_builtin(e.text)) rename_in(e.text, map);
      break;
    default:
      break;
  }
  for (auto& a : e.args) rename_expr(a, map);
}

void rename_block(std::vector<Stmt>& block, const RenameMap& map) {
  for (auto& s : block) {
    if (!s.name.empty()) rename_in(s.name, map);
    if (!s.step_name.empty()) rename_in(s.step_name, map);
    for (auto& e : s.exprs) rename_expr(e, map);
    rename_block(s.body, map);
    rename_block(s.else_body, map);
  }
}

// Post-order walk over rewrite sites. `chosen(k)` decides site k.
class IdentityRewriter {
 public:
  explicit IdentityRewriter(std::function<bool(std::size_t)> chosen) : chosen_(std::move(chosen)) {}

  std::size_t sites() const { return next_; }

  void block(std::vector<Stmt>& stmts) {
    for (auto& s : stmts) {
      switch (s.kind) {
        case Stmt::Kind::kIf:
        case Stmt::Kind::kWhile:
          condition(s.exprs[0]);
          break;
        case Stmt::Kind::kFor:
          value(s.exprs[0]);
          condition(s.exprs[1]);
          value(s.exprs[2]);
          break;
        case Stmt::Kind::kExpr:
          // Keep statement-level calls recognisable as calls.
          for (auto& a : s.exprs[0].args) value(a);
          break;
        default:
          for (auto& e : s.exprs) value(e);
          break;
      }
      block(s.body);
      block(s.else_body);
    }
  }

 private:
  void condition(Expr& c) {
    value(c);
    if (chosen_(next_++)) c = Expr::binary("&&", Expr::paren(std::move(c)), Expr::boolean(true));
  }

  void value(Expr& e) {
    for (auto& a : e.args) value(a);
    const bool atom = e.kind == Expr::Kind::kName || e.kind == Expr::Kind::kInt || e.kind == Expr::Kind::kIndex;
    if (atom && chosen_(next_++)) e = Expr::paren(Expr::binary("+", std::move(e), Expr::integer(0)));
  }

  std::function<bool(std::size_t)> chosen_;
  std::size_t next_ = 0;
};

Stmt dead_statement(Rng& rng, const std::string& fresh) {
  Stmt d;
  d.kind = Stmt::Kind::kDecl;
  d.type = "int";
  d.name = fresh;
  d.exprs.push_back(Expr::integer(rng.uniform_range(0, 9)));
  if (rng.bernoulli(0.5)) return d;
  Stmt s;
  s.kind = Stmt::Kind::kIf;
  s.exprs.push_back(Expr::boolean(false));
  s.body.push_back(std::move(d));
  return s;
}

}  // namespace

void validate_rename_map(const Program& program, const RenameMap& map) {
  const auto& ids = program.identifiers();
  const std::set<std::string> present(ids.begin(), ids.end());
  std::set<std::string> substitutes;
  for (const auto& [from, to] : map) {
    if (!present.contains(from)) throw RenameError("rename: '" + from + "' is not an identifier of the program");
    if (profile().is_reserved(to)) throw RenameError("rename: substitute '" + to + "' is reserved");
    if (!profile().is_valid_identifier(to)) throw RenameError("rename: substitute '" + to + "' is not an identifier");
    if (!substitutes.insert(to).second) throw RenameError("rename: substitute '" + to + "' used twice");
  }
  for (const auto& name : ids) {
    if (!map.contains(name) && substitutes.contains(name)) {
      throw RenameError("rename: substitute '" + name + "' collides with an existing identifier");
    }
  }
}

Program rename_identifiers(const Program& program, const RenameMap& map) {
  validate_rename_map(program, map);
  Ast ast = program.ast();
  for (auto& f : ast.functions) {
    rename_in(f.name, map);
    for (auto& p : f.params) rename_in(p.name, map);
    rename_block(f.body, map);
  }
  return Program(std::move(ast));
}

RenameMap random_rename_map(const Program& program, const std::vector<std::string>& pool, double fraction, Rng& rng) {
  auto targets = program.identifiers();
  RenameMap map;
  if (targets.empty()) return map;
  rng.shuffle(targets);
  const auto wanted = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(targets.size()))), 1, targets.size());
  std::set<std::string> taken(targets.begin(), targets.end());
  std::vector<std::string> options;
  for (const auto& n : pool) {
    if (!taken.contains(n) && profile().is_valid_identifier(n)) options.push_back(n);
  }
  if (options.size() < wanted) throw std::runtime_error("rename: name pool exhausted");
  for (std::size_t i = 0; i < wanted; ++i) {
    const std::size_t k = i + rng.uniform_int(options.size() - i);
    std::swap(options[i], options[k]);
    map.emplace(targets[i], options[i]);
  }
  return map;
}

Program insert_dead_code(const Program& program, Rng& rng, double intensity, const std::vector<std::string>& pool) {
  Ast ast = program.ast();
  if (ast.functions.empty()) throw std::invalid_argument("dead code: program has no function");
  auto& fn = ast.functions[rng.uniform_int(ast.functions.size())];
  const auto extra = static_cast<std::int64_t>(std::lround(2.0 * std::clamp(intensity, 0.0, 1.0)));
  const auto count = static_cast<std::size_t>(1 + rng.uniform_range(0, extra));
  const auto& ids = program.identifiers();
  std::set<std::string> taken(ids.begin(), ids.end());
  for (std::size_t k = 0; k < count; ++k) {
    std::string fresh;
    for (int attempt = 0; attempt < 1000 && fresh.empty(); ++attempt) {
      const auto& candidate = pool.at(rng.uniform_int(pool.size()));
      if (!taken.contains(candidate) && profile().is_valid_identifier(candidate)) fresh = candidate;
    }
    if (fresh.empty()) throw std::runtime_error("dead code: no fresh name available");
    taken.insert(fresh);
    // Positions before the trailing statement (usually the return).
    const std::size_t slots = fn.body.empty() ? 1 : fn.body.size();
    const auto at = static_cast<std::ptrdiff_t>(rng.uniform_int(slots));
    fn.body.insert(fn.body.begin() + at, dead_statement(rng, fresh));
  }
  return Program(std::move(ast));
}

Program rewrite_identities(const Program& program, Rng& rng, double intensity) {
  Ast ast = program.ast();
  IdentityRewriter counter([](std::size_t) { return false; });
  for (auto& f : ast.functions) counter.block(f.body);
  const std::size_t n = counter.sites();
  if (n == 0) throw std::invalid_argument("identity rewrite: program has no expression");
  const double p = 0.25 * std::clamp(intensity, 0.0, 4.0);
  std::vector<bool> pick(n);
  bool any = false;
  for (std::size_t k = 0; k < n; ++k) any |= (pick[k] = rng.bernoulli(p));
  if (!any) pick[rng.uniform_int(n)] = true;
  IdentityRewriter rewriter([&](std::size_t k) { return pick[k]; });
  for (auto& f : ast.functions) rewriter.block(f.body);
  return Program(std::move(ast));
}

std::string_view transform_kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::kRename:
      return "rename";
    case TransformKind::kDeadCode:
      return "dead_code";
    case TransformKind::kIdentityRewrite:
      return "identity_rewrite";
  }
  return "unknown";
}

nlohmann::json TransformSpec::to_json() const {
  return {{"id", transform_kind_name(id)}, {"seed", seed}, {"intensity", intensity}};
}

TransformSpec TransformSpec::from_json(const nlohmann::json& j) {
  TransformSpec s;
  const auto id = j.at("id").get<std::string>();
  bool found = false;
  for (auto k : {TransformKind::kRename, TransformKind::kDeadCode, TransformKind::kIdentityRewrite}) {
    if (transform_kind_name(k) == id) {
      s.id = k;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("unknown transformation '" + id + "'");
  s.seed = j.value("seed", std::uint64_t{0});
  s.intensity = j.value("intensity", 1.0);
  if (s.intensity < 0) throw std::invalid_argument("transformation intensity must be non-negative");
  return s;
}

std::vector<TransformSpec> transform_specs_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::invalid_argument("transform spec file must hold a JSON array");
  std::vector<TransformSpec> out;
  for (const auto& e : j) out.push_back(TransformSpec::from_json(e));
  return out;
}

std::vector<TransformSpec> default_transform_specs(std::uint64_t seed) {
  return {{TransformKind::kRename, seed, 1.0},
          {TransformKind::kDeadCode, seed, 1.0},
          {TransformKind::kIdentityRewrite, seed, 1.0}};
}

Program apply_transforms(const Program& program, const std::vector<TransformSpec>& specs, std::uint64_t seed,
                         std::uint64_t stream) {
  auto ordered = specs;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const TransformSpec& a, const TransformSpec& b) { return a.id < b.id; });
  Program out = program;
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    const auto& spec = ordered[k];
    Rng rng(derive_seed(seed, transform_kind_name(spec.id), spec.seed, stream, k));
    switch (spec.id) {
      case TransformKind::kRename:
        out = rename_identifiers(out, random_rename_map(out, default_name_pool(), spec.intensity, rng));
        break;
      case TransformKind::kDeadCode:
        out = insert_dead_code(out, rng, spec.intensity);
        break;
      case TransformKind::kIdentityRewrite:
        out = rewrite_identities(out, rng, spec.intensity);
        break;
    }
  }
  return out;
}

std::vector<LabeledSample> build_adv_testset(const std::vector<LabeledSample>& testset,
                                             const std::vector<TransformSpec>& specs, std::uint64_t seed) {
  if (testset.empty()) throw std::invalid_argument("build_adv_testset: empty test set");
  std::vector<LabeledSample> out;
  out.reserve(testset.size());
  for (std::size_t i = 0; i < testset.size(); ++i) {
    const auto& s = testset[i];
    out.push_back({s.id, apply_transforms(s.program, specs, seed, i), s.label, s.defect_kind});
  }
  return out;
}

}  // namespace codeadv::corpus
