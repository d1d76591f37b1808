// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/corpus/program.hpp"

#include <array>
#include <functional>
#include <set>
#include <stdexcept>

#include "codeadv/frontend/profile.hpp"

namespace codeadv::corpus {

using frontend::TokenKind;

namespace {

std::size_t count_statements(const std::vector<Stmt>& block) {
  std::size_t n = 0;
  for (const auto& s : block) n += 1 + count_statements(s.body) + count_statements(s.else_body);
  return n;
}

void check_names(const Ast& ast, const frontend::LanguageProfile& profile) {
  auto check = [&](const std::string& name) {
    if (!profile.is_valid_identifier(name)) throw std::invalid_argument("invalid identifier '" + name + "'");
  };
  std::function<void(const std::vector<Stmt>&)> block = [&](const std::vector<Stmt>& stmts) {
    for (const auto& s : stmts) {
      if (!s.name.empty()) check(s.name);
      if (!s.step_name.empty()) check(s.step_name);
      block(s.body);
      block(s.else_body);
    }
  };
  for (const auto& f : ast.functions) {
    check(f.name);
    for (const auto& p : f.params) check(p.name);
    block(f.body);
    visit_exprs(f.body, [&](const Expr& e) {
      if (e.kind == Expr::Kind::kName || e.kind == Expr::Kind::kIndex) check(e.text);
      if (e.kind == Expr::Kind::kCall && !profile.is_builtin(e.text)) check(e.text);
    });
  }
}

bool is_int(const Expr& e, std::string_view value) { return e.kind == Expr::Kind::kInt && e.text == value; }

bool is_len_call(const Expr& e) { return e.kind == Expr::Kind::kCall && e.text == "len"; }

// Variable v such that `cond` being true implies v != 0.
void nonzero_names(const Expr& cond, std::set<std::string>& out) {
  const Expr& c = strip_identities(cond);
  if (c.kind != Expr::Kind::kBinary) return;
  if (c.text == "&&") {
    nonzero_names(c.args[0], out);
    nonzero_names(c.args[1], out);
    return;
  }
  if (c.text != "!=") return;
  const Expr& l = strip_identities(c.args[0]);
  const Expr& r = strip_identities(c.args[1]);
  if (l.kind == Expr::Kind::kName && is_int(r, "0")) out.insert(l.text);
  if (r.kind == Expr::Kind::kName && is_int(l, "0")) out.insert(r.text);
}

// `if (v == 0) { ...; return ...; }` without else: v != 0 afterwards.
std::optional<std::string> early_return_guard(const Stmt& s) {
  if (s.kind != Stmt::Kind::kIf || s.has_else || s.body.empty()) return std::nullopt;
  if (s.body.back().kind != Stmt::Kind::kReturn) return std::nullopt;
  const Expr& c = strip_identities(s.exprs[0]);
  if (c.kind != Expr::Kind::kBinary || c.text != "==") return std::nullopt;
  const Expr& l = strip_identities(c.args[0]);
  const Expr& r = strip_identities(c.args[1]);
  if (l.kind == Expr::Kind::kName && is_int(r, "0")) return l.text;
  if (r.kind == Expr::Kind::kName && is_int(l, "0")) return r.text;
  return std::nullopt;
}

class Analyzer {
 public:
  OracleResult run(const Ast& ast) {
    for (const auto& f : ast.functions) {
      divisions(f.body, {});
      loops(f.body);
      std::set<std::string> released;
      releases(f.body, released);
    }
    return std::move(result_);
  }

 private:
  void report(DefectKind k) { result_.defects.push_back(k); }

  void check_divisions(const Expr& e, const std::set<std::string>& guarded) {
    visit_exprs(e, [&](const Expr& x) {
      if (x.kind != Expr::Kind::kBinary || (x.text != "/" && x.text != "%")) return;
      const Expr& d = strip_identities(x.args[1]);
      bool safe = false;
      if (d.kind == Expr::Kind::kName) safe = guarded.contains(d.text);
      if (d.kind == Expr::Kind::kInt) safe = d.text != "0";
      if (!safe) report(DefectKind::kUnguardedDivision);
    });
  }

  void divisions(const std::vector<Stmt>& block, std::set<std::string> guarded) {
    for (const auto& s : block) {
      for (const auto& e : s.exprs) check_divisions(e, guarded);
      if (s.kind == Stmt::Kind::kIf) {
        auto inner = guarded;
        nonzero_names(s.exprs[0], inner);
        divisions(s.body, inner);
        divisions(s.else_body, guarded);
      } else {
        divisions(s.body, guarded);
      }
      if (s.kind == Stmt::Kind::kDecl || s.kind == Stmt::Kind::kAssign) guarded.erase(s.name);
      if (auto v = early_return_guard(s)) guarded.insert(*v);
    }
  }

  void loops(const std::vector<Stmt>& block) {
    for (const auto& s : block) {
      if (s.kind == Stmt::Kind::kFor) {
        const Expr& c = strip_identities(s.exprs[1]);
        if (c.kind == Expr::Kind::kBinary) {
          const Expr& l = strip_identities(c.args[0]);
          const Expr& r = strip_identities(c.args[1]);
          const bool fwd = c.text == "<=" && l.kind == Expr::Kind::kName && l.text == s.name && is_len_call(r);
          const bool rev = c.text == ">=" && r.kind == Expr::Kind::kName && r.text == s.name && is_len_call(l);
          if (fwd || rev) report(DefectKind::kOffByOneLoop);
        }
      }
      loops(s.body);
      loops(s.else_body);
    }
  }

  void reads(const Expr& e, const std::set<std::string>& released) {
    visit_exprs(e, [&](const Expr& x) {
      if ((x.kind == Expr::Kind::kName || x.kind == Expr::Kind::kIndex) && released.contains(x.text)) {
        report(DefectKind::kUseAfterFree);
      }
    });
  }

  // Walks statements in source order. Branches are analysed separately and
  // their released sets merged by union.
  void releases(const std::vector<Stmt>& block, std::set<std::string>& released) {
    for (const auto& s : block) {
      switch (s.kind) {
        case Stmt::Kind::kDecl:
        case Stmt::Kind::kAssign:
          reads(s.exprs[0], released);
          released.erase(s.name);
          break;
        case Stmt::Kind::kStore:
          if (released.contains(s.name)) report(DefectKind::kUseAfterFree);
          reads(s.exprs[0], released);
          reads(s.exprs[1], released);
          break;
        case Stmt::Kind::kIf: {
          reads(s.exprs[0], released);
          auto then_set = released;
          auto else_set = released;
          releases(s.body, then_set);
          releases(s.else_body, else_set);
          released = std::move(then_set);
          released.insert(else_set.begin(), else_set.end());
          break;
        }
        case Stmt::Kind::kFor:
          reads(s.exprs[0], released);
          released.erase(s.name);
          reads(s.exprs[1], released);
          releases(s.body, released);
          reads(s.exprs[2], released);
          released.erase(s.step_name);
          break;
        case Stmt::Kind::kWhile:
          reads(s.exprs[0], released);
          releases(s.body, released);
          break;
        case Stmt::Kind::kReturn:
          for (const auto& e : s.exprs) reads(e, released);
          break;
        case Stmt::Kind::kExpr: {
          const Expr& e = strip_identities(s.exprs[0]);
          if (e.kind == Expr::Kind::kCall && e.text == "free" && e.args.size() == 1 &&
              strip_identities(e.args[0]).kind == Expr::Kind::kName) {
            const std::string& p = strip_identities(e.args[0]).text;
            if (released.contains(p)) report(DefectKind::kUseAfterFree);
            released.insert(p);
          } else {
            reads(s.exprs[0], released);
          }
          break;
        }
        case Stmt::Kind::kBreak:
        case Stmt::Kind::kContinue:
          break;
      }
    }
  }

  OracleResult result_;
};

}  // namespace

const Expr& strip_identities(const Expr& e) {
  const Expr* cur = &e;
  for (;;) {
    if (cur->kind == Expr::Kind::kParen) {
      cur = &cur->args[0];
    } else if (cur->kind == Expr::Kind::kBinary && cur->text == "+" && is_int(cur->args[1], "0")) {
      cur = &cur->args[0];
    } else if (cur->kind == Expr::Kind::kBinary && cur->text == "&&" && cur->args[1].kind == Expr::Kind::kBool &&
               cur->args[1].text == "true") {
      cur = &cur->args[0];
    } else {
      return *cur;
    }
  }
}

Program::Program(Ast ast) : ast_(std::move(ast)) {
  const auto profile = frontend::LanguageProfile::minilang();
  check_names(ast_, profile);
  source_ = render(ast_);
  tokens_ = frontend::lex(source_, profile);
  std::set<std::string, std::less<>> seen;
  for (const auto& t : tokens_) {
    if (t.kind == TokenKind::kIdentifier && seen.insert(t.text).second) identifiers_.push_back(t.text);
  }
  if (parse(source_) != ast_) throw std::logic_error("rendered program does not re-parse to its AST");
}

Program Program::from_source(std::string_view source) { return Program(parse(source)); }

std::size_t Program::statement_count() const {
  std::size_t n = 0;
  for (const auto& f : ast_.functions) n += count_statements(f.body);
  return n;
}

std::string_view defect_kind_name(DefectKind kind) {
  switch (kind) {
    case DefectKind::kUnguardedDivision:
      return "unguarded_division";
    case DefectKind::kOffByOneLoop:
      return "off_by_one_loop";
    case DefectKind::kUseAfterFree:
      return "use_after_free";
  }
  return "unknown";
}

std::optional<DefectKind> parse_defect_kind(std::string_view name) {
  for (auto k : {DefectKind::kUnguardedDivision, DefectKind::kOffByOneLoop, DefectKind::kUseAfterFree}) {
    if (defect_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

OracleResult analyze(const Ast& ast) { return Analyzer().run(ast); }

int oracle_label(const Program& program) { return analyze(program.ast()).label(); }

}  // namespace codeadv::corpus
