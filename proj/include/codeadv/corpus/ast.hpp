// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace codeadv::corpus {

struct Expr {
  enum class Kind { kInt, kBool, kString, kName, kCall, kIndex, kUnary, kBinary, kParen };
  Kind kind = Kind::kInt;
  // Literal text (strings keep their quotes), variable/callee/array name, or operator.
  std::string text;
  std::vector<Expr> args;

  static Expr integer(long long v) { return {Kind::kInt, std::to_string(v), {}}; }
  static Expr boolean(bool v) { return {Kind::kBool, v ? "true" : "false", {}}; }
  static Expr string(std::string quoted) { return {Kind::kString, std::move(quoted), {}}; }
  static Expr name(std::string n) { return {Kind::kName, std::move(n), {}}; }
  static Expr call(std::string callee, std::vector<Expr> a) { return {Kind::kCall, std::move(callee), std::move(a)}; }
  static Expr index(std::string array, Expr i) { return {Kind::kIndex, std::move(array), {std::move(i)}}; }
  static Expr unary(std::string op, Expr e) { return {Kind::kUnary, std::move(op), {std::move(e)}}; }
  static Expr binary(std::string op, Expr l, Expr r) {
    return {Kind::kBinary, std::move(op), {std::move(l), std::move(r)}};
  }
  static Expr paren(Expr e) { return {Kind::kParen, "", {std::move(e)}}; }

  friend bool operator==(const Expr&, const Expr&) = default;
};

struct Stmt {
  enum class Kind { kDecl, kAssign, kStore, kIf, kFor, kWhile, kReturn, kExpr, kBreak, kContinue };
  Kind kind = Kind::kExpr;
  std::string type;       // kDecl, and the kFor init declaration
  std::string name;       // declared/assigned/stored name, kFor loop variable
  std::string step_name;  // kFor: target of the step assignment
  // kDecl [init]; kAssign [value]; kStore [index, value]; kIf/kWhile [cond];
  // kFor [init, cond, step]; kReturn [] or [value]; kExpr [e].
  std::vector<Expr> exprs;
  std::vector<Stmt> body;
  std::vector<Stmt> else_body;
  bool has_else = false;

  friend bool operator==(const Stmt&, const Stmt&) = default;
};

struct Param {
  std::string type;
  std::string name;
  friend bool operator==(const Param&, const Param&) = default;
};

struct Function {
  std::string return_type;
  std::string name;
  std::vector<Param> params;
  std::vector<Stmt> body;
  friend bool operator==(const Function&, const Function&) = default;
};

struct Ast {
  std::vector<Function> functions;
  friend bool operator==(const Ast&, const Ast&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at byte " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Binary node with the parentheses its operands need to survive render/parse.
Expr make_binary(const std::string& op, Expr lhs, Expr rhs);
// 0 for "||" up to 5 for multiplicative operators; -1 if not binary.
int binary_precedence(std::string_view op);

std::string render_expr(const Expr& e);
// Two-space indentation, one statement per line.
std::string render(const Ast& ast);
// Inverse of render on any MiniLang text; whitespace and comments are ignored.
Ast parse(std::string_view source);

// Pre-order visitors over every expression node.
template <class F>
void visit_exprs(const Expr& e, F&& f) {
  f(e);
  for (const auto& a : e.args) visit_exprs(a, f);
}
template <class F>
void visit_exprs(const std::vector<Stmt>& block, F&& f) {
  for (const auto& s : block) {
    for (const auto& e : s.exprs) visit_exprs(e, f);
    visit_exprs(s.body, f);
    visit_exprs(s.else_body, f);
  }
}

}  // namespace codeadv::corpus
