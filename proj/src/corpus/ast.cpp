// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/corpus/ast.hpp"

#include <array>

#include "codeadv/frontend/lexer.hpp"

namespace codeadv::corpus {

using frontend::LexToken;
using frontend::TokenKind;

namespace {

void render_block(const std::vector<Stmt>& block, int depth, std::string& out);

std::string indent(int depth) { return std::string(static_cast<std::size_t>(depth) * 2, ' '); }

void render_stmt(const Stmt& s, int depth, std::string& out) {
  const std::string pad = indent(depth);
  switch (s.kind) {
    case Stmt::Kind::kDecl:
      out += pad + s.type + " " + s.name + " = " + render_expr(s.exprs.at(0)) + ";\n";
      break;
    case Stmt::Kind::kAssign:
      out += pad + s.name + " = " + render_expr(s.exprs.at(0)) + ";\n";
      break;
    case Stmt::Kind::kStore:
      out += pad + s.name + "[" + render_expr(s.exprs.at(0)) + "] = " + render_expr(s.exprs.at(1)) + ";\n";
      break;
    case Stmt::Kind::kIf:
      out += pad + "if (" + render_expr(s.exprs.at(0)) + ") {\n";
      render_block(s.body, depth + 1, out);
      if (s.has_else) {
        out += pad + "} else {\n";
        render_block(s.else_body, depth + 1, out);
      }
      out += pad + "}\n";
      break;
    case Stmt::Kind::kFor:
      out += pad + "for (" + s.type + " " + s.name + " = " + render_expr(s.exprs.at(0)) + "; " +
             render_expr(s.exprs.at(1)) + "; " + s.step_name + " = " + render_expr(s.exprs.at(2)) + ") {\n";
      render_block(s.body, depth + 1, out);
      out += pad + "}\n";
      break;
    case Stmt::Kind::kWhile:
      out += pad + "while (" + render_expr(s.exprs.at(0)) + ") {\n";
      render_block(s.body, depth + 1, out);
      out += pad + "}\n";
      break;
    case Stmt::Kind::kReturn:
      out += pad + (s.exprs.empty() ? std::string("return;\n") : "return " + render_expr(s.exprs[0]) + ";\n");
      break;
    case Stmt::Kind::kExpr:
      out += pad + render_expr(s.exprs.at(0)) + ";\n";
      break;
    case Stmt::Kind::kBreak:
      out += pad + "break;\n";
      break;
    case Stmt::Kind::kContinue:
      out += pad + "continue;\n";
      break;
  }
}

void render_block(const std::vector<Stmt>& block, int depth, std::string& out) {
  for (const auto& s : block) render_stmt(s, depth, out);
}

bool is_type_word(std::string_view w) { return w == "int" || w == "bool" || w == "ptr" || w == "void"; }

class Parser {
 public:
  explicit Parser(std::string_view source) {
    for (auto& t : frontend::lex(source, frontend::LanguageProfile::minilang())) {
      if (t.kind != TokenKind::kWhitespace && t.kind != TokenKind::kComment) tokens_.push_back(std::move(t));
    }
    end_ = source.size();
  }

  Ast program() {
    Ast ast;
    while (!done()) ast.functions.push_back(function());
    return ast;
  }

 private:
  bool done() const { return pos_ >= tokens_.size(); }
  const LexToken* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < tokens_.size() ? &tokens_[pos_ + ahead] : nullptr;
  }
  bool at(std::string_view text, std::size_t ahead = 0) const {
    const auto* t = peek(ahead);
    return t != nullptr && t->text == text && t->kind != TokenKind::kLiteral;
  }
  std::size_t offset() const { return done() ? end_ : tokens_[pos_].span.start; }
  [[noreturn]] void fail(const std::string& what) const {
    const auto* t = peek();
    throw ParseError(what + (t ? " near '" + t->text + "'" : " at end of input"), offset());
  }
  void expect(std::string_view text) {
    if (!at(text)) fail("expected '" + std::string(text) + "'");
    ++pos_;
  }
  bool accept(std::string_view text) {
    if (!at(text)) return false;
    ++pos_;
    return true;
  }
  std::string identifier() {
    const auto* t = peek();
    if (t == nullptr || t->kind != TokenKind::kIdentifier) fail("expected identifier");
    ++pos_;
    return t->text;
  }
  std::string type() {
    const auto* t = peek();
    if (t == nullptr || !is_type_word(t->text)) fail("expected type");
    ++pos_;
    return t->text;
  }

  Function function() {
    Function f;
    f.return_type = type();
    f.name = identifier();
    expect("(");
    if (!at(")")) {
      do {
        Param p;
        p.type = type();
        p.name = identifier();
        f.params.push_back(std::move(p));
      } while (accept(","));
    }
    expect(")");
    f.body = block();
    return f;
  }

  std::vector<Stmt> block() {
    expect("{");
    std::vector<Stmt> out;
    while (!at("}")) {
      if (done()) fail("unterminated block");
      out.push_back(statement());
    }
    expect("}");
    return out;
  }

  Stmt statement() {
    Stmt s;
    const auto* t = peek();
    if (t == nullptr) fail("expected statement");
    if (is_type_word(t->text) && t->kind == TokenKind::kKeyword) {
      s.kind = Stmt::Kind::kDecl;
      s.type = type();
      s.name = identifier();
      expect("=");
      s.exprs.push_back(expression());
      expect(";");
    } else if (accept("if")) {
      s.kind = Stmt::Kind::kIf;
      expect("(");
      s.exprs.push_back(expression());
      expect(")");
      s.body = block();
      if (accept("else")) {
        s.has_else = true;
        s.else_body = block();
      }
    } else if (accept("for")) {
      s.kind = Stmt::Kind::kFor;
      expect("(");
      s.type = type();
      s.name = identifier();
      expect("=");
      s.exprs.push_back(expression());
      expect(";");
      s.exprs.push_back(expression());
      expect(";");
      s.step_name = identifier();
      expect("=");
      s.exprs.push_back(expression());
      expect(")");
      s.body = block();
    } else if (accept("while")) {
      s.kind = Stmt::Kind::kWhile;
      expect("(");
      s.exprs.push_back(expression());
      expect(")");
      s.body = block();
    } else if (accept("return")) {
      s.kind = Stmt::Kind::kReturn;
      if (!at(";")) s.exprs.push_back(expression());
      expect(";");
    } else if (accept("break")) {
      s.kind = Stmt::Kind::kBreak;
      expect(";");
    } else if (accept("continue")) {
      s.kind = Stmt::Kind::kContinue;
      expect(";");
    } else if (t->kind == TokenKind::kIdentifier && at("=", 1)) {
      s.kind = Stmt::Kind::kAssign;
      s.name = identifier();
      expect("=");
      s.exprs.push_back(expression());
      expect(";");
    } else {
      Expr e = expression();
      if (e.kind == Expr::Kind::kIndex && accept("=")) {
        s.kind = Stmt::Kind::kStore;
        s.name = e.text;
        s.exprs.push_back(std::move(e.args.at(0)));
        s.exprs.push_back(expression());
      } else {
        s.kind = Stmt::Kind::kExpr;
        s.exprs.push_back(std::move(e));
      }
      expect(";");
    }
    return s;
  }

  // Binary precedence levels, loosest first.
  static constexpr std::array<std::array<std::string_view, 4>, 6> kLevels = {{
      {"||", "", "", ""},
      {"&&", "", "", ""},
      {"==", "!=", "", ""},
      {"<", "<=", ">", ">="},
      {"+", "-", "", ""},
      {"*", "/", "%", ""},
  }};

  Expr expression() { return binary(0); }

  Expr binary(std::size_t level) {
    if (level == kLevels.size()) return unary();
    Expr lhs = binary(level + 1);
    for (;;) {
      const auto* t = peek();
      if (t == nullptr || t->kind != TokenKind::kPunct) break;
      bool matched = false;
      for (auto op : kLevels[level]) matched = matched || (!op.empty() && t->text == op);
      if (!matched) break;
      const std::string op = t->text;
      ++pos_;
      lhs = Expr::binary(op, std::move(lhs), binary(level + 1));
    }
    return lhs;
  }

  Expr unary() {
    if (at("!") || at("-")) {
      const std::string op = peek()->text;
      ++pos_;
      return Expr::unary(op, unary());
    }
    return primary();
  }

  Expr primary() {
    const auto* t = peek();
    if (t == nullptr) fail("expected expression");
    if (t->kind == TokenKind::kLiteral) {
      ++pos_;
      if (t->text.front() == '"' || t->text.front() == '\'') return Expr::string(t->text);
      for (char c : t->text) {
        if (c < '0' || c > '9') fail("unsupported numeric literal");
      }
      return {Expr::Kind::kInt, t->text, {}};
    }
    if (accept("true")) return Expr::boolean(true);
    if (accept("false")) return Expr::boolean(false);
    if (accept("(")) {
      Expr inner = expression();
      expect(")");
      return Expr::paren(std::move(inner));
    }
    const bool callable = t->kind == TokenKind::kIdentifier ||
                          (t->kind == TokenKind::kKeyword && frontend::LanguageProfile::minilang().is_builtin(t->text));
    if (!callable) fail("expected expression");
    ++pos_;
    const std::string name = t->text;
    if (accept("(")) {
      std::vector<Expr> args;
      if (!at(")")) {
        do {
          args.push_back(expression());
        } while (accept(","));
      }
      expect(")");
      return Expr::call(name, std::move(args));
    }
    if (t->kind != TokenKind::kIdentifier) fail("builtin used as a value");
    if (accept("[")) {
      Expr i = expression();
      expect("]");
      return Expr::index(name, std::move(i));
    }
    return Expr::name(name);
  }

  std::vector<LexToken> tokens_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

}  // namespace

int binary_precedence(std::string_view op) {
  static constexpr std::array<std::string_view, 13> kOps = {"||", "&&", "==", "!=", "<", "<=", ">",
                                                            ">=", "+",  "-",  "*",  "/", "%"};
  static constexpr std::array<int, 13> kLevel = {0, 1, 2, 2, 3, 3, 3, 3, 4, 4, 5, 5, 5};
  for (std::size_t i = 0; i < kOps.size(); ++i) {
    if (kOps[i] == op) return kLevel[i];
  }
  return -1;
}

Expr make_binary(const std::string& op, Expr lhs, Expr rhs) {
  const int p = binary_precedence(op);
  if (p < 0) throw std::invalid_argument("not a binary operator: " + op);
  if (lhs.kind == Expr::Kind::kBinary && binary_precedence(lhs.text) < p) lhs = Expr::paren(std::move(lhs));
  if (rhs.kind == Expr::Kind::kBinary && binary_precedence(rhs.text) <= p) rhs = Expr::paren(std::move(rhs));
  return Expr::binary(op, std::move(lhs), std::move(rhs));
}

std::string render_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kInt:
    case Expr::Kind::kBool:
    case Expr::Kind::kString:
    case Expr::Kind::kName:
      return e.text;
    case Expr::Kind::kCall: {
      std::string out = e.text + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) out += (i ? ", " : "") + render_expr(e.args[i]);
      return out + ")";
    }
    case Expr::Kind::kIndex:
      return e.text + "[" + render_expr(e.args.at(0)) + "]";
    case Expr::Kind::kUnary:
      return e.text + render_expr(e.args.at(0));
    case Expr::Kind::kBinary:
      return render_expr(e.args.at(0)) + " " + e.text + " " + render_expr(e.args.at(1));
    case Expr::Kind::kParen:
      return "(" + render_expr(e.args.at(0)) + ")";
  }
  return {};
}

std::string render(const Ast& ast) {
  std::string out;
  for (std::size_t f = 0; f < ast.functions.size(); ++f) {
    const auto& fn = ast.functions[f];
    if (f) out += "\n";
    out += fn.return_type + " " + fn.name + "(";
    for (std::size_t i = 0; i < fn.params.size(); ++i) {
      out += (i ? ", " : "") + fn.params[i].type + " " + fn.params[i].name;
    }
    out += ") {\n";
    render_block(fn.body, 1, out);
    out += "}\n";
  }
  return out;
}

Ast parse(std::string_view source) { return Parser(source).program(); }

}  // namespace codeadv::corpus
