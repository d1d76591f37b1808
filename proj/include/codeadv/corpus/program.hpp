// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codeadv/corpus/ast.hpp"
#include "codeadv/frontend/lexer.hpp"

namespace codeadv::corpus {

// A MiniLang AST together with its rendered text and identifier inventory.
// Construction checks that the text re-parses to the same AST.
class Program {
 public:
  explicit Program(Ast ast);
  // Parses MiniLang text; the stored source is the canonical rendering.
  static Program from_source(std::string_view source);

  const Ast& ast() const { return ast_; }
  const std::string& source() const { return source_; }
  const std::vector<frontend::LexToken>& tokens() const { return tokens_; }
  // Distinct identifier names in order of first occurrence.
  const std::vector<std::string>& identifiers() const { return identifiers_; }
  std::size_t statement_count() const;

  friend bool operator==(const Program& a, const Program& b) { return a.ast_ == b.ast_; }

 private:
  Ast ast_;
  std::string source_;
  std::vector<frontend::LexToken> tokens_;
  std::vector<std::string> identifiers_;
};

enum class DefectKind { kUnguardedDivision, kOffByOneLoop, kUseAfterFree };

std::string_view defect_kind_name(DefectKind kind);
std::optional<DefectKind> parse_defect_kind(std::string_view name);

struct OracleResult {
  std::vector<DefectKind> defects;  // in discovery order, may repeat kinds
  int label() const { return defects.empty() ? 0 : 1; }
};

// Structural defect check. Names are only compared for equality with each
// other, so the result is invariant under any bijective renaming. Identity
// wrappers (e), (e + 0) and (c && true) are seen through.
OracleResult analyze(const Ast& ast);
int oracle_label(const Program& program);

// Strips the identity wrappers listed above.
const Expr& strip_identities(const Expr& e);

}  // namespace codeadv::corpus
