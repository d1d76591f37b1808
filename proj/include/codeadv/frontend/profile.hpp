// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace codeadv::frontend {

// Lexical description of a language: which words are reserved and how
// comments and strings are delimited. Builtin names are reserved like
// keywords; neither is ever an identifier.
struct LanguageProfile {
  std::string name;
  std::set<std::string, std::less<>> keywords;
  std::set<std::string, std::less<>> builtins;
  std::string line_comment = "//";
  std::string block_comment_open = "/*";
  std::string block_comment_close = "*/";
  std::string string_delimiters = "\"'";

  bool is_keyword(std::string_view word) const { return keywords.contains(word); }
  bool is_builtin(std::string_view word) const { return builtins.contains(word); }
  bool is_reserved(std::string_view word) const { return is_keyword(word) || is_builtin(word); }
  // Matches the identifier shape and is not reserved.
  bool is_valid_identifier(std::string_view word) const;

  // The C-like language used by the synthetic corpus.
  static LanguageProfile minilang();

  nlohmann::json to_json() const;
  static LanguageProfile from_json(const nlohmann::json& j);
};

// [A-Za-z_][A-Za-z0-9_]*
bool has_identifier_shape(std::string_view word);

}  // namespace codeadv::frontend
