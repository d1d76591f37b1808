// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/frontend/profile.hpp"

#include <stdexcept>

namespace codeadv::frontend {

namespace {
bool is_head(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_tail(char c) { return is_head(c) || (c >= '0' && c <= '9'); }
}  // namespace

bool has_identifier_shape(std::string_view word) {
  if (word.empty() || !is_head(word.front())) return false;
  for (char c : word.substr(1)) {
    if (!is_tail(c)) return false;
  }
  return true;
}

bool LanguageProfile::is_valid_identifier(std::string_view word) const {
  return has_identifier_shape(word) && !is_reserved(word);
}

LanguageProfile LanguageProfile::minilang() {
  LanguageProfile p;
  p.name = "minilang";
  p.keywords = {"int", "bool", "ptr", "void", "if", "else", "for", "while", "return", "true", "false", "break", "continue"};
  p.builtins = {"len", "alloc", "free", "print", "abs", "min", "max"};
  return p;
}

nlohmann::json LanguageProfile::to_json() const {
  return {
      {"name", name},
      {"keywords", std::vector<std::string>(keywords.begin(), keywords.end())},
      {"builtins", std::vector<std::string>(builtins.begin(), builtins.end())},
      {"line_comment", line_comment},
      {"block_comment", {block_comment_open, block_comment_close}},
      {"string_delimiters", string_delimiters},
  };
}

LanguageProfile LanguageProfile::from_json(const nlohmann::json& j) {
  LanguageProfile p;
  p.name = j.value("name", std::string("custom"));
  for (const auto& k : j.at("keywords")) p.keywords.insert(k.get<std::string>());
  if (j.contains("builtins")) {
    for (const auto& b : j.at("builtins")) p.builtins.insert(b.get<std::string>());
  }
  if (p.keywords.empty()) throw std::invalid_argument("language profile: keyword set is empty");
  p.line_comment = j.value("line_comment", p.line_comment);
  if (j.contains("block_comment")) {
    const auto& bc = j.at("block_comment");
    if (!bc.is_array() || bc.size() != 2) throw std::invalid_argument("language profile: block_comment needs [open, close]");
    p.block_comment_open = bc[0].get<std::string>();
    p.block_comment_close = bc[1].get<std::string>();
  }
  p.string_delimiters = j.value("string_delimiters", p.string_delimiters);
  return p;
}

}  // namespace codeadv::frontend
