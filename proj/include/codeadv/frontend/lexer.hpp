// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "codeadv/frontend/profile.hpp"

namespace codeadv::frontend {

enum class TokenKind { kKeyword, kIdentifier, kLiteral, kPunct, kComment, kWhitespace };

std::string_view token_kind_name(TokenKind kind);

// Byte span [start, end) into the source.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - start; }
  bool contains(const Span& o) const { return start <= o.start && o.end <= end; }
  bool intersects(const Span& o) const { return start < o.end && o.start < end; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct LexToken {
  TokenKind kind;
  Span span;
  std::string text;
};

class LexError : public std::runtime_error {
 public:
  LexError(const std::string& what, std::size_t position) : std::runtime_error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Splits `source` into tokens that tile it exactly. Builtin names lex as
// keywords. Identifier-shaped text inside strings and comments stays part of
// the enclosing literal/comment token.
std::vector<LexToken> lex(std::string_view source, const LanguageProfile& profile);

bool is_valid_utf8(std::string_view text);

}  // namespace codeadv::frontend
