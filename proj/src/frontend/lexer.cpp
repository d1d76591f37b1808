// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/frontend/lexer.hpp"

#include <array>

namespace codeadv::frontend {

std::string_view token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::kKeyword: return "keyword";
    case TokenKind::kIdentifier: return "identifier";
    case TokenKind::kLiteral: return "literal";
    case TokenKind::kPunct: return "punct";
    case TokenKind::kComment: return "comment";
    case TokenKind::kWhitespace: return "whitespace";
  }
  return "unknown";
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    if (c < 0x80) extra = 0;
    else if ((c >> 5) == 0x6) extra = 1;
    else if ((c >> 4) == 0xE) extra = 2;
    else if ((c >> 3) == 0x1E) extra = 3;
    else return false;
    if (i + extra >= text.size() && extra > 0) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) >> 6) != 0x2) return false;
    }
    i += extra + 1;
  }
  return true;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_head(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_tail(char c) { return is_head(c) || is_digit(c); }

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  return 4;
}

constexpr std::array<std::string_view, 14> kOperators = {"==", "!=", "<=", ">=", "&&", "||", "++",
                                                         "--", "+=", "-=", "*=", "/=", "->", "<<"};

bool starts_with(std::string_view s, std::size_t at, std::string_view prefix) {
  return !prefix.empty() && s.substr(at, prefix.size()) == prefix;
}

}  // namespace

std::vector<LexToken> lex(std::string_view source, const LanguageProfile& profile) {
  if (!is_valid_utf8(source)) throw LexError("source is not valid UTF-8", 0);
  std::vector<LexToken> tokens;
  std::size_t i = 0;
  auto emit = [&](TokenKind kind, std::size_t start, std::size_t end) {
    tokens.push_back({kind, {start, end}, std::string(source.substr(start, end - start))});
  };
  while (i < source.size()) {
    const std::size_t start = i;
    const char c = source[i];
    if (is_space(c)) {
      while (i < source.size() && is_space(source[i])) ++i;
      emit(TokenKind::kWhitespace, start, i);
    } else if (starts_with(source, i, profile.line_comment)) {
      while (i < source.size() && source[i] != '\n') ++i;
      emit(TokenKind::kComment, start, i);
    } else if (starts_with(source, i, profile.block_comment_open)) {
      const auto close = source.find(profile.block_comment_close, i + profile.block_comment_open.size());
      if (close == std::string_view::npos) {
        throw LexError("unterminated block comment opened at offset " + std::to_string(start), start);
      }
      i = close + profile.block_comment_close.size();
      emit(TokenKind::kComment, start, i);
    } else if (profile.string_delimiters.find(c) != std::string::npos) {
      ++i;
      bool closed = false;
      while (i < source.size()) {
        if (source[i] == '\\') {
          i += 2;
          continue;
        }
        if (source[i] == c) {
          ++i;
          closed = true;
          break;
        }
        ++i;
      }
      if (!closed) throw LexError("unterminated string literal opened at offset " + std::to_string(start), start);
      emit(TokenKind::kLiteral, start, i);
    } else if (is_digit(c)) {
      while (i < source.size() && (is_tail(source[i]) || source[i] == '.')) ++i;
      emit(TokenKind::kLiteral, start, i);
    } else if (is_head(c)) {
      while (i < source.size() && is_tail(source[i])) ++i;
      const auto word = source.substr(start, i - start);
      emit(profile.is_reserved(word) ? TokenKind::kKeyword : TokenKind::kIdentifier, start, i);
    } else {
      std::size_t len = utf8_length(static_cast<unsigned char>(c));
      for (auto op : kOperators) {
        if (starts_with(source, i, op)) {
          len = op.size();
          break;
        }
      }
      i += len;
      emit(TokenKind::kPunct, start, i);
    }
  }
  return tokens;
}

}  // namespace codeadv::frontend
