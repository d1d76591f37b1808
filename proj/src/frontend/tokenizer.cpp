// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/tokenizer.hpp"

#include <stdexcept>

namespace codeadv {

Tokenizer::Tokenizer(frontend::BpeModel bpe, frontend::LanguageProfile profile, std::size_t max_len)
    : bpe_(std::move(bpe)), profile_(std::move(profile)), max_len_(max_len) {
  if (max_len_ < 2) throw std::invalid_argument("tokenizer: max_len must be at least 2");
}

EncodedWindow Tokenizer::encode(std::string_view source) const {
  const auto tokens = frontend::lex(source, profile_);
  auto seq = frontend::encode(bpe_, tokens, max_len_);
  EncodedWindow w;
  w.map = frontend::build_identifier_map(seq, tokens, profile_);
  w.ids = std::move(seq.ids);
  return w;
}

}  // namespace codeadv
