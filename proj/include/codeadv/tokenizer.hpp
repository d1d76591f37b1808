// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "codeadv/frontend/bpe.hpp"
#include "codeadv/frontend/identifier_map.hpp"
#include "codeadv/frontend/profile.hpp"

namespace codeadv {

// One encoded window: sub-word ids (position 0 is the <cls> sentinel) and the
// identifier alignment over them.
struct EncodedWindow {
  std::vector<std::int32_t> ids;
  frontend::IdentifierMap map;
};

// lex -> BPE encode -> identifier map, with fixed settings.
class Tokenizer {
 public:
  Tokenizer(frontend::BpeModel bpe, frontend::LanguageProfile profile, std::size_t max_len);

  EncodedWindow encode(std::string_view source) const;

  const frontend::BpeModel& bpe() const { return bpe_; }
  const frontend::LanguageProfile& profile() const { return profile_; }
  std::size_t max_len() const { return max_len_; }
  std::size_t vocab_size() const { return bpe_.vocab_size(); }

 private:
  frontend::BpeModel bpe_;
  frontend::LanguageProfile profile_;
  std::size_t max_len_;
};

}  // namespace codeadv
