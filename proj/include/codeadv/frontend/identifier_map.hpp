// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codeadv/frontend/bpe.hpp"

namespace codeadv::frontend {

// One distinct identifier name in the window. Every occurrence is the
// position range [p, p + subword_ids.size()) for p in occurrences.
struct IdentifierEntry {
  std::string name;
  std::vector<std::int32_t> subword_ids;
  std::vector<std::size_t> occurrences;

  std::size_t length() const { return subword_ids.size(); }
  friend bool operator==(const IdentifierEntry&, const IdentifierEntry&) = default;
};

// Identifier -> sub-word alignment, entries in order of first occurrence.
struct IdentifierMap {
  std::vector<IdentifierEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  // Occurrence start lists, one per entry (the layout scatter_rows expects).
  std::vector<std::vector<std::size_t>> placements() const;
  // Positions covered by any occurrence, as a mask of length n.
  std::vector<bool> covered_positions(std::size_t n) const;

  friend bool operator==(const IdentifierMap&, const IdentifierMap&) = default;
};

// Lists every identifier token whose sub-words all fall inside the window.
// Throws std::logic_error if a sub-word straddles an identifier boundary,
// which encode() never produces.
IdentifierMap build_identifier_map(const SubwordSeq& seq, const std::vector<LexToken>& tokens,
                                   const LanguageProfile& profile);

}  // namespace codeadv::frontend
