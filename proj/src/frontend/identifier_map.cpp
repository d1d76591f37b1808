// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/frontend/identifier_map.hpp"

#include <stdexcept>
#include <unordered_map>

namespace codeadv::frontend {

std::vector<std::vector<std::size_t>> IdentifierMap::placements() const {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.occurrences);
  return out;
}

std::vector<bool> IdentifierMap::covered_positions(std::size_t n) const {
  std::vector<bool> mask(n, false);
  for (const auto& e : entries)
    for (auto p : e.occurrences)
      for (std::size_t j = 0; j < e.length() && p + j < n; ++j) mask[p + j] = true;
  return mask;
}

IdentifierMap build_identifier_map(const SubwordSeq& seq, const std::vector<LexToken>& tokens,
                                   const LanguageProfile& profile) {
  IdentifierMap map;
  std::unordered_map<std::string, std::size_t> entry_of;
  std::size_t p = 0;
  while (p < seq.size()) {
    const auto t = seq.token_index[p];
    std::size_t q = p + 1;
    while (q < seq.size() && seq.token_index[q] == t) ++q;
    if (t >= 0 && tokens.at(static_cast<std::size_t>(t)).kind == TokenKind::kIdentifier) {
      const auto& tok = tokens[static_cast<std::size_t>(t)];
      for (std::size_t k = p; k < q; ++k) {
        if (!tok.span.contains(seq.spans[k])) {
          throw std::logic_error("sub-word at position " + std::to_string(k) + " straddles identifier '" + tok.text + "'");
        }
      }
      if (!profile.is_valid_identifier(tok.text)) {
        throw std::logic_error("token '" + tok.text + "' lexed as identifier but is not one under " + profile.name);
      }
      const bool complete = seq.spans[p].start == tok.span.start && seq.spans[q - 1].end == tok.span.end;
      if (complete) {
        std::vector<std::int32_t> ids(seq.ids.begin() + static_cast<std::ptrdiff_t>(p),
                                      seq.ids.begin() + static_cast<std::ptrdiff_t>(q));
        auto [it, fresh] = entry_of.emplace(tok.text, map.entries.size());
        if (fresh) {
          map.entries.push_back({tok.text, std::move(ids), {p}});
        } else {
          auto& entry = map.entries[it->second];
          if (entry.subword_ids != ids) {
            throw std::logic_error("identifier '" + tok.text + "' segmented inconsistently");
          }
          entry.occurrences.push_back(p);
        }
      }
    }
    p = q;
  }
  return map;
}

}  // namespace codeadv::frontend
