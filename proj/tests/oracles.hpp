// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force references shared by the unit tests and the acceptance binary.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "codeadv/attacks.hpp"
#include "codeadv/corpus/program.hpp"
#include "codeadv/frontend/bpe.hpp"
#include "codeadv/frontend/identifier_map.hpp"
#include "codeadv/rng.hpp"

namespace codeadv::oracles {

// Alignment rebuilt from char spans alone: a sub-word belongs to an identifier
// iff their spans intersect; an occurrence counts only if the intersecting
// sub-words cover the identifier's whole span.
inline frontend::IdentifierMap span_oracle(const frontend::SubwordSeq& seq,
                                           const std::vector<frontend::LexToken>& tokens) {
  frontend::IdentifierMap map;
  std::map<std::string, std::size_t> index;
  for (const auto& tok : tokens) {
    if (tok.kind != frontend::TokenKind::kIdentifier) continue;
    std::vector<std::size_t> hits;
    for (std::size_t p = 0; p < seq.size(); ++p) {
      if (seq.spans[p].intersects(tok.span)) hits.push_back(p);
    }
    if (hits.empty()) continue;
    std::size_t covered = 0;
    for (auto p : hits) covered += seq.spans[p].size();
    if (covered != tok.span.size()) continue;
    std::vector<std::int32_t> ids;
    for (auto p : hits) ids.push_back(seq.ids[p]);
    auto [it, fresh] = index.emplace(tok.text, map.entries.size());
    if (fresh) {
      map.entries.push_back({tok.text, ids, {hits.front()}});
    } else {
      map.entries[it->second].occurrences.push_back(hits.front());
    }
  }
  return map;
}

// Deterministic pseudo-random value in [0, 1) per (table, name).
inline double score(std::uint64_t table, const std::string& name) {
  return static_cast<double>(derive_seed(table, name) >> 11) * 0x1p-53;
}

// Binary victim whose P(label 0) is 0.5 + 0.45 * mean_i s_i, where s_i in
// [-1, 1] depends only on the current name of identifier i. Additive in the
// identifiers, so greedy and exhaustive search must agree.
inline attacks::FunctionVictim separable(std::uint64_t table) {
  return attacks::FunctionVictim([table](const corpus::Program& p, const std::string*) {
    double s = 0.0;
    const auto& ids = p.identifiers();
    for (std::size_t i = 0; i < ids.size(); ++i) s += 2.0 * score(table + i, ids[i]) - 1.0;
    const double p0 = 0.5 + 0.45 * s / static_cast<double>(ids.size());
    return std::vector<double>{p0, 1.0 - p0};
  });
}

// Candidate lists exactly as the attacks draw them (first use of the rng).
inline std::vector<std::vector<std::string>> lists_for(const corpus::Program& p, const attacks::AttackConfig& cfg,
                                                       Rng rng) {
  const auto k = p.identifiers().size();
  auto names = attacks::candidate_names(corpus::default_name_pool(), cfg.candidates * k, rng, p.identifiers());
  std::vector<std::vector<std::string>> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i].assign(names.begin() + static_cast<long>(i * cfg.candidates),
                  names.begin() + static_cast<long>((i + 1) * cfg.candidates));
  }
  return out;
}

// Lowest P(label 0) over every assignment (original name included).
inline double exhaustive_min(const attacks::Victim& v, const corpus::Program& p,
                             const std::vector<std::vector<std::string>>& lists) {
  const auto& ids = p.identifiers();
  double best = v.probabilities(p)[0];
  std::vector<std::size_t> pick(ids.size(), 0);
  while (true) {
    std::size_t g = 0;
    while (g < pick.size() && ++pick[g] > lists[g].size()) pick[g++] = 0;
    if (g == pick.size()) break;
    attacks::RenameMap m;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (pick[i] > 0) m[ids[i]] = lists[i][pick[i] - 1];
    }
    best = std::min(best, v.probabilities(corpus::rename_identifiers(p, m))[0]);
  }
  return best;
}

}  // namespace codeadv::oracles
