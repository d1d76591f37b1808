// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codeadv/corpus/program.hpp"
#include "codeadv/rng.hpp"

namespace codeadv::corpus {

struct GenConfig {
  double defect_rate = 0.5;
  // Defect-relevant motifs (division, loop, release) per function.
  std::size_t min_motifs = 1;
  std::size_t max_motifs = 2;
  // Neutral statements mixed in between motifs.
  std::size_t min_fillers = 0;
  std::size_t max_fillers = 1;
  // Probability that each name is drawn from the half of the pool associated
  // with the sample's label (see name_group). 0 = names independent of label.
  double name_bias = 0.0;
  // Empty means default_name_pool().
  std::vector<std::string> name_pool;

  nlohmann::json to_json() const;
  static GenConfig from_json(const nlohmann::json& j);
};

struct LabeledSample {
  std::string id;
  Program program;
  int label = 0;
  std::optional<DefectKind> defect_kind;
};

// camelCase and snake_case names built from a fixed word list, all valid
// MiniLang identifiers. Deterministic order.
const std::vector<std::string>& default_name_pool();

// 0 or 1, from a hash of the name's leading word ("countIdx" -> "count").
int name_group(std::string_view name);

// One sample from a stream seeded with `seed`.
LabeledSample generate(std::uint64_t seed, const GenConfig& config);
// Sample i is generate(derive_seed(seed, "corpus", i)), id "<prefix><i>".
std::vector<LabeledSample> generate_corpus(std::uint64_t seed, std::size_t count, const GenConfig& config,
                                           const std::string& id_prefix = "s");

}  // namespace codeadv::corpus
