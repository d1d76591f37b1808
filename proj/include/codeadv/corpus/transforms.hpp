// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "codeadv/corpus/generator.hpp"
#include "codeadv/corpus/program.hpp"
#include "codeadv/rng.hpp"

namespace codeadv::corpus {

// original name -> substitute. Applied simultaneously, so swaps are allowed.
using RenameMap = std::map<std::string, std::string>;

class RenameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws RenameError unless every key is an identifier of the program and the
// substitutes are valid, non-reserved, pairwise distinct and distinct from
// every identifier the map leaves untouched.
void validate_rename_map(const Program& program, const RenameMap& map);
Program rename_identifiers(const Program& program, const RenameMap& map);

// Renames ceil(fraction * m) of the program's m identifiers (at least one when
// m > 0) to distinct pool names not already in the program.
RenameMap random_rename_map(const Program& program, const std::vector<std::string>& pool, double fraction, Rng& rng);

// Inserts 1 + U{0..round(2 * intensity)} no-effect statements (an unused
// declaration or a constant-false conditional) at top-level positions before
// the final statement. Fresh names come from `pool` and avoid the program's
// identifiers.
Program insert_dead_code(const Program& program, Rng& rng, double intensity = 1.0,
                         const std::vector<std::string>& pool = default_name_pool());

// Wraps value atoms as (e + 0) and conditions as (c) && true. Each eligible
// site is chosen with probability 0.25 * intensity; at least one is chosen.
Program rewrite_identities(const Program& program, Rng& rng, double intensity = 1.0);

enum class TransformKind { kRename, kDeadCode, kIdentityRewrite };
std::string_view transform_kind_name(TransformKind kind);

struct TransformSpec {
  TransformKind id = TransformKind::kRename;
  std::uint64_t seed = 0;
  double intensity = 1.0;

  nlohmann::json to_json() const;
  static TransformSpec from_json(const nlohmann::json& j);
};

std::vector<TransformSpec> transform_specs_from_json(const nlohmann::json& j);
// The three transformations with intensity 1.
std::vector<TransformSpec> default_transform_specs(std::uint64_t seed);

// Applies every spec in the order rename, dead code, identity rewrite (stable
// among equal kinds). `stream` selects the random stream, e.g. a sample index.
Program apply_transforms(const Program& program, const std::vector<TransformSpec>& specs, std::uint64_t seed,
                         std::uint64_t stream);

// Transforms every sample; ids and labels are carried over.
std::vector<LabeledSample> build_adv_testset(const std::vector<LabeledSample>& testset,
                                             const std::vector<TransformSpec>& specs, std::uint64_t seed);

}  // namespace codeadv::corpus
