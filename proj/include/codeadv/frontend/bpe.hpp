// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "codeadv/frontend/lexer.hpp"

namespace codeadv::frontend {

// Encoded window of one source file. Position i covers bytes spans[i] of the
// source and came from lex token token_index[i] (-1 for sentinels).
struct SubwordSeq {
  std::vector<std::int32_t> ids;
  std::vector<Span> spans;
  std::vector<std::int32_t> token_index;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

using MergePair = std::pair<std::string, std::string>;

// Byte-pair encoding over code points. Ids: specials first, then the base
// alphabet in sorted order, then each new symbol in merge order. A merge whose
// result string already exists reuses that id.
class BpeModel {
 public:
  static constexpr std::string_view kCls = "<cls>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr int kVersion = 1;

  BpeModel(std::vector<std::string> base_alphabet, std::vector<MergePair> merges,
           std::vector<std::string> specials = {std::string(kCls), std::string(kUnk)});

  std::size_t vocab_size() const { return symbols_.size(); }
  std::int32_t cls_id() const { return cls_id_; }
  std::int32_t unk_id() const { return unk_id_; }
  const std::string& symbol(std::int32_t id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  bool is_special(std::int32_t id) const { return id >= 0 && static_cast<std::size_t>(id) < specials_.size(); }

  const std::vector<std::string>& base_alphabet() const { return base_alphabet_; }
  const std::vector<MergePair>& merges() const { return merges_; }
  const std::vector<std::string>& specials() const { return specials_; }

  // Segments one pre-token, applying merges in training order. Code points
  // outside the base alphabet become the unknown symbol.
  std::vector<std::int32_t> encode_pretoken(std::string_view text) const;
  // Same, with the byte length of each produced symbol.
  std::vector<std::int32_t> encode_pretoken(std::string_view text, std::vector<std::size_t>& byte_lengths) const;
  std::string decode(std::span<const std::int32_t> ids) const;

  nlohmann::json to_json() const;
  static BpeModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static BpeModel load(const std::filesystem::path& path);

 private:
  struct MergeRule {
    std::int32_t rank;
    std::int32_t result;
  };
  static std::uint64_t pair_key(std::int32_t a, std::int32_t b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
  }
  std::int32_t intern(const std::string& s);

  std::vector<std::string> base_alphabet_;
  std::vector<MergePair> merges_;
  std::vector<std::string> specials_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::int32_t> symbol_ids_;  // excludes specials
  std::unordered_map<std::uint64_t, MergeRule> merge_rules_;
  std::int32_t cls_id_ = -1;
  std::int32_t unk_id_ = -1;
};

// Texts of every non-whitespace token; BPE never merges across these.
std::vector<std::string> pretokens(const std::vector<LexToken>& tokens);

// Splits UTF-8 text into code points.
std::vector<std::string> code_points(std::string_view text);

// Learns `num_merges` merges from pre-token frequencies. The most frequent
// adjacent pair wins; ties go to the lexicographically smallest pair.
BpeModel train_bpe_from_pretokens(const std::vector<std::string>& pretokens, std::size_t num_merges);
BpeModel train_bpe(const std::vector<std::string>& corpus, std::size_t num_merges, const LanguageProfile& profile);

// Encodes the non-whitespace tokens, prefixed by the classification sentinel
// when add_cls is set, truncated to max_len positions.
SubwordSeq encode(const BpeModel& model, const std::vector<LexToken>& tokens, std::size_t max_len,
                  bool add_cls = true);

}  // namespace codeadv::frontend
