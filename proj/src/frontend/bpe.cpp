// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/frontend/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace codeadv::frontend {

namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  return 4;
}

// Merges every left-to-right, non-overlapping occurrence of (a, b) in place.
template <class Extra>
void merge_pair(std::vector<std::int32_t>& symbols, std::int32_t a, std::int32_t b, std::int32_t result,
                Extra&& combine) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < symbols.size();) {
    if (i + 1 < symbols.size() && symbols[i] == a && symbols[i + 1] == b) {
      combine(out, i);
      symbols[out++] = result;
      i += 2;
    } else {
      combine(out, i, false);
      symbols[out++] = symbols[i++];
    }
  }
  symbols.resize(out);
}

}  // namespace

std::vector<std::string> code_points(std::string_view text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size();) {
    const std::size_t len = std::min(utf8_length(static_cast<unsigned char>(text[i])), text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

BpeModel::BpeModel(std::vector<std::string> base_alphabet, std::vector<MergePair> merges,
                   std::vector<std::string> specials)
    : base_alphabet_(std::move(base_alphabet)), merges_(std::move(merges)), specials_(std::move(specials)) {
  for (const auto& s : specials_) {
    if (s == kCls) cls_id_ = static_cast<std::int32_t>(symbols_.size());
    if (s == kUnk) unk_id_ = static_cast<std::int32_t>(symbols_.size());
    symbols_.push_back(s);
  }
  if (cls_id_ < 0 || unk_id_ < 0) throw std::invalid_argument("BPE model needs <cls> and <unk> specials");
  std::sort(base_alphabet_.begin(), base_alphabet_.end());
  base_alphabet_.erase(std::unique(base_alphabet_.begin(), base_alphabet_.end()), base_alphabet_.end());
  for (const auto& s : base_alphabet_) intern(s);
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& [l, rt] = merges_[r];
    auto li = symbol_ids_.find(l);
    auto ri = symbol_ids_.find(rt);
    if (li == symbol_ids_.end() || ri == symbol_ids_.end()) {
      throw std::invalid_argument("BPE merge " + std::to_string(r) + " uses an unknown symbol: " + l + " + " + rt);
    }
    const std::int32_t result = intern(l + rt);
    merge_rules_.emplace(pair_key(li->second, ri->second), MergeRule{static_cast<std::int32_t>(r), result});
  }
}

std::int32_t BpeModel::intern(const std::string& s) {
  auto it = symbol_ids_.find(s);
  if (it != symbol_ids_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(symbols_.size());
  symbols_.push_back(s);
  symbol_ids_.emplace(s, id);
  return id;
}

std::vector<std::int32_t> BpeModel::encode_pretoken(std::string_view text) const {
  std::vector<std::size_t> unused;
  return encode_pretoken(text, unused);
}

std::vector<std::int32_t> BpeModel::encode_pretoken(std::string_view text, std::vector<std::size_t>& byte_lengths) const {
  std::vector<std::int32_t> symbols;
  byte_lengths.clear();
  for (const auto& cp : code_points(text)) {
    auto it = symbol_ids_.find(cp);
    symbols.push_back(it == symbol_ids_.end() ? unk_id_ : it->second);
    byte_lengths.push_back(cp.size());
  }
  // Apply the lowest-ranked applicable merge, never revisiting ranks below the
  // last one applied: identical to replaying the merge list in order.
  std::int32_t last_rank = -1;
  while (symbols.size() > 1) {
    const MergeRule* best = nullptr;
    std::int32_t best_a = 0, best_b = 0;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = merge_rules_.find(pair_key(symbols[i], symbols[i + 1]));
      if (it == merge_rules_.end() || it->second.rank <= last_rank) continue;
      if (best == nullptr || it->second.rank < best->rank) {
        best = &it->second;
        best_a = symbols[i];
        best_b = symbols[i + 1];
      }
    }
    if (best == nullptr) break;
    std::vector<std::size_t> lengths;
    lengths.reserve(byte_lengths.size());
    merge_pair(symbols, best_a, best_b, best->result, [&](std::size_t, std::size_t i, bool merged = true) {
      lengths.push_back(merged ? byte_lengths[i] + byte_lengths[i + 1] : byte_lengths[i]);
    });
    byte_lengths = std::move(lengths);
    last_rank = best->rank;
  }
  return symbols;
}

std::string BpeModel::decode(std::span<const std::int32_t> ids) const {
  std::string out;
  for (auto id : ids) out += symbol(id);
  return out;
}

nlohmann::json BpeModel::to_json() const {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& [a, b] : merges_) merges.push_back({a, b});
  return {{"version", kVersion}, {"base_alphabet", base_alphabet_}, {"merges", merges}, {"specials", specials_}};
}

BpeModel BpeModel::from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != kVersion) {
    throw std::runtime_error("unsupported BPE model version " + j.at("version").dump());
  }
  std::vector<MergePair> merges;
  for (const auto& m : j.at("merges")) merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
  return BpeModel(j.at("base_alphabet").get<std::vector<std::string>>(), std::move(merges),
                  j.at("specials").get<std::vector<std::string>>());
}

void BpeModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json().dump(1) << '\n';
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return from_json(nlohmann::json::parse(in));
}

std::vector<std::string> pretokens(const std::vector<LexToken>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::kWhitespace) out.push_back(t.text);
  }
  return out;
}

BpeModel train_bpe_from_pretokens(const std::vector<std::string>& pretoken_list, std::size_t num_merges) {
  if (pretoken_list.empty()) throw std::invalid_argument("train_bpe: empty corpus");

  std::map<std::string, std::int64_t> counts;
  for (const auto& p : pretoken_list) ++counts[p];

  std::vector<std::string> alphabet;
  {
    std::map<std::string, int> seen;
    for (const auto& [word, _] : counts)
      for (auto& cp : code_points(word)) seen.emplace(std::move(cp), 0);
    for (auto& [cp, _] : seen) alphabet.push_back(cp);
  }

  // Working vocabulary mirrors BpeModel's id assignment.
  std::vector<std::string> strings(alphabet.begin(), alphabet.end());
  std::unordered_map<std::string, std::int32_t> ids;
  for (std::size_t i = 0; i < strings.size(); ++i) ids.emplace(strings[i], static_cast<std::int32_t>(i));

  struct Word {
    std::vector<std::int32_t> symbols;
    std::int64_t count;
  };
  std::vector<Word> words;
  for (const auto& [word, count] : counts) {
    Word w{{}, count};
    for (const auto& cp : code_points(word)) w.symbols.push_back(ids.at(cp));
    words.push_back(std::move(w));
  }

  std::vector<MergePair> merges;
  for (std::size_t step = 0; step < num_merges; ++step) {
    std::unordered_map<std::uint64_t, std::int64_t> pair_counts;
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        const auto key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(w.symbols[i])) << 32) |
                         static_cast<std::uint32_t>(w.symbols[i + 1]);
        pair_counts[key] += w.count;
      }
    }
    if (pair_counts.empty()) break;
    std::int32_t best_a = -1, best_b = -1;
    std::int64_t best_count = -1;
    for (const auto& [key, count] : pair_counts) {
      const auto a = static_cast<std::int32_t>(key >> 32);
      const auto b = static_cast<std::int32_t>(key & 0xffffffffu);
      const bool better =
          count > best_count ||
          (count == best_count && std::tie(strings[a], strings[b]) < std::tie(strings[best_a], strings[best_b]));
      if (better) {
        best_a = a;
        best_b = b;
        best_count = count;
      }
    }
    const std::string merged = strings[best_a] + strings[best_b];
    std::int32_t result;
    if (auto it = ids.find(merged); it != ids.end()) {
      result = it->second;
    } else {
      result = static_cast<std::int32_t>(strings.size());
      strings.push_back(merged);
      ids.emplace(merged, result);
    }
    for (auto& w : words) merge_pair(w.symbols, best_a, best_b, result, [](std::size_t, std::size_t, bool = true) {});
    merges.emplace_back(strings[best_a], strings[best_b]);
  }
  return BpeModel(std::move(alphabet), std::move(merges));
}

BpeModel train_bpe(const std::vector<std::string>& corpus, std::size_t num_merges, const LanguageProfile& profile) {
  if (corpus.empty()) throw std::invalid_argument("train_bpe: empty corpus");
  std::vector<std::string> all;
  for (const auto& text : corpus) {
    auto p = pretokens(lex(text, profile));
    all.insert(all.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return train_bpe_from_pretokens(all, num_merges);
}

SubwordSeq encode(const BpeModel& model, const std::vector<LexToken>& tokens, std::size_t max_len, bool add_cls) {
  if (max_len < 2) throw std::invalid_argument("encode: max_len must be at least 2");
  SubwordSeq seq;
  if (add_cls) {
    seq.ids.push_back(model.cls_id());
    seq.spans.push_back({0, 0});
    seq.token_index.push_back(-1);
  }
  std::vector<std::size_t> lengths;
  for (std::size_t t = 0; t < tokens.size() && seq.size() < max_len; ++t) {
    const auto& tok = tokens[t];
    if (tok.kind == TokenKind::kWhitespace) continue;
    const auto ids = model.encode_pretoken(tok.text, lengths);
    std::size_t offset = tok.span.start;
    for (std::size_t k = 0; k < ids.size() && seq.size() < max_len; ++k) {
      seq.ids.push_back(ids[k]);
      seq.spans.push_back({offset, offset + lengths[k]});
      seq.token_index.push_back(static_cast<std::int32_t>(t));
      offset += lengths[k];
    }
  }
  return seq;
}

}  // namespace codeadv::frontend
