// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <map>

#include "codeadv/corpus/generator.hpp"
#include "codeadv/frontend/bpe.hpp"
#include "codeadv/frontend/identifier_map.hpp"
#include "codeadv/frontend/lexer.hpp"
#include "oracles.hpp"

using namespace codeadv;
using namespace codeadv::frontend;

namespace {

const LanguageProfile& mini() {
  static const auto p = LanguageProfile::minilang();
  return p;
}

std::map<std::string, int> count_kind(const std::vector<LexToken>& tokens, TokenKind kind) {
  std::map<std::string, int> out;
  for (const auto& t : tokens) {
    if (t.kind == kind) ++out[t.text];
  }
  return out;
}

std::vector<std::string> symbols(const BpeModel& m, const std::vector<std::int32_t>& ids) {
  std::vector<std::string> out;
  for (auto id : ids) out.push_back(m.symbol(id));
  return out;
}

const std::vector<corpus::LabeledSample>& programs() {
  static const auto data = corpus::generate_corpus(11, 1000, corpus::GenConfig{});
  return data;
}

const BpeModel& corpus_bpe() {
  static const BpeModel model = [] {
    std::vector<std::string> texts;
    for (const auto& s : programs()) texts.push_back(s.program.source());
    return train_bpe(texts, 300, mini());
  }();
  return model;
}

using oracles::span_oracle;

}  // namespace

TEST_CASE("lex classifies identifiers and keywords of a small function") {
  const auto tokens = lex("int add(int x){return x;}", mini());
  CHECK(count_kind(tokens, TokenKind::kIdentifier) == std::map<std::string, int>{{"add", 1}, {"x", 2}});
  CHECK(count_kind(tokens, TokenKind::kKeyword) == std::map<std::string, int>{{"int", 2}, {"return", 1}});
}

TEST_CASE("line comment is one token with no identifiers") {
  const auto tokens = lex("// x y z", mini());
  REQUIRE(tokens.size() == 1);
  CHECK(tokens[0].kind == TokenKind::kComment);
}

TEST_CASE("identifier-shaped text inside strings and comments is not an identifier") {
  const auto tokens = lex("print(\"count x\"); /* total */ y", mini());
  CHECK(count_kind(tokens, TokenKind::kIdentifier) == std::map<std::string, int>{{"y", 1}});
  CHECK(count_kind(tokens, TokenKind::kKeyword) == std::map<std::string, int>{{"print", 1}});
}

TEST_CASE("lex errors name the opening position") {
  try {
    lex("int a = \"abc", mini());
    FAIL("expected LexError");
  } catch (const LexError& e) {
    CHECK(e.position() == 8);
  }
  try {
    lex("x /* never closed", mini());
    FAIL("expected LexError");
  } catch (const LexError& e) {
    CHECK(e.position() == 2);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  CHECK_THROWS_AS(lex("a \xff b", mini()), LexError);
}

TEST_CASE("lex output tiles 1000 generated programs") {
  for (const auto& s : programs()) {
    const auto& src = s.program.source();
    const auto tokens = lex(src, mini());
    std::size_t pos = 0;
    std::string joined;
    for (const auto& t : tokens) {
      REQUIRE(t.span.start == pos);
      REQUIRE(t.span.end > t.span.start);
      REQUIRE(t.text == src.substr(t.span.start, t.span.size()));
      pos = t.span.end;
      joined += t.text;
    }
    REQUIRE(pos == src.size());
    REQUIRE(joined == src);
  }
}

TEST_CASE("profile JSON round trip and validation") {
  const auto back = LanguageProfile::from_json(mini().to_json());
  CHECK(back.keywords == mini().keywords);
  CHECK(back.builtins == mini().builtins);
  CHECK(back.line_comment == mini().line_comment);
  auto j = mini().to_json();
  j["keywords"] = nlohmann::json::array();
  CHECK_THROWS(LanguageProfile::from_json(j));
  CHECK(mini().is_valid_identifier("_a1"));
  CHECK_FALSE(mini().is_valid_identifier("1a"));
  CHECK_FALSE(mini().is_valid_identifier("while"));
  CHECK_FALSE(mini().is_valid_identifier("len"));
}

TEST_CASE("BPE picks the most frequent pair") {
  const auto m = train_bpe_from_pretokens({"aa", "ab", "aa"}, 1);
  REQUIRE(m.merges().size() == 1);
  CHECK(m.merges()[0] == MergePair{"a", "a"});
}

TEST_CASE("BPE frequency ties go to the lexicographically smaller pair") {
  const auto m = train_bpe_from_pretokens({"ba", "ab"}, 1);
  REQUIRE(m.merges().size() == 1);
  CHECK(m.merges()[0] == MergePair{"a", "b"});
}

TEST_CASE("zero merges keeps only the base alphabet") {
  const auto m = train_bpe_from_pretokens({"abc", "cab"}, 0);
  CHECK(m.merges().empty());
  CHECK(m.vocab_size() == m.specials().size() + 3);
  CHECK(symbols(m, m.encode_pretoken("cab")) == std::vector<std::string>{"c", "a", "b"});
}

TEST_CASE("merges apply in training order") {
  const BpeModel m({"a", "b"}, {{"a", "a"}});
  CHECK(symbols(m, m.encode_pretoken("aab")) == std::vector<std::string>{"aa", "b"});
  // (b,c) is learned before (a,b): "abc" must become a + bc.
  const BpeModel order({"a", "b", "c"}, {{"b", "c"}, {"a", "b"}});
  CHECK(symbols(order, order.encode_pretoken("abc")) == std::vector<std::string>{"a", "bc"});
}

TEST_CASE("unknown characters map to the unknown symbol") {
  const BpeModel m({"a", "b"}, {});
  const auto ids = m.encode_pretoken("a\xc3\xa9z");
  REQUIRE(ids.size() == 3);
  CHECK(ids[1] == m.unk_id());
  CHECK(ids[2] == m.unk_id());
}

TEST_CASE("encode of an empty token list is just the sentinel") {
  const BpeModel m({"a"}, {});
  CHECK(encode(m, {}, 8).size() == 1);
  CHECK(encode(m, {}, 8, false).empty());
  CHECK_THROWS_AS(encode(m, {}, 1), std::invalid_argument);
}

TEST_CASE("BPE decode inverts encode on every corpus pre-token") {
  const auto& m = corpus_bpe();
  std::size_t checked = 0;
  for (const auto& s : programs()) {
    for (const auto& p : pretokens(s.program.tokens())) {
      const auto ids = m.encode_pretoken(p);
      for (auto id : ids) REQUIRE(static_cast<std::size_t>(id) < m.vocab_size());
      REQUIRE(m.decode(ids) == p);
      ++checked;
    }
  }
  CHECK(checked > 10000);
}

TEST_CASE("BPE model JSON and file round trip") {
  const auto& m = corpus_bpe();
  const auto back = BpeModel::from_json(m.to_json());
  CHECK(back.vocab_size() == m.vocab_size());
  CHECK(back.merges() == m.merges());
  const auto path = std::filesystem::temp_directory_path() / "codeadv_bpe_roundtrip.json";
  m.save(path);
  const auto loaded = BpeModel::load(path);
  std::filesystem::remove(path);
  const auto& src = programs()[0].program;
  CHECK(encode(loaded, src.tokens(), 256).ids == encode(m, src.tokens(), 256).ids);
  auto bad = m.to_json();
  bad["version"] = 99;
  CHECK_THROWS(BpeModel::from_json(bad));
}

TEST_CASE("identifier map for repeated two-piece identifier") {
  const BpeModel m({"m", "y", "V", "a", "r", "=", "+", "1"}, {{"m", "y"}, {"V", "a"}, {"Va", "r"}});
  const auto tokens = lex("myVar = myVar + 1", mini());
  const auto seq = encode(m, tokens, 64, false);
  CHECK(symbols(m, seq.ids) == std::vector<std::string>{"my", "Var", "=", "my", "Var", "+", "1"});
  const auto map = build_identifier_map(seq, tokens, mini());
  REQUIRE(map.size() == 1);
  CHECK(map.entries[0].name == "myVar");
  CHECK(map.entries[0].length() == 2);
  CHECK(map.entries[0].occurrences == std::vector<std::size_t>{0, 3});
}

TEST_CASE("keywords and literals only give an empty map") {
  const auto tokens = lex("return 1 + 2;", mini());
  const auto seq = encode(corpus_bpe(), tokens, 64);
  CHECK(build_identifier_map(seq, tokens, mini()).empty());
}

TEST_CASE("occurrence cut by truncation is dropped") {
  const BpeModel m({"m", "y", "V", "a", "r", "=", "+", "1"}, {{"m", "y"}, {"V", "a"}, {"Va", "r"}});
  const auto tokens = lex("myVar = myVar + 1", mini());
  const auto seq = encode(m, tokens, 4, false);  // my Var = my | Var
  const auto map = build_identifier_map(seq, tokens, mini());
  REQUIRE(map.size() == 1);
  CHECK(map.entries[0].occurrences == std::vector<std::size_t>{0});
}

TEST_CASE("identifier map equals the char-span oracle on 1000 programs") {
  const auto& m = corpus_bpe();
  std::size_t i = 0;
  for (const auto& s : programs()) {
    const auto& tokens = s.program.tokens();
    // Vary the window so truncation cuts through identifiers.
    const std::size_t max_len = 16 + (i++ * 7) % 120;
    const auto seq = encode(m, tokens, max_len);
    const auto map = build_identifier_map(seq, tokens, mini());
    REQUIRE(map == span_oracle(seq, tokens));

    // Same-name consistency, disjoint ranges, no keyword positions.
    std::vector<int> owner(seq.size(), -1);
    for (std::size_t e = 0; e < map.size(); ++e) {
      const auto& entry = map.entries[e];
      for (auto p : entry.occurrences) {
        REQUIRE(p + entry.length() <= seq.size());
        for (std::size_t j = 0; j < entry.length(); ++j) {
          REQUIRE(seq.ids[p + j] == entry.subword_ids[j]);
          REQUIRE(owner[p + j] == -1);
          owner[p + j] = static_cast<int>(e);
          const auto t = seq.token_index[p + j];
          REQUIRE(t >= 0);
          REQUIRE(tokens[static_cast<std::size_t>(t)].kind == TokenKind::kIdentifier);
        }
      }
    }
    CHECK(owner[0] == -1);
  }
}
