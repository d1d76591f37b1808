// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "codeadv/corpus/generator.hpp"

namespace codeadv::corpus {

// One JSONL line: {id, code, label, defect_kind}.
struct Record {
  std::string id;
  std::string code;
  int label = 0;
  std::optional<std::string> defect_kind;

  nlohmann::json to_json() const;
  static Record from_json(const nlohmann::json& j);
};

Record to_record(const LabeledSample& sample);
// Parses the code as MiniLang; nullopt for external code that does not parse.
std::optional<LabeledSample> to_sample(const Record& record);

std::vector<Record> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<Record>& records);

}  // namespace codeadv::corpus
