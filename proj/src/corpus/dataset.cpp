// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/corpus/dataset.hpp"

#include <fstream>
#include <stdexcept>

namespace codeadv::corpus {

nlohmann::json Record::to_json() const {
  nlohmann::json j = {{"id", id}, {"code", code}, {"label", label}};
  j["defect_kind"] = defect_kind ? nlohmann::json(*defect_kind) : nlohmann::json(nullptr);
  return j;
}

Record Record::from_json(const nlohmann::json& j) {
  Record r;
  r.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
  r.code = j.at("code").get<std::string>();
  r.label = j.at("label").get<int>();
  if (r.label != 0 && r.label != 1) throw std::invalid_argument("record " + r.id + ": label must be 0 or 1");
  if (j.contains("defect_kind") && !j["defect_kind"].is_null()) r.defect_kind = j["defect_kind"].get<std::string>();
  return r;
}

Record to_record(const LabeledSample& sample) {
  Record r{sample.id, sample.program.source(), sample.label, std::nullopt};
  if (sample.defect_kind) r.defect_kind = std::string(defect_kind_name(*sample.defect_kind));
  return r;
}

std::optional<LabeledSample> to_sample(const Record& record) {
  try {
    LabeledSample s{record.id, Program::from_source(record.code), record.label, std::nullopt};
    if (record.defect_kind) s.defect_kind = parse_defect_kind(*record.defect_kind);
    return s;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<Record> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<Record> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Record::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) out << r.to_json().dump() << '\n';
}

}  // namespace codeadv::corpus
