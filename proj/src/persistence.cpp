// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/persistence.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace codeadv {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

constexpr std::string_view kErrorNames[] = {"io error",          "bad magic",        "version mismatch",
                                            "bad metadata",      "truncated payload", "manifest mismatch"};

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <class U>
U get_le(const std::string& in, std::size_t at) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

[[noreturn]] void fail(CheckpointErrorCode code, const std::string& detail) { throw CheckpointError(code, detail); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string_view checkpoint_error_name(CheckpointErrorCode code) { return kErrorNames[static_cast<std::size_t>(code)]; }

CheckpointError::CheckpointError(CheckpointErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(checkpoint_error_name(code)) + ": " + detail), code_(code) {}

Tokenizer Checkpoint::tokenizer() const {
  return Tokenizer(bpe, frontend::LanguageProfile::minilang(), params.config().max_len);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  nlohmann::json manifest = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    const auto& t = ck.params[i];
    manifest.push_back({{"name", ck.params.name(i)}, {"shape", t.shape()}, {"offset", offset}, {"size", t.size()}});
    offset += t.size();
  }
  const nlohmann::json meta = {{"encoder", ck.params.config().to_json()},
                               {"train", ck.train ? ck.train->to_json() : nlohmann::json(nullptr)},
                               {"tokenizer", {{"profile", "minilang"}, {"bpe", ck.bpe.to_json()}}},
                               {"extra", ck.extra},
                               {"tensors", manifest}};
  const std::string meta_text = meta.dump();

  std::string bytes(kCheckpointMagic);
  put_le<std::uint32_t>(bytes, kCheckpointVersion);
  put_le<std::uint64_t>(bytes, meta_text.size());
  bytes += meta_text;
  bytes.reserve(bytes.size() + 4 * offset);
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    for (float v : ck.params[i].values()) put_le<std::uint32_t>(bytes, std::bit_cast<std::uint32_t>(v));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(CheckpointErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(CheckpointErrorCode::kIo, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(CheckpointErrorCode::kIo, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  constexpr std::size_t kHeader = 4 + 4 + 8;
  if (bytes.size() < 4 || bytes.compare(0, 4, kCheckpointMagic) != 0) fail(CheckpointErrorCode::kBadMagic, path.string());
  if (bytes.size() < kHeader) fail(CheckpointErrorCode::kTruncatedPayload, "header cut short");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) {
    fail(CheckpointErrorCode::kVersionMismatch,
         "file has version " + std::to_string(version) + ", expected " + std::to_string(kCheckpointVersion));
  }
  const auto meta_len = get_le<std::uint64_t>(bytes, 8);
  if (meta_len > bytes.size() - kHeader) fail(CheckpointErrorCode::kTruncatedPayload, "metadata cut short");

  nlohmann::json meta;
  EncoderConfig config;
  std::optional<TrainConfig> train;
  std::optional<frontend::BpeModel> bpe;
  try {
    meta = nlohmann::json::parse(bytes.substr(kHeader, meta_len));
    config = EncoderConfig::from_json(meta.at("encoder"));
    if (!meta.at("train").is_null()) train = TrainConfig::from_json(meta.at("train"));
    bpe = frontend::BpeModel::from_json(meta.at("tokenizer").at("bpe"));
  } catch (const std::exception& e) {
    fail(CheckpointErrorCode::kBadMetadata, e.what());
  }

  EncoderParams<float> params(config);
  const auto& manifest = meta.at("tensors");
  if (!manifest.is_array() || manifest.size() != params.size()) {
    fail(CheckpointErrorCode::kManifestMismatch, "expected " + std::to_string(params.size()) + " tensors");
  }
  std::uint64_t expected_offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& m = manifest[i];
    try {
      if (m.at("name").get<std::string>() != params.name(i)) {
        fail(CheckpointErrorCode::kManifestMismatch, "tensor " + std::to_string(i) + " is '" +
                                                         m.at("name").get<std::string>() + "', expected '" +
                                                         params.name(i) + "'");
      }
      if (m.at("shape").get<Shape>() != params[i].shape()) {
        fail(CheckpointErrorCode::kManifestMismatch, "shape of " + params.name(i) + " disagrees with the config");
      }
      if (m.at("offset").get<std::uint64_t>() != expected_offset || m.at("size").get<std::uint64_t>() != params[i].size()) {
        fail(CheckpointErrorCode::kManifestMismatch, "offsets of " + params.name(i) + " are not contiguous");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(CheckpointErrorCode::kBadMetadata, e.what());
    }
    expected_offset += params[i].size();
  }
  const std::size_t payload_at = kHeader + meta_len;
  const std::size_t payload = bytes.size() - payload_at;
  if (payload < 4 * expected_offset) {
    fail(CheckpointErrorCode::kTruncatedPayload, "manifest declares " + std::to_string(expected_offset) +
                                                     " floats, payload holds " + std::to_string(payload / 4));
  }
  if (payload > 4 * expected_offset) {
    fail(CheckpointErrorCode::kManifestMismatch, "payload has " + std::to_string(payload - 4 * expected_offset) +
                                                     " trailing bytes");
  }
  std::size_t at = payload_at;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (float& v : params[i].values()) {
      v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, at));
      at += 4;
    }
  }
  Checkpoint ck{std::move(params), std::move(*bpe), std::move(train), meta.value("extra", nlohmann::json::object())};
  return ck;
}

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) h = (h ^ c) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::optional<double> ExperimentReport::transform_drop() const {
  if (!transformed_accuracy) return std::nullopt;
  return clean_accuracy - *transformed_accuracy;
}

std::optional<double> ExperimentReport::asr(const std::string& attack) const {
  const auto it = attacks.find(attack);
  if (it == attacks.end() || it->second.at("asr").is_null()) return std::nullopt;
  return it->second.at("asr").get<double>();
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json adv = nlohmann::json::object();
  for (const auto& [name, r] : attacks) adv[name] = r;
  nlohmann::json clean = {{"accuracy", clean_accuracy}, {"test_size", test_size}};
  nlohmann::json transform = nullptr;
  if (transformed_accuracy) transform = {{"accuracy", *transformed_accuracy}, {"drop", *transform_drop()}};
  return {{"run_id", run_id},   {"mode", mode},         {"seed", seed},     {"config", config},
          {"config_hash", config_hash}, {"seeds", seeds}, {"clean", clean}, {"attacks", adv},
          {"transform", transform},     {"training", training}};
}

ExperimentReport ExperimentReport::from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.run_id = j.at("run_id").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config = j.at("config");
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seeds = j.value("seeds", nlohmann::json::object());
  r.clean_accuracy = j.at("clean").at("accuracy").get<double>();
  r.test_size = j.at("clean").at("test_size").get<std::size_t>();
  if (!j.at("transform").is_null()) r.transformed_accuracy = j.at("transform").at("accuracy").get<double>();
  for (const auto& [name, a] : j.at("attacks").items()) r.attacks[name] = a;
  r.training = j.value("training", nlohmann::json::array());
  return r;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string plot_csv(const std::vector<ExperimentReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("plot data needs at least one report");
  std::ostringstream out;
  out << "mode,seed,clean_acc,asr_mhm,asr_greedy,asr_genetic,drop_transform\n";
  auto cell = [](std::optional<double> v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : reports) {
    out << r.mode << ',' << r.seed << ',' << format_double(r.clean_accuracy) << ',' << cell(r.asr("mhm")) << ','
        << cell(r.asr("greedy")) << ',' << cell(r.asr("genetic")) << ',' << cell(r.transform_drop()) << '\n';
  }
  return out.str();
}

void emit_plot_data(const std::vector<ExperimentReport>& reports, const std::filesystem::path& path) {
  const auto text = plot_csv(reports);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

}  // namespace codeadv
