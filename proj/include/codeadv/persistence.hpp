// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "codeadv/encoder.hpp"
#include "codeadv/frontend/bpe.hpp"
#include "codeadv/tokenizer.hpp"
#include "codeadv/trainer.hpp"

namespace codeadv {

// Layout: "SPCE" | u32 version | u64 metadata length | metadata JSON |
// float32 payload, all little endian. Tensor offsets and sizes in the
// manifest count floats.
inline constexpr std::string_view kCheckpointMagic = "SPCE";
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointErrorCode { kIo, kBadMagic, kVersionMismatch, kBadMetadata, kTruncatedPayload, kManifestMismatch };
std::string_view checkpoint_error_name(CheckpointErrorCode code);

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrorCode code, const std::string& detail);
  CheckpointErrorCode code() const { return code_; }

 private:
  CheckpointErrorCode code_;
};

struct Checkpoint {
  EncoderParams<float> params;
  frontend::BpeModel bpe;
  std::optional<TrainConfig> train;
  nlohmann::json extra = nlohmann::json::object();  // free-form provenance

  // Tokenizer matching the encoder's window length.
  Tokenizer tokenizer() const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Throws CheckpointError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// 16 hex digits of FNV-1a over the canonical (key-sorted, compact) dump.
std::string config_hash(const nlohmann::json& config);

struct ExperimentReport {
  std::string run_id;
  std::string mode;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::string config_hash;
  nlohmann::json seeds = nlohmann::json::object();  // derived per-component seeds
  std::size_t test_size = 0;
  double clean_accuracy = 0.0;
  std::optional<double> transformed_accuracy;
  std::map<std::string, nlohmann::json> attacks;  // attack name -> AttackReport JSON
  nlohmann::json training = nlohmann::json::array();  // per-epoch metrics without timings

  std::optional<double> transform_drop() const;
  std::optional<double> asr(const std::string& attack) const;

  nlohmann::json to_json() const;
  static ExperimentReport from_json(const nlohmann::json& j);
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

// Header mode,seed,clean_acc,asr_mhm,asr_greedy,asr_genetic,drop_transform;
// missing values are empty cells. Throws std::invalid_argument when empty.
std::string plot_csv(const std::vector<ExperimentReport>& reports);
void emit_plot_data(const std::vector<ExperimentReport>& reports, const std::filesystem::path& path);

}  // namespace codeadv
