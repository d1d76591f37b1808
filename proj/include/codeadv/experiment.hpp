// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "codeadv/attacks.hpp"
#include "codeadv/corpus/generator.hpp"
#include "codeadv/persistence.hpp"
#include "codeadv/trainer.hpp"

namespace codeadv {

// One end-to-end run: generate data, train a tokenizer and a model, then
// measure clean accuracy, attack success rates and transformation drop.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t train_size = 4000;
  std::size_t dev_size = 500;
  std::size_t test_size = 1000;
  corpus::GenConfig gen;
  std::size_t bpe_merges = 1000;
  EncoderConfig encoder;  // vocab is filled in from the tokenizer
  TrainConfig train;      // train.seed is derived from `seed`
  attacks::AttackConfig attack;  // attack.seed is derived from `seed`
  std::vector<std::string> attacks = {"mhm"};
  bool transform = true;
  std::size_t threads = 0;  // 0 = all cores; never changes results

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// Streams derived from the experiment seed. Data and tokenizer depend only on
// (seed, sizes, gen, bpe_merges, max_len), so runs that differ only in the
// training mode share them and start from the same initial weights.
struct ExperimentSeeds {
  std::uint64_t corpus, train, attack, transform;
  explicit ExperimentSeeds(std::uint64_t seed);
  nlohmann::json to_json() const;
};

struct ExperimentData {
  std::vector<corpus::LabeledSample> train, dev, test;
  Tokenizer tokenizer;
};

ExperimentData prepare_data(const ExperimentConfig& cfg);

std::vector<TrainExample> to_examples(const Tokenizer& tokenizer, const std::vector<corpus::LabeledSample>& samples);

std::size_t resolve_threads(std::size_t threads);

struct EvaluationOptions {
  std::vector<std::string> attacks = {"mhm"};
  attacks::AttackConfig attack;
  bool transform = true;
  std::uint64_t transform_seed = 0;
  std::size_t threads = 1;
};

// Fills the clean, transform and attack fields of `report`.
void evaluate_model(const EncoderParams<float>& params, const Tokenizer& tokenizer,
                    const std::vector<corpus::LabeledSample>& test, const EvaluationOptions& options,
                    ExperimentReport& report);

struct ExperimentRun {
  ExperimentReport report;
  Checkpoint checkpoint;
};

// `data` may be shared between runs of the same seed; it is built when null.
ExperimentRun run_experiment(const ExperimentConfig& cfg, const ExperimentData* data = nullptr,
                             const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace codeadv
