// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/experiment.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include "codeadv/corpus/transforms.hpp"
#include "codeadv/frontend/profile.hpp"

namespace codeadv {

namespace {

const std::vector<std::string> kKeys = {"seed",    "train_size", "dev_size", "test_size", "gen",       "bpe_merges",
                                        "encoder", "train",      "attack",   "attacks",   "transform", "threads"};

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("experiment config: " + m); };
  if (train_size == 0 || dev_size == 0 || test_size == 0) fail("split sizes must be positive");
  train.validate();
  attack.validate();
  for (const auto& a : attacks) attacks::parse_attack_kind(a);
}

nlohmann::json ExperimentConfig::to_json() const {
  auto enc = encoder.to_json();
  enc.erase("vocab");
  auto tr = train.to_json();
  tr.erase("seed");
  tr.erase("threads");
  auto at = attack.to_json();
  at.erase("seed");
  return {{"seed", seed},   {"train_size", train_size}, {"dev_size", dev_size}, {"test_size", test_size},
          {"gen", gen.to_json()}, {"bpe_merges", bpe_merges}, {"encoder", enc},   {"train", tr},
          {"attack", at},   {"attacks", attacks},       {"transform", transform}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("experiment config: expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw std::invalid_argument("experiment config: unknown key '" + key + "'");
    }
  }
  ExperimentConfig c;
  c.seed = j.value("seed", c.seed);
  c.train_size = j.value("train_size", c.train_size);
  c.dev_size = j.value("dev_size", c.dev_size);
  c.test_size = j.value("test_size", c.test_size);
  if (j.contains("gen")) c.gen = corpus::GenConfig::from_json(j.at("gen"));
  c.bpe_merges = j.value("bpe_merges", c.bpe_merges);
  if (j.contains("encoder")) {
    auto enc = c.encoder.to_json();
    for (const auto& [k, v] : j.at("encoder").items()) enc[k] = v;
    if (!enc.contains("vocab") || enc["vocab"] == 0) enc["vocab"] = 1;  // placeholder until the tokenizer exists
    c.encoder = EncoderConfig::from_json(enc);
  }
  if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
  if (j.contains("attack")) c.attack = attacks::AttackConfig::from_json(j.at("attack"));
  c.attacks = j.value("attacks", c.attacks);
  c.transform = j.value("transform", c.transform);
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

ExperimentSeeds::ExperimentSeeds(std::uint64_t seed)
    : corpus(derive_seed(seed, "corpus")),
      train(derive_seed(seed, "train")),
      attack(derive_seed(seed, "attack")),
      transform(derive_seed(seed, "transform")) {}

nlohmann::json ExperimentSeeds::to_json() const {
  return {{"corpus", corpus}, {"train", train}, {"attack", attack}, {"transform", transform}};
}

std::size_t resolve_threads(std::size_t threads) {
  if (threads > 0) return threads;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

ExperimentData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const ExperimentSeeds seeds(cfg.seed);
  auto train = corpus::generate_corpus(derive_seed(seeds.corpus, "train"), cfg.train_size, cfg.gen, "train");
  auto dev = corpus::generate_corpus(derive_seed(seeds.corpus, "dev"), cfg.dev_size, cfg.gen, "dev");
  auto test = corpus::generate_corpus(derive_seed(seeds.corpus, "test"), cfg.test_size, cfg.gen, "test");
  std::vector<std::string> texts;
  texts.reserve(train.size());
  for (const auto& s : train) texts.push_back(s.program.source());
  const auto profile = frontend::LanguageProfile::minilang();
  Tokenizer tokenizer(frontend::train_bpe(texts, cfg.bpe_merges, profile), profile, cfg.encoder.max_len);
  return ExperimentData{std::move(train), std::move(dev), std::move(test), std::move(tokenizer)};
}

std::vector<TrainExample> to_examples(const Tokenizer& tokenizer, const std::vector<corpus::LabeledSample>& samples) {
  std::vector<TrainExample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(make_example(tokenizer, s.id, s.program.source(), s.label));
  return out;
}

void evaluate_model(const EncoderParams<float>& params, const Tokenizer& tokenizer,
                    const std::vector<corpus::LabeledSample>& test, const EvaluationOptions& options,
                    ExperimentReport& report) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  report.test_size = test.size();
  report.clean_accuracy = accuracy(params, to_examples(tokenizer, test), options.threads);
  report.transformed_accuracy.reset();
  if (options.transform) {
    const auto adv = corpus::build_adv_testset(test, corpus::default_transform_specs(options.transform_seed),
                                               options.transform_seed);
    report.transformed_accuracy = accuracy(params, to_examples(tokenizer, adv), options.threads);
  }
  report.attacks.clear();
  const attacks::EncoderVictim victim(params, tokenizer);
  for (const auto& name : options.attacks) {
    const auto kind = attacks::parse_attack_kind(name);
    report.attacks[name] = attacks::evaluate_asr(victim, test, kind, options.attack, options.threads).to_json();
  }
}

ExperimentRun run_experiment(const ExperimentConfig& cfg, const ExperimentData* data,
                             const std::function<void(const EpochMetrics&)>& on_epoch) {
  cfg.validate();
  std::optional<ExperimentData> own;
  if (data == nullptr) {
    own.emplace(prepare_data(cfg));
    data = &*own;
  }
  const ExperimentSeeds seeds(cfg.seed);
  const std::size_t threads = resolve_threads(cfg.threads);

  EncoderConfig enc = cfg.encoder;
  enc.vocab = data->tokenizer.vocab_size();
  TrainConfig tc = cfg.train;
  tc.seed = seeds.train;
  tc.threads = threads;
  TrainHooks hooks;
  hooks.tokenizer = &data->tokenizer;
  hooks.on_epoch = on_epoch;
  auto result = train<float>(tc, enc, to_examples(data->tokenizer, data->train), to_examples(data->tokenizer, data->dev),
                             hooks);

  ExperimentReport report;
  report.mode = std::string(mode_name(cfg.train.mode));
  report.seed = cfg.seed;
  report.config = cfg.to_json();
  report.config_hash = config_hash(report.config);
  report.run_id = report.mode + "-s" + std::to_string(cfg.seed) + "-" + report.config_hash.substr(0, 8);
  report.seeds = seeds.to_json();
  for (const auto& m : result.history) {
    auto j = m.to_json();
    j.erase("wall_ms");
    report.training.push_back(j);
  }
  EvaluationOptions eval;
  eval.attacks = cfg.attacks;
  eval.attack = cfg.attack;
  eval.attack.seed = seeds.attack;
  eval.transform = cfg.transform;
  eval.transform_seed = seeds.transform;
  eval.threads = threads;
  evaluate_model(result.params, data->tokenizer, data->test, eval, report);

  Checkpoint ck{std::move(result.params), data->tokenizer.bpe(), tc, {{"run_id", report.run_id}}};
  return ExperimentRun{std::move(report), std::move(ck)};
}

}  // namespace codeadv
