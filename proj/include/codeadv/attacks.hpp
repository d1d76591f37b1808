// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codeadv/corpus/generator.hpp"
#include "codeadv/corpus/transforms.hpp"
#include "codeadv/encoder.hpp"
#include "codeadv/rng.hpp"
#include "codeadv/tokenizer.hpp"

namespace codeadv::attacks {

using corpus::RenameMap;

// Black-box classifier over programs. Implementations must be safe to call
// from several threads at once.
class Victim {
 public:
  virtual ~Victim() = default;
  // Class probabilities. With `masked`, every sub-word of that identifier is
  // replaced by the unknown symbol (used to rank identifier importance).
  virtual std::vector<double> probabilities(const corpus::Program& program,
                                            const std::string* masked = nullptr) const = 0;
};

// The trained encoder behind a tokenizer.
class EncoderVictim : public Victim {
 public:
  EncoderVictim(const EncoderParams<float>& params, const Tokenizer& tokenizer)
      : params_(params), tokenizer_(tokenizer) {}
  std::vector<double> probabilities(const corpus::Program& program, const std::string* masked = nullptr) const override;

 private:
  const EncoderParams<float>& params_;
  const Tokenizer& tokenizer_;
};

// Wraps a plain function; for crafted models in tests and examples.
class FunctionVictim : public Victim {
 public:
  using Fn = std::function<std::vector<double>(const corpus::Program&, const std::string*)>;
  explicit FunctionVictim(Fn fn) : fn_(std::move(fn)) {}
  std::vector<double> probabilities(const corpus::Program& program, const std::string* masked = nullptr) const override {
    return fn_(program, masked);
  }

 private:
  Fn fn_;
};

enum class AttackKind { kMhm, kGreedy, kGenetic };
std::string_view attack_name(AttackKind kind);
// Throws std::invalid_argument on an unknown name.
AttackKind parse_attack_kind(std::string_view name);

struct AttackConfig {
  std::size_t mhm_iterations = 400;
  std::size_t candidates = 30;  // substitutes per identifier (all attacks)
  std::size_t population = 30;
  std::size_t generations = 50;
  double mutation_rate = 0.3;   // chance that a child has one gene resampled
  bool stop_on_flip = true;
  std::uint64_t seed = 0;
  std::vector<std::string> pool;  // empty = corpus::default_name_pool()

  void validate() const;
  nlohmann::json to_json() const;
  static AttackConfig from_json(const nlohmann::json& j);
};

struct AttackOutcome {
  bool success = false;
  RenameMap map;
  std::size_t queries = 0;
  // P(true label) of the current program: the clean value first, then one
  // entry per iteration, step or generation.
  std::vector<double> trace;
};

// `count` distinct names from the pool, excluding reserved words and the
// names in `exclude`. Throws std::invalid_argument if the pool runs out.
std::vector<std::string> candidate_names(const std::vector<std::string>& pool, std::size_t count, Rng& rng,
                                         const std::vector<std::string>& exclude = {});

// Metropolis-Hastings acceptance probability for moving from a program with
// P(true) = p_current to one with p_proposal.
double mhm_acceptance(double p_current, double p_proposal);

AttackOutcome mhm_attack(const Victim& victim, const corpus::Program& program, int label, const AttackConfig& cfg,
                         Rng& rng);
AttackOutcome greedy_attack(const Victim& victim, const corpus::Program& program, int label, const AttackConfig& cfg,
                            Rng& rng);
AttackOutcome genetic_attack(const Victim& victim, const corpus::Program& program, int label,
                             const AttackConfig& cfg, Rng& rng);
AttackOutcome run_attack(AttackKind kind, const Victim& victim, const corpus::Program& program, int label,
                         const AttackConfig& cfg, Rng& rng);

// Genetic search over gene grids. Gene i takes values 0..options[i]-1.
class GeneticSearch {
 public:
  using Chromosome = std::vector<std::size_t>;
  using Fitness = std::function<double(const Chromosome&)>;

  GeneticSearch(std::vector<std::size_t> options, Fitness fitness, double mutation_rate, Rng& rng);

  void randomize(std::size_t population);
  void set_population(std::vector<Chromosome> population);
  // Elitism + fitness-proportional parents + uniform crossover + mutation.
  void step();

  const std::vector<Chromosome>& population() const { return population_; }
  const std::vector<double>& fitness() const { return fitness_; }
  const Chromosome& best() const { return population_[best_]; }
  double best_fitness() const { return fitness_[best_]; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  void evaluate();
  std::size_t pick_parent();

  std::vector<std::size_t> options_;
  Fitness fitness_fn_;
  double mutation_rate_;
  Rng& rng_;
  std::vector<Chromosome> population_;
  std::vector<double> fitness_;
  std::size_t best_ = 0;
  std::size_t evaluations_ = 0;
};

struct SampleResult {
  std::string id;
  bool success = false;
  std::size_t queries = 0;
};

struct AttackReport {
  std::string attack;
  std::size_t n_total = 0;
  std::size_t n_plus = 0;   // clean-correct samples
  std::size_t n_minus = 0;  // of those, flipped by the attack
  std::vector<SampleResult> per_sample;  // clean-correct samples only, testset order

  bool asr_defined() const { return n_plus > 0; }
  double asr() const;  // n_minus / n_plus; throws std::logic_error if undefined
  nlohmann::json to_json() const;
};

// Sample i is attacked with Rng(derive_seed(cfg.seed, "attack", i)), so the
// report does not depend on `threads`.
AttackReport evaluate_asr(const Victim& victim, const std::vector<corpus::LabeledSample>& testset, AttackKind kind,
                          const AttackConfig& cfg, std::size_t threads = 1);

}  // namespace codeadv::attacks
