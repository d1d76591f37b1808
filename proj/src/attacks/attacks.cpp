// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/attacks.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "codeadv/frontend/profile.hpp"
#include "codeadv/parallel.hpp"

namespace codeadv::attacks {

namespace {

constexpr std::string_view kAttackNames[] = {"mhm", "greedy", "genetic"};

const std::vector<std::string> kConfigKeys = {"mhm_iterations", "candidates",   "population", "generations",
                                              "mutation_rate",  "stop_on_flip", "seed",       "pool"};

std::size_t argmax(const std::vector<double>& p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

// Counts every victim call made on behalf of one attack.
class Queries {
 public:
  Queries(const Victim& victim, const corpus::Program& program, int label)
      : victim_(victim), program_(program), label_(static_cast<std::size_t>(label)) {}

  // P(true label) of the program renamed by `map`; sets `flipped` when the
  // prediction is no longer the true label.
  double p_true(const RenameMap& map, bool* flipped = nullptr) {
    const auto probs =
        map.empty() ? victim_.probabilities(program_) : victim_.probabilities(corpus::rename_identifiers(program_, map));
    return record(probs, flipped);
  }

  double p_masked(const std::string& name) { return record(victim_.probabilities(program_, &name), nullptr); }

  std::size_t count() const { return count_; }

 private:
  double record(const std::vector<double>& probs, bool* flipped) {
    ++count_;
    if (label_ >= probs.size()) throw std::invalid_argument("attack: label outside the victim's classes");
    if (flipped != nullptr) *flipped = argmax(probs) != label_;
    return probs[label_];
  }

  const Victim& victim_;
  const corpus::Program& program_;
  std::size_t label_;
  std::size_t count_ = 0;
};

const std::vector<std::string>& pool_of(const AttackConfig& cfg) {
  return cfg.pool.empty() ? corpus::default_name_pool() : cfg.pool;
}

// Disjoint candidate lists, one per identifier, so substitutes chosen for
// different identifiers never collide.
std::vector<std::vector<std::string>> candidate_lists(const corpus::Program& program, const AttackConfig& cfg,
                                                      Rng& rng) {
  const auto& idents = program.identifiers();
  auto names = candidate_names(pool_of(cfg), cfg.candidates * idents.size(), rng, idents);
  std::vector<std::vector<std::string>> lists(idents.size());
  for (std::size_t i = 0; i < idents.size(); ++i) {
    lists[i].assign(names.begin() + static_cast<std::ptrdiff_t>(i * cfg.candidates),
                    names.begin() + static_cast<std::ptrdiff_t>((i + 1) * cfg.candidates));
  }
  return lists;
}

}  // namespace

std::string_view attack_name(AttackKind kind) { return kAttackNames[static_cast<std::size_t>(kind)]; }

AttackKind parse_attack_kind(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kAttackNames); ++i) {
    if (kAttackNames[i] == name) return static_cast<AttackKind>(i);
  }
  throw std::invalid_argument("unknown attack '" + std::string(name) + "'");
}

void AttackConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("attack config: " + m); };
  if (mhm_iterations < 1) fail("mhm_iterations must be >= 1");
  if (candidates < 1) fail("candidates must be >= 1");
  if (population < 2) fail("population must be >= 2");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) fail("mutation_rate must be in [0, 1]");
}

nlohmann::json AttackConfig::to_json() const {
  nlohmann::json j = {{"mhm_iterations", mhm_iterations}, {"candidates", candidates},
                      {"population", population},         {"generations", generations},
                      {"mutation_rate", mutation_rate},   {"stop_on_flip", stop_on_flip},
                      {"seed", seed}};
  if (!pool.empty()) j["pool"] = pool;
  return j;
}

AttackConfig AttackConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("attack config: expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
      throw std::invalid_argument("attack config: unknown key '" + key + "'");
    }
  }
  AttackConfig c;
  c.mhm_iterations = j.value("mhm_iterations", c.mhm_iterations);
  c.candidates = j.value("candidates", c.candidates);
  c.population = j.value("population", c.population);
  c.generations = j.value("generations", c.generations);
  c.mutation_rate = j.value("mutation_rate", c.mutation_rate);
  c.stop_on_flip = j.value("stop_on_flip", c.stop_on_flip);
  c.seed = j.value("seed", c.seed);
  c.pool = j.value("pool", c.pool);
  c.validate();
  return c;
}

std::vector<double> EncoderVictim::probabilities(const corpus::Program& program, const std::string* masked) const {
  auto w = tokenizer_.encode(program.source());
  if (masked != nullptr) {
    for (const auto& e : w.map.entries) {
      if (e.name != *masked) continue;
      for (std::size_t start : e.occurrences) {
        std::fill_n(w.ids.begin() + static_cast<std::ptrdiff_t>(start), e.length(), tokenizer_.bpe().unk_id());
      }
    }
  }
  return softmax(infer_logits(params_, w.ids));
}

std::vector<std::string> candidate_names(const std::vector<std::string>& pool, std::size_t count, Rng& rng,
                                         const std::vector<std::string>& exclude) {
  if (count < 1) throw std::invalid_argument("candidate_names: count must be >= 1");
  const auto profile = frontend::LanguageProfile::minilang();
  const std::set<std::string> excluded(exclude.begin(), exclude.end());
  std::set<std::string> seen;
  std::vector<std::string> eligible;
  for (const auto& name : pool) {
    if (excluded.count(name) || !profile.is_valid_identifier(name) || !seen.insert(name).second) continue;
    eligible.push_back(name);
  }
  if (eligible.size() < count) {
    throw std::invalid_argument("candidate_names: pool has " + std::to_string(eligible.size()) +
                                " eligible names, " + std::to_string(count) + " requested");
  }
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + rng.uniform_int(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(count);
  return eligible;
}

double mhm_acceptance(double p_current, double p_proposal) {
  if (p_proposal < p_current) return 1.0;
  if (p_current >= 1.0) return 0.0;  // p_proposal is 1 too
  return std::min(1.0, (1.0 - p_proposal) / (1.0 - p_current));
}

AttackOutcome mhm_attack(const Victim& victim, const corpus::Program& program, int label, const AttackConfig& cfg,
                         Rng& rng) {
  cfg.validate();
  AttackOutcome out;
  const auto& idents = program.identifiers();
  if (idents.empty()) return out;
  const auto cands = candidate_lists(program, cfg, rng);
  Queries q(victim, program, label);
  bool flipped = false;
  double p = q.p_true({}, &flipped);
  out.trace.push_back(p);
  if (flipped) {
    out.queries = q.count();
    return out;
  }
  // Each identifier walks its own shuffled candidate list, reshuffling when
  // it runs out, so a budget of k * list size proposes every pair.
  std::vector<std::vector<std::size_t>> order(idents.size());
  std::vector<std::size_t> cursor(idents.size(), 0);
  for (auto& o : order) {
    o.resize(cfg.candidates);
    std::iota(o.begin(), o.end(), 0);
    rng.shuffle(o);
  }
  RenameMap current;
  for (std::size_t it = 0; it < cfg.mhm_iterations; ++it) {
    const auto i = static_cast<std::size_t>(rng.uniform_int(idents.size()));
    auto next = [&] {
      if (cursor[i] == order[i].size()) {
        rng.shuffle(order[i]);
        cursor[i] = 0;
      }
      return cands[i][order[i][cursor[i]++]];
    };
    std::string sub = next();
    const auto cur = current.find(idents[i]);
    if (cur != current.end() && cur->second == sub && cfg.candidates > 1) sub = next();
    RenameMap proposal = current;
    proposal[idents[i]] = sub;
    bool flip = false;
    const double p_new = q.p_true(proposal, &flip);
    // A flip ends the walk; in the binary case it is also always accepted.
    const double a = flip ? 1.0 : mhm_acceptance(p, p_new);
    if (a >= 1.0 || rng.uniform01() < a) {
      current = std::move(proposal);
      p = p_new;
      flipped = flip;
    }
    out.trace.push_back(p);
    if (flipped && cfg.stop_on_flip) break;
  }
  out.success = flipped;
  out.map = std::move(current);
  out.queries = q.count();
  return out;
}

AttackOutcome greedy_attack(const Victim& victim, const corpus::Program& program, int label, const AttackConfig& cfg,
                            Rng& rng) {
  cfg.validate();
  AttackOutcome out;
  const auto& idents = program.identifiers();
  if (idents.empty()) return out;
  const auto cands = candidate_lists(program, cfg, rng);
  Queries q(victim, program, label);
  bool flipped = false;
  double p = q.p_true({}, &flipped);
  out.trace.push_back(p);
  if (flipped) {
    out.queries = q.count();
    return out;
  }
  // Importance: how much P(true) drops when the identifier is masked out.
  std::vector<double> importance(idents.size());
  for (std::size_t i = 0; i < idents.size(); ++i) importance[i] = p - q.p_masked(idents[i]);
  std::vector<std::size_t> rank(idents.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](auto a, auto b) { return importance[a] > importance[b]; });

  RenameMap current;
  for (std::size_t i : rank) {
    std::optional<std::string> best;
    double best_p = p;
    bool best_flip = false;
    for (const auto& c : cands[i]) {
      RenameMap trial = current;
      trial[idents[i]] = c;
      bool flip = false;
      const double pc = q.p_true(trial, &flip);
      if (pc < best_p) {
        best_p = pc;
        best = c;
        best_flip = flip;
      }
    }
    if (best) {
      current[idents[i]] = *best;
      p = best_p;
      flipped = best_flip;
    }
    out.trace.push_back(p);
    if (flipped && cfg.stop_on_flip) break;
  }
  out.success = flipped;
  out.map = std::move(current);
  out.queries = q.count();
  return out;
}

GeneticSearch::GeneticSearch(std::vector<std::size_t> options, Fitness fitness, double mutation_rate, Rng& rng)
    : options_(std::move(options)), fitness_fn_(std::move(fitness)), mutation_rate_(mutation_rate), rng_(rng) {
  if (options_.empty()) throw std::invalid_argument("genetic search: no genes");
  for (auto o : options_) {
    if (o == 0) throw std::invalid_argument("genetic search: gene without values");
  }
}

void GeneticSearch::randomize(std::size_t population) {
  if (population < 2) throw std::invalid_argument("genetic search: population must be >= 2");
  std::vector<Chromosome> pop(population, Chromosome(options_.size()));
  for (auto& c : pop) {
    for (std::size_t g = 0; g < c.size(); ++g) c[g] = static_cast<std::size_t>(rng_.uniform_int(options_[g]));
  }
  set_population(std::move(pop));
}

void GeneticSearch::set_population(std::vector<Chromosome> population) {
  if (population.size() < 2) throw std::invalid_argument("genetic search: population must be >= 2");
  for (const auto& c : population) {
    if (c.size() != options_.size()) throw std::invalid_argument("genetic search: chromosome length mismatch");
    for (std::size_t g = 0; g < c.size(); ++g) {
      if (c[g] >= options_[g]) throw std::invalid_argument("genetic search: gene value out of range");
    }
  }
  population_ = std::move(population);
  evaluate();
}

void GeneticSearch::evaluate() {
  fitness_.resize(population_.size());
  for (std::size_t j = 0; j < population_.size(); ++j) {
    fitness_[j] = fitness_fn_(population_[j]);
    ++evaluations_;
  }
  best_ = static_cast<std::size_t>(std::max_element(fitness_.begin(), fitness_.end()) - fitness_.begin());
}

std::size_t GeneticSearch::pick_parent() {
  double total = 0.0;
  for (double f : fitness_) total += std::max(0.0, f);
  if (!(total > 0.0)) return static_cast<std::size_t>(rng_.uniform_int(population_.size()));
  double r = rng_.uniform01() * total;
  for (std::size_t j = 0; j < fitness_.size(); ++j) {
    r -= std::max(0.0, fitness_[j]);
    if (r < 0.0) return j;
  }
  return fitness_.size() - 1;
}

void GeneticSearch::step() {
  std::vector<Chromosome> next;
  next.reserve(population_.size());
  next.push_back(best());
  while (next.size() < population_.size()) {
    const auto& a = population_[pick_parent()];
    const auto& b = population_[pick_parent()];
    Chromosome child(options_.size());
    for (std::size_t g = 0; g < child.size(); ++g) child[g] = rng_.bernoulli(0.5) ? a[g] : b[g];
    if (mutation_rate_ > 0.0 && rng_.bernoulli(mutation_rate_)) {
      const auto g = static_cast<std::size_t>(rng_.uniform_int(child.size()));
      child[g] = static_cast<std::size_t>(rng_.uniform_int(options_[g]));
    }
    next.push_back(std::move(child));
  }
  population_ = std::move(next);
  evaluate();
}

AttackOutcome genetic_attack(const Victim& victim, const corpus::Program& program, int label,
                             const AttackConfig& cfg, Rng& rng) {
  cfg.validate();
  AttackOutcome out;
  const auto& idents = program.identifiers();
  if (idents.empty()) return out;
  const auto cands = candidate_lists(program, cfg, rng);
  Queries q(victim, program, label);
  bool flipped = false;
  const double p0 = q.p_true({}, &flipped);
  out.trace.push_back(p0);
  if (flipped) {
    out.queries = q.count();
    return out;
  }
  // Gene value 0 keeps the original name; v > 0 picks cands[i][v - 1].
  auto to_map = [&](const GeneticSearch::Chromosome& c) {
    RenameMap m;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] > 0) m[idents[i]] = cands[i][c[i] - 1];
    }
    return m;
  };
  // Repeated chromosomes (elites, converged populations) are not re-queried.
  std::map<GeneticSearch::Chromosome, std::pair<double, bool>> seen;
  seen[GeneticSearch::Chromosome(idents.size(), 0)] = {p0, false};
  auto fitness = [&](const GeneticSearch::Chromosome& c) {
    auto it = seen.find(c);
    if (it == seen.end()) {
      bool flip = false;
      const double pc = q.p_true(to_map(c), &flip);
      it = seen.emplace(c, std::make_pair(pc, flip)).first;
    }
    return 1.0 - it->second.first;
  };
  std::vector<std::size_t> options(idents.size(), cfg.candidates + 1);
  GeneticSearch search(options, fitness, cfg.mutation_rate, rng);
  search.randomize(cfg.population);
  // A flipping chromosome with the highest fitness, if any.
  auto flipping = [&]() -> std::optional<GeneticSearch::Chromosome> {
    std::optional<GeneticSearch::Chromosome> found;
    double best = -1.0;
    for (std::size_t j = 0; j < search.population().size(); ++j) {
      const auto& c = search.population()[j];
      if (seen.at(c).second && search.fitness()[j] > best) {
        best = search.fitness()[j];
        found = c;
      }
    }
    return found;
  };
  out.trace.push_back(1.0 - search.best_fitness());
  for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
    if (cfg.stop_on_flip && flipping()) break;
    search.step();
    out.trace.push_back(1.0 - search.best_fitness());
  }
  if (auto f = flipping()) {
    out.success = true;
    out.map = to_map(*f);
  } else {
    out.map = to_map(search.best());
    out.success = seen.at(search.best()).second;
  }
  out.queries = q.count();
  return out;
}

AttackOutcome run_attack(AttackKind kind, const Victim& victim, const corpus::Program& program, int label,
                         const AttackConfig& cfg, Rng& rng) {
  switch (kind) {
    case AttackKind::kMhm: return mhm_attack(victim, program, label, cfg, rng);
    case AttackKind::kGreedy: return greedy_attack(victim, program, label, cfg, rng);
    case AttackKind::kGenetic: return genetic_attack(victim, program, label, cfg, rng);
  }
  throw std::logic_error("unreachable");
}

double AttackReport::asr() const {
  if (!asr_defined()) throw std::logic_error("attack report: ASR undefined, no clean-correct samples");
  return static_cast<double>(n_minus) / static_cast<double>(n_plus);
}

nlohmann::json AttackReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : per_sample) per.push_back({{"id", s.id}, {"success", s.success}, {"queries", s.queries}});
  return {{"attack", attack},
          {"n_total", n_total},
          {"n_plus", n_plus},
          {"n_minus", n_minus},
          {"asr", asr_defined() ? nlohmann::json(asr()) : nlohmann::json(nullptr)},
          {"asr_defined", asr_defined()},
          {"per_sample", per}};
}

AttackReport evaluate_asr(const Victim& victim, const std::vector<corpus::LabeledSample>& testset, AttackKind kind,
                          const AttackConfig& cfg, std::size_t threads) {
  cfg.validate();
  if (testset.empty()) throw std::invalid_argument("evaluate_asr: empty test set");
  struct Slot {
    bool correct = false;
    AttackOutcome outcome;
  };
  std::vector<Slot> slots(testset.size());
  parallel_for(testset.size(), threads, [&](std::size_t i) {
    const auto& s = testset[i];
    const auto probs = victim.probabilities(s.program);
    slots[i].correct = argmax(probs) == static_cast<std::size_t>(s.label);
    if (!slots[i].correct) return;
    Rng rng(derive_seed(cfg.seed, "attack", i));
    slots[i].outcome = run_attack(kind, victim, s.program, s.label, cfg, rng);
  });
  AttackReport report;
  report.attack = std::string(attack_name(kind));
  report.n_total = testset.size();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].correct) continue;
    ++report.n_plus;
    report.n_minus += slots[i].outcome.success ? 1 : 0;
    report.per_sample.push_back({testset[i].id, slots[i].outcome.success, slots[i].outcome.queries});
  }
  return report;
}

}  // namespace codeadv::attacks
