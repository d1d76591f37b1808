// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion on stdout and
// progress on stderr; exits 1 if any criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "codeadv/attacks.hpp"
#include "codeadv/cli.hpp"
#include "codeadv/corpus/generator.hpp"
#include "codeadv/experiment.hpp"
#include "codeadv/frontend/bpe.hpp"
#include "codeadv/frontend/identifier_map.hpp"
#include "codeadv/grad_suite.hpp"
#include "codeadv/persistence.hpp"
#include "codeadv/trainer.hpp"
#include "oracles.hpp"

using namespace codeadv;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pct(double v) { return fmt("%.2f", 100.0 * v); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

fs::path workdir(const fs::path& root, const std::string& name) {
  const auto dir = root / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Runs the CLI in-process; throws with its stderr on a nonzero exit.
void cli(std::vector<std::string> args) {
  args.insert(args.begin(), "codeadv");
  std::ostringstream out, err;
  if (const int code = run_cli(args, out, err); code != kExitOk) {
    std::string line;
    for (std::size_t i = 1; i < args.size(); ++i) line += " " + args[i];
    throw std::runtime_error("codeadv" + line + " exited with " + std::to_string(code) + ": " + err.str());
  }
}

std::vector<TrainExample> examples_from(const std::vector<corpus::LabeledSample>& samples, std::size_t merges,
                                        std::size_t max_len, std::optional<Tokenizer>& tok) {
  std::vector<std::string> texts;
  for (const auto& s : samples) texts.push_back(s.program.source());
  auto profile = frontend::LanguageProfile::minilang();
  tok.emplace(frontend::train_bpe(texts, merges, profile), profile, max_len);
  return to_examples(*tok, samples);
}

// --- 1 ---------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto report = run_grad_suite();
  std::size_t failed = 0;
  for (const auto& e : report.entries) failed += !e.passed();
  Outcome o;
  o.pass = report.passed() && report.seconds < 120.0;
  o.detail = std::to_string(report.entries.size() - failed) + "/" + std::to_string(report.entries.size()) +
             " checks; worst relative error 64-bit " + fmt("%.2e", report.worst(64)) + " (< 1e-6), 32-bit " +
             fmt("%.2e", report.worst(32)) + " (< 1e-3); " + fmt("%.1f", report.seconds) + " s (< 120 s)";
  return o;
}

// --- 2 ---------------------------------------------------------------------

double relative_error(const std::vector<Tensor<float>>& a, const std::vector<Tensor<float>>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < a[i].size(); ++k) {
      num = std::max(num, std::abs(double(a[i][k]) - double(b[i][k])));
      den = std::max(den, std::abs(double(b[i][k])));
    }
  return den > 0 ? num / den : num;
}

// Metric lines with the mode label removed, which is the only field that is
// expected to differ.
std::vector<std::string> metric_lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    auto j = json::parse(line);
    j.erase("mode");
    out.push_back(j.dump());
  }
  return out;
}

Outcome degenerate_equivalence(const fs::path& root) {
  const auto dir = workdir(root, "degenerate");
  const auto data = (dir / "train.jsonl").string();
  cli({"gen-data", "--out", data, "--count", "500", "--seed", "21"});
  write_text(dir / "c.json", R"({"train": {"epochs": 10, "lr": 0.001}, "bpe_merges": 300})");
  auto train = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> args = {"train", "--config", (dir / "c.json").string(), "--data", data,
                                     "--out", (dir / out).string(), "--seed", "5"};
    args.insert(args.end(), extra.begin(), extra.end());
    cli(args);
  };
  train("baseline.bin", {"--mode", "baseline"});
  train("space.bin", {"--mode", "space", "--epsilon", "0", "--steps", "1"});
  const auto base_lines = metric_lines(dir / "baseline.bin.metrics.jsonl");
  const auto space_lines = metric_lines(dir / "space.bin.metrics.jsonl");
  const bool files_equal = base_lines.size() == 10 && base_lines == space_lines;
  const bool params_equal = load_checkpoint(dir / "baseline.bin").params == load_checkpoint(dir / "space.bin").params;

  // Per-step gradients along the baseline trajectory.
  corpus::GenConfig gc;
  gc.max_motifs = 1;
  std::optional<Tokenizer> tok;
  const auto set = examples_from(corpus::generate_corpus(22, 400, gc), 300, 256, tok);
  EncoderConfig ec;
  ec.vocab = tok->vocab_size();
  TrainConfig base;
  base.lr = 1e-3;
  base.seed = 5;
  TrainConfig space = base;
  space.mode = TrainMode::kSpace;
  space.epsilon = 0.0;
  space.steps = 1;
  auto params = init_params<float>(ec, base.seed);
  Optimizer<float> opt(base.optimizer, base.lr);
  double worst = 0.0;
  std::size_t steps = 0;
  for (std::size_t epoch = 1; epoch <= 10; ++epoch) {
    const auto batches = epoch_batches(set, base.batch_size, base.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      Batch batch;
      for (auto i : batches[b]) batch.push_back(&set[i]);
      BatchContext ctx;
      ctx.seed = derive_seed(base.seed, "batch", epoch, b);
      const auto gb = minibatch_gradient(params, batch, base, ctx);
      const auto gs = minibatch_gradient(params, batch, space, ctx);
      worst = std::max(worst, relative_error(gs.grads, gb.grads));
      opt.step(params, gb.grads);
      ++steps;
    }
  }
  Outcome o;
  o.pass = files_equal && params_equal && worst <= 1e-6;
  o.detail = std::string("metric files ") + (files_equal ? "identical" : "DIFFER") + " over " +
             std::to_string(base_lines.size()) + " epochs, best weights " + (params_equal ? "identical" : "DIFFER") +
             "; worst per-step gradient relative difference " + fmt("%.1e", worst) + " over " +
             std::to_string(steps) + " steps (<= 1e-6)";
  return o;
}

// --- 3 ---------------------------------------------------------------------

Outcome mechanism_invariants() {
  std::optional<Tokenizer> tok;
  const auto set = examples_from(corpus::generate_corpus(31, 300, corpus::GenConfig{}), 300, 256, tok);
  EncoderConfig ec;
  ec.vocab = tok->vocab_size();
  auto params = init_params<float>(ec, 3);
  Optimizer<float> opt("adam", 1e-3);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
  std::uniform_int_distribution<std::size_t> steps_dist(1, 4);
  std::uniform_real_distribution<double> log_eps(std::log(0.01), std::log(2.0));
  std::uniform_real_distribution<double> eta_frac(0.05, 1.5);

  std::size_t tying = 0, tying_bad = 0, zeros = 0, zeros_bad = 0, balls = 0, balls_bad = 0, idem = 0, idem_bad = 0;
  std::size_t at_boundary = 0;
  const std::size_t kSteps = 1000;
  for (std::size_t step = 0; step < kSteps; ++step) {
    TrainConfig cfg;
    cfg.mode = TrainMode::kSpace;
    cfg.epsilon = std::exp(log_eps(rng));
    cfg.eta = cfg.epsilon * eta_frac(rng);
    cfg.steps = steps_dist(rng);
    Batch batch;
    for (int i = 0; i < 4; ++i) batch.push_back(&set[pick(rng)]);
    MinibatchTrace<float> trace;
    const auto g = space_minibatch(params, batch, cfg, BatchContext{derive_seed(9, "step", step)}, &trace);
    for (const auto& p : trace.passes) {
      const auto& ex = *batch[p.sample];
      for (const auto* parts : {&p.perturbation, &p.updated}) {
        for (const auto& part : *parts) {
          const double norm = frobenius_norm(part);
          ++balls;
          balls_bad += norm > cfg.epsilon + 1e-6;
          at_boundary += norm > cfg.epsilon * (1 - 1e-4);
          ++idem;
          idem_bad += !(project(part, cfg.epsilon) == part);
        }
      }
      if (p.scattered.empty()) continue;
      const auto covered = ex.map.covered_positions(ex.ids.size());
      for (std::size_t r = 0; r < ex.ids.size(); ++r) {
        if (covered[r]) continue;
        ++zeros;
        const auto row = p.scattered.row(r);
        zeros_bad += std::any_of(row.begin(), row.end(), [](float v) { return v != 0.0f; });
      }
      for (const auto& e : ex.map.entries)
        for (std::size_t o = 1; o < e.occurrences.size(); ++o) {
          ++tying;
          for (std::size_t r = 0; r < e.length(); ++r) {
            const auto a = p.scattered.row(e.occurrences[0] + r);
            const auto b = p.scattered.row(e.occurrences[o] + r);
            if (!std::equal(a.begin(), a.end(), b.begin())) {
              ++tying_bad;
              break;
            }
          }
        }
    }
    opt.step(params, g.grads);
  }
  Outcome o;
  o.pass = tying_bad + zeros_bad + balls_bad + idem_bad == 0 && tying > 0 && zeros > 0 && at_boundary > 0;
  auto frac = [](std::size_t total, std::size_t bad) {
    return std::to_string(total - bad) + "/" + std::to_string(total);
  };
  o.detail = std::to_string(kSteps) + " steps: tied blocks " + frac(tying, tying_bad) + ", keyword rows zero " +
             frac(zeros, zeros_bad) + ", inside ball " + frac(balls, balls_bad) + " (" +
             std::to_string(at_boundary) + " on the boundary), projection idempotent " + frac(idem, idem_bad);
  return o;
}

// --- 4 ---------------------------------------------------------------------

Outcome frontend_oracles() {
  const auto samples = corpus::generate_corpus(41, 1000, corpus::GenConfig{});
  std::vector<std::string> texts;
  for (const auto& s : samples) texts.push_back(s.program.source());
  const auto profile = frontend::LanguageProfile::minilang();
  const auto bpe = frontend::train_bpe(texts, 1000, profile);
  std::size_t pretokens = 0, round_bad = 0, maps = 0, maps_bad = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& tokens = samples[i].program.tokens();
    for (const auto& p : frontend::pretokens(tokens)) {
      ++pretokens;
      round_bad += bpe.decode(bpe.encode_pretoken(p)) != p;
    }
    // Full window and a truncated one that can cut through identifiers.
    for (std::size_t max_len : {std::size_t{1024}, 16 + (i * 7) % 120}) {
      const auto seq = frontend::encode(bpe, tokens, max_len);
      ++maps;
      maps_bad += frontend::build_identifier_map(seq, tokens, profile) != oracles::span_oracle(seq, tokens);
    }
  }
  Outcome o;
  o.pass = round_bad == 0 && maps_bad == 0;
  o.detail = "BPE round trip " + std::to_string(pretokens - round_bad) + "/" + std::to_string(pretokens) +
             " pre-tokens; identifier map equals span oracle on " + std::to_string(maps - maps_bad) + "/" +
             std::to_string(maps) + " windows of 1000 programs";
  return o;
}

// --- 5 to 8 ----------------------------------------------------------------

const std::vector<std::string> kModes = {"baseline", "adv", "space", "rand_adv", "rand_space"};
const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

// Trainer settings shared by every mode; only the mode changes between runs.
const char* kExperimentConfig = R"({
  "train_size": 4000, "dev_size": 500, "test_size": 1000,
  "gen": {"max_motifs": 1},
  "bpe_merges": 1000,
  "train": {"mode": "baseline", "epochs": 10, "lr": 0.001, "epsilon": 0.1, "eta": 0.05, "steps": 3},
  "attacks": ["mhm"],
  "transform": true
})";

struct ExperimentResults {
  std::map<std::string, std::vector<ExperimentReport>> reports;  // by mode, in seed order
  double core_seconds = 0.0;   // data preparation plus baseline, adv and space runs
  double total_seconds = 0.0;

  double median_of(const std::string& mode, const std::function<double(const ExperimentReport&)>& f) const {
    std::vector<double> v;
    for (const auto& r : reports.at(mode)) v.push_back(f(r));
    return median(v);
  }
  double asr(const std::string& mode) const {
    return median_of(mode, [](const ExperimentReport& r) { return r.asr("mhm").value_or(NAN); });
  }
  double clean(const std::string& mode) const {
    return median_of(mode, [](const ExperimentReport& r) { return r.clean_accuracy; });
  }
  double drop(const std::string& mode) const {
    return median_of(mode, [](const ExperimentReport& r) { return r.transform_drop().value_or(NAN); });
  }
};

ExperimentResults run_experiments(const json& config, const fs::path& out_dir) {
  ExperimentResults res;
  const auto t_all = Clock::now();
  std::vector<ExperimentReport> all;
  for (auto seed : kSeeds) {
    auto base = ExperimentConfig::from_json(config);
    base.seed = seed;
    auto t0 = Clock::now();
    const auto data = prepare_data(base);
    res.core_seconds += seconds_since(t0);
    for (const auto& mode : kModes) {
      auto cfg = base;
      cfg.train.mode = parse_train_mode(mode);
      t0 = Clock::now();
      auto run = run_experiment(cfg, &data);
      const double secs = seconds_since(t0);
      if (mode == "baseline" || mode == "adv" || mode == "space") res.core_seconds += secs;
      const auto& r = run.report;
      std::cerr << "  seed " << seed << " " << mode << ": clean " << fmt("%.4f", r.clean_accuracy) << ", drop "
                << fmt("%.4f", r.transform_drop().value_or(NAN)) << ", MHM ASR "
                << fmt("%.4f", r.asr("mhm").value_or(NAN)) << " [" << fmt("%.0f", secs) << " s]" << std::endl;
      write_json(out_dir / (r.run_id + ".json"), r.to_json());
      res.reports[mode].push_back(r);
      all.push_back(r);
    }
  }
  emit_plot_data(all, out_dir / "plot.csv");
  res.total_seconds = seconds_since(t_all);
  return res;
}

Outcome robustness_ordering(const ExperimentResults& r) {
  const double b = r.asr("baseline"), a = r.asr("adv"), s = r.asr("space");
  const bool order = s < a && a < b;
  const bool margin = b - s >= 0.05;
  const bool fast = r.core_seconds <= 20 * 60;
  Outcome o;
  o.pass = order && margin && fast;
  o.detail = "median MHM ASR space " + pct(s) + " < adv " + pct(a) + " < baseline " + pct(b) + " [" +
             (order ? "holds" : "VIOLATED") + "]; reduction " + pct(b - s) + " points (>= 5) [" +
             (margin ? "holds" : "VIOLATED") + "]; runtime " + fmt("%.0f", r.core_seconds) + " s (<= 1200 s) [" +
             (fast ? "holds" : "VIOLATED") + "]";
  return o;
}

Outcome no_tradeoff(const ExperimentResults& r) {
  const double b = r.clean("baseline"), s = r.clean("space");
  Outcome o;
  o.pass = s >= b - 0.01;
  o.detail = "median clean accuracy space " + pct(s) + " >= baseline " + pct(b) + " - 1.00 [" +
             (o.pass ? "holds" : "VIOLATED") + "]";
  return o;
}

Outcome transformation_robustness(const ExperimentResults& r) {
  const double b = r.drop("baseline"), s = r.drop("space");
  Outcome o;
  o.pass = s < b;
  o.detail = "median accuracy drop under transformation (points) space " + pct(s) + " < baseline " + pct(b) + " [" +
             (o.pass ? "holds" : "VIOLATED") + "]";
  return o;
}

Outcome ablation_ordering(const ExperimentResults& r) {
  const double s = r.asr("space"), rs = r.asr("rand_space"), ra = r.asr("rand_adv");
  const bool first = rs <= ra, second = s <= rs;
  Outcome o;
  o.pass = first && second;
  o.detail = "median MHM ASR rand_space " + pct(rs) + " <= rand_adv " + pct(ra) + " [" +
             (first ? "holds" : "VIOLATED") + "]; space " + pct(s) + " <= rand_space " + pct(rs) + " [" +
             (second ? "holds" : "VIOLATED") + "]";
  return o;
}

// --- 9 ---------------------------------------------------------------------

Outcome attack_oracles() {
  using namespace attacks;
  const auto one = corpus::Program::from_source("int f() { return 1; }");
  const auto two = corpus::Program::from_source("int f(int x) { return x + 1; }");
  const auto three = corpus::Program::from_source("int f(int x, int y) { return x + y; }");

  // MHM on one identifier: success iff some candidate flips.
  AttackConfig mcfg;
  mcfg.candidates = 3;
  int m_attacked = 0, m_agree = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const auto v = oracles::separable(t * 101);
    if (v.probabilities(one)[0] < 0.5) continue;
    ++m_attacked;
    Rng rng(t);
    const bool can_flip = oracles::exhaustive_min(v, one, oracles::lists_for(one, mcfg, rng)) < 0.5;
    m_agree += mhm_attack(v, one, 0, mcfg, rng).success == can_flip;
  }

  auto optimum_rate = [](const corpus::Program& p, std::size_t candidates, std::uint64_t base, std::uint64_t mul,
                         std::size_t tables, AttackKind kind, int& attacked) {
    AttackConfig cfg;
    cfg.candidates = candidates;
    cfg.stop_on_flip = false;
    int hits = 0;
    for (std::uint64_t t = 0; t < tables; ++t) {
      const auto v = oracles::separable(base + mul * t);
      if (v.probabilities(p)[0] < 0.5) continue;
      ++attacked;
      Rng rng(t);
      const double best = oracles::exhaustive_min(v, p, oracles::lists_for(p, cfg, rng));
      const auto out = run_attack(kind, v, p, 0, cfg, rng);
      hits += std::abs(v.probabilities(corpus::rename_identifiers(p, out.map))[0] - best) < 1e-6;
    }
    return hits;
  };
  int g_attacked = 0, ga_attacked = 0;
  const int g_hits = optimum_rate(two, 8, 1000, 7, 400, AttackKind::kGreedy, g_attacked);
  const int ga_hits = optimum_rate(three, 5, 5000, 13, 100, AttackKind::kGenetic, ga_attacked);

  // ASR arithmetic: N-/N+ exactly, and the counts agree with per-sample outcomes.
  bool arithmetic = true;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    AttackReport r;
    r.n_plus = 1 + rng() % 5000;
    r.n_minus = rng() % (r.n_plus + 1);
    arithmetic &= r.asr() == static_cast<double>(r.n_minus) / static_cast<double>(r.n_plus);
  }
  AttackReport empty;
  arithmetic &= !empty.asr_defined();
  std::vector<corpus::LabeledSample> samples;
  const auto pool = corpus::generate_corpus(51, 60, corpus::GenConfig{});
  const auto v = oracles::separable(77);
  AttackConfig ecfg;
  ecfg.mhm_iterations = 30;
  const auto rep = evaluate_asr(v, pool, AttackKind::kMhm, ecfg, 1);
  std::size_t correct = 0, successes = 0;
  for (const auto& s : pool) {
    const auto p = v.probabilities(s.program);
    correct += static_cast<int>(p[1] > p[0]) == s.label;
  }
  for (const auto& s : rep.per_sample) successes += s.success;
  arithmetic &= rep.n_plus == correct && rep.n_minus == successes && rep.n_total == pool.size();

  Outcome o;
  o.pass = m_agree == m_attacked && g_hits >= 0.95 * g_attacked && ga_hits >= 0.9 * ga_attacked && arithmetic;
  o.detail = "MHM agrees with brute force " + std::to_string(m_agree) + "/" + std::to_string(m_attacked) +
             "; greedy optimum " + std::to_string(g_hits) + "/" + std::to_string(g_attacked) + " (>= 95%)" +
             "; genetic optimum " + std::to_string(ga_hits) + "/" + std::to_string(ga_attacked) + " (>= 90%)" +
             "; ASR arithmetic " + (arithmetic ? "exact" : "WRONG");
  return o;
}

// --- 10 --------------------------------------------------------------------

// Every subcommand that writes a report, run twice from the same inputs.
Outcome determinism(const fs::path& root) {
  const auto dir = workdir(root, "determinism");
  const auto work = dir / "work";
  write_text(dir / "c.json",
             R"({"encoder": {"d": 32, "layers": 1, "heads": 2, "d_ff": 64, "max_len": 128},
                 "train": {"epochs": 2, "batch_size": 16, "lr": 0.001}})");
  write_text(dir / "attack.json", R"({"mhm_iterations": 40, "candidates": 8, "population": 8, "generations": 4})");
  auto pipeline = [&] {
    fs::remove_all(work);
    fs::create_directories(work);
    auto w = [&](const std::string& name) { return (work / name).string(); };
    const auto c = (dir / "c.json").string(), a = (dir / "attack.json").string();
    cli({"gen-data", "--out", w("train.jsonl"), "--count", "200", "--seed", "1"});
    cli({"gen-data", "--out", w("test.jsonl"), "--count", "40", "--seed", "2", "--prefix", "t"});
    cli({"train-bpe", "--data", w("train.jsonl"), "--out", w("bpe.json"), "--merges", "200"});
    cli({"train", "--config", c, "--data", w("train.jsonl"), "--bpe", w("bpe.json"), "--out", w("space.bin"),
         "--mode", "space", "--epsilon", "0.5", "--eta", "0.1", "--steps", "2", "--seed", "7", "--threads", "2"});
    cli({"train", "--config", c, "--data", w("train.jsonl"), "--bpe", w("bpe.json"), "--out", w("base.bin"),
         "--seed", "7"});
    for (const auto* m : {"space", "base"}) {
      cli({"evaluate", "--model", w(std::string(m) + ".bin"), "--data", w("test.jsonl"), "--attack", "all",
           "--config", a, "--seed", "3", "--threads", "2", "--out", w(std::string(m) + ".report.json")});
    }
    cli({"attack", "--model", w("space.bin"), "--data", w("test.jsonl"), "--attack", "genetic", "--config", a,
         "--seed", "3", "--out", w("genetic.json")});
    cli({"transform", "--data", w("test.jsonl"), "--out", w("transformed.jsonl"), "--seed", "4"});
    cli({"report", w("space.report.json"), w("base.report.json"), "--out", w("plot.csv")});
    cli({"grad-check", "--out", w("grad.json"), "--seed", "2"});
  };
  pipeline();
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(work)) first[e.path().filename().string()] = slurp(e.path());
  pipeline();
  std::size_t same = 0, files = 0;
  std::string differing;
  for (const auto& e : fs::directory_iterator(work)) {
    ++files;
    const auto name = e.path().filename().string();
    if (first.count(name) && first[name] == slurp(e.path())) {
      ++same;
    } else {
      differing += " " + name;
    }
  }
  Outcome o;
  o.pass = same == files && files == first.size() && files > 0;
  o.detail = std::to_string(same) + "/" + std::to_string(files) +
             " output files byte-identical across two runs of gen-data, train-bpe, train, evaluate, attack, "
             "transform, report and grad-check" +
             (differing.empty() ? "" : "; differ:" + differing);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("codeadv acceptance suite");
  std::vector<int> only;
  std::string work = (fs::temp_directory_path() / "codeadv_acceptance").string();
  std::string experiment_config;
  std::string summary;
  app.add_option("--only", only, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--experiment-config", experiment_config, "JSON file overriding the experiment settings");
  app.add_option("--summary", summary, "Write results as JSON here");
  CLI11_PARSE(app, argc, argv);

  const fs::path root(work);
  fs::create_directories(root);
  json config = json::parse(kExperimentConfig);
  if (!experiment_config.empty()) config.merge_patch(json::parse(slurp(experiment_config)));

  std::optional<ExperimentResults> experiments;
  auto results = [&]() -> const ExperimentResults& {
    if (!experiments) {
      std::cerr << "running 3 seeds x " << kModes.size() << " modes" << std::endl;
      const auto out = workdir(root, "experiments");
      experiments = run_experiments(config, out);
      std::cerr << "experiments took " << fmt("%.0f", experiments->total_seconds) << " s; reports in " << out.string()
                << std::endl;
    }
    return *experiments;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"degenerate-reduction equivalence", [&] { return degenerate_equivalence(root); }},
      {"mechanism invariants", mechanism_invariants},
      {"frontend oracles", frontend_oracles},
      {"robustness ordering", [&] { return robustness_ordering(results()); }},
      {"no clean-accuracy trade-off", [&] { return no_tradeoff(results()); }},
      {"transformation robustness", [&] { return transformation_robustness(results()); }},
      {"ablation ordering", [&] { return ablation_ordering(results()); }},
      {"attack-harness oracles", attack_oracles},
      {"determinism", [&] { return determinism(root); }},
  };

  json out = json::array();
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    std::cerr << "criterion " << id << " (" << criteria[i].first << ")..." << std::endl;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << std::endl;
    out.push_back({{"criterion", id},
                   {"name", criteria[i].first},
                   {"pass", o.pass},
                   {"detail", o.detail},
                   {"seconds", seconds_since(t0)}});
  }
  if (!summary.empty()) write_json(summary, out);
  return failures == 0 ? 0 : 1;
}
