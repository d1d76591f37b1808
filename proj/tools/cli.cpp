// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

#include "codeadv/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>

#include "codeadv/attacks.hpp"
#include "codeadv/corpus/dataset.hpp"
#include "codeadv/corpus/transforms.hpp"
#include "codeadv/experiment.hpp"
#include "codeadv/frontend/profile.hpp"
#include "codeadv/grad_suite.hpp"
#include "codeadv/persistence.hpp"

namespace codeadv {

namespace {

namespace fs = std::filesystem;

// Bad flag values or configuration content: exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h = (h ^ static_cast<unsigned char>(*it)) * 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<corpus::LabeledSample> load_samples(const fs::path& path, std::ostream& err) {
  std::vector<corpus::LabeledSample> out;
  std::size_t skipped = 0;
  for (const auto& r : corpus::read_jsonl(path)) {
    if (auto s = corpus::to_sample(r)) {
      out.push_back(std::move(*s));
    } else {
      ++skipped;
    }
  }
  if (skipped > 0) err << "warning: skipped " << skipped << " records of " << path.string() << " that do not parse\n";
  if (out.empty()) throw std::runtime_error(path.string() + ": no usable samples");
  return out;
}

// Reads a JSON config file; malformed content is a usage error.
nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  try {
    return read_json(path);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
}

template <class F>
auto as_usage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::string> attack_list(const std::string& spec) {
  if (spec.empty() || spec == "none") return {};
  if (spec == "all") return {"mhm", "greedy", "genetic"};
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const auto name = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    as_usage([&] { return attacks::parse_attack_kind(name); });
    out.push_back(name);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

attacks::AttackConfig attack_config(const std::string& path, std::uint64_t seed) {
  auto cfg = as_usage([&] { return attacks::AttackConfig::from_json(load_config(path)); });
  cfg.seed = seed;
  return cfg;
}

// ---------------------------------------------------------------- gen-data

struct GenArgs {
  std::string out, config, prefix = "s";
  std::size_t count = 1000;
  std::uint64_t seed = 0;
};

int gen_data(const GenArgs& a, std::ostream& out) {
  const auto gc = as_usage([&] { return corpus::GenConfig::from_json(load_config(a.config)); });
  const auto samples = corpus::generate_corpus(a.seed, a.count, gc, a.prefix);
  std::vector<corpus::Record> records;
  std::size_t defective = 0;
  for (const auto& s : samples) {
    records.push_back(corpus::to_record(s));
    defective += s.label;
  }
  corpus::write_jsonl(a.out, records);
  out << "wrote " << samples.size() << " samples (" << defective << " defective) to " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train-bpe

struct BpeArgs {
  std::string data, out;
  std::size_t merges = 1000;
};

int train_bpe_cmd(const BpeArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<std::string> texts;
  for (const auto& s : load_samples(a.data, err)) texts.push_back(s.program.source());
  const auto model = frontend::train_bpe(texts, a.merges, frontend::LanguageProfile::minilang());
  model.save(a.out);
  out << "BPE: " << model.merges().size() << " merges, vocabulary " << model.vocab_size() << " -> " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config, data, dev, bpe, out, metrics, mode;
  std::optional<double> epsilon, eta;
  std::optional<std::size_t> steps, epochs;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

const std::vector<std::string> kTrainFileKeys = {"encoder", "train", "bpe_merges", "dev_fraction"};

int train_cmd(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const auto file = load_config(a.config);
  EncoderConfig enc;
  TrainConfig tc;
  std::size_t merges = 1000;
  double dev_fraction = 0.1;
  as_usage([&] {
    if (!file.is_object()) throw std::invalid_argument("train config must be a JSON object");
    for (const auto& [key, _] : file.items()) {
      if (std::find(kTrainFileKeys.begin(), kTrainFileKeys.end(), key) == kTrainFileKeys.end()) {
        throw std::invalid_argument("train config: unknown key '" + key + "'");
      }
    }
    auto ej = enc.to_json();
    const auto file_enc = file.value("encoder", nlohmann::json::object());
    for (const auto& [k, v] : file_enc.items()) ej[k] = v;
    ej["vocab"] = 1;  // replaced by the tokenizer's size below
    enc = EncoderConfig::from_json(ej);
    auto tj = file.value("train", nlohmann::json::object());
    if (!a.mode.empty()) tj["mode"] = a.mode;
    if (!tj.contains("mode")) tj["mode"] = "baseline";
    if (a.epsilon) tj["epsilon"] = *a.epsilon;
    if (a.eta) tj["eta"] = *a.eta;
    if (a.steps) tj["steps"] = *a.steps;
    if (a.epochs) tj["epochs"] = *a.epochs;
    tj["seed"] = a.seed;
    tj["threads"] = resolve_threads(a.threads);
    tc = TrainConfig::from_json(tj);
    merges = file.value("bpe_merges", merges);
    dev_fraction = file.value("dev_fraction", dev_fraction);
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) throw std::invalid_argument("dev_fraction must be in (0, 1)");
    return 0;
  });

  auto samples = load_samples(a.data, err);
  std::vector<corpus::LabeledSample> dev;
  if (!a.dev.empty()) {
    dev = load_samples(a.dev, err);
  } else {
    if (samples.size() < 2) throw std::runtime_error("need at least two samples to hold out a dev split");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(a.seed, "split"));
    rng.shuffle(order);
    const auto n_dev = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(dev_fraction * static_cast<double>(samples.size()))), 1, samples.size() - 1);
    std::vector<bool> is_dev(samples.size(), false);
    for (std::size_t i = 0; i < n_dev; ++i) is_dev[order[i]] = true;
    std::vector<corpus::LabeledSample> rest;
    for (std::size_t i = 0; i < samples.size(); ++i) (is_dev[i] ? dev : rest).push_back(std::move(samples[i]));
    samples = std::move(rest);
  }

  const auto profile = frontend::LanguageProfile::minilang();
  std::optional<frontend::BpeModel> bpe;
  if (!a.bpe.empty()) {
    bpe = frontend::BpeModel::load(a.bpe);
  } else {
    std::vector<std::string> texts;
    for (const auto& s : samples) texts.push_back(s.program.source());
    bpe = frontend::train_bpe(texts, merges, profile);
  }
  const Tokenizer tokenizer(*bpe, profile, enc.max_len);
  enc.vocab = tokenizer.vocab_size();

  const fs::path metrics_path = a.metrics.empty() ? fs::path(a.out + ".metrics.jsonl") : fs::path(a.metrics);
  std::ofstream metrics(metrics_path, std::ios::binary | std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot open " + metrics_path.string());
  TrainHooks hooks;
  hooks.tokenizer = &tokenizer;
  hooks.on_epoch = [&](const EpochMetrics& m) {
    auto j = m.to_json();
    j.erase("wall_ms");
    metrics << j.dump() << '\n';
    out << "epoch " << m.epoch << "  loss " << fixed(m.train_loss) << "  dev_acc " << fixed(m.dev_acc) << "  ("
        << fixed(m.wall_ms / 1000.0, 1) << " s)\n";
    out.flush();
  };
  out << "training " << mode_name(tc.mode) << " on " << samples.size() << " samples (dev " << dev.size() << ")\n";
  auto result = train<float>(tc, enc, to_examples(tokenizer, samples), to_examples(tokenizer, dev), hooks);
  metrics.close();

  Checkpoint ck{std::move(result.params), *bpe, tc,
                {{"seed", a.seed},
                 {"data", fs::path(a.data).filename().string()},
                 {"best_epoch", result.best_epoch},
                 {"best_dev_acc", result.best_dev_acc}}};
  ck.train->threads = 1;  // machine detail, not part of the model
  save_checkpoint(a.out, ck);
  out << "best dev accuracy " << fixed(result.best_dev_acc) << " at epoch " << result.best_epoch << "; checkpoint "
      << a.out << ", metrics " << metrics_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate / attack

struct EvalArgs {
  std::string model, data, out, attack, config;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool no_transform = false;
};

int evaluate_cmd(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto attacks_to_run = attack_list(a.attack);
  const auto acfg = attack_config(a.config, derive_seed(a.seed, "attack"));
  const auto ck = load_checkpoint(a.model);
  const auto test = load_samples(a.data, err);
  const auto tokenizer = ck.tokenizer();

  ExperimentReport report;
  report.mode = ck.train ? std::string(mode_name(ck.train->mode)) : "unknown";
  report.seed = a.seed;
  auto attack_json = acfg.to_json();
  attack_json.erase("seed");
  report.config = {{"command", "evaluate"},
                   {"model", file_digest(a.model)},
                   {"data", file_digest(a.data)},
                   {"attacks", attacks_to_run},
                   {"attack", attack_json},
                   {"transform", !a.no_transform},
                   {"seed", a.seed}};
  report.config_hash = config_hash(report.config);
  report.run_id = report.mode + "-s" + std::to_string(a.seed) + "-" + report.config_hash.substr(0, 8);
  report.seeds = {{"attack", acfg.seed}, {"transform", derive_seed(a.seed, "transform")}};
  EvaluationOptions eval;
  eval.attacks = attacks_to_run;
  eval.attack = acfg;
  eval.transform = !a.no_transform;
  eval.transform_seed = derive_seed(a.seed, "transform");
  eval.threads = resolve_threads(a.threads);
  evaluate_model(ck.params, tokenizer, test, eval, report);
  write_json(a.out, report.to_json());

  out << "clean accuracy " << fixed(report.clean_accuracy) << " on " << report.test_size << " samples\n";
  if (report.transformed_accuracy) {
    out << "transformed accuracy " << fixed(*report.transformed_accuracy) << " (drop " << fixed(*report.transform_drop())
        << ")\n";
  }
  for (const auto& [name, r] : report.attacks) {
    out << name << " ASR " << (r.at("asr").is_null() ? "undefined" : fixed(r.at("asr").get<double>())) << " ("
        << r.at("n_minus") << "/" << r.at("n_plus") << ")\n";
  }
  out << "report " << a.out << "\n";
  return kExitOk;
}

int attack_cmd(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto kind = as_usage([&] { return attacks::parse_attack_kind(a.attack); });
  const auto acfg = attack_config(a.config, a.seed);
  const auto ck = load_checkpoint(a.model);
  const auto test = load_samples(a.data, err);
  const auto tokenizer = ck.tokenizer();
  const attacks::EncoderVictim victim(ck.params, tokenizer);
  const auto report = attacks::evaluate_asr(victim, test, kind, acfg, resolve_threads(a.threads));
  auto j = report.to_json();
  j["config"] = acfg.to_json();
  j["model"] = file_digest(a.model);
  j["data"] = file_digest(a.data);
  write_json(a.out, j);
  std::size_t queries = 0;
  for (const auto& s : report.per_sample) queries += s.queries;
  out << attacks::attack_name(kind) << ": ASR " << (report.asr_defined() ? fixed(report.asr()) : "undefined") << " ("
      << report.n_minus << "/" << report.n_plus << " clean-correct of " << report.n_total << "), " << queries
      << " queries\n";
  return kExitOk;
}

// ---------------------------------------------------------------- transform

struct TransformArgs {
  std::string data, out, config;
  std::uint64_t seed = 0;
};

int transform_cmd(const TransformArgs& a, std::ostream& out, std::ostream& err) {
  const auto specs = a.config.empty()
                         ? corpus::default_transform_specs(a.seed)
                         : as_usage([&] { return corpus::transform_specs_from_json(load_config(a.config)); });
  const auto samples = load_samples(a.data, err);
  const auto adv = corpus::build_adv_testset(samples, specs, a.seed);
  std::vector<corpus::Record> records;
  std::size_t changed = 0, preserved = 0;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    records.push_back(corpus::to_record(adv[i]));
    changed += adv[i].program.source() != samples[i].program.source();
    preserved += corpus::oracle_label(adv[i].program) == corpus::oracle_label(samples[i].program);
  }
  corpus::write_jsonl(a.out, records);
  out << "transformed " << adv.size() << " samples (" << changed << " changed, oracle label kept on " << preserved
      << ") -> " << a.out << "\n";
  return preserved == adv.size() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- grad-check

struct GradArgs {
  std::string out;
  std::uint64_t seed = 1;
};

int grad_check_cmd(const GradArgs& a, std::ostream& out) {
  GradSuiteOptions opts;
  opts.seed = a.seed;
  const auto report = run_grad_suite(opts);
  if (!a.out.empty()) write_json(a.out, report.to_json());
  std::size_t failed = 0;
  for (const auto& e : report.entries) {
    if (!e.passed()) {
      ++failed;
      out << "FAIL " << e.name << " (" << e.bits << "-bit) error " << e.result.max_relative_error << " >= "
          << e.threshold << "\n";
    }
  }
  out << report.entries.size() - failed << "/" << report.entries.size() << " checks passed; worst relative error "
      << report.worst(64) << " (64-bit), " << report.worst(32) << " (32-bit); " << fixed(report.seconds, 2) << " s\n";
  return report.passed() ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int report_cmd(const ReportArgs& a, std::ostream& out) {
  std::vector<ExperimentReport> reports;
  for (const auto& path : a.inputs) {
    const auto j = read_json(path);
    try {
      reports.push_back(ExperimentReport::from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ": not an experiment report (" + e.what() + ")");
    }
  }
  emit_plot_data(reports, a.out);
  // Medians per mode, in first-seen order.
  std::vector<std::string> modes;
  for (const auto& r : reports) {
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
  }
  out << "mode          runs  clean_acc  asr_mhm  drop_transform\n";
  for (const auto& m : modes) {
    std::vector<double> acc, asr, drop;
    for (const auto& r : reports) {
      if (r.mode != m) continue;
      acc.push_back(r.clean_accuracy);
      if (auto v = r.asr("mhm")) asr.push_back(*v);
      if (auto v = r.transform_drop()) drop.push_back(*v);
    }
    char line[128];
    std::snprintf(line, sizeof(line), "%-13s %4zu  %9s  %7s  %14s\n", m.c_str(), acc.size(), fixed(median(acc)).c_str(),
                  asr.empty() ? "-" : fixed(median(asr)).c_str(), drop.empty() ? "-" : fixed(median(drop)).c_str());
    out << line;
  }
  out << "plot data " << a.out << " (" << reports.size() << " rows)\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identifier-aware adversarial training and attacks for code classifiers", "codeadv"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a labelled MiniLang corpus (JSONL)");
  gen_cmd->add_option("--out", gen.out, "Output JSONL")->required();
  gen_cmd->add_option("--count", gen.count, "Number of samples")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--config", gen.config, "Generator config JSON")->check(CLI::ExistingFile);
  gen_cmd->add_option("--prefix", gen.prefix, "Sample id prefix");

  BpeArgs bpe;
  auto* bpe_cmd = app.add_subcommand("train-bpe", "Learn BPE merges from a corpus");
  bpe_cmd->add_option("--data", bpe.data, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  bpe_cmd->add_option("--out", bpe.out, "Output BPE model JSON")->required();
  bpe_cmd->add_option("--merges", bpe.merges, "Number of merges");

  TrainArgs tr;
  auto* train_sub = app.add_subcommand("train", "Train an encoder; writes a checkpoint and per-epoch metrics");
  train_sub->add_option("--config", tr.config, "Train config JSON {encoder, train, bpe_merges, dev_fraction}")
      ->check(CLI::ExistingFile);
  train_sub->add_option("--data", tr.data, "Training JSONL")->required()->check(CLI::ExistingFile);
  train_sub->add_option("--dev", tr.dev, "Dev JSONL (default: hold out part of --data)")->check(CLI::ExistingFile);
  train_sub->add_option("--bpe", tr.bpe, "BPE model JSON (default: learn from --data)")->check(CLI::ExistingFile);
  train_sub->add_option("--out", tr.out, "Checkpoint path")->required();
  train_sub->add_option("--metrics", tr.metrics, "Metrics JSONL (default: <out>.metrics.jsonl)");
  train_sub->add_option("--mode", tr.mode, "baseline|adv|space|rand_adv|rand_space|augment");
  train_sub->add_option("--epsilon", tr.epsilon, "Perturbation radius")->check(CLI::NonNegativeNumber);
  train_sub->add_option("--eta", tr.eta, "Ascent step length")->check(CLI::NonNegativeNumber);
  train_sub->add_option("--steps", tr.steps, "K: ascent steps / draws / variants")->check(CLI::PositiveNumber);
  train_sub->add_option("--epochs", tr.epochs, "Epochs");
  train_sub->add_option("--seed", tr.seed, "Random seed");
  train_sub->add_option("--threads", tr.threads, "Worker threads (0 = all cores)");

  EvalArgs ev;
  auto* eval_sub = app.add_subcommand("evaluate", "Clean, transformed and attacked accuracy of a checkpoint");
  eval_sub->add_option("--model", ev.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval_sub->add_option("--data", ev.data, "Test JSONL")->required()->check(CLI::ExistingFile);
  eval_sub->add_option("--out", ev.out, "Experiment report JSON")->required();
  eval_sub->add_option("--attack", ev.attack, "mhm,greedy,genetic | all | none (default none)");
  eval_sub->add_option("--config", ev.config, "Attack config JSON")->check(CLI::ExistingFile);
  eval_sub->add_option("--seed", ev.seed, "Random seed");
  eval_sub->add_option("--threads", ev.threads, "Worker threads (0 = all cores)");
  eval_sub->add_flag("--no-transform", ev.no_transform, "Skip the transformed test set");

  EvalArgs at;
  auto* attack_sub = app.add_subcommand("attack", "Attack success rate of one attack against a checkpoint");
  attack_sub->add_option("--model", at.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  attack_sub->add_option("--data", at.data, "Test JSONL")->required()->check(CLI::ExistingFile);
  attack_sub->add_option("--attack", at.attack, "mhm|greedy|genetic")->required();
  attack_sub->add_option("--out", at.out, "Attack report JSON")->required();
  attack_sub->add_option("--config", at.config, "Attack config JSON")->check(CLI::ExistingFile);
  attack_sub->add_option("--seed", at.seed, "Random seed");
  attack_sub->add_option("--threads", at.threads, "Worker threads (0 = all cores)");

  TransformArgs tf;
  auto* transform_sub = app.add_subcommand("transform", "Apply semantic-preserving transformations to a corpus");
  transform_sub->add_option("--data", tf.data, "Input JSONL")->required()->check(CLI::ExistingFile);
  transform_sub->add_option("--out", tf.out, "Output JSONL")->required();
  transform_sub->add_option("--config", tf.config, "Transform spec list JSON (default: all three)")
      ->check(CLI::ExistingFile);
  transform_sub->add_option("--seed", tf.seed, "Random seed");

  GradArgs gc;
  auto* grad_sub = app.add_subcommand("grad-check", "Run the gradient check suite; exit 0 iff it passes");
  grad_sub->add_option("--out", gc.out, "Suite report JSON");
  grad_sub->add_option("--seed", gc.seed, "Random seed");

  ReportArgs rp;
  auto* report_sub = app.add_subcommand("report", "Summarise experiment reports into plot-ready CSV");
  report_sub->add_option("reports", rp.inputs, "Experiment report JSON files")->required()->check(CLI::ExistingFile);
  report_sub->add_option("--out", rp.out, "Output CSV")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return gen_data(gen, out);
    if (*bpe_cmd) return train_bpe_cmd(bpe, out, err);
    if (*train_sub) return train_cmd(tr, out, err);
    if (*eval_sub) return evaluate_cmd(ev, out, err);
    if (*attack_sub) return attack_cmd(at, out, err);
    if (*transform_sub) return transform_cmd(tf, out, err);
    if (*grad_sub) return grad_check_cmd(gc, out);
    if (*report_sub) return report_cmd(rp, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace codeadv
