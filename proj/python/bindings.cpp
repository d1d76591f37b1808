// Copyright 2026 The codeadv Authors
// SPDX-License-Identifier: Apache-2.0

// JSON crosses the boundary as text; codeadv/__init__.py decodes it.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "codeadv/attacks.hpp"
#include "codeadv/cli.hpp"
#include "codeadv/corpus/dataset.hpp"
#include "codeadv/corpus/generator.hpp"
#include "codeadv/corpus/transforms.hpp"
#include "codeadv/experiment.hpp"
#include "codeadv/grad_suite.hpp"
#include "codeadv/persistence.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace codeadv;

namespace {

json parse_or_empty(const std::string& text) { return text.empty() ? json::object() : json::parse(text); }

std::string generate(std::uint64_t seed, std::size_t count, const std::string& gen) {
  const auto samples = corpus::generate_corpus(seed, count, corpus::GenConfig::from_json(parse_or_empty(gen)));
  json out = json::array();
  for (const auto& s : samples) out.push_back(corpus::to_record(s).to_json());
  return out.dump();
}

std::string transform(const std::string& source, const std::string& specs, std::uint64_t seed,
                      std::uint64_t stream) {
  const auto program = corpus::Program::from_source(source);
  const auto list = specs.empty() ? corpus::default_transform_specs(seed)
                                  : corpus::transform_specs_from_json(json::parse(specs));
  return corpus::apply_transforms(program, list, seed, stream).source();
}

py::tuple tokenize(const std::string& bpe, const std::string& source, std::size_t max_len) {
  const Tokenizer tok(frontend::BpeModel::from_json(json::parse(bpe)), frontend::LanguageProfile::minilang(),
                      max_len);
  const auto w = tok.encode(source);
  json ids = json::array();
  for (const auto& e : w.map.entries) ids.push_back({{"name", e.name}, {"occurrences", e.occurrences},
                                                     {"length", e.length()}});
  return py::make_tuple(w.ids, ids.dump());
}

std::string train_bpe(const std::vector<std::string>& texts, std::size_t merges) {
  return frontend::train_bpe(texts, merges, frontend::LanguageProfile::minilang()).to_json().dump();
}

std::string experiment(const std::string& config, const std::string& checkpoint) {
  py::gil_scoped_release release;
  auto run = run_experiment(ExperimentConfig::from_json(parse_or_empty(config)));
  if (!checkpoint.empty()) save_checkpoint(checkpoint, run.checkpoint);
  return run.report.to_json().dump();
}

// A trained checkpoint as an attack victim.
class Model {
 public:
  explicit Model(const std::string& path)
      : ck_(load_checkpoint(path)), tok_(ck_.tokenizer()), victim_(ck_.params, tok_) {}

  std::vector<double> probabilities(const std::string& source) const {
    return victim_.probabilities(corpus::Program::from_source(source));
  }

  std::string attack(const std::string& kind, const std::string& source, int label, const std::string& config,
                     std::uint64_t seed) const {
    auto cfg = attacks::AttackConfig::from_json(parse_or_empty(config));
    Rng rng(seed);
    const auto program = corpus::Program::from_source(source);
    const auto out = attacks::run_attack(attacks::parse_attack_kind(kind), victim_, program, label, cfg, rng);
    return json{{"success", out.success},
                {"map", out.map},
                {"queries", out.queries},
                {"trace", out.trace},
                {"adversarial", corpus::rename_identifiers(program, out.map).source()}}
        .dump();
  }

  std::string config() const { return ck_.params.config().to_json().dump(); }

 private:
  Checkpoint ck_;
  Tokenizer tok_;
  attacks::EncoderVictim victim_;
};

py::tuple cli(const std::vector<std::string>& args) {
  std::vector<std::string> full = {"codeadv"};
  full.insert(full.end(), args.begin(), args.end());
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = run_cli(full, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "codeadv core bindings";
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);
  // Malformed or mistyped JSON is a caller error.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("generate_corpus", &generate, py::arg("seed"), py::arg("count"), py::arg("gen") = "");
  m.def("oracle_label", [](const std::string& s) { return corpus::oracle_label(corpus::Program::from_source(s)); });
  m.def("canonical_source", [](const std::string& s) { return corpus::Program::from_source(s).source(); });
  m.def("identifiers", [](const std::string& s) { return corpus::Program::from_source(s).identifiers(); });
  m.def(
      "rename_identifiers",
      [](const std::string& s, const std::map<std::string, std::string>& mapping) {
        corpus::RenameMap map(mapping.begin(), mapping.end());
        return corpus::rename_identifiers(corpus::Program::from_source(s), map).source();
      },
      py::arg("source"), py::arg("mapping"));
  m.def("transform", &transform, py::arg("source"), py::arg("specs") = "", py::arg("seed") = 0,
        py::arg("stream") = 0);
  m.def("train_bpe", &train_bpe, py::arg("texts"), py::arg("merges"));
  m.def("tokenize", &tokenize, py::arg("bpe"), py::arg("source"), py::arg("max_len") = 256);
  m.def("grad_check", [](std::uint64_t seed) {
    py::gil_scoped_release release;
    GradSuiteOptions o;
    o.seed = seed;
    return run_grad_suite(o).to_json().dump();
  }, py::arg("seed") = 1);
  m.def("run_experiment", &experiment, py::arg("config") = "", py::arg("checkpoint") = "");
  m.def("config_hash", [](const std::string& j) { return config_hash(json::parse(j)); });
  m.def("mhm_acceptance", &attacks::mhm_acceptance);
  m.def("cli", &cli, py::arg("args"));

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("path"))
      .def("probabilities", &Model::probabilities, py::arg("source"))
      .def("attack", &Model::attack, py::arg("kind"), py::arg("source"), py::arg("label"), py::arg("config") = "",
           py::arg("seed") = 0)
      .def("config", &Model::config);
}
