# Copyright 2026 The codeadv Authors
# SPDX-License-Identifier: Apache-2.0
"""Python access to the codeadv corpus, tokenizer, training and attack code."""

import json as _json

from . import _core
from ._core import CheckpointError, canonical_source, identifiers, mhm_acceptance, oracle_label

__all__ = [
    "CheckpointError",
    "Model",
    "canonical_source",
    "cli",
    "config_hash",
    "generate_corpus",
    "grad_check",
    "identifiers",
    "mhm_acceptance",
    "oracle_label",
    "rename_identifiers",
    "run_experiment",
    "tokenize",
    "train_bpe",
    "transform",
]


def _dump(obj):
    return "" if obj is None else _json.dumps(obj)


def generate_corpus(seed, count, gen=None):
    """Labelled programs as dicts with id, code, label and defect_kind."""
    return _json.loads(_core.generate_corpus(seed, count, _dump(gen)))


def rename_identifiers(source, mapping):
    return _core.rename_identifiers(source, dict(mapping))


def transform(source, specs=None, seed=0, stream=0):
    """Semantics-preserving rewrite; specs default to all three kinds."""
    return _core.transform(source, _dump(specs), seed, stream)


def train_bpe(texts, merges):
    return _json.loads(_core.train_bpe(list(texts), merges))


def tokenize(bpe, source, max_len=256):
    """Returns (sub-word ids, identifier entries)."""
    ids, entries = _core.tokenize(_json.dumps(bpe), source, max_len)
    return ids, _json.loads(entries)


def grad_check(seed=1):
    return _json.loads(_core.grad_check(seed))


def run_experiment(config=None, checkpoint=None):
    """Trains and evaluates one model; optionally saves the checkpoint."""
    return _json.loads(_core.run_experiment(_dump(config), checkpoint or ""))


def config_hash(config):
    return _core.config_hash(_json.dumps(config))


def cli(*args):
    """Runs a codeadv subcommand in-process. Returns (exit code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])


class Model:
    """A saved checkpoint used as a classifier and attack victim."""

    def __init__(self, path):
        self._model = _core.Model(str(path))

    @property
    def config(self):
        return _json.loads(self._model.config())

    def probabilities(self, source):
        return self._model.probabilities(source)

    def attack(self, kind, source, label, config=None, seed=0):
        return _json.loads(self._model.attack(kind, source, label, _dump(config), seed))
