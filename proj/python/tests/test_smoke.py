# Copyright 2026 The codeadv Authors
# SPDX-License-Identifier: Apache-2.0

import pytest

import codeadv


def test_corpus_is_deterministic_and_labelled_by_the_oracle():
    a = codeadv.generate_corpus(3, 20)
    assert a == codeadv.generate_corpus(3, 20)
    assert len(a) == 20
    for rec in a:
        assert codeadv.oracle_label(rec["code"]) == rec["label"]


def test_renaming_and_transforms_keep_the_label():
    src = codeadv.generate_corpus(4, 1)[0]["code"]
    names = codeadv.identifiers(src)
    renamed = codeadv.rename_identifiers(src, {names[0]: "zzRenamed"})
    assert "zzRenamed" in renamed
    assert codeadv.oracle_label(renamed) == codeadv.oracle_label(src)
    assert codeadv.oracle_label(codeadv.transform(src, seed=9)) == codeadv.oracle_label(src)


def test_tokenizer_maps_identifier_occurrences():
    bpe = codeadv.train_bpe(["int add(int x) { return x + x; }"], 20)
    ids, entries = codeadv.tokenize(bpe, "int add(int x) { return x + x; }")
    assert len(ids) > 1
    x = next(e for e in entries if e["name"] == "x")
    assert len(x["occurrences"]) == 3


def test_acceptance_probability():
    assert codeadv.mhm_acceptance(0.9, 0.6) == 1.0
    assert codeadv.mhm_acceptance(0.6, 0.9) == pytest.approx(0.25)


def test_config_hash_ignores_key_order():
    assert codeadv.config_hash({"a": 1, "b": [2]}) == codeadv.config_hash({"b": [2], "a": 1})


def test_train_attack_round_trip(tmp_path):
    cfg = {
        "seed": 2,
        "train_size": 60,
        "dev_size": 20,
        "test_size": 20,
        "bpe_merges": 100,
        "encoder": {"d": 16, "layers": 1, "heads": 2, "d_ff": 32, "max_len": 128},
        "train": {"mode": "space", "epsilon": 0.5, "eta": 0.1, "epochs": 1, "batch_size": 16},
        "attack": {"mhm_iterations": 10, "candidates": 5},
        "threads": 1,
    }
    ck = tmp_path / "m.bin"
    report = codeadv.run_experiment(cfg, str(ck))
    assert report["mode"] == "space"
    assert 0.0 <= report["clean"]["accuracy"] <= 1.0
    assert report == codeadv.run_experiment(cfg)

    model = codeadv.Model(ck)
    assert model.config["d"] == 16
    src = codeadv.generate_corpus(5, 1)[0]["code"]
    p = model.probabilities(src)
    assert sum(p) == pytest.approx(1.0)
    out = model.attack("greedy", src, 0, {"candidates": 4})
    assert out["queries"] >= 1
    assert codeadv.identifiers(out["adversarial"]) != [] or not out["map"]


def test_bad_checkpoint_raises(tmp_path):
    bad = tmp_path / "x.bin"
    bad.write_bytes(b"nope")
    with pytest.raises(codeadv.CheckpointError):
        codeadv.Model(bad)


def test_bad_arguments_raise_value_error():
    with pytest.raises(ValueError):
        codeadv.transform("int f() { return 1; }", [{"kind": "rename"}])
    with pytest.raises(ValueError):
        codeadv.generate_corpus(1, 1, {"no_such_key": 1})


def test_cli_exit_codes():
    code, _, err = codeadv.cli("bogus")
    assert code == 1
    assert "Usage" in err
