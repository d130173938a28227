import csv
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from qmlgenome import cli, experiment
from qmlgenome.config import load_config, parse_config_text
from qmlgenome.errors import ConfigurationError, FormatError
from qmlgenome.experiment import load_run_model, read_gram_csv

ROOT = Path(__file__).resolve().parents[1]
DATA = str(ROOT / "data" / "sample_1000.csv")
FIVE = ("accuracy", "precision", "recall", "f1", "auroc")


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    assert run_cli("train", "--data", DATA, "--model", "qsvc", "--feature-map", "ZZ", "--seed", 7, "--out", out) == 0
    return out


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    """200 bundled sequences, balanced."""
    rows = read_csv(DATA)
    pos = [r for r in rows if r["label"] == "1"][:100]
    neg = [r for r in rows if r["label"] == "0"][:100]
    path = tmp_path_factory.mktemp("data") / "small.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sequence", "label"])
        for r in pos + neg:
            w.writerow([r["sequence"], r["label"]])
    return str(path)


BENCH_FLAGS = ("--models", "qsvc,pegasos,vqc,qnn", "--feature-maps", "Z,ZZ,Pauli",
               "--max-iters", 15, "--layers", 1, "--T", 2000, "--seed", 3)


@pytest.fixture(scope="module")
def bench(tmp_path_factory, small_data):
    out = tmp_path_factory.mktemp("bench")
    code = run_cli("benchmark", "--data", small_data, *BENCH_FLAGS, "--out", out)
    return code, out


class TestConfig:
    def test_file_and_flags(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("model = pegasos\nlambda = 0.01\nfeature-map = pauli  # comment\nreps = 3\n")
        cfg = load_config(str(p), {"reps": 1})
        assert (cfg.model, cfg.lam, cfg.feature_map, cfg.reps) == ("pegasos", 0.01, "Pauli", 1)

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError, match="line 2"):
            parse_config_text("seed = 1\nbogus = 2\n")

    def test_stage_seeds_are_offsets(self):
        cfg = load_config(None, {"seed": 10})
        assert [cfg.stage_seed(s) for s in ("split", "init", "pegasos", "optimizer", "subset")] == [10, 11, 12, 13, 14]

    def test_bad_value(self):
        with pytest.raises(ConfigurationError):
            load_config(None, {"C": "abc"})


class TestTrain:
    def test_outputs(self, trained):
        assert sorted(os.listdir(trained)) == ["metrics.json", "model.json", "predictions.csv"]
        m = json.loads((trained / "metrics.json").read_text())
        for split in ("train", "test"):
            for k in FIVE:
                assert 0.0 <= m[split][k] <= 1.0
            c = m[split]["confusion"]
            assert c["tp"] + c["fp"] + c["tn"] + c["fn"] == m[split]["n"]
        assert m["test"]["model"] == "qsvc" and m["test"]["feature_map"] == "ZZ" and m["test"]["seed"] == 7

    def test_missing_data_names_path(self, tmp_path, capsys):
        missing = tmp_path / "absent.csv"
        assert run_cli("train", "--data", missing, "--out", tmp_path / "o") != 0
        assert str(missing) in capsys.readouterr().err

    def test_variational_rerun_byte_identical(self, tmp_path, small_data):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert run_cli("train", "--data", small_data, "--model", "vqc", "--max-iters", 10,
                           "--layers", 1, "--seed", 5, "--out", out) == 0
            outs.append(out)
        for f in ("metrics.json", "trace.csv", "model.json", "predictions.csv"):
            assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
        lines = (outs[0] / "trace.csv").read_text().splitlines()
        assert lines[0] == "iteration,objective" and len(lines) >= 3

    def test_invalid_config_fails_fast_without_simulating(self, tmp_path, monkeypatch, small_data):
        def boom(*a, **k):
            raise AssertionError("simulator touched")

        monkeypatch.setattr(experiment, "encode_batch", boom)
        monkeypatch.setattr(experiment, "load_sequences", boom)
        start = time.perf_counter()
        assert run_cli("train", "--data", small_data, "--model", "qsvc", "--reps", 0, "--out", tmp_path) == 1
        assert run_cli("train", "--data", small_data, "--model", "vqc", "--entangler", "cnot_ring",
                       "--rotation-axes", "RX,RQ", "--layers", 2, "--out", tmp_path) == 1
        assert time.perf_counter() - start < 1.0


class TestPredict:
    def test_training_file_round_trip(self, trained, tmp_path):
        _, pre, _ = load_run_model(trained / "model.json")
        preds = read_csv(trained / "predictions.csv")
        rows = read_csv(DATA)
        train_rows = [p for p in preds if p["split"] == "train"]
        inp = tmp_path / "train_seqs.csv"
        with open(inp, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sequence"])
            for p in train_rows:
                w.writerow([rows[int(p["sequence_index"])]["sequence"]])
        out = tmp_path / "pred.csv"
        assert run_cli("predict", trained / "model.json", inp, "-o", out) == 0
        got = read_csv(out)
        assert len(got) == len(train_rows)
        for g, want in zip(got, train_rows):
            assert g["score"] == want["score"] and g["label"] == want["label"]

    def test_empty_input(self, trained, tmp_path):
        inp = tmp_path / "empty.csv"
        inp.write_text("")
        assert run_cli("predict", trained / "model.json", inp) != 0

    def test_corrupt_model(self, tmp_path, capsys):
        bad = tmp_path / "model.json"
        bad.write_text('{"format": "qmlgenome.run.v1", "model_name": ')
        inp = tmp_path / "in.csv"
        inp.write_text("sequence\nACGTACGT\n")
        assert run_cli("predict", bad, inp) != 0
        assert "not valid JSON" in capsys.readouterr().err

    def test_format_mismatch(self, trained, tmp_path):
        blob = json.loads((trained / "model.json").read_text())
        blob["format"] = "qmlgenome.run.v0"
        p = tmp_path / "old.json"
        p.write_text(json.dumps(blob))
        with pytest.raises(FormatError, match="this version reads"):
            load_run_model(p)

    def test_stdout(self, trained, tmp_path, capsys):
        inp = tmp_path / "in.csv"
        inp.write_text("sequence\n" + "ACGT" * 30 + "\n")
        assert run_cli("predict", trained / "model.json", inp) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "sequence_index,score,label" and lines[1].startswith("0,")


class TestKernel:
    def test_gram_file(self, tmp_path, small_data):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run_cli("kernel", "--data", small_data, "--feature-map", "Pauli", "--out", out) == 0
        assert (a / "gram.csv").read_bytes() == (b / "gram.csv").read_bytes()
        K = read_gram_csv((a / "gram.csv").read_text())
        assert K.shape == (160, 160)
        assert np.array_equal(K, K.T)
        np.testing.assert_array_equal(np.diag(K), 1.0)
        assert np.linalg.eigvalsh(K)[0] >= -1e-8

    def test_single_row_text(self):
        assert experiment.gram_csv(np.ones((1, 1))) == "n=1\n1.0\n"


class TestBenchmark:
    def test_twelve_rows(self, bench):
        code, out = bench
        assert code == 0
        rows = read_csv(out / "summary.csv")
        assert len(rows) == 12
        assert {(r["model"], r["feature_map"]) for r in rows} == {
            (m, f) for m in ("qsvc", "pegasos", "vqc", "qnn") for f in ("Z", "ZZ", "Pauli")
        }
        assert not (out / "failures.json").exists()

    def test_summary_matches_cell_files(self, bench):
        _, out = bench
        for r in read_csv(out / "summary.csv"):
            m = json.loads((out / f"{r['model']}-{r['feature_map']}" / "metrics.json").read_text())
            for k in FIVE:
                assert float(r[k]) == m["test"][k]
                assert math.isfinite(float(r[k]))
            assert float(r["train_accuracy"]) == m["train"]["accuracy"]

    def test_variational_cells_have_traces(self, bench):
        _, out = bench
        for m in ("vqc", "qnn"):
            for f in ("Z", "ZZ", "Pauli"):
                assert (out / f"{m}-{f}" / "trace.csv").exists()

    def test_one_failing_cell(self, tmp_path, small_data, monkeypatch):
        real = experiment.train_model

        def flaky(cfg, name, fspec, X, y):
            if name == "pegasos" and fspec.kind == "ZZ":
                raise RuntimeError("injected failure")
            return real(cfg, name, fspec, X, y)

        monkeypatch.setattr(experiment, "train_model", flaky)
        out = tmp_path / "bench"
        assert run_cli("benchmark", "--data", small_data, *BENCH_FLAGS, "--out", out) != 0
        assert len(read_csv(out / "summary.csv")) == 11
        failures = json.loads((out / "failures.json").read_text())
        assert failures == [{"model": "pegasos", "feature_map": "ZZ", "error": "RuntimeError: injected failure"}]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qmlgenome.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("qmlgenome ")
