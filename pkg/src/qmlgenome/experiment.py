"""End-to-end runs: preprocessing, training, scoring and the files written per run."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .errors import FormatError, UsageError
from .featuremap import FeatureMapSpec, encode_batch
from .kernel import gram_from_states
from .labels import to_binary, to_signed
from .metrics import MetricsReport, evaluate_model
from .models import VariationalModel, predict_labels, train_qnn, train_vqc, variational_scores
from .pegasos import PegasosModel, pegasos_scores, train_pegasos
from .pipeline import Preprocessor, SequenceDataset, load_sequences, stratified_split
from .qsvc import SvmModel, qsvc_scores, train_qsvc
from .variational import TrainingTrace

log = logging.getLogger(__name__)

RUN_FORMAT = "qmlgenome.run.v1"
MODEL_CLASSES = {"qsvc": SvmModel, "pegasos": PegasosModel, "vqc": VariationalModel, "qnn": VariationalModel}


@dataclass(frozen=True, eq=False)
class PreparedData:
    dataset: SequenceDataset
    train_idx: np.ndarray
    test_idx: np.ndarray
    pre: Preprocessor
    X_train: np.ndarray
    X_test: np.ndarray

    @property
    def y_train(self) -> np.ndarray:
        return self.dataset.labels[self.train_idx]

    @property
    def y_test(self) -> np.ndarray:
        return self.dataset.labels[self.test_idx]


@dataclass(frozen=True, eq=False)
class RunResult:
    model_name: str
    feature_map: str
    model: object
    pre: Preprocessor
    train: MetricsReport
    test: MetricsReport
    trace: TrainingTrace | None
    predictions: list[tuple[str, int, float, int]]  # split, index, score, label


def prepare_data(cfg: RunConfig) -> PreparedData:
    """Load, optionally subsample, split, and fit the preprocessing on the training part."""
    ds = load_sequences(cfg.data, cfg.format)
    if cfg.subset and cfg.subset < len(ds):
        _, keep = stratified_split(ds.labels, cfg.subset / len(ds), cfg.stage_seed("subset"))
        ds = ds.subset(keep)
    train_idx, test_idx = stratified_split(ds.labels, cfg.test_fraction, cfg.stage_seed("split"))
    train_seqs = [ds.sequences[i] for i in train_idx]
    test_seqs = [ds.sequences[i] for i in test_idx]
    if len(train_seqs) < cfg.qubits:
        raise UsageError(f"{len(train_seqs)} training sequences cannot support {cfg.qubits} PCA components")
    pre = Preprocessor.fit(train_seqs, cfg.kmer, cfg.qubits)
    return PreparedData(ds, train_idx, test_idx, pre, pre.transform(train_seqs), pre.transform(test_seqs))


def train_model(cfg: RunConfig, model_name: str, fspec: FeatureMapSpec, X, y):
    """Fit one model on angle-scaled features ``X`` and {0, 1} labels ``y``."""
    if model_name in ("qsvc", "pegasos"):
        K = gram_from_states(encode_batch(fspec, X))
        ys = to_signed(y)
        if model_name == "qsvc":
            m = train_qsvc(K, ys, C=cfg.C, tol=cfg.tol, max_passes=cfg.max_passes or None)
        else:
            m = train_pegasos(K, ys, lam=cfg.lam, T=cfg.T or None, seed=cfg.stage_seed("pegasos"))
        return m.with_training_data(fspec, X)
    trainer = train_vqc if model_name == "vqc" else train_qnn
    return trainer(fspec, cfg.ansatz_spec(), X, y, cfg.optimizer_config(model_name),
                   init_seed=cfg.stage_seed("init"))


def model_scores(model, X) -> np.ndarray:
    """Class-1 ranking scores: SVM decision values or variational class-1 probabilities."""
    if isinstance(model, SvmModel):
        return qsvc_scores(model, model.spec, X)
    if isinstance(model, PegasosModel):
        return pegasos_scores(model, model.spec, X)
    return variational_scores(model, X)


def model_predict(model, X) -> np.ndarray:
    """Labels in {0, 1}."""
    if isinstance(model, VariationalModel):
        return predict_labels(model, X)
    return to_binary(model_scores(model, X))


def run(cfg: RunConfig, model_name: str | None = None, feature_map: str | None = None,
        data: PreparedData | None = None) -> RunResult:
    model_name = model_name or cfg.model
    fspec = cfg.feature_map_spec(feature_map)
    data = data or prepare_data(cfg)
    model = train_model(cfg, model_name, fspec, data.X_train, data.y_train)
    reports = {}
    predictions = []
    for split, idx, X, y in (("train", data.train_idx, data.X_train, data.y_train),
                             ("test", data.test_idx, data.X_test, data.y_test)):
        scores = model_scores(model, X)
        labels = model_predict(model, X)
        reports[split] = evaluate_model(
            lambda _X: labels, lambda _X: scores, X, y,
            model=model_name, feature_map=fspec.kind, seed=cfg.seed, split=split,
        )
        predictions.extend((split, int(i), float(s), int(p)) for i, s, p in zip(idx, scores, labels))
    trace = model.trace if isinstance(model, VariationalModel) else None
    return RunResult(model_name, fspec.kind, model, data.pre, reports["train"], reports["test"],
                     trace, predictions)


# -- files -------------------------------------------------------------------

def dump_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_model_dict(result: RunResult) -> dict:
    return {
        "format": RUN_FORMAT,
        "model_name": result.model_name,
        "preprocess": result.pre.to_dict(),
        "model": result.model.to_dict(),
    }


def metrics_dict(result: RunResult) -> dict:
    return {"train": result.train.to_dict(), "test": result.test.to_dict()}


def write_run(result: RunResult, out_dir) -> None:
    """Write model.json, metrics.json, predictions.csv and (variational only) trace.csv."""
    os.makedirs(out_dir, exist_ok=True)
    dump_json(run_model_dict(result), os.path.join(out_dir, "model.json"))
    dump_json(metrics_dict(result), os.path.join(out_dir, "metrics.json"))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["split", "sequence_index", "score", "label"])
    for split, i, s, p in sorted(result.predictions, key=lambda r: r[1]):
        w.writerow([split, i, repr(s), p])
    with open(os.path.join(out_dir, "predictions.csv"), "w", newline="") as fh:
        fh.write(buf.getvalue())
    if result.trace is not None:
        with open(os.path.join(out_dir, "trace.csv"), "w", newline="") as fh:
            fh.write(result.trace.to_csv())


def load_run_model(path):
    """Read a model file written by :func:`write_run`; returns (name, preprocessor, model)."""
    try:
        with open(path, encoding="utf-8") as fh:
            blob = json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read model file {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file {path} is not valid JSON: {exc}") from exc
    if not isinstance(blob, dict) or "format" not in blob:
        raise FormatError(f"model file {path} has no 'format' key")
    if blob["format"] != RUN_FORMAT:
        raise FormatError(f"model file {path} has format {blob['format']!r}; this version reads {RUN_FORMAT!r}")
    try:
        name = blob["model_name"]
        cls = MODEL_CLASSES[name]
        inner = blob["model"]
        expected = {SvmModel: "qmlgenome.qsvc.v1", PegasosModel: "qmlgenome.pegasos.v1",
                    VariationalModel: "qmlgenome.variational.v1"}[cls]
        if inner.get("format") != expected:
            raise FormatError(f"model section has format {inner.get('format')!r}, expected {expected!r}")
        return name, Preprocessor.from_dict(blob["preprocess"]), cls.from_dict(inner)
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise FormatError(f"model file {path} is corrupt: {exc!r}") from exc


def gram_csv(K: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write(f"n={K.shape[0]}\n")
    w = csv.writer(buf, lineterminator="\n")
    for row in K:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def read_gram_csv(text: str) -> np.ndarray:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("n="):
        raise FormatError("Gram CSV must start with 'n=<count>'")
    n = int(lines[0][2:])
    K = np.array([[float(v) for v in row] for row in csv.reader(lines[1:])], dtype=float)
    if K.shape != (n, n):
        raise FormatError(f"Gram CSV declares n={n} but holds shape {K.shape}")
    return K
