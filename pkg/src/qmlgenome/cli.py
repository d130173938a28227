"""Command line front end: ``qmlgenome {train,predict,kernel,benchmark}``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__, experiment
from .config import RunConfig, load_config
from .errors import DataError, QmlError
from .experiment import dump_json, gram_csv, load_run_model, metrics_dict, write_run
from .featuremap import encode_batch
from .kernel import gram_from_states
from .pipeline import parse_csv

log = logging.getLogger("qmlgenome")

SUMMARY_FIELDS = ["model", "feature_map", "accuracy", "precision", "recall", "f1", "auroc",
                  "train_accuracy"]


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="key = value configuration file (flags override it)")
    g.add_argument("--data", help="sequence file (csv: sequence,label; fasta: label=<0|1> in description)")
    g.add_argument("--format", choices=("csv", "fasta"))
    g.add_argument("--feature-map", dest="feature_map", help="Z, ZZ or Pauli")
    g.add_argument("--reps", type=int)
    g.add_argument("--entanglement", choices=("full", "linear"))
    g.add_argument("--pauli-strings", dest="pauli_strings", help="comma list, e.g. Z,YY,XZ")
    g.add_argument("--qubits", type=int, help="qubit count = PCA dimension")
    g.add_argument("--kmer", type=int, help="k-mer length for vectorization")
    g.add_argument("--test-fraction", dest="test_fraction", type=float)
    g.add_argument("--subset", type=int, help="stratified subsample size (0 = all)")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output directory")
    h = p.add_argument_group("hyperparameters")
    h.add_argument("--C", dest="C", type=float, help="QSVC box bound")
    h.add_argument("--tol", type=float, help="QSVC KKT tolerance")
    h.add_argument("--max-passes", dest="max_passes", type=int, help="QSVC sweep cap, n pair updates each (0 = 10n)")
    h.add_argument("--lambda", dest="lam", type=float, help="Pegasos regularization")
    h.add_argument("--T", dest="T", type=int, help="Pegasos iterations (0 = 1000n)")
    h.add_argument("--layers", type=int)
    h.add_argument("--rotation-axes", dest="rotation_axes", help="comma list of RX/RY/RZ per layer")
    h.add_argument("--entangler", choices=("cnot_ring", "cnot_linear"))
    h.add_argument("--optimizer", choices=("gradient_descent", "spsa"))
    h.add_argument("--learning-rate", dest="learning_rate", type=float)
    h.add_argument("--max-iters", dest="max_iters", type=int)
    h.add_argument("--tolerance", type=float, help="optimizer stopping tolerance")


_CONFIG_KEYS = ("data", "format", "feature_map", "reps", "entanglement", "pauli_strings", "qubits",
                "kmer", "test_fraction", "subset", "seed", "out", "C", "tol", "max_passes", "lam",
                "T", "layers", "rotation_axes", "entangler", "optimizer", "learning_rate",
                "max_iters", "tolerance", "model", "models", "feature_maps", "jobs")


def _config(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmlgenome", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one model and write model, metrics and trace files")
    p.add_argument("--model", choices=("qsvc", "pegasos", "vqc", "qnn"))
    _add_common(p)

    p = sub.add_parser("predict", help="score sequences with a trained model file")
    p.add_argument("model_file")
    p.add_argument("input", help="CSV with a 'sequence' column")
    p.add_argument("-o", "--output", help="output CSV (default: stdout)")

    p = sub.add_parser("kernel", help="write the Gram matrix of the training split as CSV")
    _add_common(p)

    p = sub.add_parser("benchmark", help="models x feature maps grid with a summary table")
    p.add_argument("--models", help="comma list from qsvc,pegasos,vqc,qnn")
    p.add_argument("--feature-maps", dest="feature_maps", help="comma list from Z,ZZ,Pauli")
    p.add_argument("--jobs", type=int, help="cells run in parallel processes")
    _add_common(p)
    return parser


def cmd_train(cfg: RunConfig) -> int:
    cfg.validate()
    result = experiment.run(cfg)
    write_run(result, cfg.out)
    t = result.test
    log.info("%s/%s test accuracy %.4f auroc %.4f -> %s", result.model_name, result.feature_map,
             t.accuracy, t.auroc, cfg.out)
    return 0


def cmd_predict(model_file: str, input_path: str, output: str | None) -> int:
    name, pre, model = load_run_model(model_file)
    try:
        with open(input_path, encoding="utf-8-sig", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read input file {input_path}: {exc.strerror}") from exc
    if not text.strip():
        raise DataError(f"{input_path}: input is empty")
    seqs, _ = parse_csv(text, input_path, require_label=False)
    X = pre.transform(seqs)
    scores = experiment.model_scores(model, X)
    labels = experiment.model_predict(model, X)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sequence_index", "score", "label"])
    for i, (s, p) in enumerate(zip(scores, labels)):
        w.writerow([i, repr(float(s)), int(p)])
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_kernel(cfg: RunConfig) -> int:
    cfg.validate()
    data = experiment.prepare_data(cfg)
    K = gram_from_states(encode_batch(cfg.feature_map_spec(), data.X_train))
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "gram.csv")
    with open(path, "w", newline="") as fh:
        fh.write(gram_csv(K))
    log.info("wrote %dx%d Gram matrix to %s", K.shape[0], K.shape[0], path)
    return 0


def _cell_dir(cfg: RunConfig, model: str, fmap: str) -> str:
    return os.path.join(cfg.out, f"{model}-{fmap}")


def _run_cell(cfg: RunConfig, model: str, fmap: str, data) -> dict:
    result = experiment.run(cfg, model, fmap, data)
    write_run(result, _cell_dir(cfg, model, fmap))
    return metrics_dict(result)


def cmd_benchmark(cfg: RunConfig) -> int:
    cfg.validate(single_model=False)
    data = experiment.prepare_data(cfg)
    cells = [(m, f) for m in cfg.models for f in cfg.feature_maps]
    outcomes: dict = {}
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = {c: pool.submit(_run_cell, cfg, c[0], c[1], data) for c in cells}
            for c, fut in futures.items():
                try:
                    outcomes[c] = fut.result()
                except Exception as exc:  # one cell must not sink the grid
                    outcomes[c] = exc
    else:
        for c in cells:
            try:
                outcomes[c] = _run_cell(cfg, c[0], c[1], data)
            except Exception as exc:  # one cell must not sink the grid
                outcomes[c] = exc

    rows, failures = [], []
    for model, fmap in cells:
        res = outcomes[(model, fmap)]
        if isinstance(res, Exception):
            log.error("cell %s/%s failed: %s", model, fmap, res)
            failures.append({"model": model, "feature_map": fmap,
                             "error": f"{type(res).__name__}: {res}"})
            continue
        t = res["test"]
        rows.append({"model": model, "feature_map": fmap, "accuracy": t["accuracy"],
                     "precision": t["precision"], "recall": t["recall"], "f1": t["f1"],
                     "auroc": t["auroc"], "train_accuracy": res["train"]["accuracy"]})

    os.makedirs(cfg.out, exist_ok=True)
    buf = io.StringIO()
    w = csv.DictWriter(buf, SUMMARY_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    with open(os.path.join(cfg.out, "summary.csv"), "w", newline="") as fh:
        fh.write(buf.getvalue())
    failure_path = os.path.join(cfg.out, "failures.json")
    if failures:
        dump_json(failures, failure_path)
    elif os.path.exists(failure_path):
        os.remove(failure_path)
    log.info("benchmark: %d cell(s) ok, %d failed -> %s", len(rows), len(failures), cfg.out)
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "predict":
            return cmd_predict(args.model_file, args.input, args.output)
        cfg = _config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "kernel":
            return cmd_kernel(cfg)
        return cmd_benchmark(cfg)
    except QmlError as exc:
        print(f"qmlgenome: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
