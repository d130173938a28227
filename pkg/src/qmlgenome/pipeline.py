"""Sequence ingestion and classical preprocessing.

load -> k-mer frequencies -> PCA to ``n_qubits`` dimensions -> affine scaling to
angles in ``[0, pi]`` -> stratified train/test split.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DataError, UsageError

log = logging.getLogger(__name__)

ALPHABET = "ACGTN"
BASES = "ACGT"
_CODE = {b: i for i, b in enumerate(BASES)}


@dataclass(frozen=True, eq=False)
class SequenceDataset:
    sequences: tuple[str, ...]
    labels: np.ndarray

    def __post_init__(self) -> None:
        seqs = tuple(self.sequences)
        labels = np.asarray(self.labels, dtype=int).reshape(-1)
        if not seqs:
            raise DataError("dataset is empty")
        if len(seqs) != labels.shape[0]:
            raise DataError(f"{len(seqs)} sequences but {labels.shape[0]} labels")
        if not np.all(np.isin(labels, (0, 1))):
            raise DataError("labels must be 0 or 1")
        for i, s in enumerate(seqs):
            bad = set(s) - set(ALPHABET)
            if bad:
                raise DataError(f"sequence {i} contains characters outside {ALPHABET}: {sorted(bad)}")
        object.__setattr__(self, "sequences", seqs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.sequences)

    def subset(self, idx) -> "SequenceDataset":
        idx = np.asarray(idx, dtype=int)
        return SequenceDataset(tuple(self.sequences[i] for i in idx), self.labels[idx])


# -- loading -----------------------------------------------------------------

def _parse_label(token: str, where: str) -> int:
    token = token.strip()
    if token not in ("0", "1"):
        raise DataError(f"{where}: label must be 0 or 1, got {token!r}")
    return int(token)


def _clean_sequence(seq: str, where: str) -> str:
    seq = seq.strip().upper()
    if not seq:
        raise DataError(f"{where}: empty sequence")
    bad = set(seq) - set(ALPHABET)
    if bad:
        raise DataError(f"{where}: unknown character(s) {''.join(sorted(bad))!r}")
    return seq


def parse_csv(text: str, source: str = "<csv>", require_label: bool = True):
    """Parse ``sequence,label`` CSV text. Returns (sequences, labels or None)."""
    rows = csv.reader(io.StringIO(text))
    try:
        header = next(rows)
    except StopIteration:
        raise DataError(f"{source}: file is empty") from None
    header = [h.strip().lower() for h in header]
    if "sequence" not in header:
        raise DataError(f"{source}: line 1: header must contain a 'sequence' column, got {header}")
    s_col = header.index("sequence")
    l_col = header.index("label") if "label" in header else None
    if require_label and l_col is None:
        raise DataError(f"{source}: line 1: header must be 'sequence,label'")
    seqs, labels = [], []
    for line_no, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        where = f"{source}: line {line_no}"
        if len(row) != len(header):
            raise DataError(f"{where}: expected {len(header)} fields, got {len(row)}")
        seqs.append(_clean_sequence(row[s_col], where))
        if l_col is not None:
            labels.append(_parse_label(row[l_col], where))
    if not seqs:
        raise DataError(f"{source}: no sequences found")
    return seqs, (labels if l_col is not None else None)


def parse_fasta(text: str, source: str = "<fasta>"):
    """Parse FASTA where each description carries a ``label=<0|1>`` token."""
    seqs, labels = [], []
    chunks: list[str] = []
    header_line = 0
    where = source

    def flush():
        if header_line:
            seqs.append(_clean_sequence("".join(chunks), where))

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            flush()
            header_line, chunks = line_no, []
            where = f"{source}: line {line_no}"
            tokens = [t for t in line[1:].split() if t.startswith("label=")]
            if not tokens:
                raise DataError(f"{where}: description lacks a 'label=<0|1>' token")
            labels.append(_parse_label(tokens[0][len("label="):], where))
        else:
            if not header_line:
                raise DataError(f"{source}: line {line_no}: sequence data before the first '>' header")
            chunks.append(line)
    flush()
    if not seqs:
        raise DataError(f"{source}: no sequences found")
    return seqs, labels


def load_sequences(path, format: str = "csv") -> SequenceDataset:
    """Read a labelled dataset from a CSV (``sequence,label``) or FASTA file."""
    path = os.fspath(path)
    if format not in ("csv", "fasta"):
        raise ConfigurationError(f"format must be 'csv' or 'fasta', got {format!r}")
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read data file {path}: {exc.strerror}") from exc
    if not text.strip():
        raise DataError(f"{path}: file is empty")
    if format == "csv":
        seqs, labels = parse_csv(text, path)
    else:
        seqs, labels = parse_fasta(text, path)
    return SequenceDataset(tuple(seqs), np.asarray(labels, dtype=int))


def save_csv(ds: SequenceDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sequence", "label"])
        for s, y in zip(ds.sequences, ds.labels):
            w.writerow([s, int(y)])


# -- synthetic data ----------------------------------------------------------

# Order-1 transition matrices (rows: current base A,C,G,T).
MARKOV_CLASS0 = np.array([
    [0.35, 0.15, 0.20, 0.30],
    [0.30, 0.25, 0.10, 0.35],
    [0.30, 0.20, 0.25, 0.25],
    [0.25, 0.15, 0.25, 0.35],
])
MARKOV_CLASS1 = np.array([
    [0.20, 0.30, 0.30, 0.20],
    [0.15, 0.30, 0.35, 0.20],
    [0.20, 0.35, 0.30, 0.15],
    [0.15, 0.30, 0.30, 0.25],
])


def markov_sequences(n: int, length: int, transitions: np.ndarray, rng: np.random.Generator) -> list[str]:
    """``n`` sequences of ``length`` bases from one order-1 chain, uniform start base."""
    cum = np.cumsum(transitions, axis=1)
    states = np.empty((n, length), dtype=int)
    states[:, 0] = rng.integers(4, size=n)
    u = rng.random((n, length - 1))
    for t in range(1, length):
        nxt = (u[:, t - 1, None] >= cum[states[:, t - 1]]).sum(axis=1)
        states[:, t] = np.minimum(nxt, 3)
    letters = np.array(list(BASES))
    return ["".join(row) for row in letters[states]]


def markov_dataset(n: int, length: int = 200, seed: int = 0,
                   transitions=(MARKOV_CLASS0, MARKOV_CLASS1)) -> SequenceDataset:
    """Balanced two-class dataset sampled from two order-1 Markov chains.

    Samples alternate between class 0 and class 1.
    """
    if n < 2:
        raise ConfigurationError("need at least 2 sequences")
    rng = np.random.default_rng(seed)
    n1 = n // 2
    n0 = n - n1
    s0 = markov_sequences(n0, length, np.asarray(transitions[0]), rng)
    s1 = markov_sequences(n1, length, np.asarray(transitions[1]), rng)
    seqs, labels = [], []
    for i in range(n0):
        seqs.append(s0[i])
        labels.append(0)
        if i < n1:
            seqs.append(s1[i])
            labels.append(1)
    return SequenceDataset(tuple(seqs), np.asarray(labels))


# -- k-mer vectorization -----------------------------------------------------

def kmer_names(k: int) -> list[str]:
    return ["".join(p) for p in itertools.product(BASES, repeat=k)]


def kmer_vectorize(ds_or_seqs, k: int = 3) -> np.ndarray:
    """Normalized k-mer frequencies, one row per sequence and ``4**k`` columns
    in lexicographic order (A < C < G < T).

    Windows containing ``N`` are skipped and left out of the denominator. A
    sequence without any valid window yields an all-zero row (logged).
    """
    if not isinstance(k, int) or not 1 <= k <= 6:
        raise ConfigurationError(f"k must be an integer in [1, 6], got {k!r}")
    seqs = ds_or_seqs.sequences if isinstance(ds_or_seqs, SequenceDataset) else list(ds_or_seqs)
    X = np.zeros((len(seqs), 4**k))
    weights = 4 ** np.arange(k - 1, -1, -1)
    flagged = 0
    for row, seq in enumerate(seqs):
        if len(seq) < k:
            raise DataError(f"sequence {row} has length {len(seq)} < k={k}")
        codes = np.array([_CODE.get(c, -1) for c in seq.upper()])
        windows = np.lib.stride_tricks.sliding_window_view(codes, k)
        valid = (windows >= 0).all(axis=1)
        if not valid.any():
            flagged += 1
            continue
        idx = windows[valid] @ weights
        X[row] = np.bincount(idx, minlength=4**k) / valid.sum()
    if flagged:
        log.warning("%d sequence(s) had no k-mer window free of N; their rows are zero", flagged)
    return X


# -- PCA ---------------------------------------------------------------------

def jacobi_eigh(A, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm is below
    ``tol * max(1, ||A||_F)``. Returns ``(eigenvalues, eigenvectors)`` with
    eigenvectors in columns, unsorted.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise UsageError(f"need a square matrix, got shape {A.shape}")
    V = np.eye(n)
    thresh = tol * max(1.0, float(np.linalg.norm(A)))
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(A[offdiag]))  # summed directly; ||A||^2 - ||diag||^2 cancels
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh * 1e-3:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * cp - s * cq, s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * rp - s * rq, s * rp + c * rq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        log.warning("Jacobi eigen-solver hit %d sweeps without converging", max_sweeps)
    return np.diag(A).copy(), V


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # k x V, orthonormal rows
    explained_variance: np.ndarray

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(np.asarray(d["mean"], dtype=float),
                   np.asarray(d["components"], dtype=float),
                   np.asarray(d["explained_variance"], dtype=float))


def _complete_basis(vectors: list[np.ndarray], dim: int, count: int) -> list[np.ndarray]:
    """Extend orthonormal ``vectors`` to ``count`` vectors using the standard basis."""
    out = list(vectors)
    for e in np.eye(dim):
        if len(out) >= count:
            break
        v = e.copy()
        for _ in range(2):  # second pass restores orthogonality lost to rounding
            for u in out:
                v -= (u @ v) * u
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            out.append(v / norm)
    return out


def pca_fit(X, k: int) -> PcaModel:
    """Top-``k`` principal axes of ``X`` (sample covariance, divisor n-1).

    Each component is oriented so its largest-magnitude entry is positive.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise UsageError(f"PCA needs a 2-D matrix, got shape {X.shape}")
    n, V = X.shape
    if n < 2:
        raise UsageError("PCA needs at least 2 samples")
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= min(n, V):
        raise UsageError(f"k must be in [1, {min(n, V)}], got {k!r}")
    mean = X.mean(axis=0)
    Xc = X - mean
    if n >= V:
        vals, vecs = jacobi_eigh(Xc.T @ Xc / (n - 1))
        order = np.argsort(-vals, kind="stable")[:k]
        vals = vals[order]
        comps = [vecs[:, i] for i in order]
    else:
        vals, vecs = jacobi_eigh(Xc @ Xc.T / (n - 1))
        order = np.argsort(-vals, kind="stable")[:k]
        vals = vals[order]
        floor = 1e-12 * max(1.0, float(vals.max(initial=0.0)))
        comps = []
        for lam, i in zip(vals, order):
            if lam <= floor:
                break
            v = Xc.T @ vecs[:, i]
            comps.append(v / np.linalg.norm(v))
        comps = _complete_basis(comps, V, k)
    comps = np.array(comps)
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean, comps, np.maximum(vals, 0.0))


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.mean.shape[0]:
        raise UsageError(f"PCA was fitted on {model.mean.shape[0]} columns, got {X.shape[1]}")
    return np.einsum("ij,kj->ik", X - model.mean, model.components)


# -- angle scaling -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ScalerModel:
    mins: np.ndarray
    maxs: np.ndarray
    lo: float = 0.0
    hi: float = math.pi

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist(), "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerModel":
        return cls(np.asarray(d["mins"], dtype=float), np.asarray(d["maxs"], dtype=float),
                   float(d["lo"]), float(d["hi"]))


def fit_scale(X, lo: float = 0.0, hi: float = math.pi) -> ScalerModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise UsageError("cannot fit a scaler on an empty matrix")
    if not hi > lo:
        raise ConfigurationError(f"scaling range must satisfy lo < hi, got [{lo}, {hi}]")
    return ScalerModel(X.min(axis=0), X.max(axis=0), float(lo), float(hi))


def apply_scale(model: ScalerModel, X) -> np.ndarray:
    """Affine map of each fitted ``[min, max]`` onto ``[lo, hi]``; values outside are clamped.
    Constant columns map to the midpoint."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.mins.shape[0]:
        raise UsageError(f"scaler was fitted on {model.mins.shape[0]} columns, got {X.shape[1]}")
    span = model.maxs - model.mins
    const = span <= 0
    safe = np.where(const, 1.0, span)
    out = model.lo + (X - model.mins) / safe * (model.hi - model.lo)
    out = np.where(const, 0.5 * (model.lo + model.hi), out)
    return np.clip(out, model.lo, model.hi)


# -- splitting ---------------------------------------------------------------

def stratified_split(labels, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded per-class shuffle and split. Returns sorted (train, test) index arrays.

    Each class contributes ``round(test_fraction * n_class)`` test samples,
    clamped so both sides keep at least one sample of the class.
    """
    if not 0.0 < test_fraction < 1.0:
        raise UsageError(f"test_fraction must lie strictly between 0 and 1, got {test_fraction}")
    labels = np.asarray(labels).reshape(-1)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.size < 2:
            raise DataError(f"class {cls} has {idx.size} sample(s); at least 2 are needed to split")
        idx = rng.permutation(idx)
        n_test = min(max(int(round(test_fraction * idx.size)), 1), idx.size - 1)
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def train_test_split(ds: SequenceDataset, test_fraction: float, seed: int):
    train, test = stratified_split(ds.labels, test_fraction, seed)
    return ds.subset(train), ds.subset(test)


# -- fitted end-to-end preprocessing -----------------------------------------

@dataclass(frozen=True, eq=False)
class Preprocessor:
    """Fitted k-mer -> PCA -> angle-scaling chain."""

    k: int
    pca: PcaModel
    scaler: ScalerModel

    @classmethod
    def fit(cls, seqs, k: int, n_components: int, lo: float = 0.0, hi: float = math.pi) -> "Preprocessor":
        F = kmer_vectorize(seqs, k)
        pca = pca_fit(F, n_components)
        return cls(k, pca, fit_scale(pca_transform(pca, F), lo, hi))

    def transform(self, seqs) -> np.ndarray:
        return apply_scale(self.scaler, pca_transform(self.pca, kmer_vectorize(seqs, self.k)))

    def to_dict(self) -> dict:
        return {"kmer_k": self.k, "pca": self.pca.to_dict(), "scaler": self.scaler.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Preprocessor":
        return cls(int(d["kmer_k"]), PcaModel.from_dict(d["pca"]), ScalerModel.from_dict(d["scaler"]))
