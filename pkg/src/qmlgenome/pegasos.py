"""Kernelized Pegasos for the quantum SVM.

The weight vector lives in feature space, so it is kept in dual form

    w = scale * sum_j coeffs_j * y_j * phi(x_j)

Decay multiplies ``scale``; a margin update adds ``eta / scale`` to one
coefficient; projection onto the ball of radius ``1/sqrt(lambda)`` rescales
``scale``. ``K @ (coeffs * y)`` and ``||w||**2`` are maintained incrementally,
so each step costs O(n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, UsageError
from .featuremap import FeatureMapSpec
from .kernel import cross_kernel
from .labels import require_both_classes
from .qsvc import check_gram

FORMAT = "qmlgenome.pegasos.v1"


@dataclass(frozen=True, eq=False)
class PegasosModel:
    coeffs: np.ndarray
    scale: float
    lam: float
    steps_run: int
    labels: np.ndarray
    training_X: np.ndarray | None = None
    spec: FeatureMapSpec | None = None

    def weight_norm(self, K) -> float:
        a = self.coeffs * self.labels
        return float(abs(self.scale) * np.sqrt(max(a @ np.asarray(K) @ a, 0.0)))

    def with_training_data(self, spec: FeatureMapSpec, X) -> "PegasosModel":
        return PegasosModel(self.coeffs, self.scale, self.lam, self.steps_run, self.labels,
                            np.asarray(X, dtype=float), spec)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "coeffs": self.coeffs.tolist(),
            "scale": self.scale,
            "lambda": self.lam,
            "steps_run": self.steps_run,
            "labels": self.labels.tolist(),
            "training_X": None if self.training_X is None else self.training_X.tolist(),
            "spec": None if self.spec is None else self.spec.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PegasosModel":
        return cls(
            coeffs=np.asarray(d["coeffs"], dtype=float),
            scale=float(d["scale"]),
            lam=float(d["lambda"]),
            steps_run=int(d["steps_run"]),
            labels=np.asarray(d["labels"], dtype=float),
            training_X=None if d["training_X"] is None else np.asarray(d["training_X"], dtype=float),
            spec=None if d["spec"] is None else FeatureMapSpec.from_dict(d["spec"]),
        )


class PegasosState:
    """Mutable solver state; ``step`` performs one iteration for a given sample."""

    def __init__(self, K: np.ndarray, y: np.ndarray, lam: float):
        self.K = K
        self.y = y
        self.lam = lam
        n = y.shape[0]
        self.coeffs = np.zeros(n)
        self.scale = 1.0
        self.f = np.zeros(n)  # K @ (coeffs * y)
        self.sq = 0.0  # (coeffs * y)^T K (coeffs * y)
        self.t = 0

    @property
    def norm(self) -> float:
        return abs(self.scale) * np.sqrt(max(self.sq, 0.0))

    def margin(self, i: int) -> float:
        return float(self.y[i] * self.scale * self.f[i])

    def step(self, i: int) -> bool:
        """One iteration on sample ``i``. Returns True if the margin update fired."""
        self.t += 1
        eta = 1.0 / (self.lam * self.t)
        violated = self.margin(i) < 1.0
        self.scale *= 1.0 - eta * self.lam
        if violated:
            if self.scale == 0.0:
                # w collapsed to zero: restart the dual representation
                self.coeffs[:] = 0.0
                self.f[:] = 0.0
                self.sq = 0.0
                self.scale = 1.0
            delta = eta / self.scale
            self.sq += 2.0 * delta * self.y[i] * self.f[i] + delta * delta * self.K[i, i]
            self.coeffs[i] += delta
            self.f += (delta * self.y[i]) * self.K[:, i]
        norm = self.norm
        bound = 1.0 / np.sqrt(self.lam)
        if norm > bound:
            self.scale *= bound / norm
        return violated


def train_pegasos(
    K,
    y,
    lam: float = 1e-3,
    T: int | None = None,
    seed: int = 0,
    norm_history: list | None = None,
) -> PegasosModel:
    """Run ``T`` Pegasos iterations on Gram matrix ``K`` with labels in {-1, +1}.

    The sample at each step is drawn uniformly with ``numpy.random.default_rng(seed)``.
    ``T`` defaults to ``1000 * n``. If ``norm_history`` is a list, ``||w||`` after
    every step is appended to it.
    """
    if not lam > 0:
        raise UsageError(f"lambda must be positive, got {lam}")
    y = np.asarray(y, dtype=float).reshape(-1)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("Pegasos labels must be in {-1, +1}")
    require_both_classes(y)
    K = check_gram(K)
    n = y.shape[0]
    if K.shape[0] != n:
        raise UsageError(f"kernel is {K.shape[0]}x{K.shape[0]} but there are {n} labels")
    if T is None:
        T = 1000 * n
    if T < 1:
        raise UsageError(f"T must be >= 1, got {T}")

    draws = np.random.default_rng(seed).integers(0, n, size=T)
    state = PegasosState(K, y, lam)
    for i in draws:
        state.step(int(i))
        if norm_history is not None:
            norm_history.append(state.norm)
    return PegasosModel(state.coeffs.copy(), float(state.scale), float(lam), int(T), y)


def pegasos_decision(model: PegasosModel, k_row) -> float:
    """``<w, phi(x)>`` given the kernel row of ``x`` against the training set."""
    k_row = np.asarray(k_row, dtype=float)
    if k_row.shape != model.coeffs.shape:
        raise UsageError(f"kernel row has length {k_row.size}, model has {model.coeffs.size} samples")
    return float(pegasos_decision_values(model, k_row[None, :])[0])


def pegasos_decision_values(model: PegasosModel, K_rows) -> np.ndarray:
    K_rows = np.atleast_2d(np.asarray(K_rows, dtype=float))
    if K_rows.shape[1] != model.coeffs.size:
        raise UsageError(f"kernel rows have {K_rows.shape[1]} columns, model has {model.coeffs.size} samples")
    return model.scale * np.einsum("ij,j->i", K_rows, model.coeffs * model.labels)


def pegasos_scores(model: PegasosModel, spec: FeatureMapSpec, X) -> np.ndarray:
    if model.training_X is None:
        raise UsageError("model carries no training samples; call with_training_data first")
    return pegasos_decision_values(model, cross_kernel(spec, X, model.training_X))

