"""Kernel SVM trained on a precomputed quantum Gram matrix.

The dual

    max  sum_i a_i - 1/2 sum_ij y_i y_j a_i a_j K_ij
    s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0

is solved by sequential minimal optimization: each update moves the most
KKT-violating pair along the equality constraint to the exact optimum of the
resulting one-dimensional quadratic, clipped to the box.

Prediction follows ``f(x) = sign(sum_i a_i y_i K(x, x_i) - b)``, so the stored
bias is *subtracted* from the kernel expansion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DataError, NumericError, UsageError
from .featuremap import FeatureMapSpec
from .kernel import cross_kernel, kernel_row
from .labels import require_both_classes, sign

log = logging.getLogger(__name__)

FORMAT = "qmlgenome.qsvc.v1"
PSD_TOL = 1e-8
_TAU = 1e-12


@dataclass(frozen=True, eq=False)
class SvmModel:
    alphas: np.ndarray
    bias: float
    labels: np.ndarray
    C: float
    support_tol: float = 1e-8
    training_X: np.ndarray | None = None
    spec: FeatureMapSpec | None = None
    converged: bool = True
    n_updates: int = 0
    kkt_gap: float = 0.0

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > self.support_tol)

    def with_training_data(self, spec: FeatureMapSpec, X) -> "SvmModel":
        return SvmModel(
            self.alphas, self.bias, self.labels, self.C, self.support_tol,
            np.asarray(X, dtype=float), spec, self.converged, self.n_updates, self.kkt_gap,
        )

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "alphas": self.alphas.tolist(),
            "bias": self.bias,
            "labels": self.labels.tolist(),
            "C": self.C,
            "support_tol": self.support_tol,
            "training_X": None if self.training_X is None else self.training_X.tolist(),
            "spec": None if self.spec is None else self.spec.to_dict(),
            "converged": self.converged,
            "n_updates": self.n_updates,
            "kkt_gap": self.kkt_gap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        return cls(
            alphas=np.asarray(d["alphas"], dtype=float),
            bias=float(d["bias"]),
            labels=np.asarray(d["labels"], dtype=float),
            C=float(d["C"]),
            support_tol=float(d["support_tol"]),
            training_X=None if d["training_X"] is None else np.asarray(d["training_X"], dtype=float),
            spec=None if d["spec"] is None else FeatureMapSpec.from_dict(d["spec"]),
            converged=bool(d["converged"]),
            n_updates=int(d["n_updates"]),
            kkt_gap=float(d["kkt_gap"]),
        )


def dual_objective(alphas, y, K) -> float:
    """``sum a - 1/2 (a*y)^T K (a*y)``."""
    ay = np.asarray(alphas) * np.asarray(y)
    return float(np.sum(alphas) - 0.5 * ay @ K @ ay)


def check_gram(K, psd_tol: float = PSD_TOL) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] == 0:
        raise UsageError(f"kernel matrix must be square and non-empty, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise NumericError("kernel matrix contains non-finite entries")
    if not np.allclose(K, K.T, atol=1e-10, rtol=0):
        raise NumericError("kernel matrix is not symmetric")
    lam_min = float(np.linalg.eigvalsh(K)[0])
    if lam_min < -psd_tol:
        raise NumericError(f"kernel matrix is not positive semidefinite (min eigenvalue {lam_min:.3e})")
    return K


def _violating_pair(alphas, y, G, C):
    """Indices (i, j) of the maximal violating pair and the KKT gap m - M."""
    score = -y * G
    up = ((y > 0) & (alphas < C)) | ((y < 0) & (alphas > 0))
    low = ((y < 0) & (alphas < C)) | ((y > 0) & (alphas > 0))
    if not up.any() or not low.any():
        return -1, -1, 0.0
    i = int(np.flatnonzero(up)[np.argmax(score[up])])
    j = int(np.flatnonzero(low)[np.argmin(score[low])])
    return i, j, float(score[i] - score[j])


def _bias(alphas, y, G, C, support_tol) -> float:
    yG = y * G
    free = (alphas > support_tol) & (alphas < C - support_tol)
    if free.any():
        return float(yG[free].mean())
    up = ((y > 0) & (alphas < C)) | ((y < 0) & (alphas > 0))
    low = ((y < 0) & (alphas < C)) | ((y > 0) & (alphas > 0))
    ub = yG[up].min() if up.any() else np.inf
    lb = yG[low].max() if low.any() else -np.inf
    if not np.isfinite(ub):
        return float(lb)
    if not np.isfinite(lb):
        return float(ub)
    return float((ub + lb) / 2)


def train_qsvc(
    K,
    y,
    C: float = 1.0,
    tol: float = 1e-4,
    max_passes: int | None = None,
    support_tol: float = 1e-8,
    callback: Callable[[np.ndarray], None] | None = None,
) -> SvmModel:
    """Solve the SVM dual for Gram matrix ``K`` and labels ``y`` in {-1, +1}.

    Args:
        K: symmetric PSD kernel matrix.
        y: labels in {-1, +1}.
        C: box bound on every dual coefficient.
        tol: stop once the maximal KKT violation ``m - M`` drops below ``tol``.
        max_passes: cap on sweeps, where one sweep is ``n`` pair updates; defaults to ``10 * n``.
        support_tol: coefficients above this count as support vectors.
        callback: called with a copy of the coefficients after every pair update.
    """
    if not C > 0:
        raise ConfigurationError(f"C must be positive, got {C}")
    if not tol > 0:
        raise ConfigurationError(f"tol must be positive, got {tol}")
    y = np.asarray(y, dtype=float).reshape(-1)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("QSVC labels must be in {-1, +1}")
    require_both_classes(y)
    K = check_gram(K)
    n = y.shape[0]
    if K.shape[0] != n:
        raise UsageError(f"kernel is {K.shape[0]}x{K.shape[0]} but there are {n} labels")
    if max_passes is None:
        max_passes = 10 * n
    if max_passes < 1:
        raise ConfigurationError(f"max_passes must be >= 1, got {max_passes}")
    max_updates = max_passes * n

    Q = (y[:, None] * y[None, :]) * K
    alphas = np.zeros(n)
    G = -np.ones(n)  # gradient of 1/2 a^T Q a - sum a
    updates = 0
    gap = np.inf
    while True:
        i, j, gap = _violating_pair(alphas, y, G, C)
        if i < 0 or gap < tol or updates >= max_updates:
            break
        curv = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if curv <= 0:
            curv = _TAU
        # move a_i by +y_i t and a_j by -y_j t; slope of the objective is -gap
        t = gap / curv
        t_i = C - alphas[i] if y[i] > 0 else alphas[i]
        t_j = alphas[j] if y[j] > 0 else C - alphas[j]
        t = min(t, t_i, t_j)
        old_i, old_j = alphas[i], alphas[j]
        if t == t_i:
            alphas[i] = C if y[i] > 0 else 0.0
        else:
            alphas[i] = old_i + y[i] * t
        if t == t_j:
            alphas[j] = 0.0 if y[j] > 0 else C
        else:
            alphas[j] = old_j - y[j] * t
        G += Q[:, i] * (alphas[i] - old_i) + Q[:, j] * (alphas[j] - old_j)
        updates += 1
        if callback is not None:
            callback(alphas.copy())

    converged = gap < tol
    if not converged:
        log.warning("SMO stopped after %d updates with KKT gap %.3e > tol %.1e", updates, gap, tol)
    return SvmModel(
        alphas=alphas,
        bias=_bias(alphas, y, G, C, support_tol),
        labels=y,
        C=float(C),
        support_tol=support_tol,
        converged=bool(converged),
        n_updates=updates,
        kkt_gap=float(max(gap, 0.0)),
    )


def decision_function(model: SvmModel, k_row) -> float:
    """Signed margin ``sum_i a_i y_i k_row[i] - b``."""
    k_row = np.asarray(k_row, dtype=float)
    if k_row.shape != model.alphas.shape:
        raise UsageError(f"kernel row has length {k_row.size}, model has {model.alphas.size} samples")
    return float(decision_values(model, k_row[None, :])[0])


def decision_values(model: SvmModel, K_rows) -> np.ndarray:
    K_rows = np.atleast_2d(np.asarray(K_rows, dtype=float))
    if K_rows.shape[1] != model.alphas.size:
        raise UsageError(f"kernel rows have {K_rows.shape[1]} columns, model has {model.alphas.size} samples")
    # row-wise einsum: a row's value does not depend on how many rows are scored together
    return np.einsum("ij,j->i", K_rows, model.alphas * model.labels) - model.bias


def _require_training_data(model: SvmModel):
    if model.training_X is None:
        raise UsageError("model carries no training samples; call with_training_data first")


def predict_qsvc(model: SvmModel, spec: FeatureMapSpec, x) -> int:
    """Label in {-1, +1} for a single feature vector."""
    _require_training_data(model)
    return int(sign(decision_function(model, kernel_row(spec, x, model.training_X))))


def qsvc_scores(model: SvmModel, spec: FeatureMapSpec, X) -> np.ndarray:
    _require_training_data(model)
    return decision_values(model, cross_kernel(spec, X, model.training_X))
