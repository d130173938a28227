"""Variational classifiers.

VQC: probability of class 1 is the even-parity probability over the observable
qubits, trained on binary cross-entropy (SPSA by default).

QNN: output is the Z expectation of the observable qubits (qubit 0 by default),
trained on mean squared error against +-1 targets by parameter-shift gradient
descent.

Datasets are ``(X, y)`` pairs with ``y`` in {0, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, UsageError
from .featuremap import FeatureMapSpec, encode_batch
from .labels import require_both_classes
from .variational import (
    AnsatzSpec,
    OptimizerConfig,
    TrainingTrace,
    check_dims,
    expectation_jacobian,
    expectations_from_states,
    minimize,
    model_expectation,
)

FORMAT = "qmlgenome.variational.v1"
KINDS = ("VQC", "QNN")
PROB_CLAMP = 1e-12


def default_observable(kind: str, n_qubits: int) -> tuple[int, ...]:
    if kind == "VQC":
        return tuple(range(n_qubits))
    if kind == "QNN":
        return (0,)
    raise UsageError(f"unknown variational model kind {kind!r}")


@dataclass(frozen=True, eq=False)
class VariationalModel:
    kind: str
    fspec: FeatureMapSpec
    aspec: AnsatzSpec
    theta_opt: np.ndarray
    observable_qubits: tuple[int, ...]
    trace: TrainingTrace = field(default_factory=TrainingTrace)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise UsageError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if np.asarray(self.theta_opt).size != self.aspec.parameter_count:
            raise UsageError("theta_opt length does not match the ansatz")

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "kind": self.kind,
            "fspec": self.fspec.to_dict(),
            "aspec": self.aspec.to_dict(),
            "theta_opt": np.asarray(self.theta_opt).tolist(),
            "observable_qubits": list(self.observable_qubits),
            "trace": self.trace.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VariationalModel":
        return cls(
            kind=d["kind"],
            fspec=FeatureMapSpec.from_dict(d["fspec"]),
            aspec=AnsatzSpec.from_dict(d["aspec"]),
            theta_opt=np.asarray(d["theta_opt"], dtype=float),
            observable_qubits=tuple(int(q) for q in d["observable_qubits"]),
            trace=TrainingTrace.from_dict(d["trace"]),
        )


def initial_theta(aspec: AnsatzSpec, seed: int) -> np.ndarray:
    """Starting parameters drawn uniformly from [-pi, pi]."""
    return np.random.default_rng(seed).uniform(-np.pi, np.pi, size=aspec.parameter_count)


def _dataset(fspec: FeatureMapSpec, X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    y = np.asarray(y).reshape(-1)
    if X.shape[0] == 0:
        raise UsageError("dataset is empty")
    if X.shape[0] != y.shape[0]:
        raise UsageError(f"{X.shape[0]} samples but {y.shape[0]} labels")
    if X.shape[1] != fspec.n_qubits:
        raise UsageError(f"samples have {X.shape[1]} features, feature map expects {fspec.n_qubits}")
    if not np.all(np.isin(y, (0, 1))):
        raise DataError("labels must be in {0, 1}")
    return X, y.astype(float)


def vqc_forward(fspec, aspec, theta, x, observable_qubits=None) -> float:
    """Probability of class 1, ``(1 + <Z parity>) / 2``."""
    if observable_qubits is None:
        observable_qubits = default_observable("VQC", aspec.n_qubits)
    return 0.5 * (1.0 + model_expectation(fspec, aspec, theta, x, observable_qubits))


def qnn_forward(fspec, aspec, theta, x, observable_qubits=None) -> float:
    if observable_qubits is None:
        observable_qubits = default_observable("QNN", aspec.n_qubits)
    return model_expectation(fspec, aspec, theta, x, observable_qubits)


def bce(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def mse(out: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean((targets - out) ** 2))


def vqc_cost(fspec, aspec, theta, X, y, observable_qubits=None) -> float:
    """Mean binary cross-entropy of the class-1 probabilities."""
    check_dims(fspec, aspec)
    X, y = _dataset(fspec, X, y)
    if observable_qubits is None:
        observable_qubits = default_observable("VQC", aspec.n_qubits)
    e = expectations_from_states(encode_batch(fspec, X), aspec, theta, observable_qubits)
    return bce(0.5 * (1.0 + e), y)


def qnn_cost(fspec, aspec, theta, X, y, observable_qubits=None) -> float:
    """Mean squared error between +-1 targets and the QNN output."""
    check_dims(fspec, aspec)
    X, y = _dataset(fspec, X, y)
    if observable_qubits is None:
        observable_qubits = default_observable("QNN", aspec.n_qubits)
    e = expectations_from_states(encode_batch(fspec, X), aspec, theta, observable_qubits)
    return mse(e, 2.0 * y - 1.0)


def _loss_slope(kind: str, e: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Derivative of the mean loss with respect to each sample's expectation."""
    n = y.shape[0]
    if kind == "VQC":
        p = 0.5 * (1.0 + e)
        inside = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)  # the clamp is flat outside
        pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
        return np.where(inside, -(y / pc - (1.0 - y) / (1.0 - pc)) * 0.5 / n, 0.0)
    return -2.0 * ((2.0 * y - 1.0) - e) / n


def _cost_gradient(kind, states, aspec, theta, qubits, y) -> np.ndarray:
    # chain rule: exact shift-rule Jacobian of the expectations times the loss slope
    e = expectations_from_states(states, aspec, theta, qubits)
    return _loss_slope(kind, e, y) @ expectation_jacobian(states, aspec, theta, qubits)


def vqc_cost_grad(fspec, aspec, theta, X, y, observable_qubits=None) -> np.ndarray:
    """Gradient of :func:`vqc_cost` with respect to ``theta``."""
    check_dims(fspec, aspec)
    X, y = _dataset(fspec, X, y)
    qubits = observable_qubits if observable_qubits is not None else default_observable("VQC", aspec.n_qubits)
    return _cost_gradient("VQC", encode_batch(fspec, X), aspec, theta, tuple(qubits), y)


def qnn_cost_grad(fspec, aspec, theta, X, y, observable_qubits=None) -> np.ndarray:
    """Gradient of :func:`qnn_cost` with respect to ``theta``."""
    check_dims(fspec, aspec)
    X, y = _dataset(fspec, X, y)
    qubits = observable_qubits if observable_qubits is not None else default_observable("QNN", aspec.n_qubits)
    return _cost_gradient("QNN", encode_batch(fspec, X), aspec, theta, tuple(qubits), y)


def _train(kind, fspec, aspec, X, y, optimizer, observable_qubits, init_seed, theta0):
    check_dims(fspec, aspec)
    X, y = _dataset(fspec, X, y)
    require_both_classes(y, "training labels")
    qubits = tuple(observable_qubits) if observable_qubits is not None else default_observable(kind, aspec.n_qubits)
    states = encode_batch(fspec, X)
    if kind == "VQC":
        def objective(theta):
            return bce(0.5 * (1.0 + expectations_from_states(states, aspec, theta, qubits)), y)
    else:
        targets = 2.0 * y - 1.0

        def objective(theta):
            return mse(expectations_from_states(states, aspec, theta, qubits), targets)

    if theta0 is None:
        theta0 = initial_theta(aspec, optimizer.seed if init_seed is None else init_seed)
    theta, trace = minimize(optimizer, objective, theta0,
                            grad=lambda t: _cost_gradient(kind, states, aspec, t, qubits, y))
    return VariationalModel(kind, fspec, aspec, theta, qubits, trace)


def train_vqc(
    fspec, aspec, X, y,
    optimizer: OptimizerConfig | None = None,
    observable_qubits=None,
    init_seed: int | None = None,
    theta0=None,
) -> VariationalModel:
    """Fit a VQC; the optimizer defaults to SPSA."""
    if optimizer is None:
        optimizer = OptimizerConfig(method="spsa", learning_rate=0.2, max_iters=100)
    return _train("VQC", fspec, aspec, X, y, optimizer, observable_qubits, init_seed, theta0)


def train_qnn(
    fspec, aspec, X, y,
    optimizer: OptimizerConfig | None = None,
    observable_qubits=None,
    init_seed: int | None = None,
    theta0=None,
) -> VariationalModel:
    """Fit a QNN; the optimizer defaults to parameter-shift gradient descent."""
    if optimizer is None:
        optimizer = OptimizerConfig(method="gradient_descent", learning_rate=0.1, max_iters=100)
    return _train("QNN", fspec, aspec, X, y, optimizer, observable_qubits, init_seed, theta0)


def _forward_batch(model: VariationalModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.fspec.n_qubits:
        raise UsageError(f"samples have {X.shape[1]} features, model expects {model.fspec.n_qubits}")
    e = expectations_from_states(encode_batch(model.fspec, X), model.aspec, model.theta_opt,
                                 model.observable_qubits)
    return 0.5 * (1.0 + e) if model.kind == "VQC" else e


def variational_scores(model: VariationalModel, X) -> np.ndarray:
    """Class-1 scores in [0, 1]: the VQC probability or ``(1 + output) / 2`` for the QNN."""
    out = _forward_batch(model, X)
    return out if model.kind == "VQC" else 0.5 * (1.0 + out)


def predict_variational(model: VariationalModel, x) -> int:
    """VQC: 1 if p >= 0.5 else 0. QNN: sign of the output with sign(0) = +1."""
    out = float(_forward_batch(model, x)[0])
    if model.kind == "VQC":
        return int(out >= 0.5)
    return 1 if out >= 0 else -1


def predict_labels(model: VariationalModel, X) -> np.ndarray:
    """Batch prediction mapped to {0, 1} for both kinds."""
    out = _forward_batch(model, X)
    return (out >= (0.5 if model.kind == "VQC" else 0.0)).astype(int)

