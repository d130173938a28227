"""Layered ansatz circuits, exact expectations, parameter-shift gradients and optimizers."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, NumericError, UsageError
from .featuremap import FeatureMapSpec, encode
from .statevector import (
    Circuit,
    Gate,
    apply_circuit,
    evolve_batch,
    expect_z_parity,
    expect_z_parity_batch,
)

AXES = ("RX", "RY", "RZ")
ENTANGLERS = ("cnot_ring", "cnot_linear")
METHODS = ("gradient_descent", "spsa")


@dataclass(frozen=True)
class AnsatzSpec:
    """Hardware-efficient ansatz: per layer one rotation per qubit, then CNOTs.

    ``rotation_axes`` holds one axis per layer; an empty tuple means RY everywhere.
    """

    n_qubits: int
    layers: int = 3
    rotation_axes: tuple[str, ...] = ()
    entangler: str = "cnot_ring"

    def __post_init__(self) -> None:
        if not isinstance(self.n_qubits, int) or not 1 <= self.n_qubits <= 12:
            raise ConfigurationError(f"n_qubits must be in [1, 12], got {self.n_qubits!r}")
        if not isinstance(self.layers, int) or self.layers < 1:
            raise ConfigurationError(f"layers must be a positive integer, got {self.layers!r}")
        axes = tuple(a.upper() for a in self.rotation_axes) or ("RY",) * self.layers
        if len(axes) == 1 and self.layers > 1:
            axes = axes * self.layers
        if len(axes) != self.layers:
            raise ConfigurationError(f"need {self.layers} rotation axes, got {len(axes)}")
        if set(axes) - set(AXES):
            raise ConfigurationError(f"rotation axes must be drawn from {AXES}, got {axes}")
        if self.entangler not in ENTANGLERS:
            raise ConfigurationError(f"entangler must be one of {ENTANGLERS}, got {self.entangler!r}")
        object.__setattr__(self, "rotation_axes", axes)

    @property
    def parameter_count(self) -> int:
        return self.layers * self.n_qubits

    def cnot_pairs(self) -> list[tuple[int, int]]:
        n = self.n_qubits
        if n == 1:
            return []
        pairs = [(q, q + 1) for q in range(n - 1)]
        if self.entangler == "cnot_ring":
            pairs.append((n - 1, 0))
        return pairs

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "layers": self.layers,
            "rotation_axes": list(self.rotation_axes),
            "entangler": self.entangler,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnsatzSpec":
        return cls(int(d["n_qubits"]), int(d["layers"]), tuple(d["rotation_axes"]), d["entangler"])


def _check_theta(spec: AnsatzSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != spec.parameter_count:
        raise UsageError(f"ansatz needs {spec.parameter_count} parameters, got {theta.shape[0]}")
    if not np.all(np.isfinite(theta)):
        raise NumericError("non-finite parameter value")
    return theta


def build_ansatz_circuit(spec: AnsatzSpec, theta) -> Circuit:
    theta = _check_theta(spec, theta)
    n = spec.n_qubits
    gates = []
    for layer, axis in enumerate(spec.rotation_axes):
        gates.extend(Gate(axis, (q,), theta[layer * n + q]) for q in range(n))
        gates.extend(Gate("CNOT", pair) for pair in spec.cnot_pairs())
    return Circuit(n, tuple(gates))


def check_dims(fspec: FeatureMapSpec, aspec: AnsatzSpec) -> None:
    if fspec.n_qubits != aspec.n_qubits:
        raise UsageError(
            f"feature map has {fspec.n_qubits} qubits but ansatz has {aspec.n_qubits}"
        )


def model_expectation(
    fspec: FeatureMapSpec, aspec: AnsatzSpec, theta, x, observable_qubits: Iterable[int]
) -> float:
    """Z-parity expectation after encoding ``x`` and applying the ansatz."""
    check_dims(fspec, aspec)
    state = apply_circuit(encode(fspec, x), build_ansatz_circuit(aspec, theta))
    return expect_z_parity(state, observable_qubits)


def expectations_from_states(
    states: np.ndarray, aspec: AnsatzSpec, theta, observable_qubits: Iterable[int]
) -> np.ndarray:
    """Batched :func:`model_expectation` on pre-encoded amplitudes ``(n_samples, 2**n)``."""
    out = evolve_batch(states, build_ansatz_circuit(aspec, theta))
    return expect_z_parity_batch(out, aspec.n_qubits, observable_qubits)


def expectation_jacobian(
    states: np.ndarray, aspec: AnsatzSpec, theta, observable_qubits: Iterable[int],
    shift: float = math.pi / 2,
) -> np.ndarray:
    """``d<O>_i / d theta_k`` for every sample ``i`` by the shift rule, shape ``(n_samples, P)``.

    Exact: each expectation is a first-order trigonometric polynomial in every angle.
    """
    theta = _check_theta(aspec, theta)
    qubits = tuple(observable_qubits)
    jac = np.empty((states.shape[0], theta.size))
    denom = 2.0 * math.sin(shift)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = shift
        plus = expectations_from_states(states, aspec, theta + e, qubits)
        minus = expectations_from_states(states, aspec, theta - e, qubits)
        jac[:, k] = (plus - minus) / denom
    return jac


def parameter_shift_grad(
    objective: Callable[[np.ndarray], float], theta, shift: float = math.pi / 2
) -> np.ndarray:
    """Gradient by the two-term shift rule, exact for objectives built from
    rotation-gate expectations (and sums/compositions linear in them)."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    grad = np.empty_like(theta)
    denom = 2.0 * math.sin(shift)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = shift
        grad[k] = (objective(theta + e) - objective(theta - e)) / denom
    return grad


@dataclass
class TrainingTrace:
    """Objective value per optimizer iteration (iteration 0 is the start point)."""

    iterations: list[int] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    def record(self, iteration: int, value: float) -> None:
        if self.iterations and iteration <= self.iterations[-1]:
            raise UsageError("trace iterations must be strictly increasing")
        self.iterations.append(int(iteration))
        self.values.append(float(value))

    def __len__(self) -> int:
        return len(self.values)

    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.values))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "objective"])
        for it, v in zip(self.iterations, self.values):
            w.writerow([it, repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TrainingTrace":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["iteration", "objective"]:
            raise UsageError("trace CSV must start with header 'iteration,objective'")
        trace = cls()
        for it, v in rows[1:]:
            trace.record(int(it), float(v))
        return trace

    def to_dict(self) -> dict:
        return {"iterations": list(self.iterations), "values": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingTrace":
        return cls(list(map(int, d["iterations"])), list(map(float, d["values"])))


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "gradient_descent"
    learning_rate: float = 0.1
    max_iters: int = 100
    tolerance: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(f"optimizer method must be one of {METHODS}, got {self.method!r}")
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.learning_rate}")
        if not self.tolerance > 0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tolerance}")
        if not isinstance(self.max_iters, int) or self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be a positive integer, got {self.max_iters!r}")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "learning_rate": self.learning_rate,
            "max_iters": self.max_iters,
            "tolerance": self.tolerance,
            "seed": self.seed,
        }


SPSA_ALPHA = 0.602
SPSA_GAMMA = 0.101
SPSA_C = 0.1


def minimize(
    config: OptimizerConfig,
    objective: Callable[[np.ndarray], float],
    initial: Sequence[float],
    grad: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, TrainingTrace]:
    """Minimize ``objective`` from ``initial``; returns the best parameters seen and the trace.

    Iteration 0 records the initial objective; iteration k records the value
    after the k-th update. The loop stops when the objective drops below
    ``tolerance``, changes by less than ``tolerance`` between iterations, or
    after ``max_iters`` updates. ``grad`` overrides the parameter-shift
    gradient used by ``gradient_descent``.
    """
    theta = np.array(initial, dtype=float).reshape(-1)
    rng = np.random.default_rng(config.seed)
    if grad is None:
        grad = lambda t: parameter_shift_grad(objective, t)  # noqa: E731

    def evaluate(t: np.ndarray, k: int) -> float:
        v = float(objective(t))
        if not math.isfinite(v):
            raise NumericError(f"objective is not finite at iteration {k}: {v}")
        return v

    trace = TrainingTrace()
    value = evaluate(theta, 0)
    trace.record(0, value)
    best_theta, best_value = theta.copy(), value
    eta = config.learning_rate
    for k in range(1, config.max_iters + 1):
        if config.method == "gradient_descent":
            g = np.asarray(grad(theta), dtype=float)
            if not np.all(np.isfinite(g)):
                raise NumericError(f"gradient is not finite at iteration {k}")
            theta = theta - eta * g
        else:
            a_k = eta / k**SPSA_ALPHA
            c_k = SPSA_C / k**SPSA_GAMMA
            delta = rng.choice((-1.0, 1.0), size=theta.size)
            diff = evaluate(theta + c_k * delta, k) - evaluate(theta - c_k * delta, k)
            theta = theta - a_k * (diff / (2.0 * c_k)) * delta
        prev, value = value, evaluate(theta, k)
        trace.record(k, value)
        if value < best_value:
            best_theta, best_value = theta.copy(), value
        if value < config.tolerance or abs(value - prev) < config.tolerance:
            break
    return best_theta, trace


def write_trace_csv(trace: TrainingTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(trace.to_csv())
