"""Data-encoding circuits: Z, ZZ and general Pauli feature maps.

Every repetition starts with a Hadamard layer and then, for each Pauli string
and each qubit subset selected by the entanglement pattern, applies a phase
block ``exp(-i * phi_S(x) * P_S)`` up to global phase, realised as a basis
change, a CNOT ladder, ``P(2 * phi_S(x))`` on the last qubit of the subset and
the mirror image. The data functions are

* ``phi(x_i) = x_i`` for single-qubit strings,
* ``phi(x_S) = prod_{i in S} (pi - x_i)`` for strings on two or more qubits.

The Z map uses the string ``["Z"]`` and the ZZ map ``["Z", "ZZ"]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DataError, UsageError
from .statevector import (
    Circuit,
    Gate,
    StateVector,
    apply_circuit,
    evolve_batch,
    init_zero,
)

KINDS = ("Z", "ZZ", "Pauli")
ENTANGLEMENTS = ("full", "linear")
DEFAULT_PAULI_STRINGS = ("Z", "ZZ")


@dataclass(frozen=True)
class FeatureMapSpec:
    kind: str = "ZZ"
    n_qubits: int = 4
    reps: int = 2
    entanglement: str = "full"
    pauli_strings: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(f"feature map kind must be one of {KINDS}, got {self.kind!r}")
        if not isinstance(self.n_qubits, int) or not 1 <= self.n_qubits <= 12:
            raise ConfigurationError(f"n_qubits must be in [1, 12], got {self.n_qubits!r}")
        if not isinstance(self.reps, int) or self.reps < 1:
            raise ConfigurationError(f"reps must be a positive integer, got {self.reps!r}")
        if self.entanglement not in ENTANGLEMENTS:
            raise ConfigurationError(
                f"entanglement must be one of {ENTANGLEMENTS}, got {self.entanglement!r}"
            )
        strings = tuple(str(s).upper() for s in self.pauli_strings)
        if self.kind == "Pauli" and not strings:
            strings = DEFAULT_PAULI_STRINGS
        if self.kind != "Pauli" and strings:
            raise ConfigurationError("pauli_strings are only accepted for the Pauli kind")
        for s in strings:
            if not s or set(s) - set("XYZ"):
                raise ConfigurationError(f"invalid Pauli string {s!r}")
            if len(s) > self.n_qubits:
                raise ConfigurationError(
                    f"Pauli string {s!r} is longer than the {self.n_qubits}-qubit register"
                )
        object.__setattr__(self, "pauli_strings", strings)

    @property
    def strings(self) -> tuple[str, ...]:
        """Pauli strings actually used to build the circuit."""
        if self.kind == "Z":
            return ("Z",)
        if self.kind == "ZZ":
            return ("Z", "ZZ")
        return self.pauli_strings

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_qubits": self.n_qubits,
            "reps": self.reps,
            "entanglement": self.entanglement,
            "pauli_strings": list(self.pauli_strings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMapSpec":
        return cls(
            kind=d["kind"],
            n_qubits=int(d["n_qubits"]),
            reps=int(d["reps"]),
            entanglement=d["entanglement"],
            pauli_strings=tuple(d.get("pauli_strings", ())),
        )


def qubit_subsets(n_qubits: int, size: int, entanglement: str) -> list[tuple[int, ...]]:
    """Qubit tuples a Pauli string of length ``size`` is applied to."""
    if size == 1:
        return [(q,) for q in range(n_qubits)]
    if entanglement == "full":
        return list(itertools.combinations(range(n_qubits), size))
    return [tuple(range(q, q + size)) for q in range(n_qubits - size + 1)]


def _check_x(spec: FeatureMapSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != spec.n_qubits:
        raise UsageError(f"feature map expects {spec.n_qubits} features, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise DataError(f"non-finite feature value in {x}")
    return x


def _pauli_block(pauli: str, qubits: tuple[int, ...], angle: float) -> list[Gate]:
    pre, post = [], []
    for p, q in zip(pauli, qubits):
        if p == "X":
            pre.append(Gate("H", (q,)))
            post.append(Gate("H", (q,)))
        elif p == "Y":
            pre.append(Gate("RX", (q,), math.pi / 2))
            post.append(Gate("RX", (q,), -math.pi / 2))
    ladder = [Gate("CNOT", (qubits[m], qubits[m + 1])) for m in range(len(qubits) - 1)]
    return pre + ladder + [Gate("P", (qubits[-1],), angle)] + ladder[::-1] + post


def build_feature_circuit(spec: FeatureMapSpec, x) -> Circuit:
    """Gate program encoding the feature vector ``x``."""
    x = _check_x(spec, x)
    n = spec.n_qubits
    gates: list[Gate] = []
    for _ in range(spec.reps):
        gates.extend(Gate("H", (q,)) for q in range(n))
        for pauli in spec.strings:
            for subset in qubit_subsets(n, len(pauli), spec.entanglement):
                if len(subset) == 1:
                    phi = x[subset[0]]
                else:
                    phi = float(np.prod([math.pi - x[q] for q in subset]))
                gates.extend(_pauli_block(pauli, subset, 2.0 * phi))
    return Circuit(n, tuple(gates))


def encode(spec: FeatureMapSpec, x) -> StateVector:
    """Encoded state ``U_feature(x)|0...0>``."""
    return apply_circuit(init_zero(spec.n_qubits), build_feature_circuit(spec, x))


def encode_batch(spec: FeatureMapSpec, X) -> np.ndarray:
    """Encoded amplitudes for every row of ``X``, shape ``(n_samples, 2**n_qubits)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise UsageError(f"expected a 2-D sample matrix, got shape {X.shape}")
    zero = init_zero(spec.n_qubits).amplitudes
    out = np.empty((X.shape[0], zero.shape[0]), dtype=complex)
    for i, row in enumerate(X):
        out[i] = evolve_batch(zero, build_feature_circuit(spec, row))
    return out
