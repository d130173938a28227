"""Dense statevector simulation of small qubit registers.

Qubit ``q`` is bit ``q`` of the computational basis index (qubit 0 is the
least-significant bit), so ``|q1 q0> = |10>`` is basis index 2.

All functions are pure: a :class:`StateVector` is never modified in place.
Batched variants operating on ``(..., 2**n)`` amplitude arrays are provided for
the kernel and variational modules, which evaluate many states at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, UsageError

MAX_QUBITS = 12

_SQ2 = 1.0 / np.sqrt(2.0)

_FIXED = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
}
_ROTATIONS = ("RX", "RY", "RZ", "P", "RZZ")
_ARITY = {"H": 1, "X": 1, "Y": 1, "Z": 1, "RX": 1, "RY": 1, "RZ": 1, "P": 1,
          "CNOT": 2, "CZ": 2, "RZZ": 2}

GATE_KINDS = tuple(_ARITY)


def _rotation_matrix(kind: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    if kind == "P":
        return np.diag([1.0, np.exp(1j * angle)]).astype(complex)
    # RZZ = exp(-i angle/2 Z(x)Z)
    m, p = np.exp(-0.5j * angle), np.exp(0.5j * angle)
    return np.diag([m, p, p, m])


@dataclass(frozen=True)
class Gate:
    """One gate of a circuit.

    ``kind`` is one of :data:`GATE_KINDS`. For two-qubit gates the first target
    is the most significant bit of the 4x4 matrix, so ``Gate("CNOT", (c, t))``
    has control ``c`` and target ``t``. ``P`` is the phase gate
    ``diag(1, exp(i*angle))``.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _ARITY:
            raise UsageError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        if len(targets) != _ARITY[self.kind]:
            raise UsageError(
                f"{self.kind} acts on {_ARITY[self.kind]} qubit(s), got targets {targets}"
            )
        if len(set(targets)) != len(targets):
            raise UsageError(f"gate targets must be distinct, got {targets}")
        if any(t < 0 for t in targets):
            raise UsageError(f"negative qubit index in {targets}")
        if self.kind in _ROTATIONS:
            if self.angle is None:
                raise UsageError(f"{self.kind} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise UsageError(f"{self.kind} takes no angle")

    def matrix(self) -> np.ndarray:
        if self.kind in _FIXED:
            return _FIXED[self.kind]
        return _rotation_matrix(self.kind, self.angle)

    def inverse(self) -> "Gate":
        if self.kind in _ROTATIONS:
            return Gate(self.kind, self.targets, -self.angle)
        return self

    def __repr__(self) -> str:
        args = ",".join(map(str, self.targets))
        if self.angle is None:
            return f"{self.kind}({args})"
        return f"{self.kind}[{self.angle:.6g}]({args})"


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list on a fixed number of qubits."""

    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self) -> None:
        _check_qubits(self.n_qubits)
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        for g in gates:
            if max(g.targets) >= self.n_qubits:
                raise UsageError(f"{g!r} addresses a qubit outside 0..{self.n_qubits - 1}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise UsageError("cannot concatenate circuits of different widths")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)))

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Pure state of ``n_qubits`` qubits. The amplitude array is read-only."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        _check_qubits(self.n_qubits)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2**self.n_qubits:
            raise UsageError(
                f"{self.n_qubits} qubits need {2**self.n_qubits} amplitudes, got {amps.shape[0]}"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits}, amplitudes={np.round(self.amplitudes, 6)})"


def _check_qubits(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise ConfigurationError(f"qubit count must be an integer in [1, {MAX_QUBITS}], got {n!r}")


def init_zero(n_qubits: int) -> StateVector:
    """Return ``|0...0>`` on ``n_qubits`` qubits."""
    _check_qubits(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def basis_state(n_qubits: int, index: int) -> StateVector:
    _check_qubits(n_qubits)
    if not 0 <= index < 2**n_qubits:
        raise UsageError(f"basis index {index} out of range")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


def apply_matrix_batch(
    amps: np.ndarray, matrix: np.ndarray, targets: Sequence[int], n_qubits: int
) -> np.ndarray:
    """Apply a ``2**k x 2**k`` matrix on ``targets`` to amplitudes of shape ``(..., 2**n)``."""
    k = len(targets)
    lead = amps.shape[:-1]
    psi = amps.reshape(lead + (2,) * n_qubits)
    off = len(lead)
    # qubit q lives on tensor axis n-1-q (C-order reshape puts the MSB first)
    axes = [off + n_qubits - 1 - t for t in targets]
    u = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(u, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(amps.shape)


def evolve_batch(amps: np.ndarray, circuit: Circuit) -> np.ndarray:
    """Run ``circuit`` on every state in a ``(..., 2**n)`` amplitude array."""
    if amps.shape[-1] != 2**circuit.n_qubits:
        raise UsageError(
            f"circuit on {circuit.n_qubits} qubits applied to states of dimension {amps.shape[-1]}"
        )
    out = np.asarray(amps, dtype=complex)
    for g in circuit.gates:
        out = apply_matrix_batch(out, g.matrix(), g.targets, circuit.n_qubits)
    return out


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    if max(gate.targets) >= state.n_qubits:
        raise UsageError(f"{gate!r} addresses a qubit outside 0..{state.n_qubits - 1}")
    amps = apply_matrix_batch(state.amplitudes, gate.matrix(), gate.targets, state.n_qubits)
    return StateVector(state.n_qubits, amps)


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    """Apply the gates of ``circuit`` left to right."""
    if circuit.n_qubits != state.n_qubits:
        raise UsageError(
            f"circuit has {circuit.n_qubits} qubits but state has {state.n_qubits}"
        )
    return StateVector(state.n_qubits, evolve_batch(state.amplitudes, circuit))


def overlap(a: StateVector, b: StateVector) -> complex:
    """Inner product <a|b> (conjugate-linear in ``a``)."""
    if a.n_qubits != b.n_qubits:
        raise UsageError(f"overlap of {a.n_qubits}- and {b.n_qubits}-qubit states")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def probabilities(state: StateVector) -> np.ndarray:
    return np.abs(state.amplitudes) ** 2


def parity_signs(n_qubits: int, qubits: Iterable[int]) -> np.ndarray:
    """``(-1)**popcount(k & mask)`` for every basis index ``k``."""
    qubits = sorted(set(int(q) for q in qubits))
    if not qubits:
        raise UsageError("parity observable needs at least one qubit")
    if qubits[0] < 0 or qubits[-1] >= n_qubits:
        raise UsageError(f"observable qubits {qubits} outside 0..{n_qubits - 1}")
    mask = sum(1 << q for q in qubits)
    idx = np.arange(2**n_qubits) & mask
    bits = np.zeros_like(idx)
    while idx.any():
        bits ^= idx & 1
        idx >>= 1
    return 1.0 - 2.0 * bits


def expect_z_parity_batch(amps: np.ndarray, n_qubits: int, qubits: Iterable[int]) -> np.ndarray:
    signs = parity_signs(n_qubits, qubits)
    return np.einsum("...k,k->...", np.abs(amps) ** 2, signs)


def expect_z_parity(state: StateVector, qubits: Iterable[int]) -> float:
    """Expectation of the tensor product of Z on ``qubits``; lies in [-1, 1]."""
    return float(expect_z_parity_batch(state.amplitudes, state.n_qubits, qubits))


def sample_counts(state: StateVector, shots: int, seed: int) -> dict[int, int]:
    """Draw ``shots`` computational-basis measurements; returns ``{index: count}``."""
    if shots < 1:
        raise UsageError(f"shots must be >= 1, got {shots}")
    p = probabilities(state)
    p = p / p.sum()
    counts = np.random.default_rng(seed).multinomial(shots, p)
    return {int(k): int(c) for k, c in enumerate(counts) if c}
