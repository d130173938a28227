"""Fidelity quantum kernel ``K(x, y) = |<psi(x)|psi(y)>|**2``."""

from __future__ import annotations

import numpy as np

from .errors import UsageError
from .featuremap import FeatureMapSpec, encode, encode_batch
from .statevector import overlap


def _as_samples(spec: FeatureMapSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise UsageError(f"need a non-empty 2-D sample matrix, got shape {X.shape}")
    if X.shape[1] != spec.n_qubits:
        raise UsageError(f"samples have {X.shape[1]} features, feature map expects {spec.n_qubits}")
    return X


def kernel_entry(spec: FeatureMapSpec, x_i, x_j) -> float:
    f = abs(overlap(encode(spec, x_i), encode(spec, x_j))) ** 2
    return float(min(1.0, max(0.0, f)))


def fidelity_from_states(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise fidelities between two stacks of encoded amplitudes."""
    # einsum keeps each entry independent of batch layout (BLAS blocking is not)
    return np.clip(np.abs(np.einsum("ik,jk->ij", A.conj(), B)) ** 2, 0.0, 1.0)


def gram_from_states(states: np.ndarray) -> np.ndarray:
    K = fidelity_from_states(states, states)
    # mirror the upper triangle so symmetry holds bit-for-bit
    iu = np.triu_indices(K.shape[0], 1)
    K[(iu[1], iu[0])] = K[iu]
    # self-fidelity of a normalized state is 1; drop the rounding residue
    np.fill_diagonal(K, 1.0)
    return K


def kernel_matrix(spec: FeatureMapSpec, X) -> np.ndarray:
    """Gram matrix over the rows of ``X``; each row is encoded once."""
    X = _as_samples(spec, X)
    return gram_from_states(encode_batch(spec, X))


def kernel_row(spec: FeatureMapSpec, x, X) -> np.ndarray:
    """``[K(x, X[0]), ..., K(x, X[n-1])]``."""
    X = _as_samples(spec, X)
    psi = encode_batch(spec, np.asarray(x, dtype=float).reshape(1, -1))
    return fidelity_from_states(psi, encode_batch(spec, X))[0]


def cross_kernel(spec: FeatureMapSpec, X_query, X_train) -> np.ndarray:
    """Kernel rows for many query points, shape ``(n_query, n_train)``."""
    Q = _as_samples(spec, X_query)
    T = _as_samples(spec, X_train)
    return fidelity_from_states(encode_batch(spec, Q), encode_batch(spec, T))
