"""Independent reference computations used by the tests.

Nothing here calls into the package's simulator or solvers: gates are built from
Pauli generators with ``scipy.linalg.expm`` and embedded with Kronecker products,
the SVM dual is solved by projected gradient ascent, and AUROC is counted pair by
pair.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.linalg import expm

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = (X + Z) / math.sqrt(2)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def embed(ops: dict[int, np.ndarray], n: int) -> np.ndarray:
    """Kronecker product with qubit 0 as the rightmost (least significant) factor."""
    out = np.eye(1, dtype=complex)
    for q in reversed(range(n)):
        out = np.kron(out, ops.get(q, I2))
    return out


def gate_unitary(kind: str, targets, angle, n: int) -> np.ndarray:
    t = list(targets)
    if kind in ("H", "X", "Y", "Z"):
        return embed({t[0]: {"H": H, "X": X, "Y": Y, "Z": Z}[kind]}, n)
    if kind in ("RX", "RY", "RZ"):
        gen = {"RX": X, "RY": Y, "RZ": Z}[kind]
        return embed({t[0]: expm(-0.5j * angle * gen)}, n)
    if kind == "P":
        return embed({t[0]: expm(0.5j * angle * (I2 - Z))}, n)
    if kind == "CNOT":
        return embed({t[0]: P0}, n) + embed({t[0]: P1, t[1]: X}, n)
    if kind == "CZ":
        return embed({t[0]: P0}, n) + embed({t[0]: P1, t[1]: Z}, n)
    if kind == "RZZ":
        return expm(-0.5j * angle * embed({t[0]: Z, t[1]: Z}, n))
    raise ValueError(kind)


def circuit_unitary(circuit) -> np.ndarray:
    n = circuit.n_qubits
    U = np.eye(2**n, dtype=complex)
    for g in circuit.gates:
        U = gate_unitary(g.kind, g.targets, g.angle, n) @ U
    return U


def feature_state(kind: str, n: int, reps: int, entanglement: str, x, strings=None) -> np.ndarray:
    """|psi(x)> = prod_reps [ prod_S exp(-i phi_S P_S) H^n ] |0>, P_S a Pauli product."""
    strings = strings or {"Z": ["Z"], "ZZ": ["Z", "ZZ"], "Pauli": ["Z", "ZZ"]}[kind]
    x = np.asarray(x, dtype=float)
    Hn = embed({q: H for q in range(n)}, n)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    for _ in range(reps):
        psi = Hn @ psi
        for s in strings:
            k = len(s)
            if k == 1:
                subsets = [(q,) for q in range(n)]
            elif entanglement == "full":
                subsets = list(itertools.combinations(range(n), k))
            else:
                subsets = [tuple(range(q, q + k)) for q in range(n - k + 1)]
            for sub in subsets:
                phi = x[sub[0]] if k == 1 else np.prod([math.pi - x[q] for q in sub])
                gen = embed({q: PAULI[p] for p, q in zip(s, sub)}, n)
                psi = expm(-1j * phi * gen) @ psi
    return psi


def project_box_hyperplane(v, y, C):
    """Euclidean projection onto {0 <= a <= C, y.a = 0}.

    g(mu) = y . clip(v - mu y, 0, C) is piecewise linear and non-increasing, so the
    root lies between two adjacent breakpoints and is found by linear interpolation.
    """
    v, y = np.asarray(v, dtype=float), np.asarray(y, dtype=float)
    mus = np.unique(np.concatenate([v / y, (v - C) / y]))
    g = np.clip(v[None, :] - mus[:, None] * y[None, :], 0.0, C) @ y
    if g[0] <= 0:
        mu = mus[0]
    elif g[-1] >= 0:
        mu = mus[-1]
    else:
        k = int(np.flatnonzero(g > 0)[-1])
        m0, m1, g0, g1 = mus[k], mus[k + 1], g[k], g[k + 1]
        mu = m0 + g0 * (m1 - m0) / (g0 - g1)
    return np.clip(v - mu * y, 0.0, C)


def svm_dual_projected_gradient(K, y, C, iters=50000, tol=1e-13):
    """Maximize sum a - 1/2 a^T Q a over the dual feasible set (accelerated projected gradient).

    Stops once the projected-gradient fixed-point residual falls below ``tol``.
    """
    Q = np.outer(y, y) * K
    L = max(np.linalg.eigvalsh(Q)[-1], 1e-12)
    a = np.zeros(len(y))
    z = a.copy()
    t = 1.0
    for _ in range(iters):
        a_next = project_box_hyperplane(z + (1.0 - Q @ z) / L, y, C)
        t_next = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        z = a_next + ((t - 1) / t_next) * (a_next - a)
        a, t = a_next, t_next
        if np.abs(a - project_box_hyperplane(a + (1.0 - Q @ a) / L, y, C)).max() < tol:
            break
    return a, float(a.sum() - 0.5 * a @ Q @ a)


def auroc_pairwise(labels, scores) -> float:
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def central_difference(f, theta, h=1e-5) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    g = np.zeros_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = h
        g[k] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


def naive_pegasos(K, y, lam, draws):
    """Textbook kernel Pegasos on an explicit coefficient vector (no scale folding)."""
    n = len(y)
    a = np.zeros(n)  # w = sum_j a_j y_j phi(x_j)
    norms = []
    for t, i in enumerate(draws, start=1):
        eta = 1.0 / (lam * t)
        margin = y[i] * (K[i] @ (a * y))
        a = (1 - eta * lam) * a
        if margin < 1:
            a[i] += eta
        norm = math.sqrt(max((a * y) @ K @ (a * y), 0.0))
        if norm > 1 / math.sqrt(lam):
            a *= (1 / math.sqrt(lam)) / norm
            norm = 1 / math.sqrt(lam)
        norms.append(norm)
    return a, norms


def separable_blobs(n=40, dim=4, seed=0, sigma=0.12, gap=3.0):
    """Two Gaussian blobs in [0, pi]^dim whose centres lie ``gap`` sigmas apart per axis."""
    rng = np.random.default_rng(seed)
    centre = np.full(dim, math.pi / 2)
    offset = gap * sigma
    X0 = centre - offset + sigma * rng.standard_normal((n // 2, dim))
    X1 = centre + offset + sigma * rng.standard_normal((n - n // 2, dim))
    X = np.vstack([X0, X1])
    y = np.concatenate([-np.ones(n // 2), np.ones(n - n // 2)])
    return X, y
