"""Conversions between the external {0, 1} labels and internal {-1, +1} targets."""

import numpy as np

from .errors import DataError


def to_signed(y) -> np.ndarray:
    """Map labels in {0, 1} to {-1, +1}. Labels already in {-1, +1} pass through."""
    y = np.asarray(y)
    vals = set(np.unique(y).tolist())
    if vals <= {-1, 1}:
        return y.astype(float)
    if vals <= {0, 1}:
        return np.where(y == 1, 1.0, -1.0)
    raise DataError(f"labels must be binary, got values {sorted(vals)}")


def to_binary(y) -> np.ndarray:
    """Map signed labels (or scores' signs) to {0, 1}; zero counts as positive."""
    return (np.asarray(y) >= 0).astype(int)


def sign(v):
    """Sign with ``sign(0) = +1``."""
    return np.where(np.asarray(v) >= 0, 1, -1)


def require_both_classes(y, what: str = "labels") -> None:
    if np.unique(np.asarray(y)).size < 2:
        raise DataError(f"{what} contain a single class; both classes are required")
