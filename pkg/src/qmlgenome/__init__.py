"""Quantum kernel and variational classifiers on an exact statevector simulator."""

__version__ = "0.1.0"
