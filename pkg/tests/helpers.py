"""Shared test oracles, independent of the library's own computation paths."""

import numpy as np
from scipy.linalg import expm


def series_displacement(alpha: complex, size: int) -> np.ndarray:
    """Displacement via the matrix exponential of alpha a+ - alpha* a.

    scipy's expm (scaling-and-squaring) of the truncated generator; converged
    on interior levels well below the truncation edge.  Used as the oracle
    for the closed-form displacement matrix.
    """
    a = np.diag(np.sqrt(np.arange(1.0, size)), 1).astype(complex)
    return expm(alpha * a.conj().T - np.conjugate(alpha) * a)


def random_hermitian(rng: np.random.RandomState, n: int) -> np.ndarray:
    m = rng.randn(n, n) + 1j * rng.randn(n, n)
    return 0.5 * (m + m.conj().T)


def random_unitary(rng: np.random.RandomState, n: int) -> np.ndarray:
    m = rng.randn(n, n) + 1j * rng.randn(n, n)
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))
