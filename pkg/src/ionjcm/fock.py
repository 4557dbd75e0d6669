"""Truncated bosonic Hilbert-space primitives.

Ladder and number operators, displacement matrices in closed form,
displaced number states, and a dense Hermitian eigendecomposition.
All operators are built at the padded size ``dim + buffer``; quantitative
claims (unitarity, norms) hold on the interior levels ``0..dim-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergence, TruncationTooSmall

#: relative Frobenius tolerance for accepting a matrix as Hermitian
HERMITICITY_RTOL = 1e-12

#: displaced number states must retain this much norm inside the truncation
DISPLACED_NORM_TOL = 1e-10


def default_buffer(dim: int) -> int:
    """Default construction buffer: a quarter of the working size, at least 20."""
    return max(20, -(-dim // 4))


@dataclass(frozen=True)
class FockBasis:
    """Truncated Fock space: ``dim`` working levels plus ``buffer`` spare ones.

    The buffer absorbs truncation damage from displacement operators; every
    comparison in this package restricts to the interior projector onto
    levels ``0..dim-1``.
    """

    dim: int
    buffer: int = field(default=-1)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        if self.buffer < 0:
            object.__setattr__(self, "buffer", default_buffer(self.dim))

    @property
    def size(self) -> int:
        """Full construction size dim + buffer."""
        return self.dim + self.buffer


def basis_for_displacement(abs_alpha: float, min_dim: int = 2) -> FockBasis:
    """Smallest basis (with default buffer) that admits ``displacement(alpha)``.

    Grows ``dim`` until |alpha|^2 + 3|alpha|*sqrt(size) < size holds with a
    2% safety margin on |alpha|.
    """
    a = 1.02 * abs(abs_alpha)
    dim = max(2, int(min_dim))
    while True:
        s = dim + default_buffer(dim)
        if a * a + 3.0 * a * math.sqrt(s) < s:
            return FockBasis(dim)
        dim += 4


@dataclass(frozen=True)
class BosonOperator:
    """Dense complex operator on a truncated Fock space."""

    matrix: np.ndarray
    basis: FockBasis

    def __post_init__(self):
        s = self.basis.size
        if self.matrix.shape != (s, s):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match basis size {s}"
            )

    def dagger(self) -> "BosonOperator":
        return BosonOperator(self.matrix.conj().T.copy(), self.basis)


@dataclass(frozen=True)
class DisplacedNumberState:
    """Coefficients of D(alpha)|k> in the bare number basis."""

    alpha: complex
    k: int
    coeffs: np.ndarray


def annihilation(basis: FockBasis) -> BosonOperator:
    """Ladder operator a with <n-1|a|n> = sqrt(n)."""
    s = basis.size
    return BosonOperator(np.diag(np.sqrt(np.arange(1.0, s)), 1).astype(complex), basis)


def number(basis: FockBasis) -> BosonOperator:
    """Number operator, diagonal 0..size-1."""
    return BosonOperator(np.diag(np.arange(basis.size, dtype=float)).astype(complex), basis)


def _check_displacement_fits(alpha: complex, basis: FockBasis) -> None:
    a = abs(alpha)
    s = basis.size
    if a * a + 3.0 * a * math.sqrt(s) >= s:
        raise TruncationTooSmall(
            f"displacement(|alpha|={a:.4g}) needs more than {s} Fock levels; "
            f"require |alpha|^2 + 3|alpha|*sqrt(size) < size"
        )


def displacement(alpha: complex, basis: FockBasis) -> BosonOperator:
    """Displacement matrix <m|exp(alpha a+ - alpha* a)|n> in closed form.

    Each element is sqrt(n!/m!) alpha^(m-n) e^(-|alpha|^2/2) L_n^(m-n)(|alpha|^2)
    for m >= n, evaluated by a scaled Laguerre recurrence that keeps every
    intermediate O(1) (no factorial overflow, no large/small cancellation).
    Elements are exact per entry regardless of truncation.  Interior unitarity
    additionally needs the buffer to exceed the displaced spread
    2|alpha|*sqrt(size) + |alpha|^2 at the interior edge; interior claims on
    the low levels only need the size precondition checked here.
    """
    _check_displacement_fits(alpha, basis)
    s = basis.size
    alpha = complex(alpha)
    if alpha == 0:
        return BosonOperator(np.eye(s, dtype=complex), basis)

    x = abs(alpha) ** 2
    log_abs = math.log(abs(alpha))
    theta = math.atan2(alpha.imag, alpha.real)
    mat = np.zeros((s, s), dtype=complex)
    for k in range(s):
        # f[n] = sqrt(n!/(n+k)!) |alpha|^k e^{-x/2} L_n^{(k)}(x) along diagonal offset k
        nmax = s - k
        f = np.empty(nmax)
        f[0] = math.exp(k * log_abs - 0.5 * math.lgamma(k + 1) - 0.5 * x)
        if nmax > 1:
            f[1] = (k + 1 - x) * f[0] / math.sqrt(k + 1.0)
        for n in range(1, nmax - 1):
            f[n + 1] = (
                (2 * n + k + 1 - x) * f[n] - math.sqrt(n * (n + k)) * f[n - 1]
            ) / math.sqrt((n + 1) * (n + k + 1))
        rows = np.arange(k, s)
        cols = np.arange(0, nmax)
        mat[rows, cols] = np.exp(1j * k * theta) * f
        if k > 0:
            # m < n from D(alpha)^+ = D(-alpha): conjugate diagonal with (-1)^k phase
            mat[cols, rows] = (-1) ** k * np.exp(-1j * k * theta) * f
    return BosonOperator(mat, basis)


def displaced_number_state(alpha: complex, k: int, basis: FockBasis) -> DisplacedNumberState:
    """State D(alpha)|k> as a coefficient vector of length basis.size."""
    if not 0 <= k < basis.dim:
        raise ValueError(f"Fock index k={k} must satisfy 0 <= k < dim={basis.dim}")
    coeffs = displacement(alpha, basis).matrix[:, k].copy()
    nrm = float(np.linalg.norm(coeffs))
    if nrm < 1.0 - DISPLACED_NORM_TOL:
        raise TruncationTooSmall(
            f"displaced state |alpha={alpha}; k={k}> lost norm {1.0 - nrm:.3e} "
            f"to truncation at size {basis.size}"
        )
    return DisplacedNumberState(complex(alpha), k, coeffs)


def hermitian_eigendecomposition(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending, real) and orthonormal eigenvectors of a Hermitian matrix.

    The input must be Hermitian to within ``HERMITICITY_RTOL`` of its norm.
    Eigenvalues are returned as a real vector; columns of the second output
    are the matching eigenvectors.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = np.linalg.norm(m)
    if scale > 0 and np.linalg.norm(m - m.conj().T) > HERMITICITY_RTOL * scale:
        raise ValueError("matrix is not Hermitian within 1e-12 of its norm")
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"Hermitian eigensolver did not converge: {exc}") from exc
    return w, v
