"""Hamiltonians of the driven two-level ion and their unitary equivalence.

Builds the laser-ion Hamiltonian

    H_ion = nu*n + (delta/2)*sigma_z + Omega*(sigma_+ D(i eta) + sigma_- D(i eta)^+),

the unitarily equivalent driven Jaynes-Cummings form, and the entangling
transform T connecting the two pictures. Spin blocks are ordered [e; g],
so the top-left block of a 2x2 operator matrix acts on |e> x Fock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .fock import FockBasis, annihilation, displacement, number


@dataclass(frozen=True)
class IonParams:
    """Physical parameters: trap frequency, detuning, Rabi coupling, Lamb-Dicke.

    Energies are in units with hbar = 1; the conventional choice is nu = 1 so
    that spectra read directly in units of the trap frequency.
    """

    nu: float = 1.0
    delta: float = 0.0
    omega: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.nu) and self.nu > 0):
            raise ValueError(f"nu must be positive and finite, got {self.nu}")
        if not (math.isfinite(self.omega) and self.omega >= 0):
            raise ValueError(f"omega must be non-negative and finite, got {self.omega}")
        if not (math.isfinite(self.delta) and math.isfinite(self.eta)):
            raise ValueError("delta and eta must be finite")

    def replace(self, **kw) -> "IonParams":
        d = {"nu": self.nu, "delta": self.delta, "omega": self.omega, "eta": self.eta}
        d.update(kw)
        return IonParams(**d)


@dataclass(frozen=True)
class JcmParams:
    """Parameter dictionary of the driven Jaynes-Cummings picture.

    omega_field = nu, omega0 = 2*Omega, coupling lam = eta*nu/2, the static
    drive coefficient is delta/2 and the constant shift nu*eta^2/4.
    """

    omega_field: float
    omega0: float
    lam: float
    static_drive: float
    energy_shift: float

    @classmethod
    def from_ion(cls, p: IonParams) -> "JcmParams":
        return cls(
            omega_field=p.nu,
            omega0=2.0 * p.omega,
            lam=p.eta * p.nu / 2.0,
            static_drive=p.delta / 2.0,
            energy_shift=p.nu * p.eta**2 / 4.0,
        )

    def to_ion(self) -> IonParams:
        return IonParams(
            nu=self.omega_field,
            delta=2.0 * self.static_drive,
            omega=self.omega0 / 2.0,
            eta=2.0 * self.lam / self.omega_field,
        )


@dataclass(frozen=True)
class SpinFockOperator:
    """Dense operator on (two-level) x (truncated Fock), block layout [e; g]."""

    matrix: np.ndarray
    basis: FockBasis

    def __post_init__(self):
        n = 2 * self.basis.size
        if self.matrix.shape != (n, n):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match 2*(dim+buffer) = {n}"
            )

    @property
    def ee(self) -> np.ndarray:
        s = self.basis.size
        return self.matrix[:s, :s]

    @property
    def eg(self) -> np.ndarray:
        s = self.basis.size
        return self.matrix[:s, s:]

    @property
    def ge(self) -> np.ndarray:
        s = self.basis.size
        return self.matrix[s:, :s]

    @property
    def gg(self) -> np.ndarray:
        s = self.basis.size
        return self.matrix[s:, s:]

    def dagger(self) -> "SpinFockOperator":
        return SpinFockOperator(self.matrix.conj().T.copy(), self.basis)


def from_blocks(ee, eg, ge, gg, basis: FockBasis) -> SpinFockOperator:
    s = basis.size
    m = np.zeros((2 * s, 2 * s), dtype=complex)
    m[:s, :s] = ee
    m[:s, s:] = eg
    m[s:, :s] = ge
    m[s:, s:] = gg
    return SpinFockOperator(m, basis)


def interior_indices(basis: FockBasis) -> np.ndarray:
    """Row/column indices of the spin x (interior Fock) subspace."""
    n, s = basis.dim, basis.size
    return np.concatenate([np.arange(n), s + np.arange(n)])


def build_h_ion(p: IonParams, basis: FockBasis) -> SpinFockOperator:
    """Laser-ion Hamiltonian in the [e; g] block form.

    Blocks: [[nu*n + delta/2, Omega*D(i eta)], [Omega*D(i eta)^+, nu*n - delta/2]].
    """
    s = basis.size
    nmat = p.nu * number(basis).matrix
    d = displacement(1j * p.eta, basis).matrix
    half = 0.5 * p.delta * np.eye(s)
    return from_blocks(nmat + half, p.omega * d, p.omega * d.conj().T, nmat - half, basis)


def build_h_jcm_driven(p: IonParams, basis: FockBasis) -> SpinFockOperator:
    """Jaynes-Cummings Hamiltonian with counter-rotating terms and a static drive.

    nu*n + Omega*sigma_z + i(eta*nu/2)(sigma_+ + sigma_-)(a - a^+)
    - (delta/2)(sigma_+ + sigma_-) + nu*eta^2/4.

    The drive enters with -delta/2: this is the sign forced by conjugating
    build_h_ion with build_T, so the two pictures agree exactly.
    """
    s = basis.size
    a = annihilation(basis).matrix
    nmat = p.nu * number(basis).matrix
    shift = (p.nu * p.eta**2 / 4.0) * np.eye(s)
    off = 0.5j * p.eta * p.nu * (a - a.conj().T) - 0.5 * p.delta * np.eye(s)
    ee = nmat + p.omega * np.eye(s) + shift
    gg = nmat - p.omega * np.eye(s) + shift
    return from_blocks(ee, off, off.conj().T, gg, basis)


def build_T(p: IonParams, basis: FockBasis) -> SpinFockOperator:
    """Entangling transform T = (1/sqrt2) [[D(b)^+, D(b)], [-D(b)^+, D(b)]], b = i eta/2.

    T (H_ion) T^+ equals the driven Jaynes-Cummings Hamiltonian; T is unitary
    on the interior.
    """
    db = displacement(0.5j * p.eta, basis).matrix
    dbd = db.conj().T
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    return from_blocks(
        inv_sqrt2 * dbd, inv_sqrt2 * db, -inv_sqrt2 * dbd, inv_sqrt2 * db, basis
    )


def conjugate(h: SpinFockOperator, t: SpinFockOperator) -> SpinFockOperator:
    """T H T^+ on matching bases."""
    if h.basis != t.basis or h.matrix.shape != t.matrix.shape:
        raise DimensionMismatch(
            f"operands have different sizes: {h.matrix.shape} vs {t.matrix.shape}"
        )
    return SpinFockOperator(t.matrix @ h.matrix @ t.matrix.conj().T, h.basis)


def interior_norm_diff(a: SpinFockOperator, b: SpinFockOperator) -> float:
    """Frobenius norm of (a - b) on the interior, relative to the interior norm of a."""
    if a.basis != b.basis:
        raise DimensionMismatch(f"bases differ: {a.basis} vs {b.basis}")
    idx = interior_indices(a.basis)
    sub_a = a.matrix[np.ix_(idx, idx)]
    sub_d = sub_a - b.matrix[np.ix_(idx, idx)]
    return float(np.linalg.norm(sub_d) / np.linalg.norm(sub_a))
