"""Exact eigenstates from the finite-expansion ansatz.

For energies E = (m+1)*nu + s*delta/2 (s = +1 or -1 by branch) the
eigenvalue problem closes on m+1 displaced-number coefficients d_0..d_m
that must lie in the kernel of a Hermitian tridiagonal matrix M.  A
nontrivial kernel exists only where det M = 0: a polynomial of degree m+1
in eta^2 (equally in Omega^2 or delta), so fixing two parameters leaves up
to m+1 exact-solution points in the third.

Index convention: row n of M (acting on d_n) carries diagonal eps_{m-n},
super-diagonal -i*eta*sqrt(n+1) and sub-diagonal +i*eta*sqrt(n); note the
reversed diagonal indexing.  The off-diagonal product is +eta^2*n, so the
determinant is real and is evaluated by the continuant recurrence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyRange, KernelNotFound, NotAtRoot, OmegaZero, TruncationTooSmall
from .fock import FockBasis, displacement, hermitian_eigendecomposition
from .model import IonParams, build_h_ion

#: |det M| below this multiple of the continuant magnitude counts as "at a root"
ROOT_DET_TOL = 1e-8

#: relative bisection tolerance for refined roots
BISECTION_RTOL = 1e-12

#: forward-recursion kernel residual acceptance (relative to ||d||)
KERNEL_RESIDUAL_TOL = 1e-8

#: |det| threshold (relative to scale) flagging a grid minimum as a double-root candidate
DOUBLE_ROOT_TOL = 1e-9


class Branch(enum.Enum):
    """The two ansatz families, related by (e <-> g, delta -> -delta, eta -> -eta)."""

    PLUS = "plus"
    MINUS = "minus"

    @property
    def sign(self) -> int:
        return 1 if self is Branch.PLUS else -1

    def energy(self, m: int, p: IonParams) -> float:
        """E_m = (m+1)*nu + s*delta/2."""
        return (m + 1) * p.nu + self.sign * p.delta / 2.0


@dataclass(frozen=True)
class ReducedParams:
    """Dimensionless combination a = (Omega/nu)^2, d = delta/nu, branch sign s."""

    a: float
    d: float
    s: int = 1

    def __post_init__(self):
        if self.a < 0:
            raise ValueError(f"a = (Omega/nu)^2 must be >= 0, got {self.a}")
        if self.s not in (1, -1):
            raise ValueError(f"s must be +1 or -1, got {self.s}")

    @classmethod
    def from_ion(cls, p: IonParams, b: Branch) -> "ReducedParams":
        return cls(a=(p.omega / p.nu) ** 2, d=p.delta / p.nu, s=b.sign)


def epsilon(j: int, p: IonParams, b: Branch) -> float:
    """Diagonal entry eps_j = (j+1 - eta^2) + s*delta/nu - Omega^2/((j+1)*nu^2).

    Finite even at Omega = 0, but the full ansatz is undefined there (the
    c_{m+1} coefficient divides by Omega^2); the coupling-free limit is
    handled by the asymptotic machinery instead.
    """
    if j < 0:
        raise ValueError(f"j must be >= 0, got {j}")
    rp = ReducedParams.from_ion(p, b)
    return _eps_reduced(j, p.eta**2, rp.a, rp.s * rp.d)


def _eps_reduced(j: int, u: float, a: float, sd: float) -> float:
    return (j + 1 - u) + sd - a / (j + 1)


def _continuant(m: int, u: float, a: float, sd: float) -> tuple[float, float]:
    """(det, scale) of the order-(m+1) tridiagonal system at eta^2 = u.

    f_{-1} = 1, f_0 = eps_m, f_n = eps_{m-n} f_{n-1} - u*n*f_{n-2}; the scale
    is the largest |f_n| seen (>= 1), used to normalize near-zero tests.
    """
    f_prev, f = 1.0, _eps_reduced(m, u, a, sd)
    scale = max(1.0, abs(f))
    for n in range(1, m + 1):
        f_prev, f = f, _eps_reduced(m - n, u, a, sd) * f - u * n * f_prev
        scale = max(scale, abs(f))
    return f, scale


def det_M(m: int, p: IonParams, b: Branch) -> float:
    """Real determinant of the compatibility matrix via the continuant recurrence."""
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    rp = ReducedParams.from_ion(p, b)
    return _continuant(m, p.eta**2, rp.a, rp.s * rp.d)[0]


def det_M_scale(m: int, p: IonParams, b: Branch) -> float:
    """Magnitude envelope of the continuant, for relative near-zero tests."""
    rp = ReducedParams.from_ion(p, b)
    return _continuant(m, p.eta**2, rp.a, rp.s * rp.d)[1]


@dataclass(frozen=True)
class ClosedFormRoots:
    """Positive real eta^2 roots from the explicit m = 0, 1 formulas."""

    values: tuple[float, ...]
    negative_discriminant: bool = False
    discarded: tuple[float, ...] = ()


def closed_form_roots(m: int, rp: ReducedParams) -> ClosedFormRoots:
    """Explicit eta^2 roots: m=0 gives 1 - a + s*d; m=1 a quadratic pair.

    Complex-pair roots are reported through ``negative_discriminant``;
    non-positive real roots land in ``discarded``.
    """
    if m == 0:
        candidates = [1.0 - rp.a + rp.s * rp.d]
        neg = False
    elif m == 1:
        disc = rp.a**2 / 16.0 - rp.a / 2.0 + 2.0 + rp.s * rp.d
        if disc < 0:
            return ClosedFormRoots((), negative_discriminant=True)
        r = math.sqrt(disc)
        base = 2.0 + rp.s * rp.d - 0.75 * rp.a
        candidates = [base - r, base + r]
        neg = False
    else:
        raise ValueError(f"closed forms are available for m in (0, 1), got m={m}")
    kept = tuple(c for c in candidates if c > 0)
    discarded = tuple(c for c in candidates if c <= 0)
    return ClosedFormRoots(kept, negative_discriminant=neg, discarded=discarded)


@dataclass(frozen=True)
class RootRecord:
    value: float
    det_residual: float
    closed_form_match: bool | None = None


@dataclass(frozen=True)
class RootSearch:
    """Bracketed roots plus near-zero minima that did not change sign."""

    roots: tuple[RootRecord, ...]
    double_root_candidates: tuple[float, ...] = ()


def _det_fn(m: int, solve_for: str, fixed: IonParams, b: Branch):
    """det M as a function of one scalar: eta2, omega2 (absolute Omega^2) or delta."""
    s = b.sign
    nu2 = fixed.nu**2
    if solve_for == "eta2":
        a = (fixed.omega / fixed.nu) ** 2
        sd = s * fixed.delta / fixed.nu
        return lambda u: _continuant(m, u, a, sd)
    if solve_for == "omega2":
        u = fixed.eta**2
        sd = s * fixed.delta / fixed.nu
        return lambda w: _continuant(m, u, w / nu2, sd)
    if solve_for == "delta":
        u = fixed.eta**2
        a = (fixed.omega / fixed.nu) ** 2
        return lambda dl: _continuant(m, u, a, s * dl / fixed.nu)
    raise ValueError(f"solve_for must be eta2, omega2 or delta, got {solve_for!r}")


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min_abs(f, lo: float, hi: float) -> tuple[float, float]:
    """Golden-section minimum of |f| on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = abs(f(c)[0]), abs(f(d)[0])
    while b - a > 1e-13 * max(1.0, abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = abs(f(c)[0])
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = abs(f(d)[0])
    x = 0.5 * (a + b)
    return x, abs(f(x)[0])


def _bisect(f, lo: float, hi: float) -> float:
    flo = f(lo)[0]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= BISECTION_RTOL * max(1.0, abs(mid)):
            break
        fm = f(mid)[0]
        if fm == 0.0:
            return mid
        if (flo < 0) != (fm < 0):
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def find_roots(
    m: int,
    b: Branch,
    solve_for: str,
    lo: float,
    hi: float,
    fixed: IonParams,
    grid_points: int = 512,
) -> RootSearch:
    """All sign-change roots of det M in [lo, hi], bisected to 1e-12 relative.

    Grid local minima of |det| below 1e-9 of the continuant scale without a
    sign change are re-examined on an 8x finer local grid and reported as
    double-root candidates.  For m <= 1 with solve_for='eta2' every root is
    cross-checked against the closed forms.
    """
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise EmptyRange(f"invalid search range [{lo}, {hi}]")
    if grid_points < 64:
        raise ValueError(f"grid_points must be >= 64, got {grid_points}")

    f = _det_fn(m, solve_for, fixed, b)
    xs = np.linspace(lo, hi, grid_points)
    vals = np.array([f(x)[0] for x in xs])
    scales = np.array([f(x)[1] for x in xs])

    roots = [float(xs[i]) for i in range(grid_points) if vals[i] == 0.0]
    for i in range(grid_points - 1):
        if vals[i] * vals[i + 1] < 0:
            roots.append(_bisect(f, float(xs[i]), float(xs[i + 1])))

    # grid minima of |det| without a sign change: refine and keep the ones that
    # actually reach the near-zero threshold (candidate double roots); a grid
    # pass alone cannot resolve a quadratic minimum to 1e-9 of scale
    candidates: list[float] = []
    cell = (hi - lo) / (grid_points - 1)
    absv = np.abs(vals)
    for i in range(1, grid_points - 1):
        if absv[i] <= absv[i - 1] and absv[i] < absv[i + 1]:
            if any(abs(float(xs[i]) - r) < 2 * cell for r in roots):
                continue  # already captured as a bracketed root
            x_min, f_min = _golden_min_abs(f, float(xs[i - 1]), float(xs[i + 1]))
            if abs(f_min) < DOUBLE_ROOT_TOL * f(x_min)[1]:
                candidates.append(x_min)

    closed: ClosedFormRoots | None = None
    if m <= 1 and solve_for == "eta2":
        closed = closed_form_roots(m, ReducedParams.from_ion(fixed, b))

    records = []
    for r in sorted(set(roots)):
        match = None
        if closed is not None:
            match = any(abs(r - c) <= 1e-10 * max(1.0, abs(c)) for c in closed.values)
        d, sc = f(r)
        records.append(RootRecord(value=r, det_residual=abs(d) / sc, closed_form_match=match))
    return RootSearch(roots=tuple(records), double_root_candidates=tuple(candidates))


@dataclass(frozen=True)
class TridiagonalSystem:
    """The order-(m+1) compatibility system for one branch at one parameter point."""

    m: int
    eps: tuple[float, ...]
    eta: float
    branch: Branch

    @classmethod
    def from_ion(cls, m: int, p: IonParams, b: Branch) -> "TridiagonalSystem":
        return cls(m=m, eps=tuple(epsilon(j, p, b) for j in range(m + 1)), eta=p.eta, branch=b)

    def matrix(self) -> np.ndarray:
        """Hermitian matrix; row n has diagonal eps_{m-n} and off-diagonals -+ i*eta_eff*sqrt.

        The minus branch uses eta_eff = -eta (the symmetry that generates it
        flips the sign of eta, conjugating the off-diagonals).
        """
        n = self.m + 1
        eta_eff = self.branch.sign * self.eta
        mat = np.zeros((n, n), dtype=complex)
        for row in range(n):
            mat[row, row] = self.eps[self.m - row]
            if row + 1 < n:
                mat[row, row + 1] = -1j * eta_eff * math.sqrt(row + 1)
                mat[row + 1, row] = 1j * eta_eff * math.sqrt(row + 1)
        return mat


def null_vector(m: int, p: IonParams, b: Branch) -> np.ndarray:
    """Unit kernel vector (d_0..d_m) of the compatibility matrix, phase d_0 > 0.

    Solved by the forward recursion
    d_{n+1} = (eps_{m-n} d_n + i*eta_eff*sqrt(n) d_{n-1}) / (i*eta_eff*sqrt(n+1)),
    carried in the real parametrization d_n = (i*sign)^n e_n.  If the last-row
    residual exceeds tolerance, falls back to the smallest-eigenvalue
    eigenvector of the Hermitian matrix itself.
    """
    det, scale = (
        det_M(m, p, b),
        det_M_scale(m, p, b),
    )
    if abs(det) >= ROOT_DET_TOL * scale:
        raise NotAtRoot(
            f"|det M| = {abs(det):.3e} exceeds {ROOT_DET_TOL:.0e} * scale ({scale:.3e}) "
            f"for m={m}, branch={b.value}, eta^2={p.eta**2:.9g}"
        )
    if m == 0:
        return np.array([1.0 + 0.0j])
    eta_eff = b.sign * p.eta
    eps = [epsilon(j, p, b) for j in range(m + 1)]
    phase = 1j * math.copysign(1.0, eta_eff) if eta_eff != 0 else 1.0

    if eta_eff != 0:
        ae = abs(eta_eff)
        e = np.zeros(m + 1)
        e[0] = 1.0
        # real three-term recurrence: e_{n+1} = -(eps_{m-n} e_n + |eta| sqrt(n) e_{n-1}) / (|eta| sqrt(n+1))
        for n in range(m):
            prev = e[n - 1] if n >= 1 else 0.0
            e[n + 1] = -(eps[m - n] * e[n] + ae * math.sqrt(n) * prev) / (ae * math.sqrt(n + 1))
        residual = abs(eps[0] * e[m] + ae * math.sqrt(m) * e[m - 1])
        d = (phase ** np.arange(m + 1)) * e
        if residual < KERNEL_RESIDUAL_TOL * np.linalg.norm(d):
            d = d / np.linalg.norm(d)
            if d[0].real < 0:
                d = -d
            return d

    # fallback: smallest-|eigenvalue| eigenvector of the Hermitian system
    mat = TridiagonalSystem.from_ion(m, p, b).matrix()
    w, v = hermitian_eigendecomposition(mat)
    k = int(np.argmin(np.abs(w)))
    if abs(w[k]) >= KERNEL_RESIDUAL_TOL * max(1.0, float(np.max(np.abs(w)))):
        raise KernelNotFound(
            f"no near-null eigenvector: min |eigenvalue| = {abs(w[k]):.3e} for m={m}"
        )
    d = v[:, k]
    lead = d[np.argmax(np.abs(d))]
    d = d * (abs(lead) / lead)
    if abs(d[0]) > 0:
        d = d * (abs(d[0]) / d[0])
    return d


@dataclass(frozen=True)
class AnsatzSolution:
    """One exact eigenstate: branch, order, coefficients and diagnostics.

    Coefficients are stored in the d_0 = 1 gauge; c_n = d_n/(m+1-n) for
    n <= m and c_{m+1} = s*(i*eta*nu^2/Omega^2)*sqrt(m+1)*d_m, where the
    branch sign s enters through eta -> -eta in the minus family.  The
    residual is ||(H - E)psi|| / (nu*||psi||) against the full Hamiltonian.
    """

    branch: Branch
    m: int
    params: IonParams
    d: np.ndarray
    c: np.ndarray
    energy: float
    residual: float


def _coefficients(m: int, p: IonParams, b: Branch) -> tuple[np.ndarray, np.ndarray]:
    if p.omega == 0:
        raise OmegaZero("the ansatz coefficient c_{m+1} divides by Omega^2")
    if p.eta == 0:
        raise NotAtRoot("the finite expansion needs eta != 0 (c_{m+1} would vanish)")
    d = null_vector(m, p, b)
    d = d / d[0]  # d_0 = 1 gauge
    d[0] = 1.0
    eta_eff = b.sign * p.eta
    c = np.zeros(m + 2, dtype=complex)
    for n in range(m + 1):
        c[n] = d[n] / (m + 1 - n)
    c[m + 1] = 1j * eta_eff * p.nu**2 / p.omega**2 * math.sqrt(m + 1) * d[m]
    return d, c


def build_ion_eigenstate(
    m: int, b: Branch, p: IonParams, basis: FockBasis
) -> tuple[AnsatzSolution, np.ndarray]:
    """Assemble the exact eigenstate on spin x Fock and verify its residual.

    Plus branch: |psi> = |g> sum_n d_n D(-i eta)|n> + (Omega/nu)|e> sum_n c_n |n>.
    Minus branch: the same construction with e <-> g, delta -> -delta,
    eta -> -eta, so the displaced components live on D(+i eta)|n> in the e block.
    Returns the solution record and the normalized state vector.
    """
    d, c = _coefficients(m, p, b)
    s = basis.size
    if m + 2 > basis.dim:
        raise TruncationTooSmall(f"need dim > m+1 = {m + 1}, got dim = {basis.dim}")
    disp = displacement(-1j * b.sign * p.eta, basis).matrix  # D(-i eta) resp. D(+i eta)
    displaced_part = disp[:, : m + 1] @ d
    bare_part = np.zeros(s, dtype=complex)
    bare_part[: m + 2] = (p.omega / p.nu) * c

    psi = np.zeros(2 * s, dtype=complex)
    if b is Branch.PLUS:
        psi[:s] = bare_part
        psi[s:] = displaced_part
    else:
        psi[:s] = displaced_part
        psi[s:] = bare_part
    psi = psi / np.linalg.norm(psi)

    energy = b.energy(m, p)
    h = build_h_ion(p, basis).matrix
    residual = float(np.linalg.norm(h @ psi - energy * psi) / p.nu)
    sol = AnsatzSolution(
        branch=b, m=m, params=p, d=d, c=c, energy=energy, residual=residual
    )
    return sol, psi


def map_to_jcm(sol: AnsatzSolution, basis: FockBasis) -> np.ndarray:
    """The same eigenstate in the Jaynes-Cummings picture, built from coefficients.

    Plus branch: sum_n (d_n |+> - (Omega/nu) c_n |->) x D(-i eta/2)|n>;
    minus branch: sum_n ((Omega/nu) c_n |+> - d_n |->) x D(+i eta/2)|n>,
    with |+-> = (|g> +- |e>)/sqrt(2).  Agrees with T applied to the ion-picture
    state up to global phase.
    """
    p = sol.params
    m = sol.m
    s = basis.size
    disp = displacement(-0.5j * sol.branch.sign * p.eta, basis).matrix[:, : m + 2]
    dfull = np.zeros(m + 2, dtype=complex)
    dfull[: m + 1] = sol.d
    if sol.branch is Branch.PLUS:
        plus_c, minus_c = dfull, -(p.omega / p.nu) * sol.c
    else:
        plus_c, minus_c = (p.omega / p.nu) * sol.c, -dfull
    fock_plus = disp @ plus_c
    fock_minus = disp @ minus_c

    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    psi = np.zeros(2 * s, dtype=complex)
    psi[:s] = inv_sqrt2 * (fock_plus - fock_minus)  # e components
    psi[s:] = inv_sqrt2 * (fock_plus + fock_minus)  # g components
    return psi / np.linalg.norm(psi)


@dataclass(frozen=True)
class PartnerEntry:
    m: int
    k: int
    eta2_root: float
    partner_det: float
    partner_scale: float
    ratio: float
    vanishes: bool


@dataclass(frozen=True)
class PartnerReport:
    entries: tuple[PartnerEntry, ...]
    all_vanish: bool


def degeneracy_partner_check(
    m: int,
    k: int,
    p: IonParams,
    eta2_max: float = 16.0,
    tol: float = ROOT_DET_TOL,
) -> PartnerReport:
    """At delta = k*nu, every plus-branch root of order m should also zero det M
    of the minus branch at order m+k (the two families become degenerate there).

    Evaluates |det M_{m+k}^-| / scale at each plus root and reports the ratios;
    with non-integer delta/nu the ratios stay far from zero (negative control).
    """
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    search = find_roots(m, Branch.PLUS, "eta2", 1e-9, eta2_max, p, grid_points=1024)
    entries = []
    for rec in search.roots:
        q = p.replace(eta=math.sqrt(rec.value))
        det = det_M(m + k, q, Branch.MINUS)
        scale = det_M_scale(m + k, q, Branch.MINUS)
        ratio = abs(det) / scale
        entries.append(
            PartnerEntry(
                m=m,
                k=k,
                eta2_root=rec.value,
                partner_det=det,
                partner_scale=scale,
                ratio=ratio,
                vanishes=ratio < tol,
            )
        )
    return PartnerReport(entries=tuple(entries), all_vanish=all(e.vanishes for e in entries))
