"""Numerical spectra over parameter scans and their structure.

Full diagonalization on a parameter grid with eigenvector-overlap level
tracking, location and classification of spectral-gap minima (crossings vs
avoided crossings), the large-eta asymptotic levels and states, the
conserved parity at delta = 0, and cross-validation of the ansatz roots
against the detected crossings.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .ansatz import Branch, find_roots
from .errors import TruncationTooSmall
from .fock import FockBasis, basis_for_displacement, displacement, hermitian_eigendecomposition
from .model import IonParams, build_h_ion, build_h_jcm_driven, interior_indices

#: refined gap below this multiple of nu classifies a minimum as a true crossing
CROSSING_GAP_TOL = 1e-6

#: parameter tolerance of the golden-section gap refinement
REFINE_X_TOL = 1e-8

#: tracked eigenvector overlaps below this are recorded as grid-quality warnings
TRACKING_OVERLAP_FLOOR = 0.7

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def thread_count() -> int:
    """Worker threads for grid scans: IONJCM_THREADS or the available parallelism."""
    env = os.environ.get("IONJCM_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"IONJCM_THREADS must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def basis_for_scan(eta_max: float, dim_floor: int = 2) -> FockBasis:
    """Basis sized for scans reaching eta_max: dim >= eta^2 + 6 eta + 40 and
    large enough for displacement(i eta)."""
    floor = max(dim_floor, math.ceil(eta_max**2 + 6.0 * abs(eta_max) + 40.0))
    return basis_for_displacement(eta_max, min_dim=floor)


@dataclass(frozen=True)
class ScanGrid:
    """Strictly increasing values of one scan parameter (eta, delta or omega)."""

    parameter: str
    values: np.ndarray

    def __post_init__(self):
        if self.parameter not in ("eta", "delta", "omega"):
            raise ValueError(f"parameter must be eta, delta or omega, got {self.parameter!r}")
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("grid needs at least 2 points")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        if not np.all(np.diff(v) > 0):
            raise ValueError("grid values must be strictly increasing")


@dataclass(frozen=True)
class SpectrumScan:
    """Sorted interior eigenvalues per grid point plus tracked level identities.

    ``levels[g, i]`` is the i-th lowest eigenvalue at grid point g;
    ``track_ids[g, t]`` gives the sorted index that track t occupies there,
    so ``levels[g, track_ids[g, t]]`` follows one continuously tracked level.
    """

    grid: ScanGrid
    fixed: IonParams
    levels: np.ndarray
    track_ids: np.ndarray
    n_levels: int
    min_overlap: float
    warnings: tuple[str, ...] = ()
    vectors: tuple[np.ndarray, ...] | None = None

    def tracked_levels(self) -> np.ndarray:
        rows = np.arange(self.levels.shape[0])[:, None]
        return self.levels[rows, self.track_ids]


@dataclass(frozen=True)
class CrossingEvent:
    """A refined local minimum of the gap between two adjacent levels."""

    location: float
    energy: float
    gap: float
    classification: str  # "crossing" | "avoided"
    line_index: int
    line_value: float
    pair: int  # lower sorted level index of the gap


@dataclass(frozen=True)
class AsymptoteSet:
    """Large-eta level set {m*nu +- delta/2}, deduplicated."""

    values: np.ndarray
    degeneracy_note: bool


def _params_at(fixed: IonParams, parameter: str, x: float) -> IonParams:
    return fixed.replace(**{parameter: float(x)})


def _lowest_levels(p: IonParams, basis: FockBasis, n_levels: int, vectors: bool):
    h = build_h_ion(p, basis).matrix
    if vectors:
        w, v = hermitian_eigendecomposition(h)
        return w[:n_levels], v[:, :n_levels]
    w = np.linalg.eigvalsh(h)
    return w[:n_levels], None


def scan_spectrum(
    fixed: IonParams,
    grid: ScanGrid,
    n_levels: int,
    basis: FockBasis,
    n_jobs: int | None = None,
    store_vectors: bool = False,
) -> SpectrumScan:
    """Diagonalize at every grid point and track level identities by overlap.

    Grid points are independent work items; with ``n_jobs`` > 1 they are
    evaluated in a thread pool and merged by index, with BLAS pinned to one
    thread per call so results are bitwise independent of the pool size.
    Tracking is greedy maximal eigenvector overlap between consecutive points
    with ties broken by energy proximity; overlaps below 0.7 are reported as
    warnings (the grid is too coarse there, or the point sits on an exact
    degeneracy where the eigenbasis is arbitrary).
    """
    if n_levels < 1 or 2 * n_levels > basis.dim:
        raise ValueError(f"need 1 <= n_levels <= dim/2, got {n_levels} with dim {basis.dim}")
    jobs = thread_count() if n_jobs is None else n_jobs
    points = [_params_at(fixed, grid.parameter, x) for x in grid.values]

    with threadpool_limits(limits=1):
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(
                    pool.map(lambda p: _lowest_levels(p, basis, n_levels, True), points)
                )
        else:
            results = [_lowest_levels(p, basis, n_levels, True) for p in points]

    levels = np.array([w for w, _ in results])
    track_ids, min_overlap, low_points = track_levels(
        levels, [v for _, v in results]
    )
    warnings = [
        f"tracking overlap {ov:.3f} below {TRACKING_OVERLAP_FLOOR} at "
        f"{grid.parameter} = {grid.values[gi]:.6g}"
        for gi, ov in low_points
    ]

    return SpectrumScan(
        grid=grid,
        fixed=fixed,
        levels=levels,
        track_ids=track_ids,
        n_levels=n_levels,
        min_overlap=min_overlap,
        warnings=tuple(warnings),
        vectors=tuple(v for _, v in results) if store_vectors else None,
    )


def track_levels(
    levels: np.ndarray, vectors: list[np.ndarray]
) -> tuple[np.ndarray, float, list[tuple[int, float]]]:
    """Follow level identities through a sequence of eigen-decompositions.

    ``levels[g]`` holds sorted eigenvalues, ``vectors[g]`` the matching
    eigenvector columns.  Returns per-point permutations ``track_ids`` (track
    t sits at sorted index ``track_ids[g, t]``), the worst matching overlap,
    and the points where it fell below the quality floor.  Running this over
    the reversed sequence composes back to the identity.
    """
    g, n_levels = levels.shape
    track_ids = np.zeros((g, n_levels), dtype=int)
    track_ids[0] = np.arange(n_levels)
    min_overlap = 1.0
    low_points: list[tuple[int, float]] = []

    prev_vecs = vectors[0][:, track_ids[0]]
    prev_energies = levels[0, track_ids[0]]
    for gi in range(1, g):
        w, v = levels[gi], vectors[gi]
        overlap = np.abs(prev_vecs.conj().T @ v)  # (track, new sorted index)
        assign = _greedy_assign(overlap, prev_energies, w)
        step_min = float(min(overlap[t, assign[t]] for t in range(n_levels)))
        if step_min < TRACKING_OVERLAP_FLOOR:
            low_points.append((gi, step_min))
        min_overlap = min(min_overlap, step_min)
        track_ids[gi] = assign
        prev_vecs = v[:, assign]
        prev_energies = w[assign]
    return track_ids, min_overlap, low_points


def _greedy_assign(overlap: np.ndarray, prev_energies: np.ndarray, new_energies: np.ndarray) -> np.ndarray:
    """Assign each track to a new sorted index, largest overlaps first."""
    n = overlap.shape[0]
    assign = np.full(n, -1, dtype=int)
    used = np.zeros(n, dtype=bool)
    work = overlap.copy()
    for _ in range(n):
        best = np.max(work)
        tracks, cols = np.nonzero(work > best - 1e-9)
        if len(tracks) > 1:  # tie-break by energy proximity
            dists = np.abs(new_energies[cols] - prev_energies[tracks])
            k = int(np.argmin(dists))
        else:
            k = 0
        t, c = int(tracks[k]), int(cols[k])
        assign[t] = c
        used[c] = True
        work[t, :] = -1.0
        work[:, c] = -1.0
    return assign


def _gap_at(fixed: IonParams, parameter: str, x: float, pair: int, basis: FockBasis):
    p = _params_at(fixed, parameter, x)
    w = np.linalg.eigvalsh(build_h_ion(p, basis).matrix)
    return float(w[pair + 1] - w[pair]), float(0.5 * (w[pair + 1] + w[pair]))


def _golden_refine(fixed, parameter, pair, basis, lo, hi):
    """Golden-section minimum of the recomputed gap on [lo, hi] to REFINE_X_TOL."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _gap_at(fixed, parameter, c, pair, basis)[0]
    fd = _gap_at(fixed, parameter, d, pair, basis)[0]
    while b - a > REFINE_X_TOL:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _gap_at(fixed, parameter, c, pair, basis)[0]
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _gap_at(fixed, parameter, d, pair, basis)[0]
    x = 0.5 * (a + b)
    gap, energy = _gap_at(fixed, parameter, x, pair, basis)
    return x, gap, energy


def detect_events(
    scan: SpectrumScan, basis: FockBasis, n_jobs: int | None = None
) -> list[CrossingEvent]:
    """Locate and classify every interior local minimum of adjacent-level gaps.

    Each grid-interior minimum of ``levels[:, i+1] - levels[:, i]`` is refined
    by golden-section search on the recomputed gap; a refined gap below
    1e-6*nu is a crossing, anything larger an avoided crossing.  Events are
    labeled with the nearest asymptote.
    """
    xs = scan.grid.values
    fixed = scan.fixed
    tasks = []
    for pair in range(scan.n_levels - 1):
        gaps = scan.levels[:, pair + 1] - scan.levels[:, pair]
        for i in range(1, len(xs) - 1):
            # strict on one side so constant gap curves yield no events
            if gaps[i] <= gaps[i - 1] and gaps[i] < gaps[i + 1]:
                tasks.append((pair, float(xs[i - 1]), float(xs[i + 1])))

    jobs = thread_count() if n_jobs is None else n_jobs

    def refine(task):
        pair, lo, hi = task
        x, gap, energy = _golden_refine(fixed, scan.grid.parameter, pair, basis, lo, hi)
        return pair, x, gap, energy

    with threadpool_limits(limits=1):
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                refined = list(pool.map(refine, tasks))
        else:
            refined = [refine(t) for t in tasks]

    events: list[CrossingEvent] = []
    seen: list[tuple[int, float]] = []
    max_e = float(np.max(scan.levels)) if scan.levels.size else 0.0
    for pair, x, gap, energy in refined:
        if any(p == pair and abs(x - x0) < 10 * REFINE_X_TOL for p, x0 in seen):
            continue
        seen.append((pair, x))
        p_here = _params_at(fixed, scan.grid.parameter, x)
        asym = asymptotic_levels(p_here, max(2, math.ceil(max_e / p_here.nu) + 2))
        line = int(np.argmin(np.abs(asym.values - energy)))
        events.append(
            CrossingEvent(
                location=x,
                energy=energy,
                gap=gap,
                classification="crossing" if gap < CROSSING_GAP_TOL * fixed.nu else "avoided",
                line_index=line,
                line_value=float(asym.values[line]),
                pair=pair,
            )
        )
    events.sort(key=lambda e: (e.location, e.pair))
    return events


def asymptotic_levels(p: IonParams, M: int) -> AsymptoteSet:
    """The limit levels {m*nu +- delta/2 : m = 0..M}; collisions are noted.

    When delta is an integer multiple k*nu the two ladders coincide except for
    k leftover values, and the note flag is set.
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    raw = np.concatenate(
        [np.arange(M + 1) * p.nu - p.delta / 2.0, np.arange(M + 1) * p.nu + p.delta / 2.0]
    )
    raw.sort()
    tol = 1e-9 * p.nu
    dedup = [float(raw[0])]
    for v in raw[1:]:
        if v - dedup[-1] > tol:
            dedup.append(float(v))
    ratio = p.delta / p.nu
    degenerate = abs(ratio - round(ratio)) < 1e-12
    return AsymptoteSet(values=np.array(dedup), degeneracy_note=degenerate)


def asymptotic_state(
    p: IonParams, n: int, sign: int, picture: str, basis: FockBasis
) -> np.ndarray:
    """Large-eta eigenstate: |g,n> / |e,n> in the ion picture, or the
    transformed |+-> x D(+-i eta/2)|n> in the Jaynes-Cummings picture.

    sign = +1 pairs |g,n> with |+> x |+i eta/2; n> (limit energy n*nu - delta/2);
    sign = -1 pairs |e,n> with |-> x |-i eta/2; n> (limit energy n*nu + delta/2).
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    if not 0 <= n < basis.dim:
        raise ValueError(f"need 0 <= n < dim, got n={n}, dim={basis.dim}")
    s = basis.size
    psi = np.zeros(2 * s, dtype=complex)
    if picture == "ion":
        block = s if sign == 1 else 0  # g block for +, e block for -
        psi[block + n] = 1.0
        return psi
    if picture != "jcm":
        raise ValueError(f"picture must be 'ion' or 'jcm', got {picture!r}")
    coeffs = displacement(sign * 0.5j * p.eta, basis).matrix[:, n]
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    psi[:s] = sign * inv_sqrt2 * coeffs  # |+-> = (|g> +- |e>)/sqrt(2)
    psi[s:] = inv_sqrt2 * coeffs
    return psi


def asymptotic_energy(p: IonParams, n: int, sign: int) -> float:
    """Limit eigenvalue n*nu - sign*delta/2 of the matching asymptotic state."""
    return n * p.nu - sign * p.delta / 2.0


@dataclass(frozen=True)
class ConvergenceReport:
    """Distance-to-asymptote and asymptotic-subspace overlap along an eta list.

    Overlaps are projections onto the span of all asymptotic states whose
    limit energies are mutually degenerate (at delta = 0 the pairs mix
    maximally, so a single-state overlap would saturate at 1/sqrt(2)).
    """

    etas: tuple[float, ...]
    max_distance: tuple[float, ...]
    min_overlap: tuple[float, ...]
    distances: np.ndarray  # (len(etas), n_levels)
    overlaps: np.ndarray
    distance_monotone: bool
    overlap_monotone: bool


def asymptotic_convergence(
    p: IonParams,
    eta_list,
    n_levels: int,
    basis: FockBasis,
    slack: float = 1e-3,
) -> ConvergenceReport:
    """Check that the lowest levels approach the asymptotic set as eta grows."""
    etas = [float(e) for e in eta_list]
    if any(e2 <= e1 for e1, e2 in zip(etas, etas[1:])):
        raise ValueError("eta_list must be strictly increasing")
    if basis.dim < max(etas) ** 2 + 40:
        raise TruncationTooSmall(
            f"dim {basis.dim} below eta_max^2 + 40 = {max(etas) ** 2 + 40:.0f}"
        )

    n_asym = n_levels + 4
    dists = np.zeros((len(etas), n_levels))
    overs = np.zeros((len(etas), n_levels))
    for ei, eta in enumerate(etas):
        q = p.replace(eta=eta)
        h = build_h_jcm_driven(q, basis).matrix
        w, v = hermitian_eigendecomposition(h)
        states, energies = [], []
        for n in range(n_asym):
            for sign in (1, -1):
                states.append(asymptotic_state(q, n, sign, "jcm", basis))
                energies.append(asymptotic_energy(q, n, sign))
        energies = np.array(energies)
        for lev in range(n_levels):
            gaps = np.abs(energies - w[lev])
            nearest = float(np.min(gaps))
            dists[ei, lev] = nearest
            group = np.nonzero(gaps < nearest + 1e-9 * p.nu)[0]
            amp2 = sum(abs(np.vdot(states[gi], v[:, lev])) ** 2 for gi in group)
            overs[ei, lev] = math.sqrt(amp2)

    max_d = tuple(float(np.max(dists[i])) for i in range(len(etas)))
    min_o = tuple(float(np.min(overs[i])) for i in range(len(etas)))
    dist_mono = all(b <= a + slack for a, b in zip(max_d, max_d[1:]))
    over_mono = all(b >= a - slack for a, b in zip(min_o, min_o[1:]))
    return ConvergenceReport(
        etas=tuple(etas),
        max_distance=max_d,
        min_overlap=min_o,
        distances=dists,
        overlaps=overs,
        distance_monotone=dist_mono,
        overlap_monotone=over_mono,
    )


def parity_commutator(p: IonParams, picture: str, basis: FockBasis) -> float:
    """Interior norm of [H, parity] / ||H||; vanishes exactly at delta = 0.

    The conserved observable is sigma_x * exp(i pi n) in the ion picture and
    sigma_z * exp(i pi n) in the Jaynes-Cummings picture.
    """
    s = basis.size
    pi_diag = np.diag((-1.0) ** np.arange(s)).astype(complex)
    par = np.zeros((2 * s, 2 * s), dtype=complex)
    if picture == "ion":
        h = build_h_ion(p, basis).matrix
        par[:s, s:] = pi_diag
        par[s:, :s] = pi_diag
    elif picture == "jcm":
        h = build_h_jcm_driven(p, basis).matrix
        par[:s, :s] = pi_diag
        par[s:, s:] = -pi_diag
    else:
        raise ValueError(f"picture must be 'ion' or 'jcm', got {picture!r}")
    comm = h @ par - par @ h
    idx = interior_indices(basis)
    sub = comm[np.ix_(idx, idx)]
    return float(np.linalg.norm(sub) / np.linalg.norm(h[np.ix_(idx, idx)]))


@dataclass(frozen=True)
class RootCrossMatch:
    m: int
    branch: str
    eta_root: float
    expected_energy: float
    eigenvalue_present: bool
    eigenvalue_error: float
    matched: bool
    event_location: float | None
    event_gap: float | None
    event_classification: str | None
    location_error: float | None


@dataclass(frozen=True)
class CrossValidationReport:
    entries: tuple[RootCrossMatch, ...]
    crossing_counts: dict
    counts_match_roots: bool
    all_matched: bool


def crossvalidate_roots(
    m_max: int,
    p_fixed: IonParams,
    basis: FockBasis | None = None,
    grid_points: int = 600,
    n_jobs: int | None = None,
) -> CrossValidationReport:
    """Confirm each compatibility root against the numerically detected events.

    At every root the spectrum must contain the eigenvalue (m+1)*nu + s*delta/2
    to 1e-6*nu.  For integer delta/nu each root must additionally coincide
    (to 1e-4 in eta and 1e-4*nu in energy) with a detected true crossing, and
    at delta = 0 the number of crossings on the line E = (m+1)*nu must equal
    the root count m+1.  For non-integer delta/nu no crossings exist; the
    report attaches the nearest avoided event instead (the root marks where a
    level curve passes through its asymptote, not a gap minimum).
    """
    ratio = p_fixed.delta / p_fixed.nu
    integer_delta = abs(ratio - round(ratio)) < 1e-12

    roots: list[tuple[int, Branch, float]] = []
    for m in range(m_max + 1):
        for br in (Branch.PLUS, Branch.MINUS):
            found = find_roots(m, br, "eta2", 1e-9, 16.0, p_fixed, grid_points=1024)
            roots.extend((m, br, math.sqrt(rec.value)) for rec in found.roots)

    eta_hi = max(r for _, _, r in roots) + 0.4 if roots else 1.0
    if basis is None:
        basis = basis_for_scan(eta_hi)
    n_levels = min(2 * (m_max + 2) + 4, basis.dim // 2)
    grid = ScanGrid("eta", np.linspace(0.05, eta_hi, grid_points))
    scan = scan_spectrum(p_fixed, grid, n_levels, basis, n_jobs=n_jobs)
    events = detect_events(scan, basis, n_jobs=n_jobs)

    entries = []
    for m, br, eta_root in sorted(roots, key=lambda t: (t[0], t[1].value, t[2])):
        expected_e = br.energy(m, p_fixed)
        w = np.linalg.eigvalsh(
            build_h_ion(p_fixed.replace(eta=eta_root), basis).matrix
        )
        ev_err = float(np.min(np.abs(w - expected_e)))
        present = ev_err < 1e-6 * p_fixed.nu

        best = None
        if integer_delta:
            for ev in events:
                if ev.classification != "crossing":
                    continue
                if (
                    abs(ev.location - eta_root) < 1e-4
                    and abs(ev.energy - expected_e) < 1e-4 * p_fixed.nu
                ):
                    if best is None or abs(ev.location - eta_root) < abs(best.location - eta_root):
                        best = ev
            matched = present and best is not None
        else:
            avoided = [ev for ev in events if ev.classification == "avoided"]
            if avoided:
                best = min(avoided, key=lambda ev: abs(ev.location - eta_root))
            matched = present
        entries.append(
            RootCrossMatch(
                m=m,
                branch=br.value,
                eta_root=eta_root,
                expected_energy=expected_e,
                eigenvalue_present=present,
                eigenvalue_error=ev_err,
                matched=matched,
                event_location=None if best is None else best.location,
                event_gap=None if best is None else best.gap,
                event_classification=None if best is None else best.classification,
                location_error=None if best is None else abs(best.location - eta_root),
            )
        )

    counts: dict = {}
    counts_ok = True
    if integer_delta and abs(p_fixed.delta) < 1e-12:
        for m in range(m_max + 1):
            line_e = (m + 1) * p_fixed.nu
            n_cross = sum(
                1
                for ev in events
                if ev.classification == "crossing" and abs(ev.energy - line_e) < 1e-4 * p_fixed.nu
            )
            counts[m + 1] = n_cross
            if n_cross != m + 1:
                counts_ok = False

    return CrossValidationReport(
        entries=tuple(entries),
        crossing_counts=counts,
        counts_match_roots=counts_ok,
        all_matched=all(e.matched for e in entries),
    )
