"""Self-check suites behind ``ionjcm verify``.

Each suite re-derives one structural property of the implementation from an
independent route (matrix conjugation, recursion identities, symmetry
commutators, closed forms, full diagonalization) and reports pass/fail with
a one-line diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ansatz import (
    Branch,
    ReducedParams,
    build_ion_eigenstate,
    closed_form_roots,
    degeneracy_partner_check,
    find_roots,
)
from .fock import FockBasis, displacement, number
from .model import (
    IonParams,
    build_T,
    build_h_ion,
    build_h_jcm_driven,
    conjugate,
    interior_norm_diff,
)
from .spectrum import crossvalidate_roots, parity_commutator


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str


def transform_equivalence_suite(
    n_draws: int = 20,
    dim: int = 100,
    buffer: int = 40,
    seed: int = 20240711,
    corrupt_t: bool = False,
) -> SuiteResult:
    """T H_ion T^+ must reproduce the driven Jaynes-Cummings build to 1e-9.

    ``corrupt_t`` negates one block of T (test-only) to prove the suite can
    fail: the equivalence must then break loudly.
    """
    rng = np.random.RandomState(seed)
    basis = FockBasis(dim, buffer)
    worst = 0.0
    for _ in range(n_draws):
        p = IonParams(
            nu=1.0,
            delta=float(rng.uniform(-2.0, 2.0)),
            omega=float(rng.uniform(0.0, 2.0)),
            eta=float(rng.uniform(0.0, 2.5)),
        )
        t = build_T(p, basis)
        if corrupt_t:
            s = basis.size
            m = t.matrix.copy()
            m[:s, s:] *= -1.0
            t = type(t)(m, basis)
        diff = interior_norm_diff(conjugate(build_h_ion(p, basis), t), build_h_jcm_driven(p, basis))
        worst = max(worst, diff)
    return SuiteResult(
        name="transform-equivalence",
        passed=worst < 1e-9,
        detail=f"worst interior norm diff {worst:.3e} over {n_draws} draws (tol 1e-9)",
    )


def recursion_suite(dim: int = 80, buffer: int = 40) -> SuiteResult:
    """Displaced number states must satisfy the three-term number-operator recursion.

    || n|a;k> - [(|a|^2+k)|a;k> + a sqrt(k+1)|a;k+1> + a* sqrt(k)|a;k-1>] || < 1e-9
    over |alpha| <= 3 and k <= 20.
    """
    basis = FockBasis(dim, buffer)
    nmat = number(basis).matrix
    worst = 0.0
    alphas = [
        r * complex(math.cos(th), math.sin(th))
        for r in (0.5, 1.5, 3.0)
        for th in (0.0, math.pi / 2, 2.2, -1.0)
    ]
    for alpha in alphas:
        d = displacement(alpha, basis).matrix
        x = abs(alpha) ** 2
        for k in range(21):
            lhs = nmat @ d[:, k]
            rhs = (x + k) * d[:, k] + alpha * math.sqrt(k + 1) * d[:, k + 1]
            if k > 0:
                rhs = rhs + np.conjugate(alpha) * math.sqrt(k) * d[:, k - 1]
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return SuiteResult(
        name="recursion-identity",
        passed=worst < 1e-9,
        detail=f"worst recursion residual {worst:.3e} over |alpha|<=3, k<=20 (tol 1e-9)",
    )


def parity_suite(dim: int = 100, buffer: int = 30) -> SuiteResult:
    """sigma_x exp(i pi n) commutes with H_ion exactly at delta = 0, and the
    degenerate ansatz pairs combine into parity eigenstates."""
    basis = FockBasis(dim, buffer)
    checks: list[str] = []
    ok = True

    p0 = IonParams(1.0, 0.0, 0.5, 1.3)
    c_ion = parity_commutator(p0, "ion", basis)
    c_jcm = parity_commutator(p0, "jcm", basis)
    broken = parity_commutator(IonParams(1.0, 0.5, 0.5, 1.3), "ion", basis)
    if not (c_ion < 1e-10 and c_jcm < 1e-10):
        ok = False
    if not broken > 1e-3:
        ok = False
    checks.append(f"[H,P] ion {c_ion:.1e} jcm {c_jcm:.1e} (delta=0.5 control {broken:.1e})")

    s = basis.size
    pi_diag = np.diag((-1.0) ** np.arange(s))
    par = np.zeros((2 * s, 2 * s))
    par[:s, s:] = pi_diag
    par[s:, :s] = pi_diag
    for m, eta2 in ((0, 0.75), (1, 0.44176798753346747)):
        p = IonParams(1.0, 0.0, 0.5, math.sqrt(eta2))
        _, plus = build_ion_eigenstate(m, Branch.PLUS, p, basis)
        _, minus = build_ion_eigenstate(m, Branch.MINUS, p, basis)
        worst_combo = 0.0
        for sign in (1.0, -1.0):
            v = plus + sign * minus
            v = v / np.linalg.norm(v)
            worst_combo = max(worst_combo, float(np.linalg.norm(par @ v - sign * v)))
        alone = min(
            float(np.linalg.norm(par @ plus - s0 * plus)) for s0 in (1.0, -1.0)
        )
        if worst_combo > 1e-8 or alone < 1e-2:
            ok = False
        checks.append(f"m={m}: combo residual {worst_combo:.1e}, unpaired {alone:.2f}")
    return SuiteResult(name="parity-symmetry", passed=ok, detail="; ".join(checks))


def closed_form_suite() -> SuiteResult:
    """Bisection roots must coincide with the m = 0, 1 closed forms to 1e-10."""
    worst = 0.0
    count = 0
    for a in (0.0, 0.25, 0.5, 1.0, 2.0):
        for d in (-2.0, -1.0, 0.0, 1.0, 2.0):
            for br in (Branch.PLUS, Branch.MINUS):
                fixed = IonParams(nu=1.0, delta=d, omega=math.sqrt(a), eta=0.0)
                for m in (0, 1):
                    closed = closed_form_roots(m, ReducedParams(a, d, br.sign))
                    if closed.negative_discriminant:
                        continue
                    found = find_roots(m, br, "eta2", 1e-9, 12.0, fixed)
                    values = [r.value for r in found.roots]
                    for c in closed.values:
                        if c <= 1e-9:
                            continue
                        count += 1
                        err = min((abs(v - c) for v in values), default=math.inf)
                        worst = max(worst, err)
    return SuiteResult(
        name="closed-form-roots",
        passed=worst < 1e-10,
        detail=f"worst |bisection - closed form| {worst:.3e} over {count} roots (tol 1e-10)",
    )


def crossvalidation_suite(quick: bool = False) -> SuiteResult:
    """Every compatibility root must appear in the detected crossing structure."""
    m_max = 1 if quick else 2
    grid_points = 300 if quick else 600
    report = crossvalidate_roots(m_max, IonParams(1.0, 0.0, 0.5, 0.0), grid_points=grid_points)
    return SuiteResult(
        name="root-crossing-crossvalidation",
        passed=report.all_matched and report.counts_match_roots,
        detail=(
            f"matched {sum(e.matched for e in report.entries)}/{len(report.entries)} roots, "
            f"crossing counts per line {report.crossing_counts}"
        ),
    )


def degeneracy_partner_suite() -> SuiteResult:
    """At delta = k*nu the minus branch at order m+k vanishes on the plus roots."""
    ok = True
    details = []
    for m in (0, 1, 2):
        for k in (1, 2):
            p = IonParams(nu=1.0, delta=float(k), omega=0.5, eta=0.0)
            rep = degeneracy_partner_check(m, k, p)
            worst = max((e.ratio for e in rep.entries), default=0.0)
            details.append(f"m={m},k={k}: {worst:.1e}")
            ok = ok and rep.all_vanish
    # negative control: off-sideband detuning must NOT produce partner zeros
    p_off = IonParams(nu=1.0, delta=0.5, omega=0.5, eta=0.0)
    rep_off = degeneracy_partner_check(0, 1, p_off)
    control = min((e.ratio for e in rep_off.entries), default=math.inf)
    if not control > 1e-3:
        ok = False
    details.append(f"delta=0.5 control {control:.1e}")
    return SuiteResult(name="degeneracy-partner", passed=ok, detail="; ".join(details))


def run_all(quick: bool = False, corrupt_t: bool = False) -> list[SuiteResult]:
    """Run every suite; ``quick`` shrinks sizes to stay interactive."""
    if quick:
        results = [
            transform_equivalence_suite(n_draws=6, dim=60, buffer=40, corrupt_t=corrupt_t),
            recursion_suite(dim=60, buffer=40),
            parity_suite(dim=60, buffer=20),
            closed_form_suite(),
            crossvalidation_suite(quick=True),
            degeneracy_partner_suite(),
        ]
    else:
        results = [
            transform_equivalence_suite(corrupt_t=corrupt_t),
            recursion_suite(),
            parity_suite(),
            closed_form_suite(),
            crossvalidation_suite(),
            degeneracy_partner_suite(),
        ]
    return results
