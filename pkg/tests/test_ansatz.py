import math

import numpy as np
import pytest

from ionjcm import (
    Branch,
    EmptyRange,
    FockBasis,
    IonParams,
    NotAtRoot,
    OmegaZero,
    ReducedParams,
    TridiagonalSystem,
    build_T,
    build_h_ion,
    build_h_jcm_driven,
    build_ion_eigenstate,
    closed_form_roots,
    degeneracy_partner_check,
    det_M,
    det_M_scale,
    epsilon,
    find_roots,
    map_to_jcm,
    null_vector,
)

# closed-form roots at a = (Omega/nu)^2 = 0.25, d = 0 (both frozen from the
# m = 1 quadratic: eta^2 = 2 - 3a/4 +- sqrt(a^2/16 - a/2 + 2))
U0 = 0.75
U1 = 0.4417679875336682
U2 = 3.183232012466332
ETA0 = math.sqrt(U0)  # 0.8660254037844386
ETA1 = math.sqrt(U1)  # 0.664656292781215
ETA2 = math.sqrt(U2)  # 1.7841614311676877

P_RES = IonParams(nu=1.0, delta=0.0, omega=0.5, eta=0.0)


def test_closed_form_constants_round_to_printed_values():
    assert f"{U1:.7f}" == "0.4417680"
    assert f"{U2:.7f}" == "3.1832320"


def test_epsilon_values():
    assert epsilon(0, P_RES, Branch.PLUS) == pytest.approx(0.75, abs=1e-15)
    p = P_RES.replace(eta=math.sqrt(0.441768))
    assert epsilon(1, p, Branch.PLUS) == pytest.approx(1.433232, abs=1e-12)
    pm = IonParams(1.0, 1.0, 0.5, 0.0)
    assert epsilon(0, pm, Branch.MINUS) == pytest.approx(-0.25, abs=1e-15)


def test_det_m0():
    assert det_M(0, P_RES, Branch.PLUS) == pytest.approx(0.75, abs=1e-15)
    at_root = P_RES.replace(eta=ETA0)
    assert abs(det_M(0, at_root, Branch.PLUS)) < 1e-12


def test_det_m1_vanishes_at_closed_form_roots():
    for u in (U1, U2):
        p = P_RES.replace(eta=math.sqrt(u))
        assert abs(det_M(1, p, Branch.PLUS)) < 1e-10 * det_M_scale(1, p, Branch.PLUS)


@pytest.mark.parametrize(
    "m,p,branch",
    [
        (2, IonParams(1.0, 0.3, 0.7, 1.2), Branch.PLUS),
        (3, IonParams(1.0, -0.8, 0.5, 0.9), Branch.MINUS),
        (5, IonParams(1.0, 1.4, 1.1, 2.1), Branch.PLUS),
    ],
)
def test_det_matches_complex_lu(m, p, branch):
    """Continuant against an LU determinant of the complex tridiagonal matrix."""
    cont = det_M(m, p, branch)
    scale = det_M_scale(m, p, branch)
    lu = complex(np.linalg.det(TridiagonalSystem.from_ion(m, p, branch).matrix()))
    assert abs(lu.imag) < 1e-13 * scale
    assert abs(cont - lu.real) <= 1e-12 * max(scale, abs(cont))


def test_closed_form_roots_m0():
    assert closed_form_roots(0, ReducedParams(0.25, 0.0, 1)).values == (0.75,)
    assert closed_form_roots(0, ReducedParams(0.25, 1.0, 1)).values == (1.75,)
    discarded = closed_form_roots(0, ReducedParams(2.0, -1.0, 1))
    assert discarded.values == ()
    assert discarded.discarded == (-2.0,)


def test_closed_form_roots_m1():
    r = closed_form_roots(1, ReducedParams(0.25, 0.0, 1))
    assert r.values == pytest.approx((U1, U2), abs=1e-15)
    neg = closed_form_roots(1, ReducedParams(0.25, 2.0, -1))
    assert neg.negative_discriminant and neg.values == ()


def test_find_roots_matches_closed_forms():
    for a in (0.25, 1.0, 2.0):
        for d in (-1.0, 0.0, 2.0):
            for br in (Branch.PLUS, Branch.MINUS):
                fixed = IonParams(nu=1.0, delta=d, omega=math.sqrt(a), eta=0.0)
                for m in (0, 1):
                    closed = closed_form_roots(m, ReducedParams(a, d, br.sign))
                    if closed.negative_discriminant:
                        continue
                    found = [r.value for r in find_roots(m, br, "eta2", 1e-9, 12.0, fixed).roots]
                    expected = [c for c in closed.values if c > 1e-9]
                    assert len(found) == len(expected)
                    for c, v in zip(expected, sorted(found)):
                        assert abs(v - c) < 1e-10 * max(1.0, c)


def test_find_roots_m2_has_three_positive_roots():
    found = find_roots(2, Branch.PLUS, "eta2", 0.0, 8.0, P_RES)
    assert len(found.roots) == 3
    assert all(r.value > 0 for r in found.roots)


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_root_count_is_m_plus_one(m):
    """At Omega = nu/2, delta = 0 the degree-(m+1) determinant has m+1
    real positive roots in eta^2."""
    found = find_roots(m, Branch.PLUS, "eta2", 1e-9, 14.0, P_RES, grid_points=1024)
    assert len(found.roots) == m + 1


def test_find_roots_solve_for_delta():
    # m = 0: det = 0 at delta/nu = eta^2 - 1 + a for the plus branch
    fixed = IonParams(nu=1.0, delta=0.0, omega=0.5, eta=1.0)
    found = find_roots(0, Branch.PLUS, "delta", -3.0, 3.0, fixed)
    assert len(found.roots) == 1
    assert found.roots[0].value == pytest.approx(0.25, abs=1e-10)


def test_find_roots_solve_for_omega2():
    # m = 0, delta = 0: root at Omega^2 = (1 - eta^2) nu^2
    fixed = IonParams(nu=1.0, delta=0.0, omega=0.5, eta=math.sqrt(0.5))
    found = find_roots(0, Branch.PLUS, "omega2", 0.0, 4.0, fixed)
    assert len(found.roots) == 1
    assert found.roots[0].value == pytest.approx(0.5, abs=1e-10)


def test_find_roots_rejects_bad_range():
    with pytest.raises(EmptyRange):
        find_roots(0, Branch.PLUS, "eta2", 2.0, 1.0, P_RES)
    with pytest.raises(EmptyRange):
        find_roots(0, Branch.PLUS, "eta2", 0.0, math.inf, P_RES)


def test_double_root_candidate_detected():
    """A root pair too close for the grid to bracket is reported as a candidate.

    For m = 1 the coalescence point sits at eta^2 = -(a^2/16 + a/4) < 0, so
    physical (positive eta^2) roots are always simple; the reporting path is
    exercised on the polynomial's continuation where a near-double pair exists.
    """
    a = 0.25
    d = 1e-9 - (a**2 / 16 - a / 2 + 2)  # discriminant 1e-9: roots 6e-5 apart
    fixed = IonParams(nu=1.0, delta=d, omega=math.sqrt(a), eta=0.0)
    near_double_at = 2.0 + d - 0.75 * a  # approximately -0.0664
    found = find_roots(1, Branch.PLUS, "eta2", -0.5, 0.5, fixed, grid_points=512)
    assert not found.roots  # pair invisible to the sign-change scan
    assert found.double_root_candidates
    assert min(abs(c - near_double_at) for c in found.double_root_candidates) < 1e-3


def test_no_double_root_candidates_at_physical_roots():
    found = find_roots(1, Branch.PLUS, "eta2", 1e-9, 8.0, P_RES)
    assert len(found.roots) == 2
    assert not found.double_root_candidates


def test_null_vector_m0():
    p = P_RES.replace(eta=ETA0)
    d = null_vector(0, p, Branch.PLUS)
    assert np.allclose(d, [1.0])


def test_null_vector_m1_ratio():
    """Forward recursion gives d_1/d_0 = eps_1 / (i eta) = -i eps_1 / eta."""
    p = P_RES.replace(eta=ETA1)
    d = null_vector(1, p, Branch.PLUS)
    expected_ratio = -1j * epsilon(1, p, Branch.PLUS) / ETA1  # -2.1563506251765965j
    assert d[1] / d[0] == pytest.approx(expected_ratio, abs=1e-12)
    assert abs(np.linalg.norm(d) - 1.0) < 1e-14
    assert d[0].real > 0 and abs(d[0].imag) < 1e-14


def test_null_vector_annihilated_by_matrix():
    roots = find_roots(3, Branch.PLUS, "eta2", 1e-9, 14.0, P_RES, grid_points=1024)
    for rec in roots.roots:
        p = P_RES.replace(eta=math.sqrt(rec.value))
        d = null_vector(3, p, Branch.PLUS)
        mat = TridiagonalSystem.from_ion(3, p, Branch.PLUS).matrix()
        assert np.linalg.norm(mat @ d) < 1e-8
        # internal structure: d_n i^{-n} is real when d_0 is real
        phases = (1j) ** (-np.arange(4))
        assert np.max(np.abs(np.imag(d * phases))) < 1e-12


def test_null_vector_minus_branch_is_conjugate():
    # at delta = 0 the minus kernel is the complex conjugate of the plus kernel
    p = P_RES.replace(eta=ETA1)
    dp = null_vector(1, p, Branch.PLUS)
    dm = null_vector(1, p, Branch.MINUS)
    assert np.allclose(dm, np.conjugate(dp), atol=1e-14)


def test_null_vector_requires_root():
    with pytest.raises(NotAtRoot):
        null_vector(0, P_RES.replace(eta=0.5), Branch.PLUS)


def test_build_eigenstate_m0_plus():
    basis = FockBasis(120, 40)
    p = P_RES.replace(eta=ETA0)
    sol, psi = build_ion_eigenstate(0, Branch.PLUS, p, basis)
    assert sol.energy == 1.0
    assert sol.residual < 1e-8
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-13
    # coefficient relations in the d_0 = 1 gauge
    assert sol.d[0] == 1.0
    assert sol.c[0] == sol.d[0] / 1.0
    expected_c1 = 1j * ETA0 / 0.25
    assert sol.c[1] == pytest.approx(expected_c1, abs=1e-14)
    assert abs(sol.c[1]) > 0


def test_build_eigenstate_m0_minus_degenerate_pair():
    basis = FockBasis(120, 40)
    p = P_RES.replace(eta=ETA0)
    _, plus = build_ion_eigenstate(0, Branch.PLUS, p, basis)
    sol_m, minus = build_ion_eigenstate(0, Branch.MINUS, p, basis)
    assert sol_m.energy == 1.0
    assert sol_m.residual < 1e-8
    # linearly independent partners spanning a two-dimensional eigenspace
    assert abs(np.vdot(plus, minus)) < 0.999
    w = np.linalg.eigvalsh(build_h_ion(p, basis).matrix)
    assert np.sum(np.abs(w - 1.0) < 1e-6) == 2


def test_build_eigenstate_sideband():
    # delta = nu: plus root at eta^2 = 1.75, energy (m+1)nu + delta/2 = 1.5
    basis = FockBasis(120, 40)
    p = IonParams(1.0, 1.0, 0.5, math.sqrt(1.75))
    sol, _ = build_ion_eigenstate(0, Branch.PLUS, p, basis)
    assert sol.energy == 1.5
    assert sol.residual < 1e-8


@pytest.mark.parametrize("u", [U1, U2])
def test_build_eigenstate_m1(u):
    basis = FockBasis(120, 40)
    p = P_RES.replace(eta=math.sqrt(u))
    sol, _ = build_ion_eigenstate(1, Branch.PLUS, p, basis)
    assert sol.energy == 2.0
    assert sol.residual < 1e-8


def test_c_coefficient_values_m1():
    # c_2 = (i eta nu^2/Omega^2) sqrt(2) d_1 is real and positive at the lower root
    basis = FockBasis(120, 40)
    p = P_RES.replace(eta=ETA1)
    sol, _ = build_ion_eigenstate(1, Branch.PLUS, p, basis)
    assert sol.c[2].real == pytest.approx(8.107584600228686, abs=1e-9)
    assert abs(sol.c[2].imag) < 1e-12
    for n in range(2):
        assert sol.c[n] == pytest.approx(sol.d[n] / (2 - n), abs=1e-14)


def test_branch_symmetry_route():
    """Minus branch must equal the plus pipeline under e<->g, delta->-delta, eta->-eta."""
    basis = FockBasis(100, 30)
    # minus branch has a root at delta = -nu, eta^2 = 1 - a - s*d = 1.75
    p_minus = IonParams(1.0, -1.0, 0.5, math.sqrt(1.75))
    sol, direct = build_ion_eigenstate(0, Branch.MINUS, p_minus, basis)
    flipped = IonParams(1.0, 1.0, 0.5, -math.sqrt(1.75))
    _, plus_state = build_ion_eigenstate(0, Branch.PLUS, flipped, basis)
    s = basis.size
    swapped = np.concatenate([plus_state[s:], plus_state[:s]])
    assert abs(np.vdot(direct, swapped)) > 1.0 - 1e-10
    assert sol.energy == pytest.approx(1.0 + 0.5)  # (m+1)nu - delta/2 with delta = -1


def test_map_to_jcm_overlap_and_residual():
    basis = FockBasis(120, 40)
    for m, u, branch in [(0, U0, Branch.PLUS), (1, U2, Branch.PLUS), (0, U0, Branch.MINUS)]:
        p = P_RES.replace(eta=math.sqrt(u))
        sol, psi_ion = build_ion_eigenstate(m, branch, p, basis)
        psi_jcm = map_to_jcm(sol, basis)
        transformed = build_T(p, basis).matrix @ psi_ion
        assert abs(np.vdot(psi_jcm, transformed)) > 1.0 - 1e-9
        h = build_h_jcm_driven(p, basis).matrix
        assert np.linalg.norm(h @ psi_jcm - sol.energy * psi_jcm) < 1e-8


def test_eta_zero_and_omega_zero_rejected():
    basis = FockBasis(40, 20)
    with pytest.raises(NotAtRoot):
        build_ion_eigenstate(0, Branch.PLUS, IonParams(1.0, -0.75, 0.5, 0.0), basis)
    with pytest.raises(OmegaZero):
        build_ion_eigenstate(0, Branch.PLUS, IonParams(1.0, 0.0, 0.0, 1.0), basis)


def test_degeneracy_partner_sidebands():
    for m, k in [(0, 1), (0, 2), (1, 1), (2, 2)]:
        p = IonParams(nu=1.0, delta=float(k), omega=0.5, eta=0.0)
        rep = degeneracy_partner_check(m, k, p)
        assert rep.entries, f"no plus roots found for m={m}, k={k}"
        assert rep.all_vanish
    # m = 0, k = 1: the root is eta^2 = 1.75 and the partner determinant is exactly 0
    rep = degeneracy_partner_check(0, 1, IonParams(1.0, 1.0, 0.5, 0.0))
    assert rep.entries[0].eta2_root == pytest.approx(1.75, abs=1e-10)
    assert rep.entries[0].ratio < 1e-12


def test_degeneracy_partner_negative_control():
    # off-sideband detuning: partner determinants stay far from zero
    rep = degeneracy_partner_check(0, 1, IonParams(1.0, 0.5, 0.5, 0.0))
    assert rep.entries
    assert all(e.ratio > 1e-3 for e in rep.entries)
    assert not rep.all_vanish


def test_parity_pairs_at_delta_zero():
    """(psi+ +- psi-)/sqrt2 are parity eigenstates; neither state alone is."""
    basis = FockBasis(100, 30)
    s = basis.size
    pi_diag = np.diag((-1.0) ** np.arange(s))
    par = np.zeros((2 * s, 2 * s))
    par[:s, s:] = pi_diag
    par[s:, :s] = pi_diag
    for m, u in [(0, U0), (1, U1)]:
        p = P_RES.replace(eta=math.sqrt(u))
        _, plus = build_ion_eigenstate(m, Branch.PLUS, p, basis)
        _, minus = build_ion_eigenstate(m, Branch.MINUS, p, basis)
        for sign in (1.0, -1.0):
            v = (plus + sign * minus) / np.linalg.norm(plus + sign * minus)
            assert np.linalg.norm(par @ v - sign * v) < 1e-8
        for state in (plus, minus):
            assert min(np.linalg.norm(par @ state - s0 * state) for s0 in (1, -1)) > 0.1
