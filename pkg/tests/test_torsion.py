import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from bvsym.geometry import Polygon, regular_polygon, unit_square
from bvsym.torsion import (
    F_candidates,
    G_ball_oracle,
    G_ball_solution,
    G_candidates,
    GridFunction2D,
    GridGeometry,
    RadialCandidate,
    RadialProfile,
    brute_offset_search,
    discrete_torsion,
    evaluate_F_lambda,
    evaluate_G,
    minimize_F_ball,
    minimize_G_ball,
    saint_venant_F_suite,
    saint_venant_G_suite,
)


def annulus_energy(r, A, R, lam):
    """F of the planar profile flat inside r with slope (rho^2 - A) / (2 rho) outside."""
    if r >= R:
        return 0.0
    q = lambda p: (p * p - A) / (2 * p)
    d = quad(lambda p: q(p) ** 2 * 2 * math.pi * p, r, R, epsabs=1e-14)[0]
    mass = quad(lambda p: q(p) * math.pi * p * p, r, R, epsabs=1e-14)[0]
    return 0.5 * d - mass + lam * math.pi * (R * R - r * r)


def ball_F_oracle(R, lam):
    def best_core(r):
        if r == 0.0:
            return annulus_energy(0.0, 0.0, R, lam)
        res = minimize_scalar(lambda A: annulus_energy(r, A, R, lam), bounds=(0.0, r * r), method="bounded",
                              options={"xatol": 1e-12})
        return min(res.fun, annulus_energy(r, 0.0, R, lam))

    res = minimize_scalar(best_core, bounds=(0.0, R), method="bounded", options={"xatol": 1e-10})
    return res.x, max(0.0, -min(res.fun, best_core(0.0)))


def truncated_torsion_T(lam):
    """Closed form on the unit disk: the flat core sits at r^2 = 8 lam."""
    r2 = min(8 * lam, 1.0)
    return max(0.0, math.pi / 16 * (1 - r2 * r2) - lam * math.pi * (1 - r2))


@pytest.fixture(scope="module")
def square_geom():
    return GridGeometry.for_polygon(unit_square(), 128)


# -- the penalized energy -----------------------------------------------------


def test_F_of_zero_is_zero(square_geom):
    z = GridFunction2D(square_geom, np.zeros((square_geom.ny, square_geom.nx)))
    assert evaluate_F_lambda(z, 0.3) == 0.0
    assert evaluate_F_lambda(z, 0.3, scheme="p1") == 0.0


def test_F_of_disk_torsion_function():
    psi = RadialCandidate(2, 1.0, 0.0, 0.0, 0.0)
    assert evaluate_F_lambda(psi, 0.0) == pytest.approx(-math.pi / 16, rel=1e-12)
    assert evaluate_F_lambda(psi, 0.1) == pytest.approx(-math.pi / 16 + 0.1 * math.pi, rel=1e-12)


def test_F_rejects_negative_penalty():
    with pytest.raises(ValueError):
        evaluate_F_lambda(RadialCandidate(2, 1.0), -0.1)


def test_radial_candidate_profile():
    psi = RadialCandidate(2, 1.0, 0.0, 0.0, 0.0)
    rho = np.array([0.0, 0.5, 1.0, 1.5])
    assert psi.values(rho) == pytest.approx((1 - np.minimum(rho, 1) ** 2) / 4, abs=1e-8)


def test_minimize_F_ball_unpenalized():
    r, T = minimize_F_ball(1.0, 2, 0.0)
    # the energy is flat to fourth order in r near zero
    assert r <= 1e-3
    assert T == pytest.approx(math.pi / 16, rel=1e-4)


def test_minimize_F_ball_large_penalty_gives_zero():
    r, T = minimize_F_ball(1.0, 2, 10.0)
    assert r == 1.0 and T == 0.0


@pytest.mark.parametrize("lam", [0.005, 0.02, 0.05, 0.08, 0.2])
def test_minimize_F_ball_matches_quadrature_oracle(lam):
    r, T = minimize_F_ball(1.0, 2, lam)
    r_ref, T_ref = ball_F_oracle(1.0, lam)
    assert T == pytest.approx(T_ref, rel=1e-6, abs=1e-12)
    assert T == pytest.approx(truncated_torsion_T(lam), rel=1e-6, abs=1e-12)
    if T_ref > 0:
        assert r == pytest.approx(r_ref, abs=1e-4)


@pytest.mark.parametrize("lam", [0.005, 0.02, 0.05])
def test_optimal_flat_radius_closed_form(lam):
    # stationarity in r gives r = n sqrt(2 lam) while the energy stays negative
    r, T = minimize_F_ball(1.0, 2, lam)
    assert T > 0
    assert r == pytest.approx(2 * math.sqrt(2 * lam), abs=1e-5)


def test_brute_force_search_does_not_beat_the_family():
    for lam in (0.0, 0.02):
        _, T = minimize_F_ball(1.0, 2, lam)
        _, _, F = brute_offset_search(1.0, 2, lam, radii=21, offsets=21)
        assert -F <= T + 1e-6


def test_ball_F_scales_with_radius_when_unpenalized():
    # T_F(B_R) = pi R^4 / 16 for lam = 0
    for R in (0.5, 2.0):
        assert minimize_F_ball(R, 2, 0.0)[1] == pytest.approx(math.pi * R**4 / 16, rel=1e-4)


def test_F_is_nonincreasing_in_penalty():
    Ts = [minimize_F_ball(1.0, 2, lam)[1] for lam in np.linspace(0.0, 0.5, 26)]
    assert all(b <= a + 1e-12 for a, b in zip(Ts, Ts[1:]))


# -- polygons -------------------------------------------------------------------


def test_discrete_torsion_on_square(square_geom):
    sol = discrete_torsion(square_geom)
    # series value of the torsion function at the centre of the unit square
    assert float(sol.values.max()) == pytest.approx(0.0736713, abs=2e-4)


def test_F_suite_square_is_below_ball(square_geom):
    cands = F_candidates(square_geom, 20, 0)
    rep = saint_venant_F_suite(unit_square(), 0.0, cands)
    assert rep.bound == pytest.approx(0.01757, abs=3e-4)
    assert rep.ball_value == pytest.approx(1 / (16 * math.pi), rel=1e-4)
    assert rep.passed and rep.margin >= 0


def test_F_suite_with_only_zero_candidate(square_geom):
    z = GridFunction2D(square_geom, np.zeros((square_geom.ny, square_geom.nx)))
    rep = saint_venant_F_suite(unit_square(), 0.05, [z])
    assert rep.bound == 0.0 and rep.passed


def test_F_candidates_are_deterministic(square_geom):
    a = F_candidates(square_geom, 25, 3)
    b = F_candidates(square_geom, 25, 3)
    assert len(a) == 25
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))


def test_F_suite_fine_polygon_is_close_to_ball():
    poly = regular_polygon(64, area=1.0)
    geom = GridGeometry.for_polygon(poly, 512)
    rep = saint_venant_F_suite(poly, 0.0, F_candidates(geom, 12, 0))
    assert rep.passed
    assert rep.margin <= 0.02 * rep.ball_value


# -- the insulation quotient -------------------------------------------------


def test_G_of_constant_on_disk():
    c = RadialProfile(2, 1.0, np.ones(5))
    assert evaluate_G(c, 1.0) == pytest.approx(4.0, rel=1e-12)


def test_G_is_scale_invariant():
    p = G_ball_solution(1.0, 2, 0.7)
    q = RadialProfile(2, 1.0, 3.5 * p.values, p.nodes)
    assert evaluate_G(q, 0.7) == pytest.approx(evaluate_G(p, 0.7), rel=1e-12)


def test_G_of_dirichlet_torsion_function():
    rho = np.linspace(0.0, 1.0, 2001)
    p = RadialProfile(2, 1.0, (1 - rho**2) / 4, rho)
    assert evaluate_G(p, 1.0) == pytest.approx(8 / math.pi, rel=1e-6)


def test_G_rejects_bad_input():
    with pytest.raises(ValueError):
        evaluate_G(RadialProfile(2, 1.0, np.ones(3)), 0.0)
    with pytest.raises(ValueError):
        evaluate_G(RadialProfile(2, 1.0, np.zeros(3)), 1.0)


def test_minimize_G_ball_value():
    assert minimize_G_ball(1.0, 2, 1.0) == pytest.approx(math.pi / 8 + 0.25, rel=1e-15)


def test_G_ball_solution_attains_the_value():
    p = G_ball_solution(1.0, 2, 1.0, nodes=4001)
    assert 1 / evaluate_G(p, 1.0) == pytest.approx(minimize_G_ball(1.0, 2, 1.0), rel=1e-6)


@pytest.mark.parametrize("m", [0.1, 1.0, 5.0])
def test_G_oracle_agrees(m):
    val, prof = G_ball_oracle(1.0, 2, m)
    assert val == pytest.approx(minimize_G_ball(1.0, 2, m), abs=1e-3)
    assert val <= minimize_G_ball(1.0, 2, m) + 1e-12
    assert np.all(prof.values > 0)


def test_G_small_insulation_limit():
    assert minimize_G_ball(1.0, 2, 1e-6) == pytest.approx(math.pi / 8, abs=5e-3)
    assert G_ball_oracle(1.0, 2, 1e-6)[0] == pytest.approx(math.pi / 8, abs=5e-3)


def test_G_suite_constant_only(square_geom):
    c = GridFunction2D(square_geom, np.ones((square_geom.ny, square_geom.nx)), False)
    rep = saint_venant_G_suite(unit_square(), 1.0, [c])
    # constant on the unit square: 1 / Q = m |Omega|^2 / Per^2 = 1 / 16
    assert rep.bound == pytest.approx(1 / 16, rel=1e-9)
    assert rep.passed


def test_G_suite_square(square_geom):
    rep = saint_venant_G_suite(unit_square(), 1.0, G_candidates(square_geom, 1.0, 20, 0))
    assert rep.passed and rep.margin >= 0
    assert rep.bound > 0.1


# -- properties -----------------------------------------------------------------


@settings(max_examples=15)
@given(st.floats(0.3, 3.0), st.integers(2, 3), st.floats(1e-3, 10.0))
def test_G_ball_bounds(R, n, m):
    T = minimize_G_ball(R, n, m)
    assert T >= m * R * R / (n * n)
    assert G_ball_oracle(R, n, m, nodes=256)[0] <= T * (1 + 1e-12)


@settings(max_examples=10)
@given(st.floats(0.3, 2.0), st.floats(0.0, 0.3), st.floats(0.0, 0.3))
def test_F_ball_monotone_in_penalty(R, lam1, lam2):
    lo, hi = sorted((lam1, lam2))
    assert minimize_F_ball(R, 2, hi, nodes=2000, bracket=200)[1] <= minimize_F_ball(R, 2, lo, nodes=2000, bracket=200)[1] + 1e-12


@settings(max_examples=5)
@given(st.integers(0, 2**16))
def test_random_F_candidates_stay_below_ball(seed):
    geom = GridGeometry.for_polygon(unit_square(), 48)
    rep = saint_venant_F_suite(unit_square(), 0.05, F_candidates(geom, 15, seed))
    assert rep.passed


@settings(max_examples=5)
@given(st.integers(5, 12))
def test_polygon_G_below_ball(k):
    poly = regular_polygon(k, area=1.0)
    geom = GridGeometry.for_polygon(poly, 64)
    rep = saint_venant_G_suite(poly, 1.0, G_candidates(geom, 1.0, 16, 0))
    assert rep.passed
