import math

import numpy as np
import pytest
from hypothesis import given

from bvsym.bvcalc import RadialBVFunction, as_pl, total_variation_split
from bvsym.fileio import step_from_csv
from bvsym.rearrange import MeasuredSample
from bvsym.symmetrize import (
    comparison_profiles,
    l1_comparison,
    pointwise_comparison,
    u_star_from_parts,
    u_star_of_bv,
    variation_preservation,
)

from conftest import bv1d_functions, cone, hat, hat_plus_box, indicator_01, radial_functions, two_bumps


S = np.linspace(0.0, 1.999, 97)


def test_from_parts_hat():
    p = u_star_from_parts([MeasuredSample(1.0, 2.0)], 0.0, 2.0, 1)
    assert p.evaluate(S) == pytest.approx(1 - S / 2, abs=1e-14)
    assert p.b == 0.0


def test_from_parts_pure_jump():
    p = u_star_from_parts([MeasuredSample(0.0, 2.0)], 2.0, 2.0, 1)
    assert p.evaluate(S) == pytest.approx(np.ones_like(S))
    assert p.evaluate(2.0) == 0.0


def test_from_parts_square_indicator():
    p = u_star_from_parts([MeasuredSample(0.0, 1.0)], 4.0, 1.0, 2)
    assert p.b == pytest.approx(2 / math.sqrt(math.pi), rel=1e-15)
    assert p.evaluate(np.array([0.0, 0.5, 0.999])) == pytest.approx([2 / math.sqrt(math.pi)] * 3)


def test_from_parts_validation():
    with pytest.raises(ValueError):
        u_star_from_parts([MeasuredSample(1.0, 1.0)], -1.0, 1.0, 1)
    with pytest.raises(ValueError):
        u_star_from_parts([MeasuredSample(1.0, 1.0)], 0.0, 0.0, 1)
    with pytest.raises(ValueError):
        u_star_from_parts([MeasuredSample(1.0, 3.0)], 0.0, 1.0, 1)
    with pytest.raises(ValueError):
        u_star_from_parts([MeasuredSample(-1.0, 1.0)], 0.0, 1.0, 1)


def test_of_bv_examples():
    assert u_star_of_bv(hat()).evaluate(S) == pytest.approx(1 - S / 2, abs=1e-12)
    assert u_star_of_bv(hat_plus_box()).evaluate(S) == pytest.approx(2 - S / 2, abs=1e-12)


def test_of_bv_cone_reproduces_itself():
    p = u_star_of_bv(cone(M=2048))
    s = np.linspace(0.0, math.pi * 0.999, 50)
    assert p.evaluate(s) == pytest.approx(1 - np.sqrt(s / math.pi), abs=1e-12)
    assert p.radial_values(np.array([0.0, 0.5])) == pytest.approx([1.0, 0.5], abs=1e-12)


def test_pointwise_examples():
    assert pointwise_comparison(hat())[0] == pytest.approx(0.0, abs=1e-6)
    assert pointwise_comparison(indicator_01())[0] == pytest.approx(0.0, abs=1e-9)
    assert pointwise_comparison(two_bumps())[0] < -0.5


@pytest.mark.parametrize(
    "u, expected",
    [(hat(), (1.0, 1.0)), (indicator_01(), (1.0, 2.0))],
)
def test_l1_examples(u, expected):
    norm_u, norm_star, holds = l1_comparison(u)
    assert (norm_u, norm_star) == pytest.approx(expected, abs=1e-12)
    assert holds


def test_l1_square_indicator():
    p = u_star_from_parts([MeasuredSample(0.0, 1.0)], 4.0, 1.0, 2)
    assert p.l1_norm() == pytest.approx(2 / math.sqrt(math.pi), abs=1e-12)


@pytest.mark.parametrize(
    "u, expected",
    [(hat(), (2, 2, 0, 0)), (indicator_01(), (0, 0, 2, 2)), (hat_plus_box(), (2, 2, 2, 2))],
)
def test_variation_preservation_examples(u, expected):
    assert variation_preservation(u, u_star_of_bv(u)) == pytest.approx(expected, abs=1e-12)


def test_profile_csv_round_trip():
    p = u_star_of_bv(hat_plus_box(100))
    step, head = step_from_csv(p.to_csv())
    assert head["n"] == 1 and head["b"] == p.b and head["singular_mass"] == p.singular_mass
    assert np.array_equal(step.breakpoints, p.profile_star.breakpoints)
    assert np.array_equal(step.values, p.profile_star.values)
    assert np.array_equal(step.ends, p.profile_star.ends)


def test_comparison_profiles_cover_the_domain():
    ustar, v = comparison_profiles(hat_plus_box(200))
    s = np.linspace(0.0, 1.99, 40)
    assert np.all(ustar(s) <= v(s) + 1e-9)


# -- properties -----------------------------------------------------------


@given(bv1d_functions())
def test_main_inequality_1d(u):
    _, _, holds = l1_comparison(u)
    assert holds


@given(radial_functions())
def test_main_inequality_radial(u):
    _, _, holds = l1_comparison(u)
    assert holds


@given(bv1d_functions())
def test_pointwise_comparison_1d(u):
    assert pointwise_comparison(u)[0] <= 1e-6


@given(radial_functions())
def test_pointwise_comparison_radial(u):
    assert pointwise_comparison(u)[0] <= 1e-6


@given(bv1d_functions())
def test_variation_is_preserved_1d(u):
    ac_u, ac_s, sing_u, sing_s = variation_preservation(u, u_star_of_bv(u))
    assert abs(ac_u - ac_s) <= 1e-6 * max(1.0, ac_u)
    assert abs(sing_u - sing_s) <= 1e-12 * max(1.0, sing_u)


@given(radial_functions())
def test_variation_is_preserved_radial(u):
    ac_u, ac_s, sing_u, sing_s = variation_preservation(u, u_star_of_bv(u))
    assert abs(ac_u - ac_s) <= 1e-6 * max(1.0, ac_u)
    assert abs(sing_u - sing_s) <= 1e-12 * max(1.0, sing_u)


@given(bv1d_functions())
def test_profile_floor_is_boundary_value(u):
    p = u_star_of_bv(u)
    prof = p.profile_star
    assert np.min(np.append(prof.values, prof.ends)) >= p.b * (1 - 1e-12)


@given(bv1d_functions())
def test_dropping_singular_mass_lowers_profile(u):
    p = u_star_of_bv(u)
    q = u_star_from_parts((p.grad_values, np.diff(p.grad_breaks)), 0.0, p.grad_breaks[-1], 1)
    s = np.linspace(0.0, p.grad_breaks[-1], 33)
    assert np.all(q.evaluate(s) <= p.evaluate(s) + 1e-12)


@given(radial_functions())
def test_gradient_identity(u):
    p = u_star_of_bv(u)
    scale = max(1.0, float(p.grad_values.max()) if p.grad_values.size else 1.0)
    assert p.gradient_identity_error() <= 1e-6 * scale


@given(radial_functions())
def test_equality_for_decreasing_profiles_with_increasing_slope(u):
    # radially decreasing with a radially nondecreasing gradient modulus:
    # the construction reproduces the function
    nodes = u.nodes
    slopes = np.sort(u.profile[1:])
    drops = slopes * np.diff(nodes)
    prof = np.concatenate([np.cumsum(drops[::-1])[::-1], [0.0]])
    w = RadialBVFunction(u.n, u.R, prof, (), nodes)
    norm_u, norm_star, _ = l1_comparison(w)
    assert norm_star == pytest.approx(norm_u, abs=1e-8 * max(1.0, norm_u))


@given(bv1d_functions())
def test_total_variation_of_u_star_equals_that_of_u(u):
    ac_u, ac_s, sing_u, sing_s = variation_preservation(u, u_star_of_bv(u))
    assert ac_s + sing_s == pytest.approx(total_variation_split(u)[2], rel=1e-6, abs=1e-9)
