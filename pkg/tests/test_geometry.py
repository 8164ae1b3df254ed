import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bvsym.generate import random_polygon
from bvsym.geometry import (
    BallSpec,
    Polygon,
    isoperimetric_deficit,
    polygon_metrics,
    regular_polygon,
    schwarz_ball,
    unit_ball_measure,
    unit_square,
)


@pytest.mark.parametrize("n, expected", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3), (4, math.pi**2 / 2)])
def test_unit_ball_measure(n, expected):
    assert unit_ball_measure(n) == pytest.approx(expected, rel=1e-15)


def test_unit_ball_measure_rejects_bad_dimension():
    with pytest.raises(ValueError):
        unit_ball_measure(0)
    with pytest.raises(ValueError):
        unit_ball_measure(1.5)


@pytest.mark.parametrize(
    "volume, n, R, per",
    [
        (math.pi, 2, 1.0, 2 * math.pi),
        (1.0, 2, 1 / math.sqrt(math.pi), 2 * math.sqrt(math.pi)),
        (2.0, 1, 1.0, 2.0),
    ],
)
def test_schwarz_ball(volume, n, R, per):
    ball = schwarz_ball(volume, n)
    assert ball.R == pytest.approx(R, rel=1e-14)
    assert ball.perimeter == pytest.approx(per, rel=1e-14)
    assert ball.volume == pytest.approx(volume, rel=1e-14)


def test_schwarz_ball_rejects_nonpositive_volume():
    with pytest.raises(ValueError):
        schwarz_ball(0.0, 2)


def test_polygon_metrics_examples():
    assert polygon_metrics(unit_square()) == pytest.approx((1.0, 4.0))
    tri = Polygon([(0, 0), (1, 0), (0, 1)])
    assert polygon_metrics(tri) == pytest.approx((0.5, 2 + math.sqrt(2)))
    hexagon = regular_polygon(6, side=1.0)
    assert polygon_metrics(hexagon) == pytest.approx((3 * math.sqrt(3) / 2, 6.0))


def test_regular_polygon_by_area():
    assert regular_polygon(64, area=1.0).area == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize(
    "args, expected",
    [((math.pi, 2 * math.pi, 2), 0.0), ((1.0, 4.0, 2), 4 / math.pi - 1), ((0.0, 0.0, 2), 0.0)],
)
def test_isoperimetric_deficit_examples(args, expected):
    assert isoperimetric_deficit(*args) == pytest.approx(expected, abs=1e-14)


def test_polygon_orientation_and_closing_vertex():
    cw = Polygon([(0, 0), (0, 1), (1, 1), (1, 0), (0, 0)])
    assert len(cw.vertices) == 4
    assert cw.area == pytest.approx(1.0)


def test_self_intersecting_polygon_rejected():
    with pytest.raises(ValueError, match="intersect"):
        Polygon([(0, 0), (2, 1), (2, 0), (0, 3)])


def test_degenerate_polygon_rejected():
    with pytest.raises(ValueError):
        Polygon([(0, 0), (1, 1), (2, 2)])


def test_contains():
    sq = unit_square()
    inside = sq.contains(np.array([0.5, 1.5, 0.1]), np.array([0.5, 0.5, 0.9]))
    assert inside.tolist() == [True, False, True]


def test_polygon_and_ball_json_round_trip():
    p = regular_polygon(5, side=0.7)
    assert Polygon.from_json(p.to_json()).vertices == p.vertices
    b = BallSpec(3, 1.25)
    assert BallSpec.from_json(b.to_json()) == b
    with pytest.raises(ValueError, match="vertices"):
        Polygon.from_json({})


def test_random_polygon_area_normalized():
    p = random_polygon(7)
    assert abs(p.area - 1.0) <= 1e-12


@given(st.integers(0, 2**32), st.integers(0, 50))
def test_random_polygons_satisfy_isoperimetric_inequality(seed, index):
    p = random_polygon(seed, index)
    area, per = polygon_metrics(p)
    assert isoperimetric_deficit(area, per, 2) >= -1e-12


@given(st.integers(3, 40), st.floats(0.1, 10.0))
def test_regular_polygons_approach_the_disk(k, area):
    p = regular_polygon(k, area=area)
    d_k = isoperimetric_deficit(p.area, p.perimeter, 2)
    p2 = regular_polygon(k + 1, area=area)
    assert 0.0 <= isoperimetric_deficit(p2.area, p2.perimeter, 2) <= d_k + 1e-12


@given(st.floats(1e-3, 1e3), st.integers(1, 5))
def test_balls_have_zero_deficit(volume, n):
    ball = schwarz_ball(volume, n)
    assert isoperimetric_deficit(ball.volume, ball.perimeter, n) == pytest.approx(0.0, abs=1e-9 * volume)
