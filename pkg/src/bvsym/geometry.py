"""Balls, polygons and the isoperimetric inequality."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


def unit_ball_measure(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n, pi^(n/2) / Gamma(n/2 + 1)."""
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    n = int(n)
    if n == 1:
        return 2.0
    if n == 2:
        return math.pi
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class BallSpec:
    """Centered ball of radius ``R`` in R^n."""

    n: int
    R: float

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n!r}")
        if not self.R > 0 or not math.isfinite(self.R):
            raise ValueError(f"radius must be positive and finite, got {self.R!r}")

    @property
    def volume(self) -> float:
        return unit_ball_measure(self.n) * self.R**self.n

    @property
    def perimeter(self) -> float:
        return self.n * unit_ball_measure(self.n) * self.R ** (self.n - 1)

    def to_json(self) -> dict:
        return {"n": int(self.n), "R": float(self.R)}

    @classmethod
    def from_json(cls, data: dict) -> "BallSpec":
        for key in ("n", "R"):
            if key not in data:
                raise ValueError(f"ball JSON: missing field '{key}'")
        return cls(int(data["n"]), float(data["R"]))


def schwarz_ball(volume: float, n: int) -> BallSpec:
    """The centered ball with the given measure."""
    if not volume > 0:
        raise ValueError(f"volume must be positive, got {volume!r}")
    R = (volume / unit_ball_measure(n)) ** (1.0 / n)
    return BallSpec(int(n), R)


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 < 0 and d3 * d4 < 0:
        return True
    return False


@dataclass(frozen=True)
class Polygon:
    """Simple closed polygon, vertices stored counter-clockwise.

    Clockwise input is reversed; self-intersecting or degenerate input raises
    ``ValueError``.
    """

    vertices: tuple[tuple[float, float], ...]

    def __init__(self, vertices: Iterable[Sequence[float]]):
        v = np.asarray([tuple(map(float, p)) for p in vertices], dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("polygon needs at least three planar vertices")
        if np.allclose(v[0], v[-1]) and len(v) > 3:
            v = v[:-1]
        if not np.all(np.isfinite(v)):
            raise ValueError("polygon vertices must be finite")
        area = _signed_area(v)
        if area == 0.0:
            raise ValueError("degenerate polygon (zero area)")
        if area < 0:
            v = v[::-1]
        k = len(v)
        for i in range(k):
            for j in range(i + 2, k):
                if i == 0 and j == k - 1:
                    continue
                if _segments_cross(v[i], v[(i + 1) % k], v[j], v[(j + 1) % k]):
                    raise ValueError(f"polygon edges {i} and {j} intersect")
        object.__setattr__(self, "vertices", tuple(map(tuple, v.tolist())))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def area(self) -> float:
        return _signed_area(self.array)

    @property
    def perimeter(self) -> float:
        v = self.array
        return float(np.sum(np.hypot(*(np.roll(v, -1, axis=0) - v).T)))

    def edges(self) -> list[tuple[np.ndarray, np.ndarray]]:
        v = self.array
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def bounds(self) -> tuple[float, float, float, float]:
        v = self.array
        return float(v[:, 0].min()), float(v[:, 1].min()), float(v[:, 0].max()), float(v[:, 1].max())

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Even-odd ray test; points on edges may land on either side."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for (x0, y0), (x1, y1) in self.edges():
            if y0 == y1:
                continue
            cond = (y0 > y) != (y1 > y)
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            inside ^= cond & (x < xc)
        return inside

    def scaled_to_area(self, area: float) -> "Polygon":
        """Homothetic copy about the centroid with the requested area."""
        v = self.array
        c = v.mean(axis=0)
        k = math.sqrt(area / self.area)
        return Polygon(c + k * (v - c))

    def to_json(self) -> dict:
        return {"vertices": [list(p) for p in self.vertices]}

    @classmethod
    def from_json(cls, data: dict) -> "Polygon":
        if "vertices" not in data:
            raise ValueError("polygon JSON: missing field 'vertices'")
        return cls(data["vertices"])


def polygon_metrics(p: Polygon) -> tuple[float, float]:
    """Shoelace area and edge-length perimeter."""
    area = p.area
    if area <= 0:
        raise ValueError("degenerate polygon")
    return area, p.perimeter


def unit_square() -> Polygon:
    return Polygon([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])


def regular_polygon(k: int, side: float | None = None, area: float | None = None,
                    center: tuple[float, float] = (0.0, 0.0)) -> Polygon:
    """Regular k-gon; give either the side length or the area."""
    if k < 3:
        raise ValueError("a polygon needs at least 3 sides")
    theta = 2.0 * np.pi * np.arange(k) / k
    if side is not None:
        circum = side / (2.0 * math.sin(math.pi / k))
    elif area is not None:
        circum = math.sqrt(2.0 * area / (k * math.sin(2.0 * math.pi / k)))
    else:
        circum = 1.0
    pts = np.column_stack([center[0] + circum * np.cos(theta), center[1] + circum * np.sin(theta)])
    return Polygon(pts)


def isoperimetric_deficit(measure: float, perimeter: float, n: int) -> float:
    """Isoperimetric upper bound on the measure minus the measure.

    Non-negative for every admissible set. For ``n == 1`` a nonempty bounded
    set has at least two boundary points, so the deficit is ``perimeter - 2``
    (``perimeter`` for the empty set).
    """
    if n == 1:
        return perimeter - (2.0 if measure > 0 else 0.0)
    if n < 1:
        raise ValueError("dimension must be positive")
    w = unit_ball_measure(n)
    bound = n ** (-n / (n - 1.0)) * w ** (-1.0 / (n - 1.0)) * perimeter ** (n / (n - 1.0))
    return bound - measure
