"""Penalized torsional rigidity and the insulation quotient.

Two functionals are handled:

* ``F(psi) = 1/2 int |grad psi|^2 - int psi + lam |{grad psi != 0}|`` over
  functions vanishing on the boundary, with ``T_F = -inf F``;
* ``Q(psi) = (int |grad psi|^2 + (1/m) (int_boundary |psi|)^2) / (int |psi|)^2``
  over functions with free boundary values, with ``T_G = 1 / min Q``.

On balls both are solved in closed form (or by a one-parameter search over
radial profiles).  On polygons every candidate test function yields a lower
bound for the rigidity, and the comparison with the ball of equal area is a
statement about those lower bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import shapely
import shapely.geometry

from bvsym.geometry import Polygon, schwarz_ball, unit_ball_measure

RADIAL_NODES = 10_000
GRID_DEFAULT = 256
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)


# -- radial candidates for F --------------------------------------------------


@dataclass(frozen=True)
class RadialCandidate:
    """Radial test function on ``B_R`` that is flat on ``B_r``.

    On ``(r, R]`` the slope is ``-((rho^n - core^n) / (n rho^(n-1)) + offset)``
    (a solution of ``-Laplace psi = 1`` when ``offset = 0``) and the profile
    vanishes at ``R``.  ``core`` defaults to ``r``, which makes the slope
    continuous at ``r``; ``core = 0`` gives the truncated torsion function.
    Nonzero offsets exist only for the brute-force cross check.
    """

    n: int
    R: float
    r: float = 0.0
    core: float | None = None
    offset: float = 0.0
    nodes: int = RADIAL_NODES

    def __post_init__(self) -> None:
        if self.n < 1 or not self.R > 0:
            raise ValueError("need n >= 1 and R > 0")
        if not 0.0 <= self.r <= self.R:
            raise ValueError("flat radius must lie in [0, R]")
        if self.core is not None and not 0.0 <= self.core <= self.r:
            raise ValueError("core radius must lie in [0, r]")

    @property
    def core_radius(self) -> float:
        return self.r if self.core is None else self.core

    def _slope_magnitude(self, rho: np.ndarray) -> np.ndarray:
        n = self.n
        return (rho**n - self.core_radius**n) / (n * rho ** (n - 1)) + self.offset

    def parts(self) -> tuple[float, float, float]:
        """``(int |grad psi|^2, int psi, |{grad psi != 0}|)``."""
        if self.r >= self.R:
            return 0.0, 0.0, 0.0
        n, om = self.n, unit_ball_measure(self.n)
        x, w = _radial_quadrature(self.r, self.R, self.nodes)
        q = self._slope_magnitude(x)
        dirichlet = float(np.sum(w * q * q * n * om * x ** (n - 1)))
        # integrating by parts moves the derivative onto the volume weight
        mass = float(np.sum(w * q * om * x**n))
        active = om * (self.R**n - self.r**n)
        return dirichlet, mass, active

    def values(self, rho) -> np.ndarray:
        """Profile ``psi(rho)`` by cumulative quadrature from ``R`` inwards."""
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        fine = np.linspace(self.r, self.R, max(self.nodes, 2))
        q = np.where(fine > 0, self._slope_magnitude(np.maximum(fine, 1e-300)), self.offset)
        seg = 0.5 * (q[1:] + q[:-1]) * np.diff(fine)
        tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        out = np.interp(np.clip(rho, self.r, self.R), fine, tail)
        return np.where(rho > self.R, 0.0, out)


def _radial_quadrature(r: float, R: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite 4-point Gauss-Legendre nodes and weights on ``[r, R]``."""
    panels = max(1, nodes // 4)
    edges = np.linspace(r, R, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    x = (mid[:, None] + half[:, None] * _GL4_X[None, :]).ravel()
    w = (half[:, None] * _GL4_W[None, :]).ravel()
    return x, w


def _radial_F(c: RadialCandidate, lam: float) -> float:
    d, mass, active = c.parts()
    return 0.5 * d - mass + lam * active


class _BallFamily:
    """Energy of the annular torsion solutions as a function of ``r`` and
    ``A = core^n``.

    With slope ``alpha - A beta`` (``alpha = rho/n``, ``beta = 1/(n rho^(n-1))``)
    the Dirichlet integral is ``D0 - 2 A D1 + A^2 D2`` and the mass is
    ``M0 - A M1``; the five coefficients do not depend on the penalty.
    """

    def __init__(self, R: float, n: int, nodes: int):
        self.R, self.n, self.nodes = R, n, nodes
        self.omega = unit_ball_measure(n)
        self._cache: dict[float, np.ndarray] = {}

    def coefficients(self, r: float) -> np.ndarray:
        c = self._cache.get(r)
        if c is None:
            n, om = self.n, self.omega
            if r >= self.R:
                c = np.zeros(5)
            else:
                x, w = _radial_quadrature(r, self.R, self.nodes)
                alpha = x / n
                beta = 1.0 / (n * x ** (n - 1))
                dw = w * n * om * x ** (n - 1)
                mw = w * om * x**n
                c = np.array([
                    np.sum(dw * alpha * alpha), np.sum(dw * alpha * beta), np.sum(dw * beta * beta),
                    np.sum(mw * alpha), np.sum(mw * beta),
                ])
            self._cache[r] = c
        return c

    def best(self, r: float, lam: float) -> tuple[float, float]:
        """Optimal ``A`` in ``[0, r^n]`` and the resulting energy."""
        if r >= self.R:
            return 0.0, 0.0
        d0, d1, d2, m0, m1 = self.coefficients(r)
        A = 0.0 if d2 <= 0 else min(max((d1 - m1) / d2, 0.0), r**self.n)
        F = 0.5 * (d0 - 2 * A * d1 + A * A * d2) - (m0 - A * m1) + lam * self.omega * (self.R**self.n - r**self.n)
        return A, float(F)


_FAMILIES: dict[tuple[float, int, int], _BallFamily] = {}


def _family(R: float, n: int, nodes: int) -> _BallFamily:
    key = (float(R), int(n), int(nodes))
    if key not in _FAMILIES:
        if len(_FAMILIES) > 32:
            _FAMILIES.clear()
        _FAMILIES[key] = _BallFamily(float(R), int(n), int(nodes))
    return _FAMILIES[key]


def optimal_ball_candidate(R: float, n: int, lam: float, nodes: int = RADIAL_NODES,
                           bracket: int = 1000) -> tuple[RadialCandidate, float]:
    """Minimizer of ``F`` on ``B_R`` among radial annular torsion solutions.

    The flat radius is located by a uniform scan followed by golden-section
    refinement; for each radius the core parameter enters quadratically and
    is optimized exactly.  ``r = R`` (the zero function) is always included.
    """
    if lam < 0:
        raise ValueError("penalty must be non-negative")
    if not R > 0:
        raise ValueError("radius must be positive")
    fam = _family(R, n, nodes)

    def F(r: float) -> float:
        return fam.best(min(max(float(r), 0.0), R), lam)[1]

    rs = np.linspace(0.0, R, bracket)
    vals = np.array([F(r) for r in rs])
    k = int(np.argmin(vals))
    a = rs[max(k - 1, 0)]
    b = rs[min(k + 1, len(rs) - 1)]
    best_r, best_v = float(rs[k]), float(vals[k])
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = F(x1), F(x2)
    for _ in range(200):
        if b - a <= 1e-13 * max(R, 1.0):
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = F(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = F(x2)
    for r, v in ((x1, f1), (x2, f2)):
        if v < best_v:
            best_r, best_v = float(r), float(v)
    if best_v >= 0.0:
        return RadialCandidate(n, R, R, R, 0.0, nodes), 0.0
    A, _ = fam.best(best_r, lam)
    core = min(A ** (1.0 / n), best_r)
    return RadialCandidate(n, R, best_r, core, 0.0, nodes), best_v


def minimize_F_ball(R: float, n: int, lam: float, nodes: int = RADIAL_NODES,
                    bracket: int = 1000) -> tuple[float, float]:
    """``(r_opt, T_F)`` on the ball of radius ``R``."""
    cand, F = optimal_ball_candidate(R, n, lam, nodes, bracket)
    return cand.r, (0.0 if F >= 0.0 else -F)


def F_profile(R: float, n: int, lam: float, points: int = 201,
              nodes: int = RADIAL_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Optimal ``F`` as a function of the flat radius."""
    fam = _family(R, n, nodes)
    rs = np.linspace(0.0, R, points)
    return rs, np.array([fam.best(float(r), lam)[1] for r in rs])


def brute_offset_search(R: float, n: int, lam: float, radii: int = 41, offsets: int = 41,
                        span: float = 0.5, nodes: int = 2000) -> tuple[float, float, float]:
    """Grid search over the flat radius and a constant slope offset added to
    the truncated torsion profile; returns the best ``(r, offset, F)``.
    Offsets are scaled by ``R / n``, the size of the slope."""
    best = (float(R), 0.0, 0.0)
    for r in np.linspace(0.0, R, radii):
        for o in np.linspace(-span, span, offsets) * R / n:
            v = _radial_F(RadialCandidate(n, R, float(r), 0.0, float(o), nodes), lam)
            if v < best[2]:
                best = (float(r), float(o), float(v))
    return best


# -- grids on polygons --------------------------------------------------------


def _edge_distance(poly: Polygon, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = np.full(x.shape, np.inf)
    for p, q in poly.edges():
        e = q - p
        t = np.clip(((x - p[0]) * e[0] + (y - p[1]) * e[1]) / float(e @ e), 0.0, 1.0)
        d = np.minimum(d, np.hypot(x - p[0] - t * e[0], y - p[1] - t * e[1]))
    return d


@dataclass(frozen=True, eq=False)
class GridGeometry:
    """Node grid covering a polygon with spacing ``h``.

    ``mask`` marks nodes strictly inside the polygon (Dirichlet unknowns);
    ``weights`` is the fraction of each node's ``h x h`` cell inside the
    polygon, used for integrals over the domain.
    """

    polygon: Polygon
    x0: float
    y0: float
    h: float
    nx: int
    ny: int

    @classmethod
    def for_polygon(cls, poly: Polygon, N: int = GRID_DEFAULT) -> "GridGeometry":
        if N < 4:
            raise ValueError("grid needs at least 4 cells per side")
        xmin, ymin, xmax, ymax = poly.bounds()
        h = max(xmax - xmin, ymax - ymin) / N
        nx = int(math.ceil((xmax - xmin) / h - 1e-9)) + 1
        ny = int(math.ceil((ymax - ymin) / h - 1e-9)) + 1
        return cls(poly, xmin, ymin, h, nx, ny)

    @cached_property
    def xs(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)

    @cached_property
    def ys(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.ny)

    @cached_property
    def XY(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ys)

    @cached_property
    def boundary_distance(self) -> np.ndarray:
        X, Y = self.XY
        return _edge_distance(self.polygon, X, Y)

    @cached_property
    def mask(self) -> np.ndarray:
        """Nodes whose ``2h x 2h`` star lies in the closed polygon, so the
        piecewise-linear hat function of every masked node vanishes outside."""
        X, Y = self.XY
        inside = self.polygon.contains(X, Y) & (self.boundary_distance > 1e-9 * self.h)
        out = np.zeros_like(inside)
        if np.any(inside):
            poly = shapely.Polygon(self.polygon.vertices)
            h = self.h * (1.0 - 1e-12)
            stars = shapely.box(X[inside] - h, Y[inside] - h, X[inside] + h, Y[inside] + h)
            out[inside] = shapely.covers(poly, stars)
        return out

    @cached_property
    def weights(self) -> np.ndarray:
        X, Y = self.XY
        w = self.mask.astype(float)
        near = self.boundary_distance < self.h
        if np.any(near):
            hh = 0.5 * self.h
            cells = shapely.box(X[near] - hh, Y[near] - hh, X[near] + hh, Y[near] + hh)
            poly = shapely.Polygon(self.polygon.vertices)
            w[near] = shapely.area(shapely.intersection(cells, poly)) / self.h**2
        return w

    @cached_property
    def boundary_samples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Points along the edges at spacing at most ``h`` with trapezoid weights."""
        xs, ys, ws = [], [], []
        for p, q in self.polygon.edges():
            length = float(np.hypot(*(q - p)))
            k = max(1, int(math.ceil(length / self.h)))
            t = np.linspace(0.0, 1.0, k + 1)
            w = np.full(k + 1, length / k)
            w[0] = w[-1] = 0.5 * length / k
            xs.append(p[0] + t * (q[0] - p[0]))
            ys.append(p[1] + t * (q[1] - p[1]))
            ws.append(w)
        return np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)

    @cached_property
    def _trace_stencil(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        bx, by, bw = self.boundary_samples
        fx = np.clip((bx - self.x0) / self.h, 0.0, self.nx - 1.0)
        fy = np.clip((by - self.y0) / self.h, 0.0, self.ny - 1.0)
        i = np.clip(np.floor(fx).astype(int), 0, self.nx - 2)
        j = np.clip(np.floor(fy).astype(int), 0, self.ny - 2)
        return i, j, fx - i, fy - j, bw

    def trace(self, values: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of node values at the boundary samples."""
        i, j, tx, ty, _ = self._trace_stencil
        v = values
        return ((1 - tx) * (1 - ty) * v[j, i] + tx * (1 - ty) * v[j, i + 1]
                + (1 - tx) * ty * v[j + 1, i] + tx * ty * v[j + 1, i + 1])

    @cached_property
    def bilinear_rules(self) -> dict:
        """Exact quadrature data for bilinear interpolants restricted to the
        polygon: fully covered cells, signed triangles covering the cut
        cells (midpoint rule, exact for quadratics) and boundary pieces split
        at grid lines (Simpson's rule, exact for quadratics)."""
        poly = shapely.Polygon(self.polygon.vertices)
        xs, ys, h = self.xs, self.ys, self.h
        CX, CY = np.meshgrid(xs[:-1], ys[:-1])
        boxes = shapely.box(CX, CY, CX + h, CY + h)
        full = shapely.covers(poly, boxes)
        cut = shapely.intersects(poly, boxes) & ~full
        tj, ti, pts, wts = [], [], [], []
        for j, i in zip(*np.nonzero(cut)):
            piece = shapely.intersection(poly, boxes[j, i])
            for g in getattr(piece, "geoms", [piece]):
                if g.geom_type != "Polygon" or g.area <= 0:
                    continue
                g = shapely.geometry.polygon.orient(g, sign=1.0)
                for ring in [g.exterior, *g.interiors]:
                    c = (np.asarray(ring.coords)[:-1] - (xs[i], ys[j])) / h
                    o = c[0]
                    for a, b in zip(c[1:-1], c[2:]):
                        area = 0.5 * ((a[0] - o[0]) * (b[1] - o[1]) - (b[0] - o[0]) * (a[1] - o[1]))
                        # holes are stored clockwise, so their signed area is negative
                        tj.append(j)
                        ti.append(i)
                        pts.append([(o + a) / 2, (a + b) / 2, (b + o) / 2])
                        wts.append(area / 3.0)
        bj, bi, bpts, bw = [], [], [], []
        for p0, p1 in self.polygon.edges():
            d = p1 - p0
            ts = [0.0, 1.0]
            for k, grid in ((0, xs), (1, ys)):
                if d[k] != 0:
                    ts.extend(((grid - p0[k]) / d[k]).tolist())
            ts = np.unique(np.clip(np.array(ts), 0.0, 1.0))
            length = float(np.hypot(*d))
            for t0, t1 in zip(ts[:-1], ts[1:]):
                if t1 - t0 <= 1e-15:
                    continue
                q0, q1 = p0 + t0 * d, p0 + t1 * d
                qm = 0.5 * (q0 + q1)
                i = min(max(int(np.floor((qm[0] - self.x0) / h)), 0), self.nx - 2)
                j = min(max(int(np.floor((qm[1] - self.y0) / h)), 0), self.ny - 2)
                base = np.array([xs[i], ys[j]])
                bj.append(j)
                bi.append(i)
                bpts.append([(q0 - base) / h, (qm - base) / h, (q1 - base) / h])
                seg = (t1 - t0) * length
                bw.append([seg / 6.0, 4.0 * seg / 6.0, seg / 6.0])
        return {
            "full": full,
            "tri_j": np.array(tj, dtype=int), "tri_i": np.array(ti, dtype=int),
            "tri_pts": np.array(pts, dtype=float).reshape(-1, 3, 2), "tri_w": np.array(wts, dtype=float),
            "bnd_j": np.array(bj, dtype=int), "bnd_i": np.array(bi, dtype=int),
            "bnd_pts": np.array(bpts, dtype=float).reshape(-1, 3, 2), "bnd_w": np.array(bw, dtype=float).reshape(-1, 3),
        }

    def boundary_integral(self, values: np.ndarray) -> float:
        return float(np.sum(self._trace_stencil[4] * np.abs(self.trace(values))))

    def gradient(self, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        gy, gx = np.gradient(values, self.h)
        return gx, gy


@dataclass(frozen=True, eq=False)
class GridFunction2D:
    """Node values on a :class:`GridGeometry`.

    With ``dirichlet=True`` the function is zero off the strict interior
    mask; otherwise ``values`` is a smooth extension over the whole box and
    only its restriction to the polygon matters.
    """

    geometry: GridGeometry
    values: np.ndarray
    dirichlet: bool = True

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        g = self.geometry
        if v.shape != (g.ny, g.nx):
            raise ValueError(f"values must have shape {(g.ny, g.nx)}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        if self.dirichlet:
            v = np.where(g.mask, v, 0.0)
        object.__setattr__(self, "values", v)

    def scaled(self, c: float) -> "GridFunction2D":
        return GridFunction2D(self.geometry, c * self.values, self.dirichlet)

    def to_csv(self) -> str:
        return "\n".join(",".join(repr(float(x)) for x in row) for row in self.values) + "\n"

    def sidecar(self) -> dict:
        g = self.geometry
        return {
            "x0": g.x0, "y0": g.y0, "h": g.h, "nx": g.nx, "ny": g.ny,
            "dirichlet": self.dirichlet, "polygon": g.polygon.to_json(),
        }


def _grid_F_parts(psi: GridFunction2D) -> tuple[float, float, float]:
    """Central differences, node sums and a node-count active set."""
    g = psi.geometry
    gx, gy = g.gradient(psi.values)
    mag2 = gx * gx + gy * gy
    mag = np.sqrt(mag2)
    eps = 1e-10 * (float(mag.max()) + 1.0)
    area = g.h**2
    return float(area * mag2.sum()), float(area * psi.values.sum()), float(area * np.count_nonzero(mag > eps))


def _p1_F_parts(psi: GridFunction2D) -> tuple[float, float, float]:
    """Exact integrals for the continuous piecewise-linear interpolant on the
    grid split into triangles along the ``(i, j) -> (i+1, j+1)`` diagonals.

    For Dirichlet grid functions this interpolant lies in H^1_0 of the
    polygon, so the resulting energy belongs to a genuine test function.
    """
    v = psi.values
    h = psi.geometry.h
    dx = np.diff(v, axis=1)
    dy = np.diff(v, axis=0)
    dirichlet = float(np.sum(dx * dx) + np.sum(dy * dy))
    # lower triangle of cell (j, i): bottom edge and right edge
    low = np.hypot(dx[:-1, :], dy[:, 1:]) / h
    # upper triangle: left edge and top edge
    up = np.hypot(dx[1:, :], dy[:, :-1]) / h
    eps = 1e-10 * (max(float(low.max(initial=0.0)), float(up.max(initial=0.0))) + 1.0)
    active = 0.5 * h * h * float(np.count_nonzero(low > eps) + np.count_nonzero(up > eps))
    if not psi.dirichlet:
        raise ValueError("exact piecewise-linear integrals need a Dirichlet grid function")
    return dirichlet, float(h * h * v.sum()), active


_F_SCHEMES = {"central": _grid_F_parts, "p1": _p1_F_parts}


def evaluate_F_lambda(psi: Union[GridFunction2D, RadialCandidate], lam: float,
                      scheme: str = "central") -> float:
    """``1/2 int |grad psi|^2 - int psi + lam |{grad psi != 0}|``.

    Grid functions use central differences by default; ``scheme="p1"``
    integrates the piecewise-linear interpolant exactly.
    """
    if lam < 0:
        raise ValueError("penalty must be non-negative")
    if isinstance(psi, RadialCandidate):
        return _radial_F(psi, lam)
    d, mass, active = _F_SCHEMES[scheme](psi)
    return 0.5 * d - mass + lam * active


def best_scaled_F(psi: GridFunction2D, lam: float, scheme: str = "p1") -> tuple[float, float]:
    """``(t, -F(t psi))`` for the best positive multiple ``t`` of ``psi``."""
    d, mass, active = _F_SCHEMES[scheme](psi)
    if d <= 0 or mass <= 0:
        return 0.0, 0.0
    t = mass / d
    return t, mass * mass / (2.0 * d) - lam * active


def discrete_torsion(geom: GridGeometry) -> GridFunction2D:
    """Five-point solution of ``-Laplace psi = 1`` with zero boundary values."""
    mask = geom.mask
    idx = -np.ones(mask.shape, dtype=np.int64)
    nodes = np.flatnonzero(mask.ravel())
    idx.ravel()[nodes] = np.arange(len(nodes))
    J, I = np.nonzero(mask)
    rows = [np.arange(len(nodes))]
    cols = [np.arange(len(nodes))]
    data = [np.full(len(nodes), 4.0)]
    for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
        jj, ii = J + dj, I + di
        ok = (jj >= 0) & (jj < mask.shape[0]) & (ii >= 0) & (ii < mask.shape[1])
        nb = np.full(len(J), -1)
        nb[ok] = idx[jj[ok], ii[ok]]
        has = nb >= 0
        rows.append(np.flatnonzero(has))
        cols.append(nb[has])
        data.append(np.full(int(has.sum()), -1.0))
    A = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(len(nodes), len(nodes)))
    sol = spla.spsolve(A.tocsc(), np.full(len(nodes), geom.h**2))
    vals = np.zeros(mask.shape)
    vals[J, I] = sol
    return GridFunction2D(geom, vals, True)


def _smooth_field(geom: GridGeometry, rng: np.random.Generator, modes: int = 4) -> np.ndarray:
    X, Y = geom.XY
    xmin, ymin, xmax, ymax = geom.polygon.bounds()
    L = max(xmax - xmin, ymax - ymin)
    u = (X - xmin) / L
    v = (Y - ymin) / L
    f = np.zeros_like(X)
    for a in range(modes):
        for b in range(modes):
            amp = rng.normal() / (1.0 + a * a + b * b)
            phase = rng.uniform(0, 2 * np.pi)
            f += amp * np.cos(np.pi * (a * u + b * v) + phase)
    return f / max(1e-12, float(np.abs(f).max()))


def F_candidates(geom: GridGeometry, count: int = 50, seed: int = 0) -> list[GridFunction2D]:
    """Zero, the discrete torsion function, its truncations, distance bumps
    and random smooth multiplicative perturbations, all masked."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF]))
    sol = discrete_torsion(geom)
    top = float(sol.values.max())
    d = np.where(geom.mask, geom.boundary_distance, 0.0)
    X, Y = geom.XY
    out = [GridFunction2D(geom, np.zeros_like(sol.values)), sol]
    for q in np.linspace(0.1, 0.9, 9):
        out.append(GridFunction2D(geom, np.minimum(sol.values, q * top)))
    for p in (1.0, 1.5, 2.0, 3.0):
        out.append(GridFunction2D(geom, d**p))
    cx, cy = np.mean(geom.polygon.array, axis=0)
    for _ in range(5):
        k = rng.integers(np.count_nonzero(geom.mask))
        jx, ix = np.argwhere(geom.mask)[k]
        bx = 0.5 * (X[jx, ix] + cx)
        by = 0.5 * (Y[jx, ix] + cy)
        s2 = float(d.max()) ** 2 * rng.uniform(0.5, 2.0)
        out.append(GridFunction2D(geom, d * np.exp(-((X - bx) ** 2 + (Y - by) ** 2) / s2)))
    while len(out) < count:
        eps = rng.uniform(0.05, 0.5)
        vals = sol.values * np.exp(eps * _smooth_field(geom, rng))
        if rng.uniform() < 0.3:
            vals = np.minimum(vals, rng.uniform(0.5, 0.95) * float(vals.max()))
        out.append(GridFunction2D(geom, vals))
    return out[:count]


# -- the insulation quotient --------------------------------------------------


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Piecewise-linear radial function on ``B_R`` given at ``nodes``."""

    n: int
    R: float
    values: np.ndarray
    nodes: np.ndarray | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        nodes = np.linspace(0.0, self.R, len(v)) if self.nodes is None else np.asarray(self.nodes, dtype=float)
        if nodes.shape != v.shape or len(v) < 2:
            raise ValueError("profile needs matching nodes and values")
        object.__setattr__(self, "nodes", nodes)

    def G_parts(self) -> tuple[float, float, float]:
        """``(int |grad|^2, boundary integral of |psi|, int |psi|)``."""
        n, om = self.n, unit_ball_measure(self.n)
        x, w = _GL4_X, _GL4_W
        a, b = self.nodes[:-1], self.nodes[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = mid[:, None] + half[:, None] * x[None, :]
        weight = n * om * pts ** (n - 1)
        slope = np.diff(self.values) / (b - a)
        t = (pts - a[:, None]) / (b - a)[:, None]
        val = self.values[:-1, None] + np.diff(self.values)[:, None] * t
        dirichlet = float(np.sum(half[:, None] * w[None, :] * weight * slope[:, None] ** 2))
        mass = float(np.sum(half[:, None] * w[None, :] * weight * np.abs(val)))
        trace = abs(float(self.values[-1])) * n * om * self.R ** (n - 1)
        return dirichlet, trace, mass


def evaluate_G(psi: Union[GridFunction2D, RadialProfile], m: float, scheme: str = "grid") -> float:
    """``(int |grad psi|^2 + (1/m) (int_boundary |psi|)^2) / (int |psi|)^2``.

    Grid functions use central differences, cell-coverage weights and edge
    sampling by default; ``scheme="bilinear"`` integrates the bilinear
    interpolant of ``|psi|`` over the polygon exactly.
    """
    if not m > 0:
        raise ValueError("m must be positive")
    if isinstance(psi, RadialProfile):
        d, tr, mass = psi.G_parts()
    elif scheme == "bilinear":
        d, tr, mass = _bilinear_G_parts(psi)
    elif scheme == "grid":
        d, tr, mass = _grid_G_parts(psi)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if mass <= 0:
        raise ValueError("the quotient needs a test function with nonzero integral")
    return (d + tr * tr / m) / (mass * mass)


def _grid_G_parts(psi: GridFunction2D) -> tuple[float, float, float]:
    g = psi.geometry
    w = g.weights * g.h**2
    gx, gy = g.gradient(psi.values)
    d = float(np.sum(w * (gx * gx + gy * gy)))
    mass = float(np.sum(w * np.abs(psi.values)))
    return d, g.boundary_integral(psi.values), mass


def _bilinear_G_parts(psi: GridFunction2D) -> tuple[float, float, float]:
    """Exact integrals of the bilinear interpolant of ``|psi|`` (an H^1
    function) over the polygon and along its boundary."""
    g = psi.geometry
    rules = g.bilinear_rules
    v = np.abs(psi.values)
    a = v[:-1, :-1]
    b = v[:-1, 1:] - a
    c = v[1:, :-1] - a
    d = v[1:, 1:] - v[:-1, 1:] - v[1:, :-1] + a
    h2 = g.h**2
    full = rules["full"]
    # closed-form cell integrals in local coordinates (s, t) in [0, 1]^2
    grad_full = b * b + b * d + d * d / 3.0 + c * c + c * d + d * d / 3.0
    mass_full = a + 0.5 * b + 0.5 * c + 0.25 * d
    dirichlet = float(np.sum(grad_full[full]))
    mass = float(h2 * np.sum(mass_full[full]))
    tj, ti = rules["tri_j"], rules["tri_i"]
    if len(tj):
        st = rules["tri_pts"]
        s_, t_ = st[..., 0], st[..., 1]
        A, B, C, D = (x[tj, ti][:, None] for x in (a, b, c, d))
        val = A + B * s_ + C * t_ + D * s_ * t_
        grad = (B + D * t_) ** 2 + (C + D * s_) ** 2
        w = rules["tri_w"][:, None]
        dirichlet += float(np.sum(w * grad))
        mass += float(h2 * np.sum(w * val))
    bj, bi = rules["bnd_j"], rules["bnd_i"]
    st = rules["bnd_pts"]
    s_, t_ = st[..., 0], st[..., 1]
    A, B, C, D = (x[bj, bi][:, None] for x in (a, b, c, d))
    trace = float(np.sum(rules["bnd_w"] * (A + B * s_ + C * t_ + D * s_ * t_)))
    return dirichlet, trace, mass


def minimize_G_ball(R: float, n: int, m: float) -> float:
    """``T_G`` on ``B_R`` from the radial Euler-Lagrange solution
    ``u = (R^2 - rho^2) / (2n) + c`` with ``c = m R / (n Per(B_R))``."""
    if not (R > 0 and m > 0):
        raise ValueError("R and m must be positive")
    om = unit_ball_measure(n)
    return om * R ** (n + 2) / (n * (n + 2)) + m * R * R / (n * n)


def G_ball_solution(R: float, n: int, m: float, nodes: int = 513) -> RadialProfile:
    per = n * unit_ball_measure(n) * R ** (n - 1)
    rho = np.linspace(0.0, R, nodes)
    return RadialProfile(n, R, (R * R - rho * rho) / (2 * n) + m * R / (n * per), rho)


def G_ball_oracle(R: float, n: int, m: float, nodes: int = 512) -> tuple[float, RadialProfile]:
    """Direct minimization of the quotient over continuous piecewise-linear
    radial profiles on ``nodes`` cells.

    For non-negative profiles the quotient is ``(x'Kx + (Per^2/m) x_N^2) /
    (w'x)^2``; its minimum is ``1 / (w' M^-1 w)`` with ``M = K + (Per^2/m)
    e_N e_N'``, attained at ``x = M^-1 w`` (which is positive).
    """
    om = unit_ball_measure(n)
    per = n * om * R ** (n - 1)
    rho = np.linspace(0.0, R, nodes + 1)
    a, b = rho[:-1], rho[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * _GL4_X[None, :]
    wq = half[:, None] * _GL4_W[None, :] * n * om * pts ** (n - 1)
    t = (pts - a[:, None]) / (b - a)[:, None]
    stiff = wq.sum(axis=1) / (b - a) ** 2
    load_l = np.sum(wq * (1 - t), axis=1)
    load_r = np.sum(wq * t, axis=1)
    N = nodes + 1
    i = np.arange(nodes)
    K = sp.coo_matrix((np.concatenate([stiff, stiff, -stiff, -stiff]),
                       (np.concatenate([i, i + 1, i, i + 1]), np.concatenate([i, i + 1, i + 1, i]))),
                      shape=(N, N)).tocsr()
    K = K + sp.coo_matrix(([per * per / m], ([N - 1], [N - 1])), shape=(N, N)).tocsr()
    w = np.zeros(N)
    np.add.at(w, i, load_l)
    np.add.at(w, i + 1, load_r)
    x = spla.spsolve(K.tocsc(), w)
    return float(w @ x), RadialProfile(n, R, x, rho)


def _ritz_G(geom: GridGeometry, basis: list[np.ndarray], m: float) -> np.ndarray:
    """Minimizer of the quotient over the span of ``basis`` (assumed to stay
    positive on the domain), computed with the grid quadrature rules."""
    w = geom.weights * geom.h**2
    grads = [geom.gradient(b) for b in basis]
    k = len(basis)
    A = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            A[i, j] = A[j, i] = float(np.sum(w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1])))
    bw = geom._trace_stencil[4]
    traces = np.array([geom.trace(b) for b in basis])
    tr = traces @ bw
    c = np.array([float(np.sum(w * b)) for b in basis])
    M = A + np.outer(tr, tr) / m
    coef = np.linalg.lstsq(M, c, rcond=None)[0]
    return sum(ci * bi for ci, bi in zip(coef, basis))


def G_candidates(geom: GridGeometry, m: float, count: int = 50, seed: int = 0) -> list[GridFunction2D]:
    """Constants, polynomial and torsion-augmented Ritz minimizers, shifted
    torsion functions and random positive perturbations."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6]))
    X, Y = geom.XY
    cx, cy = np.mean(geom.polygon.array, axis=0)
    xmin, ymin, xmax, ymax = geom.polygon.bounds()
    L = max(xmax - xmin, ymax - ymin)
    u, v = (X - cx) / L, (Y - cy) / L
    poly_basis = [u**i * v**j for i in range(5) for j in range(5 - i)]
    sol = discrete_torsion(geom).values
    out = [GridFunction2D(geom, np.ones_like(X), False)]
    best_poly = _ritz_G(geom, poly_basis, m)
    out.append(GridFunction2D(geom, best_poly, False))
    quad = _ritz_G(geom, poly_basis[:6], m)
    out.append(GridFunction2D(geom, quad, False))
    aug = _ritz_G(geom, [np.ones_like(X), sol], m)
    out.append(GridFunction2D(geom, aug, False))
    top = float(sol.max())
    for c in np.geomspace(0.05, 5.0, 10):
        out.append(GridFunction2D(geom, sol + c * top, False))
    base = best_poly if float(np.sum(geom.weights * best_poly)) > 0 else np.ones_like(X)
    while len(out) < count:
        eps = rng.uniform(0.02, 0.3)
        out.append(GridFunction2D(geom, base * np.exp(eps * _smooth_field(geom, rng)), False))
    return out[:count]


# -- Saint-Venant comparisons -------------------------------------------------


@dataclass
class TorsionReport:
    """Ball value against the best polygon lower bound."""

    functional: str
    param: float
    domain: dict
    bound: float
    ball_value: float
    margin: float
    tolerance: float
    passed: bool
    best_index: int = -1
    candidate_values: list[float] = field(default_factory=list)
    ball_radius: float = 0.0

    def to_json(self) -> dict:
        return {
            "functional": self.functional,
            "param": self.param,
            "domain": self.domain,
            "bound": self.bound,
            "ball_value": self.ball_value,
            "ball_radius": self.ball_radius,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "best_index": self.best_index,
            "candidate_values": list(self.candidate_values),
        }


def saint_venant_F_suite(domain: Polygon, lam: float, candidates: Sequence[GridFunction2D],
                         tol: float = 1e-3, scheme: str = "p1") -> TorsionReport:
    """Best ``-F`` over positive multiples of the candidates against ``T_F``
    of the ball with the same area.

    With the default exact piecewise-linear scheme every candidate value is
    the energy of an actual test function, hence a lower bound for the
    polygon's rigidity.
    """
    vals = [max(best_scaled_F(c, lam, scheme)[1], 0.0) if np.any(c.values) else 0.0 for c in candidates]
    vals = [float(v) for v in vals] or [0.0]
    k = int(np.argmax(vals))
    ball = schwarz_ball(domain.area, 2)
    _, t_ball = minimize_F_ball(ball.R, 2, lam)
    margin = t_ball - vals[k]
    return TorsionReport("F", float(lam), domain.to_json(), vals[k], t_ball, margin, tol,
                         bool(margin >= -tol), k, vals, ball.R)


def saint_venant_G_suite(domain: Polygon, m: float, candidates: Sequence[GridFunction2D],
                         tol: float = 1e-3, scheme: str = "bilinear") -> TorsionReport:
    """Best ``1/Q`` over the candidates against ``T_G`` of the equal-area ball.

    The default exact bilinear scheme makes every value the quotient of an
    actual H^1 function, hence a lower bound for the polygon's ``T_G``.
    """
    vals = []
    for c in candidates:
        try:
            vals.append(1.0 / evaluate_G(c, m, scheme))
        except ValueError:
            vals.append(0.0)
    k = int(np.argmax(vals))
    ball = schwarz_ball(domain.area, 2)
    t_ball = minimize_G_ball(ball.R, 2, m)
    margin = t_ball - vals[k]
    return TorsionReport("G", float(m), domain.to_json(), float(vals[k]), t_ball, margin, tol,
                         bool(margin >= -tol), k, [float(v) for v in vals], ball.R)
