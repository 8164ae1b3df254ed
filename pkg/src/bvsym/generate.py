"""Seeded random instances.

Every instance draws from its own Philox stream keyed by ``(seed, kind,
index)``, so an instance does not depend on which other instances were
generated or in which order.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from bvsym.bvcalc import BVFunction1D, RadialBVFunction
from bvsym.geometry import Polygon
from bvsym.rearrange import MeasuredSample

KINDS = {"bv1d": 1, "radial": 2, "polygon": 3, "samples": 4}


def instance_rng(seed: int, kind: str, index: int) -> np.random.Generator:
    if kind not in KINDS:
        raise ValueError(f"unknown instance kind {kind!r}; expected one of {sorted(KINDS)}")
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), KINDS[kind], int(index)])
    return np.random.Generator(np.random.Philox(ss))


def digest(obj: dict) -> str:
    """sha256 of the canonical JSON rendering."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _merge_atoms(pos: list[float], height: list[float]) -> tuple[tuple[float, float], ...]:
    merged: dict[float, float] = {}
    for x, h in zip(pos, height):
        merged[x] = merged.get(x, 0.0) + h
    return tuple((x, merged[x]) for x in sorted(merged) if merged[x] != 0.0)


def random_bv1d(seed: int, index: int = 0, N: int = 10_000) -> BVFunction1D:
    """Up to ten tents and up to five indicator bumps on a random interval.

    Tent derivatives are stored as exact cell averages, so the continuous
    part is reproduced exactly at the grid nodes.  Tents and bumps may run
    into the right end, which creates a boundary jump there.
    """
    rng = instance_rng(seed, "bv1d", index)
    a = float(rng.uniform(-2.0, 2.0))
    L = float(rng.uniform(0.5, 4.0))
    b = a + L
    grid = np.linspace(a, b, N + 1)
    cont = np.zeros(N + 1)
    for _ in range(int(rng.integers(1, 11))):
        w = rng.uniform(0.02, 0.3) * L
        c = rng.uniform(a + w, b + 0.5 * w)
        H = rng.uniform(0.1, 2.0)
        cont += H * np.maximum(0.0, 1.0 - np.abs(grid - c) / w)
    density = np.diff(cont) / np.diff(grid)
    pos, height = [], []
    for _ in range(int(rng.integers(0, 6))):
        x1 = float(rng.uniform(a + 0.01 * L, b - 0.05 * L))
        g = float(rng.uniform(0.1, 2.0))
        pos.append(x1)
        height.append(g)
        if rng.uniform() < 0.8:
            x2 = float(rng.uniform(x1 + 0.01 * L, b))
            if x2 < b:
                pos.append(x2)
                height.append(-g)
    return BVFunction1D((a, b), density, _merge_atoms(pos, height))


def random_radial(seed: int, index: int = 0, M: int = 4096, n: int = 2) -> RadialBVFunction:
    """Radial analogue: up to ten radial tents plus up to five ball or
    annulus indicators on a random ball."""
    rng = instance_rng(seed, "radial", index)
    R = float(rng.uniform(0.5, 2.0))
    rho = np.linspace(0.0, R, M + 1)
    prof = np.zeros(M + 1)
    for _ in range(int(rng.integers(1, 11))):
        w = rng.uniform(0.02, 0.4) * R
        c = rng.uniform(0.0, R)
        prof += rng.uniform(0.1, 2.0) * np.maximum(0.0, 1.0 - np.abs(rho - c) / w)
    pos, height = [], []
    for _ in range(int(rng.integers(0, 6))):
        g = float(rng.uniform(0.1, 2.0))
        r2 = float(rng.uniform(0.05 * R, R))
        if rng.uniform() < 0.4:
            prof += g
        else:
            pos.append(float(rng.uniform(0.01 * R, r2 * 0.95)))
            height.append(g)
        if r2 < R and rng.uniform() < 0.8:
            pos.append(r2)
            height.append(-g)
    atoms = _merge_atoms(pos, height)
    return RadialBVFunction(n, R, prof, atoms)


def random_polygon(seed: int, index: int = 0) -> Polygon:
    """Convex polygon inscribed in a random ellipse, scaled to unit area."""
    rng = instance_rng(seed, "polygon", index)
    while True:
        k = int(rng.integers(3, 11))
        theta = np.sort(rng.uniform(0.0, 2.0 * np.pi, k))
        gaps = np.diff(np.append(theta, theta[0] + 2.0 * np.pi))
        if gaps.max() < 0.9 * np.pi:
            break
    aspect = rng.uniform(0.5, 1.0)
    rot = rng.uniform(0.0, np.pi)
    x, y = np.cos(theta), aspect * np.sin(theta)
    c, s = math.cos(rot), math.sin(rot)
    pts = np.column_stack([c * x - s * y, s * x + c * y])
    return Polygon(pts).scaled_to_area(1.0)


def random_samples(seed: int, index: int = 0, size: int | None = None) -> list[MeasuredSample]:
    """Random non-negative cells with deliberate ties and zeros."""
    rng = instance_rng(seed, "samples", index)
    k = int(size or rng.integers(1, 200))
    vals = rng.uniform(0.0, 3.0, k)
    ties = rng.uniform(size=k) < 0.3
    vals[ties] = np.round(vals[ties], 1)
    vals[rng.uniform(size=k) < 0.1] = 0.0
    meas = rng.uniform(0.01, 1.0, k)
    return [MeasuredSample(float(v), float(m)) for v, m in zip(vals, meas)]


def devil_staircase(k: int, N: int = 8) -> BVFunction1D:
    """Atomic stand-in for a Cantor-part function on ``(0, 2)``.

    The Cantor function is replaced by ``2^k`` jumps of height ``2^-k`` at the
    centres of the level-``k`` Cantor intervals in ``[0, 1]``; the mirror
    image on ``[1, 2]`` steps back down.  The gradient is purely singular
    with total mass 2, and the L^1 norm is exactly 1 for every ``k``.
    """
    if k < 0:
        raise ValueError("staircase level must be non-negative")
    left = np.zeros(1)
    for level in range(k):
        left = np.concatenate([left, left + 2.0 * 3.0 ** -(level + 1)])
    centres = np.sort(left) + 0.5 * 3.0**-k
    h = 2.0**-k
    up = [(float(x), h) for x in centres]
    down = [(float(2.0 - x), -h) for x in centres[::-1]]
    return BVFunction1D((0.0, 2.0), np.zeros(N), tuple(up + down))


def generate_instance(seed: int, kind: str, index: int = 0, grid: int | None = None):
    """Instance of the given kind; ``polygon+grid`` is accepted for polygons."""
    if kind == "bv1d":
        return random_bv1d(seed, index, grid or 10_000)
    if kind == "radial":
        return random_radial(seed, index, grid or 4096)
    if kind in ("polygon", "polygon+grid"):
        return random_polygon(seed, index)
    if kind == "samples":
        return random_samples(seed, index)
    raise ValueError(f"unknown instance kind {kind!r}")
