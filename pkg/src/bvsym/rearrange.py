"""Distribution functions and rearrangements of measured samples.

A measurable function is carried as a finite collection of cells, each with a
constant value and a positive measure.  All operations here are exact for such
piecewise-constant data: sorting cells gives the decreasing rearrangement
directly, and equimeasurability holds to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from bvsym.geometry import unit_ball_measure

DECREASING = "decreasing"
INCREASING = "increasing"
NONE = "none"

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class MeasuredSample:
    value: float
    cell_measure: float

    def __post_init__(self) -> None:
        if not self.cell_measure > 0:
            raise ValueError(f"cell_measure must be positive, got {self.cell_measure!r}")
        if not (math.isfinite(self.value) and math.isfinite(self.cell_measure)):
            raise ValueError("sample values must be finite")


SampleLike = Union[Sequence[MeasuredSample], tuple]


def samples_from_arrays(values, measures) -> list[MeasuredSample]:
    values = np.broadcast_to(np.asarray(values, dtype=float), np.shape(measures) or np.shape(values))
    measures = np.broadcast_to(np.asarray(measures, dtype=float), values.shape)
    return [MeasuredSample(float(v), float(m)) for v, m in zip(values, measures)]


def as_arrays(samples: SampleLike) -> tuple[np.ndarray, np.ndarray]:
    """Values and measures of a sample collection.

    Accepts a sequence of :class:`MeasuredSample` or a ``(values, measures)``
    pair of arrays (the fast path used internally).
    """
    if isinstance(samples, tuple) and len(samples) == 2 and not isinstance(samples[0], MeasuredSample):
        values = np.asarray(samples[0], dtype=float).ravel()
        measures = np.broadcast_to(np.asarray(samples[1], dtype=float), values.shape).ravel()
    else:
        samples = list(samples)
        values = np.fromiter((s.value for s in samples), dtype=float, count=len(samples))
        measures = np.fromiter((s.cell_measure for s in samples), dtype=float, count=len(samples))
    if values.size == 0:
        raise ValueError("sample set is empty")
    if np.any(measures <= 0) or not np.all(np.isfinite(values)) or not np.all(np.isfinite(measures)):
        raise ValueError("cell measures must be positive and all entries finite")
    return values, measures


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous function on ``[0, breakpoints[-1])``.

    Cell ``i`` covers ``[breakpoints[i], breakpoints[i+1])`` and starts at
    ``values[i]``.  With ``ends`` unset the cell is constant; otherwise the
    function runs linearly to the left limit ``ends[i]`` at the right end.
    Beyond the last breakpoint the function equals ``tail``.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    monotone: str = NONE
    ends: np.ndarray | None = None
    tail: float = 0.0

    def __post_init__(self) -> None:
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        if self.ends is not None:
            e = np.asarray(self.ends, dtype=float)
            object.__setattr__(self, "ends", e)
            if e.shape != v.shape:
                raise ValueError("ends must match values in length")
        if b.ndim != 1 or len(b) != len(v) + 1:
            raise ValueError("need exactly one more breakpoint than values")
        if len(b) and b[0] != 0.0:
            raise ValueError("breakpoints must start at 0")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if self.monotone not in (DECREASING, INCREASING, NONE):
            raise ValueError(f"unknown monotonicity tag {self.monotone!r}")
        if self.monotone != NONE and not self.check_monotone():
            raise ValueError(f"values are not {self.monotone}")

    @property
    def total_measure(self) -> float:
        return float(self.breakpoints[-1]) if len(self.breakpoints) else 0.0

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def piecewise_linear(self) -> bool:
        return self.ends is not None

    def _sequence(self) -> np.ndarray:
        """Values in left-to-right order, left limits included, then the tail."""
        if self.ends is None:
            seq = self.values
        else:
            seq = np.column_stack([self.values, self.ends]).ravel()
        return np.append(seq, self.tail)

    def check_monotone(self, rtol: float = 1e-12) -> bool:
        seq = self._sequence()
        if len(seq) < 2:
            return True
        d = np.diff(seq)
        slack = rtol * max(1.0, float(np.max(np.abs(seq))))
        if self.monotone == DECREASING:
            return bool(np.all(d <= slack))
        if self.monotone == INCREASING:
            return bool(np.all(d >= -slack))
        return True

    def _eval(self, s, side: str):
        s_arr = np.asarray(s, dtype=float)
        k = len(self.values)
        if k == 0:
            out = np.full(s_arr.shape, float(self.tail))
            return out if s_arr.ndim else float(out)
        b = self.breakpoints
        idx = np.searchsorted(b, s_arr, side=side) - 1
        ii = np.clip(idx, 0, k - 1)
        out = self.values[ii]
        if self.ends is not None:
            frac = np.clip((s_arr - b[ii]) / (b[ii + 1] - b[ii]), 0.0, 1.0)
            out = out + (self.ends[ii] - out) * frac
        out = np.where(idx >= k, self.tail, np.where(idx < 0, self.values[0], out))
        return out if s_arr.ndim else float(out)

    def __call__(self, s):
        return self._eval(s, "right")

    def left_limit(self, s):
        """Value approached from the left, ``f(s-)``."""
        return self._eval(s, "left")

    def integral(self, p: float = 1.0) -> float:
        """Exact integral of ``f**p`` over ``[0, breakpoints[-1]]`` for f >= 0."""
        w = self.widths
        if self.ends is None:
            return float(np.sum(self.values**p * w))
        if p == 1.0:
            return float(np.sum(0.5 * (self.values + self.ends) * w))
        if p == 2.0:
            a, c = self.values, self.ends
            return float(np.sum((a * a + a * c + c * c) / 3.0 * w))
        t = 0.5 * (_GL_X + 1.0)
        vals = self.values[:, None] + (self.ends - self.values)[:, None] * t[None, :]
        return float(np.sum(0.5 * w * ((np.abs(vals) ** p) @ _GL_W)))

    def sup(self) -> float:
        seq = self._sequence()
        return float(np.max(np.abs(seq[:-1]))) if len(seq) > 1 else abs(self.tail)

    def to_json(self) -> dict:
        out = {
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
            "monotone": self.monotone,
            "tail": float(self.tail),
        }
        if self.ends is not None:
            out["ends"] = self.ends.tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "StepFunction":
        for key in ("breakpoints", "values"):
            if key not in data:
                raise ValueError(f"step function JSON: missing field '{key}'")
        return cls(
            np.asarray(data["breakpoints"], dtype=float),
            np.asarray(data["values"], dtype=float),
            data.get("monotone", NONE),
            None if data.get("ends") is None else np.asarray(data["ends"], dtype=float),
            float(data.get("tail", 0.0)),
        )


def _drop_empty(breaks: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Remove cells whose width rounded to zero."""
    wide = np.diff(breaks) > 0
    if np.all(wide):
        return breaks, vals
    return np.append(breaks[:-1][wide], breaks[-1]), vals[wide]


def _merge_equal(breaks: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    breaks, vals = _drop_empty(breaks, vals)
    if len(vals) <= 1:
        return breaks, vals
    keep = np.concatenate([[True], vals[1:] != vals[:-1]])
    return np.append(breaks[:-1][keep], breaks[-1]), vals[keep]


def distribution_function(samples: SampleLike, t: float) -> float:
    """Measure of the strict superlevel set ``{|u| > t}``."""
    if t < 0:
        raise ValueError("level t must be non-negative")
    values, measures = as_arrays(samples)
    return float(np.sum(measures[np.abs(values) > t]))


def decreasing_rearrangement(samples: SampleLike) -> StepFunction:
    values, measures = as_arrays(samples)
    values = np.abs(values)
    # stable sort keeps ties in input order
    order = np.argsort(-values, kind="stable")
    v = values[order]
    m = measures[order]
    pos = v > 0
    v, m = v[pos], m[pos]
    if v.size == 0:
        return StepFunction(np.array([0.0]), np.array([]), DECREASING)
    breaks = np.concatenate([[0.0], np.cumsum(m)])
    breaks, v = _merge_equal(breaks, v)
    return StepFunction(breaks, v, DECREASING, tail=0.0)


def increasing_rearrangement(samples: SampleLike, total_measure: float) -> StepFunction:
    """``u_*(s) = u*(total_measure - s)``, made right-continuous."""
    dec = decreasing_rearrangement(samples)
    support = dec.total_measure
    scale = max(1.0, abs(total_measure))
    if total_measure < support - 1e-12 * scale:
        raise ValueError(
            f"total_measure {total_measure!r} is smaller than the sample support {support!r}"
        )
    total_measure = max(total_measure, support)
    breaks = total_measure - dec.breakpoints[::-1]
    vals = dec.values[::-1]
    if breaks[0] > 0:
        breaks = np.concatenate([[0.0], breaks])
        vals = np.concatenate([[0.0], vals])
    else:
        breaks[0] = 0.0
    breaks, vals = _drop_empty(breaks, vals)
    tail = float(vals[-1]) if len(vals) else 0.0
    return StepFunction(breaks, vals, INCREASING, tail=tail)


def reflect(u_star: StepFunction, total_measure: float) -> StepFunction:
    """Increasing rearrangement from a decreasing step function."""
    samples = (u_star.values, u_star.widths)
    if u_star.ends is not None:
        raise ValueError("reflection is implemented for piecewise-constant steps only")
    return increasing_rearrangement(samples, total_measure)


def schwarz_evaluate(u_star: StepFunction, n: int, x, sense: str = DECREASING,
                     total_measure: float | None = None):
    """Evaluate the radial rearrangement ``u*(w_n |x|^n)`` (or ``u_*``) at ``x``.

    ``x`` is a scalar (n = 1), a point, or an array of points with the last
    axis of length ``n``.
    """
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        r = np.abs(x)
    else:
        if x.shape[-1] != n:
            raise ValueError(f"points must have {n} coordinates")
        r = np.sqrt(np.sum(x * x, axis=-1))
    s = unit_ball_measure(n) * r**n
    f = u_star
    if sense == INCREASING and u_star.monotone == DECREASING:
        if total_measure is None:
            raise ValueError("total_measure is required to reflect a decreasing rearrangement")
        f = reflect(u_star, total_measure)
    elif sense == DECREASING and u_star.monotone == INCREASING:
        raise ValueError("cannot recover u* from u_* without the total measure")
    return f(s)


def lp_norm(u_star: StepFunction, p: float) -> float:
    """L^p norm of a non-negative step function; ``p = inf`` gives the sup."""
    if p == math.inf:
        return u_star.sup()
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    return u_star.integral(p) ** (1.0 / p)


def sample_lp_norm(samples: SampleLike, p: float) -> float:
    values, measures = as_arrays(samples)
    a = np.abs(values)
    if p == math.inf:
        return float(a.max())
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    return float(np.sum(a**p * measures)) ** (1.0 / p)


def _product_integral(f: StepFunction, g: StepFunction) -> float:
    b = np.union1d(f.breakpoints, g.breakpoints)
    left = b[:-1]
    return float(np.sum(f(left) * g(left) * np.diff(b)))


def hardy_littlewood_check(u: SampleLike, v: SampleLike) -> tuple[float, float]:
    """``(sum |u v| m, int u* v* ds)``; the first never exceeds the second."""
    uv, um = as_arrays(u)
    vv, vm = as_arrays(v)
    if uv.shape != vv.shape or not np.array_equal(um, vm):
        raise ValueError("u and v must live on the same cell grid")
    lhs = float(np.sum(np.abs(uv * vv) * um))
    rhs = _product_integral(decreasing_rearrangement((uv, um)), decreasing_rearrangement((vv, vm)))
    return lhs, rhs
