"""Verification suites over seeded random instances.

Every check is recorded with its tolerance and a signed margin; a check
passes exactly when ``margin >= -tolerance``.  Instances are generated from
``(seed, kind, index)`` alone, so the report does not depend on how many
worker processes ran them.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from bvsym import fileio
from bvsym.bvcalc import as_pl, coarea_identity, envelope_comparison, polya_szego_bv_check, total_variation_split
from bvsym.generate import digest, random_bv1d, random_radial, random_samples
from bvsym.geometry import Polygon, regular_polygon, unit_square
from bvsym.rearrange import (
    as_arrays,
    decreasing_rearrangement,
    distribution_function,
    hardy_littlewood_check,
    sample_lp_norm,
)
from bvsym.symmetrize import (
    comparison_profiles,
    l1_comparison,
    pointwise_comparison,
    u_star_of_bv,
    variation_preservation,
)
from bvsym.torsion import (
    F_candidates,
    F_profile,
    G_ball_solution,
    G_candidates,
    GridGeometry,
    saint_venant_F_suite,
    saint_venant_G_suite,
)

SCHEMA = 1
SUITES = ("rearrange", "coarea", "main-theorem", "proposition", "polya-szego", "torsion-F", "torsion-G")
DEFAULT_TOL = {
    "cavalieri": 1e-12,
    "distribution": 1e-12,
    "hardy-littlewood": 1e-12,
    "coarea": 1e-9,
    "l1": 1e-6,
    "ac-preserved": 1e-6,
    "singular-preserved": 1e-12,
    "boundary-floor": 1e-12,
    "gradient-identity": 1e-6,
    "pointwise": 1e-6,
    "envelope": 1e-8,
    "total-variation": 1e-10,
    "singular-variation": 1e-10,
    "saint-venant": 1e-3,
}
DEFAULT_PARAMS = {"torsion-F": (0.0, 0.05, 0.2), "torsion-G": (1.0,)}


@dataclass
class SuiteConfig:
    suite: str
    seed: int = 42
    count: int | None = None
    grid: int | None = None
    radial_grid: int = 4096
    tol: float | None = None
    params: tuple[float, ...] | None = None
    shape: str = "square"
    candidates: int = 50
    report: str | None = None
    plots: str | None = None

    def __post_init__(self) -> None:
        if self.suite not in SUITES + ("all",):
            raise ValueError(f"unknown suite {self.suite!r}; expected one of {', '.join(SUITES + ('all',))}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.count is not None and self.count < 1:
            raise ValueError("count must be positive")
        if self.tol is not None and not self.tol >= 0:
            raise ValueError("tolerance must be non-negative")

    def echo(self) -> dict:
        out = asdict(self)
        out["params"] = None if self.params is None else [float(p) for p in self.params]
        return out


@dataclass
class Report:
    config: dict
    records: list[dict] = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def failed(self) -> int:
        return sum(not r["passed"] for r in self.records)

    @property
    def passed(self) -> bool:
        return self.failed == 0

    def summary(self) -> dict:
        worst: dict[str, float] = {}
        for r in self.records:
            for name, c in r["checks"].items():
                worst[name] = min(worst.get(name, math.inf), c["margin"])
        return {
            "instances": len(self.records),
            "passed": len(self.records) - self.failed,
            "failed": self.failed,
            "worst_margins": worst,
        }

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "config": self.config,
            "summary": self.summary(),
            "records": self.records,
            "wall_clock_seconds": self.wall_clock,
        }


# -- individual checks --------------------------------------------------------


def _check(margin: float, tol: float, **quantities) -> dict:
    margin = float(margin)
    return {"margin": margin, "tolerance": float(tol), "passed": bool(margin >= -tol), **{
        k: float(v) for k, v in quantities.items()}}


def _record(suite: str, kind: str, index: int, dig: str, checks: dict) -> dict:
    return {
        "suite": suite,
        "kind": kind,
        "index": int(index),
        "digest": dig,
        "checks": checks,
        "passed": all(c["passed"] for c in checks.values()),
    }


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


def _rearrange_record(seed: int, index: int, tol: dict) -> dict:
    u = random_samples(seed, index)
    vals, meas = as_arrays(u)
    other = random_samples(seed, index + 2**32, size=len(u))
    v = (np.array([c.value for c in other]), meas)
    star = decreasing_rearrangement(u)
    levels = np.unique(np.concatenate([[0.0], np.abs(vals)]))
    dist_err = max(
        abs(distribution_function(u, t) - float(np.sum(star.widths[star.values > t]))) for t in levels
    )
    cav = max(_rel(star.integral(p) ** (1.0 / p), sample_lp_norm(u, p)) for p in (1.0, 2.0, 3.5))
    lhs, rhs = hardy_littlewood_check(u, v)
    checks = {
        "cavalieri": _check(-cav, tol["cavalieri"]),
        "distribution": _check(-dist_err / max(1.0, float(meas.sum())), tol["distribution"]),
        "hardy-littlewood": _check((rhs - lhs) / max(1.0, rhs), tol["hardy-littlewood"], lhs=lhs, rhs=rhs),
        "monotone": _check(0.0 if star.check_monotone() else -1.0, 0.0),
    }
    dig = digest({"cells": [[c.value, c.cell_measure] for c in u]})
    return _record("rearrange", "samples", index, dig, checks)


def _instance(kind: str, seed: int, index: int, grid: int, radial_grid: int):
    if kind == "bv1d":
        return random_bv1d(seed, index, grid)
    return random_radial(seed, index, radial_grid)


def _bv_record(suite: str, kind: str, seed: int, index: int, grid: int, radial_grid: int, tol: dict) -> dict:
    u = _instance(kind, seed, index, grid, radial_grid)
    f = as_pl(u)
    checks: dict[str, dict] = {}
    if suite == "coarea":
        lhs, tv = coarea_identity(f)
        checks["coarea"] = _check(-_rel(lhs, tv), tol["coarea"], coarea=lhs, total_variation=tv)
    elif suite == "main-theorem":
        norm_u, norm_star, _ = l1_comparison(f)
        p = u_star_of_bv(f)
        ac_u, ac_s, sing_u, sing_s = variation_preservation(f, p)
        # ``l1_comparison`` scales its tolerance by max(1, norm_star)
        scale = max(1.0, norm_star)
        checks["l1"] = _check((norm_star - norm_u) / scale, tol["l1"], norm_u=norm_u, norm_ustar=norm_star)
        checks["ac-preserved"] = _check(-_rel(ac_s, ac_u), tol["ac-preserved"], ac_u=ac_u, ac_star=ac_s)
        checks["singular-preserved"] = _check(-_rel(sing_s, sing_u), tol["singular-preserved"],
                                              sing_u=sing_u, sing_star=sing_s)
        floor = float(np.min(np.append(p.profile_star.values, p.profile_star.ends))) - p.b
        checks["boundary-floor"] = _check(floor / max(1.0, p.b), tol["boundary-floor"], b=p.b)
        gmax = float(p.grad_values.max()) if p.grad_values.size else 0.0
        gid = p.gradient_identity_error()
        checks["gradient-identity"] = _check(-gid / max(1.0, gmax), tol["gradient-identity"], error=gid)
    elif suite == "proposition":
        viol, at = pointwise_comparison(f)
        checks["pointwise"] = _check(-viol, tol["pointwise"], max_violation=viol, at_s=at)
        env = envelope_comparison(f)
        checks["envelope"] = _check(env, tol["envelope"], min_margin=env)
    elif suite == "polya-szego":
        tv_s, tv, sing_s, sing = polya_szego_bv_check(f)
        checks["total-variation"] = _check((tv - tv_s) / max(1.0, tv), tol["total-variation"], sharp=tv_s, original=tv)
        checks["singular-variation"] = _check((sing - sing_s) / max(1.0, sing), tol["singular-variation"],
                                              sharp=sing_s, original=sing)
    else:
        raise ValueError(f"not a BV suite: {suite!r}")
    return _record(suite, kind, index, digest(u.to_json()), checks)


def shape_polygon(shape: str) -> Polygon:
    """``square``, ``hexagon`` or ``polygon:FILE``, all of unit area."""
    if shape == "square":
        return unit_square()
    if shape == "hexagon":
        return regular_polygon(6, area=1.0)
    if shape.startswith("polygon:"):
        poly = fileio.load_json(shape.split(":", 1)[1])
        if not isinstance(poly, Polygon):
            raise ValueError(f"{shape}: file does not describe a polygon")
        return poly
    raise ValueError(f"unknown shape {shape!r}; expected square, hexagon, polygon:FILE or ball")


def _torsion_record(suite: str, shape: str, param: float, grid: int, count: int, seed: int, tol: dict) -> dict:
    poly = shape_polygon(shape)
    geom = GridGeometry.for_polygon(poly, grid)
    if suite == "torsion-F":
        rep = saint_venant_F_suite(poly, param, F_candidates(geom, count, seed), tol["saint-venant"])
    else:
        rep = saint_venant_G_suite(poly, param, G_candidates(geom, param, count, seed), tol["saint-venant"])
    checks = {"saint-venant": _check(rep.margin, tol["saint-venant"], bound=rep.bound, ball_value=rep.ball_value,
                                     param=param)}
    dig = digest({"domain": rep.domain, "param": float(param), "grid": int(grid), "candidates": int(count),
                  "seed": int(seed)})
    rec = _record(suite, shape, 0, dig, checks)
    rec["param"] = float(param)
    return rec


def _run_task(task: tuple) -> dict:
    name, args = task
    if name == "rearrange":
        return _rearrange_record(*args)
    if name == "bv":
        return _bv_record(*args)
    return _torsion_record(*args)


# -- orchestration ------------------------------------------------------------


def worker_count() -> int:
    """Parallelism cap from ``BVSYM_THREADS`` (default: all CPUs)."""
    raw = os.environ.get("BVSYM_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        k = int(raw)
    except ValueError as exc:
        raise ValueError(f"BVSYM_THREADS must be a positive integer, got {raw!r}") from exc
    if k < 1:
        raise ValueError(f"BVSYM_THREADS must be a positive integer, got {raw!r}")
    return k


def _tasks(cfg: SuiteConfig, suite: str, tol: dict) -> list[tuple]:
    seed = int(cfg.seed)
    if suite == "rearrange":
        return [("rearrange", (seed, i, tol)) for i in range(cfg.count or 100)]
    if suite in ("torsion-F", "torsion-G"):
        params = cfg.params if cfg.params is not None else DEFAULT_PARAMS[suite]
        grid = cfg.grid or 256
        return [("torsion", (suite, cfg.shape, float(p), grid, cfg.candidates, seed, tol)) for p in params]
    count = cfg.count or 200
    grid = cfg.grid or 10_000
    kinds = [("bv1d", count)]
    if suite != "polya-szego":
        kinds.append(("radial", max(1, count // 4)))
    return [("bv", (suite, kind, seed, i, grid, cfg.radial_grid, tol)) for kind, k in kinds for i in range(k)]


def _write_plots(cfg: SuiteConfig, suite: str, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if suite in ("main-theorem", "proposition", "polya-szego", "coarea"):
        for kind in ("bv1d", "radial"):
            u = _instance(kind, int(cfg.seed), 0, cfg.grid or 10_000, cfg.radial_grid)
            f = as_pl(u)
            s = np.linspace(0.0, f.domain_measure, 1001)
            ustar, v = comparison_profiles(f)
            p = u_star_of_bv(f)
            text = fileio.curves_to_csv({"s": s, "u_star": ustar(s), "v": v(s), "u_sym_star": p.evaluate(s)})
            (out / f"{suite}_{kind}_0.csv").write_text(text)
    elif suite == "torsion-F":
        for lam in cfg.params if cfg.params is not None else DEFAULT_PARAMS[suite]:
            R = math.sqrt(1.0 / math.pi)
            r, F = F_profile(R, 2, float(lam))
            (out / f"torsion-F_profile_{float(lam)!r}.csv").write_text(fileio.curves_to_csv({"r": r, "F": F}))
    elif suite == "torsion-G":
        for m in cfg.params if cfg.params is not None else DEFAULT_PARAMS[suite]:
            prof = G_ball_solution(math.sqrt(1.0 / math.pi), 2, float(m))
            text = fileio.curves_to_csv({"rho": prof.nodes, "psi": prof.values})
            (out / f"torsion-G_profile_{float(m)!r}.csv").write_text(text)


def run_suite(cfg: SuiteConfig, workers: int | None = None) -> Report:
    """Run the configured suite(s) and write the report and plot data if
    paths are set.  Records come back in task order whatever the worker
    count."""
    start = time.perf_counter()
    if cfg.report is not None:
        parent = Path(cfg.report).resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            raise OSError(f"{cfg.report}: output directory is not writable")
    tol = dict(DEFAULT_TOL)
    if cfg.tol is not None:
        tol = {k: float(cfg.tol) for k in tol}
    suites = SUITES if cfg.suite == "all" else (cfg.suite,)
    tasks = [t for s in suites for t in _tasks(cfg, s, tol)]
    workers = worker_count() if workers is None else workers
    workers = max(1, min(workers, len(tasks)))
    if workers == 1:
        records = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    report = Report(cfg.echo(), records)
    if cfg.plots is not None:
        for s in suites:
            _write_plots(cfg, s, Path(cfg.plots))
    report.wall_clock = time.perf_counter() - start
    if cfg.report is not None:
        fileio.write_text(cfg.report, fileio.dumps(report.to_json()))
    return report
