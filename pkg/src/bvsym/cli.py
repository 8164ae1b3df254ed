"""Command-line entry point: ``bvsym <command> ...``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from bvsym import fileio
from bvsym.bvcalc import BVFunction1D, PLFunction, RadialBVFunction
from bvsym.rearrange import MeasuredSample, StepFunction, decreasing_rearrangement
from bvsym.suites import SUITES, SuiteConfig, run_suite, shape_polygon
from bvsym.symmetrize import u_star_of_bv
from bvsym.torsion import (
    F_candidates,
    G_ball_oracle,
    G_candidates,
    GridGeometry,
    brute_offset_search,
    minimize_F_ball,
    minimize_G_ball,
    saint_venant_F_suite,
    saint_venant_G_suite,
)

BV_TYPES = (BVFunction1D, RadialBVFunction, PLFunction)


def _rearranged(obj) -> StepFunction:
    if isinstance(obj, list) and obj and isinstance(obj[0], MeasuredSample):
        return decreasing_rearrangement(obj)
    if isinstance(obj, BV_TYPES):
        return obj.pl.levels.profile() if hasattr(obj, "pl") else obj.levels.profile()
    raise fileio.FormatError("input must be a sample set or a BV function")


def cmd_rearrange(args) -> int:
    star = _rearranged(fileio.load_json(args.infile))
    fileio.write_text(args.out, fileio.step_to_csv(star))
    return 0


def cmd_symmetrize(args) -> int:
    u = fileio.load_json(args.infile)
    if not isinstance(u, BV_TYPES):
        raise fileio.FormatError(f"{args.infile}: expected a bv1d or radial function")
    fileio.write_text(args.out, u_star_of_bv(u).to_csv())
    return 0


def cmd_verify(args) -> int:
    cfg = SuiteConfig(
        suite=args.suite, seed=args.seed, count=args.count, grid=args.grid, tol=args.tol,
        params=tuple(args.param) if args.param else None, shape=args.shape,
        candidates=args.candidates, report=args.report, plots=args.plots,
    )
    report = run_suite(cfg)
    summary = report.summary()
    print(f"{cfg.suite}: {summary['passed']}/{summary['instances']} passed")
    for name, margin in sorted(summary["worst_margins"].items()):
        print(f"  worst {name} margin {margin!r}")
    return 0 if report.passed else 1


def cmd_torsion(args) -> int:
    tol = args.tol
    lam = args.param
    if args.shape == "ball":
        R = math.sqrt(1.0 / math.pi)
        if args.functional == "F":
            _, value = minimize_F_ball(R, 2, lam)
            _, _, best = brute_offset_search(R, 2, lam)
            bound = -best
        else:
            value = minimize_G_ball(R, 2, lam)
            bound, _ = G_ball_oracle(R, 2, lam)
        margin = value - bound
        out = {"functional": args.functional, "param": float(lam), "domain": {"n": 2, "R": R},
               "bound": float(bound), "ball_value": float(value), "margin": float(margin),
               "tolerance": tol, "passed": bool(margin >= -tol)}
    else:
        poly = shape_polygon(args.shape)
        geom = GridGeometry.for_polygon(poly, args.grid)
        if args.functional == "F":
            rep = saint_venant_F_suite(poly, lam, F_candidates(geom, args.candidates, args.seed), tol)
        else:
            rep = saint_venant_G_suite(poly, lam, G_candidates(geom, lam, args.candidates, args.seed), tol)
        out = rep.to_json()
    out["schema"] = 1
    print(f"T_{args.functional} {args.shape} param={lam!r}: bound {out['bound']!r}, "
          f"ball {out['ball_value']!r}, margin {out['margin']!r}")
    if args.report:
        fileio.write_text(args.report, fileio.dumps(out))
    return 0 if out["passed"] else 1


def convert(file_in: str, file_out: str) -> None:
    """Function JSON to profile CSV, step CSV to JSON, or a normalizing
    copy within one format; the format follows the file extension."""
    src, dst = Path(file_in).suffix.lower(), Path(file_out).suffix.lower()
    if src not in (".json", ".csv") or dst not in (".json", ".csv"):
        raise fileio.FormatError("convert understands .json and .csv files only")
    if src == ".json":
        obj = fileio.load_json(file_in)
        if dst == ".json":
            text = fileio.dumps(fileio.to_json(obj))
        else:
            step = obj if isinstance(obj, StepFunction) else _rearranged(obj)
            text = fileio.step_to_csv(step)
    else:
        step, head = fileio.load_step_csv(file_in)
        text = fileio.dumps(fileio.to_json(step)) if dst == ".json" else fileio.step_to_csv(step, head)
    fileio.write_text(file_out, text)


def cmd_convert(args) -> int:
    convert(args.infile, args.outfile)
    return 0


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bvsym", description="Gradient symmetrization of BV functions and numerical checks.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rearrange", help="decreasing rearrangement of samples or a BV function, as CSV")
    r.add_argument("--in", dest="infile", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_rearrange)

    s = sub.add_parser("symmetrize", help="profile of the gradient symmetrization, as CSV")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_symmetrize)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", required=True, choices=SUITES + ("all",))
    v.add_argument("--seed", type=_seed, default=42)
    v.add_argument("--count", type=int)
    v.add_argument("--grid", type=int)
    v.add_argument("--tol", type=float, help="override every check tolerance")
    v.add_argument("--param", type=float, action="append", help="torsion parameter (repeatable)")
    v.add_argument("--shape", default="square")
    v.add_argument("--candidates", type=int, default=50)
    v.add_argument("--report")
    v.add_argument("--plots", help="directory for CSV plot data")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("torsion", help="Saint-Venant comparison for one domain")
    t.add_argument("--functional", required=True, choices=("F", "G"))
    t.add_argument("--shape", required=True, help="square, hexagon, polygon:FILE or ball")
    t.add_argument("--param", type=float, required=True, help="penalty for F, insulation mass for G")
    t.add_argument("--grid", type=int, default=256)
    t.add_argument("--candidates", type=int, default=50)
    t.add_argument("--seed", type=_seed, default=0)
    t.add_argument("--tol", type=float, default=1e-3)
    t.add_argument("--report")
    t.set_defaults(func=cmd_torsion)

    c = sub.add_parser("convert", help="convert between function JSON and profile CSV")
    c.add_argument("infile")
    c.add_argument("outfile")
    c.set_defaults(func=cmd_convert)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"bvsym: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
