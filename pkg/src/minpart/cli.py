"""Command-line front end.

Exit status: 0 on success, 2 on invalid input, 3 when an eigensolve did not
reach its residual bound.  ``MINPART_THREADS`` caps the worker threads.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import re
import sys
from pathlib import Path

from . import analytic, nodal_family, partition
from .aharonov_bohm import isospec_battery
from .concurrency import THREADS_ENV, worker_count
from .eigensolver import NonConvergenceError, strict_convergence
from .reporting import ConfigError, RunConfig, atomic_write, envelope, write_csv, write_json
from .svg import nodal_set_svg, partition_svg

__all__ = ["main", "build_parser", "run"]

log = logging.getLogger("minpart")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3

_PI_EXPR = re.compile(r"^\s*(?:(?P<num>[0-9.eE+-]+)\s*\*?\s*)?pi(?:\s*/\s*(?P<den>[0-9.eE+-]+))?\s*$")


def length(text: str) -> float:
    """Parse ``0.0157``, ``pi``, ``pi/200`` or ``2*pi/3``."""
    m = _PI_EXPR.match(text)
    try:
        if m:
            val = math.pi * float(m.group("num") or 1) / float(m.group("den") or 1)
        else:
            val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a length: {text!r}") from None
    if not math.isfinite(val) or val <= 0:
        raise argparse.ArgumentTypeError(f"length must be positive: {text!r}")
    return val


def length_list(text: str) -> list[float]:
    return [length(t) for t in text.split(",") if t.strip()]


def format_list(text: str) -> list[str]:
    return [t.strip() for t in re.split(r"[,+]", text) if t.strip()]


def _geometry_args(p):
    g = p.add_argument_group("geometry (give --a/--b or --eps)")
    g.add_argument("--a", type=length, help="short side (x direction)")
    g.add_argument("--b", type=length, help="long side (y direction)")
    g.add_argument("--eps", type=float, help="aspect ratio a/b in (0, 1], with b = pi")


def _output_args(p, default_formats):
    p.add_argument("--out-dir", default=".", help="directory for artifacts (default: current)")
    p.add_argument("--stem", default=None, help="file name stem (default: the command name)")
    p.add_argument("--format", "--out", dest="formats", type=format_list, default=default_formats,
                   help=f"comma or plus separated output formats (default: {'+'.join(default_formats)})")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="minpart", description=(
        "Spectral data, nodal sets, magnetic isospectrality checks and candidate minimal "
        "3-partitions of rectangles."))
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    p.add_argument("--tol", type=float, default=1e-9, help="relative eigen-residual bound")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", help="first distinct Dirichlet eigenvalues")
    _geometry_args(s)
    s.add_argument("--count", type=int, default=5, help="number of distinct levels (default: 5)")
    _output_args(s, ["json"])

    s = sub.add_parser("courant-sharp", help="which Courant-sharp rules apply")
    _geometry_args(s)
    _output_args(s, ["json"])

    s = sub.add_parser("nodal-family", help="nodal set of a member of the degenerate eigenspace")
    s.add_argument("--alpha", type=float, required=True, help="weight of the (1,3) mode")
    s.add_argument("--beta", type=float, required=True, help="weight of the (2,1) mode")
    s.add_argument("--eps", type=float, default=analytic.CRITICAL_EPS,
                   help="aspect ratio (default: sqrt(3/8), where the two modes share one eigenvalue)")
    s.add_argument("--resolution", type=int, default=256, help="cells per axis (>= 64)")
    _output_args(s, ["svg", "json"])

    s = sub.add_parser("isospec", help="magnetic operator against the half-domain problems")
    _geometry_args(s)
    s.add_argument("--k", type=int, default=4, help="number of levels")
    s.add_argument("--grids", type=length_list, default=[math.pi / 50, math.pi / 100],
                   help="comma separated spacings, e.g. pi/50,pi/100")
    s.add_argument("--diagonals", action="store_true", help="include the diagonal halves (square only)")
    _output_args(s, ["json"])

    s = sub.add_parser("partition3", help="sweep of mixed problems for a symmetric 3-partition")
    s.add_argument("--eps", type=float, default=1.0, help="aspect ratio a/b with b = pi (default: 1)")
    s.add_argument("--type", dest="kind", choices=["a", "b", "c"], default="a",
                   help="Neumann pattern on y = 0: a = [x0, a/2], b = [x0, x1], c = complement of [x0, x1]")
    s.add_argument("--h", type=length, default=math.pi / 100, help="lattice spacing, e.g. 0.0157 or pi/200 (default: pi/100)")
    s.add_argument("--sweep", type=int, default=64, help="coarse sweep positions per split point")
    s.add_argument("--diagonal", action="store_true", help="sweep along the diagonal (square only)")
    _output_args(s, ["json", "svg"])

    s = sub.add_parser("transition", help="continuation of the type a optimum in eps")
    s.add_argument("--eps-from", type=float, default=analytic.CRITICAL_EPS,
                   help="first aspect ratio, >= sqrt(3/8); values within 1e-4 below it are snapped to it")
    s.add_argument("--eps-to", type=float, default=1.0, help="last aspect ratio (default: 1)")
    s.add_argument("--steps", type=int, default=None,
                   help="equally spaced eps values; default is the seven-point schedule "
                        "t = 0, 2, 3.45, 7, 11, 15, 20")
    s.add_argument("--h", type=length, default=math.pi / 100, help="lattice spacing, e.g. 0.0157 or pi/200 (default: pi/100)")
    s.add_argument("--sweep", type=int, default=32, help="coarse sweep positions per eps (default: 32)")
    _output_args(s, ["json"])
    return p


def _geometry(args) -> analytic.RectGeometry:
    if args.eps is not None:
        if args.a is not None or args.b is not None:
            raise ConfigError("give either --eps or --a/--b, not both")
        return analytic.RectGeometry.from_eps(args.eps)
    if args.a is None or args.b is None:
        raise ConfigError("need --a and --b, or --eps")
    return analytic.RectGeometry(args.a, args.b)


def _paths(args, suffixes):
    stem = args.stem or args.command
    return {s: Path(args.out_dir) / f"{stem}.{s}" for s in suffixes}


def _config(args, **kw) -> RunConfig:
    return RunConfig(command=args.command, tol=args.tol, out_dir=str(args.out_dir),
                     formats=list(args.formats), **kw).validate()


def _emit(args, cfg, result: dict, csv_rows=None, svg_text=None) -> list[Path]:
    paths = _paths(args, cfg.formats)
    written = []
    for fmt, path in paths.items():
        if fmt == "json":
            written.append(write_json(path, cfg, result))
        elif fmt == "csv":
            if csv_rows is None:
                raise ConfigError(f"{cfg.command} has no CSV output")
            written.append(write_csv(path, cfg, csv_rows))
        elif fmt == "svg":
            if svg_text is None:
                raise ConfigError(f"{cfg.command} has no SVG output")
            written.append(atomic_write(path, svg_text))
    return written


def _svg_meta(cfg, result) -> str:
    env = envelope(cfg, result)
    return json.dumps({"config": env["config"], "content_hash": env["content_hash"]}, sort_keys=True)


def _cmd_spectrum(args):
    geom = _geometry(args)
    if args.count < 1:
        raise ConfigError("--count must be >= 1")
    cfg = _config(args, geometry=geom.to_dict(), params={"count": args.count})
    levels = analytic.spectrum_sorted(geom, args.count)
    result = {"geometry": geom.to_dict(), "levels": [lv.to_dict() for lv in levels]}
    rows = [{"index": i + 1, "value": lv.value, "multiplicity": lv.multiplicity,
             "modes": ";".join(f"{m.m}x{m.n}" for m in lv.modes)} for i, lv in enumerate(levels)]
    return _emit(args, cfg, result, rows), True


def _cmd_courant(args):
    geom = _geometry(args)
    cfg = _config(args, geometry=geom.to_dict())
    rules = analytic.courant_sharp_cases(geom)
    r = analytic.squared_aspect(geom)
    result = {"squared_aspect": str(r), "rational": analytic.is_rational_ratio(geom),
              "rules": [c.to_dict() for c in rules]}
    rows = [{"m": c.mode.m, "n": c.mode.n, "lower": str(c.lower), "upper": str(c.upper), "active": c.active}
            for c in rules]
    return _emit(args, cfg, result, rows), True


def _cmd_nodal(args):
    coeffs = nodal_family.FamilyCoeffs(args.alpha, args.beta)
    cfg = _config(args, geometry={"eps": args.eps}, resolution=args.resolution,
                  params={"alpha": args.alpha, "beta": args.beta})
    ns = nodal_family.nodal_contours(coeffs, args.eps, args.resolution)
    lab = nodal_family.count_nodal_domains(coeffs, args.eps, args.resolution)
    scan = nodal_family.interior_critical_scan(coeffs, args.eps)
    result = {"nodal_set": ns.to_dict(), "domain_count": lab.domain_count, "stable": lab.stable,
              "gradient_bound": scan.gradient_bound, "margin": scan.margin}
    svg = nodal_set_svg(ns, _svg_meta(cfg, result))
    return _emit(args, cfg, result, svg_text=svg), lab.stable


def _cmd_isospec(args):
    geom = _geometry(args)
    if args.k < 1:
        raise ConfigError("--k must be >= 1")
    if args.diagonals and not geom.is_square:
        raise ConfigError("--diagonals needs a square")
    cfg = _config(args, geometry=geom.to_dict(), grids=args.grids,
                  params={"k": args.k, "diagonals": args.diagonals})
    rep = isospec_battery(geom, args.k, args.grids, diagonals=args.diagonals, tol=args.tol)
    result = rep.to_dict()
    rows = [{"label": lab, "h": h, "index": i + 1, "eigenvalue": v}
            for (lab, h), vals in rep.eigenvalue_table.items() for i, v in enumerate(vals)]
    return _emit(args, cfg, result, rows), True


def _cmd_partition(args):
    if not 0 < args.eps <= 1:
        raise ConfigError("--eps must lie in (0, 1]")
    if args.sweep < 2:
        raise ConfigError("--sweep must be >= 2")
    cfg = _config(args, geometry={"eps": args.eps}, h=args.h,
                  params={"type": args.kind, "sweep": args.sweep, "diagonal": args.diagonal})
    if args.diagonal:
        geom = analytic.RectGeometry.from_eps(args.eps)
        if not geom.is_square:
            raise ConfigError("--diagonal needs --eps 1")
        res = partition.diagonal_search(geom, args.h, args.sweep, tol=args.tol)
    else:
        res = partition.dn_sweep(args.eps, args.kind, args.h, args.sweep, tol=args.tol)
    result = {"sweep": res.to_dict()}
    angles = None
    if res.best is not None and res.best.topology == "type_a":
        angles = partition.triple_point_angles(res.best)
        result["triple_point_angles"] = list(angles)
        result["boundary_angles"] = partition.boundary_angles(res.best)
    rows = [p.to_dict() for p in res.points]
    svg = partition_svg(res.best, angles, _svg_meta(cfg, result)) if res.best is not None else None
    if svg is None and "svg" in cfg.formats:
        log.warning("no feasible partition; skipping SVG")
        cfg.formats = [f for f in cfg.formats if f != "svg"]
    return _emit(args, cfg, result, rows, svg), True


def _cmd_transition(args):
    lo = args.eps_from
    # accept the critical ratio given to four digits
    if analytic.CRITICAL_EPS - 1e-4 <= lo < analytic.CRITICAL_EPS:
        lo = analytic.CRITICAL_EPS
    if not analytic.CRITICAL_EPS <= lo < args.eps_to <= 1:
        raise ConfigError("need sqrt(3/8) <= eps-from < eps-to <= 1")
    if args.steps is None:
        ts = (0, 2, 3.45, 7, 11, 15, 20)
        schedule = [lo + (args.eps_to - lo) * t / 20 for t in ts]
    else:
        if args.steps < 2:
            raise ConfigError("--steps must be >= 2")
        schedule = [lo + (args.eps_to - lo) * i / (args.steps - 1) for i in range(args.steps)]
    cfg = _config(args, geometry={"eps_from": lo, "eps_to": args.eps_to}, h=args.h,
                  params={"schedule": schedule, "sweep": args.sweep})
    tr = partition.transition_study(schedule, args.h, args.sweep, tol=args.tol)
    result = tr.to_dict()
    return _emit(args, cfg, result, result["rows"]), True


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "courant-sharp": _cmd_courant,
    "nodal-family": _cmd_nodal,
    "isospec": _cmd_isospec,
    "partition3": _cmd_partition,
    "transition": _cmd_transition,
}


def run(args) -> int:
    try:
        log.info("%s with %d worker threads (%s)", args.command, worker_count(), THREADS_ENV)
        with strict_convergence():
            written, ok = _COMMANDS[args.command](args)
    except NonConvergenceError as exc:
        print(f"minpart: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except RuntimeError as exc:
        # raised by the sweeps when no candidate could be computed
        print(f"minpart: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ConfigError, ValueError) as exc:
        print(f"minpart: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for path in written:
        print(path)
    if not ok:
        print("minpart: result flagged as unstable", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
