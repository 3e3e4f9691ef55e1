"""Command-line entry point: ``wolffkit {potential,criterion,solve,verify,energy}``.

Exit codes: 0 success, 2 invalid input, 3 nonconvergence (or a measure
failing the existence criterion in ``solve``), 4 failed certificate.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import solver
from .fixtures import FIXTURES, get_fixture
from .measure import AtomicMeasure, GridMeasure, Measure, MeasureError, load_measure
from .parameters import ParameterError, Parameters, c0_max
from .potential import QuadratureConfig, QuadratureError, field, format_value
from .report import RunReport, measure_hash

log = logging.getLogger("wolffkit")

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED, EXIT_CERT = 0, 2, 3, 4


class InputError(Exception):
    pass


def _read_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: malformed JSON at line {exc.lineno}, column {exc.colno} "
                         f"(char {exc.pos}): {exc.msg}") from None


def _json_arg(value: str, what: str) -> tuple[object, Path]:
    """A JSON file path, or inline JSON when the value starts with '{'."""
    if value.lstrip().startswith("{"):
        return _read_json(value, f"inline {what}"), Path(".")
    path = Path(value)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} file {value}: {exc.strerror}") from None
    return _read_json(text, str(path)), path.parent


def load_params(args) -> Parameters:
    if args.params is None:
        raise InputError("--params is required")
    data, _ = _json_arg(args.params, "params")
    if not isinstance(data, dict):
        raise InputError("params must be a JSON object {n, p, q, alpha}")
    try:
        return Parameters.from_dict(data)
    except KeyError as exc:
        raise InputError(f"params: missing key {exc}") from None


def load_sigma(args) -> tuple[Measure, str]:
    if args.fixture:
        try:
            return get_fixture(args.fixture), f"fixture:{args.fixture}"
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
    if args.measure is None:
        raise InputError("one of --measure or --fixture is required")
    spec, base = _json_arg(args.measure, "measure")
    if not isinstance(spec, dict):
        raise InputError("measure spec must be a JSON object")
    try:
        return load_measure(spec, base), args.measure
    except KeyError as exc:
        raise InputError(f"measure: missing key {exc}") from None
    except OSError as exc:
        raise InputError(f"measure: {exc}") from None


def load_points(path: str, dim: int) -> np.ndarray:
    """CSV with one point per row; a non-numeric first row is a header."""
    try:
        lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise InputError(f"cannot read points file {path}: {exc.strerror}") from None
    rows = []
    for i, ln in enumerate(lines):
        cells = [c.strip() for c in ln.split(",")]
        try:
            vals = [float(c) for c in cells[:dim]]
        except ValueError:
            if i == 0:
                continue
            raise InputError(f"{path}: line {i + 1}: non-numeric coordinate") from None
        if len(vals) != dim:
            raise InputError(f"{path}: line {i + 1}: expected {dim} coordinates, got {len(vals)}")
        rows.append(vals)
    return np.asarray(rows, dtype=float).reshape(-1, dim)


def grid_points(spec: str, dim: int) -> np.ndarray:
    """``lo:hi:count`` lattice on every axis."""
    try:
        lo, hi, count = spec.split(":")
        ax = np.linspace(float(lo), float(hi), int(count))
    except ValueError:
        raise InputError(f"--grid expects lo:hi:count, got {spec!r}") from None
    mesh = np.meshgrid(*([ax] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _finish(report: RunReport, out: Path, t_start: float) -> None:
    report.wall_time = time.perf_counter() - t_start
    report.outputs.append("report.json")
    _write_json(out / "report.json", report.validate())


def _base_report(args, command: str, params: Parameters, sigma: Measure, source: str) -> RunReport:
    cfg = {"threads": args.threads, "tol": getattr(args, "tol", None),
           "max_iter": getattr(args, "max_iter", None),
           "quad_points_per_decade": getattr(args, "quad_points_per_decade", None)}
    return RunReport(command, params.to_dict(), measure_hash(sigma), cfg, args.seed, source)


def cmd_potential(args) -> int:
    t0 = time.perf_counter()
    params, (sigma, source) = load_params(args), load_sigma(args)
    if args.points:
        pts = load_points(args.points, sigma.dim)
    elif args.grid:
        pts = grid_points(args.grid, sigma.dim)
    else:
        raise InputError("one of --points or --grid is required")
    cfg = QuadratureConfig(points_per_decade=args.quad_points_per_decade, rtol=args.tol)
    pf = field(sigma, params, pts, cfg, method=args.method, threads=args.threads, kind=args.kind)
    out = _out_dir(args)
    pf.to_csv(out / "field.csv")
    rep = _base_report(args, "potential", params, sigma, source)
    rep.config.update({"kind": args.kind, "method": pf.meta["method"], "quadrature": pf.meta["quadrature"]})
    rep.outputs.append("field.csv")
    rep.results = {"points": len(pts), "warnings": pf.warnings,
                   "max": format_value(float(pf.values.max())) if len(pts) else None}
    _finish(rep, out, t0)
    if pf.warnings:
        print(f"quadrature did not converge at {len(pf.warnings)} point(s)", file=sys.stderr)
        return EXIT_NONCONVERGED
    print(f"wrote {out / 'field.csv'} ({len(pts)} points)")
    return EXIT_OK


def _criterion_levels(sigma: Measure, refinements: int) -> list[Measure]:
    levels = [sigma]
    if isinstance(sigma, GridMeasure):
        for _ in range(refinements):
            levels.append(levels[-1].refined(2))
    return levels


def cmd_criterion(args) -> int:
    t0 = time.perf_counter()
    params = load_params(args)
    if args.fixture or not args.level:
        sigma, source = load_sigma(args)
        levels = _criterion_levels(sigma, args.refine)
    else:
        levels, srcs = [], []
        for m in args.level:
            args.measure = m
            s, src = load_sigma(args)
            levels.append(s)
            srcs.append(src)
        sigma, source = levels[-1], ",".join(srcs)
    rep_c = dg.existence_criterion(levels, params, tol=args.crit_tol, threads=args.threads)
    out = _out_dir(args)
    _write_json(out / "criterion.json", rep_c.to_dict())
    rep = _base_report(args, "criterion", params, sigma, source)
    rep.config.update({"levels": len(levels), "crit_tol": args.crit_tol})
    rep.outputs.append("criterion.json")
    rep.results = rep_c.to_dict()
    _finish(rep, out, t0)
    print(f"verdict: {rep_c.verdict} ({rep_c.explanation})")
    return EXIT_OK


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    params, (sigma, source) = load_params(args), load_sigma(args)
    try:
        u, trace = solver.solve(sigma, params, tol=args.tol, max_iter=args.max_iter, threads=args.threads)
    except solver.CriterionFailure as exc:
        print(f"verdict infinite: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    out = _out_dir(args)
    rep = _base_report(args, "solve", params, sigma, source)
    u.to_csv(out / "solution.csv")
    _write_json(out / "trace.json", dg._jsonable(trace.to_dict()))
    certs = []
    if u.trivial:
        results = {"trivial": True, "reason": u.reason, "converged": True, "iterations": 0, "residual": 0.0}
    else:
        fmap = None if sigma.is_zero() else solver.FixedPointMap(sigma, params, threads=args.threads)
        res = solver.residual(u, sigma, params, fmap=fmap)
        certs.append(solver.energy_bound(trace, params).to_dict())
        results = {"trivial": False, "converged": u.converged, "iterations": u.iterations,
                   "residual": res, "c0": u.c0, "stop_reason": trace.stop_reason,
                   "monotonicity_violations": len(trace.violations),
                   "lower_bound_ratio": solver.lower_bound_ratio(u, sigma, params, fmap=fmap)}
    _write_json(out / "certificate.json", certs)
    rep.outputs += ["solution.csv", "trace.json", "certificate.json"]
    rep.certificates = certs
    rep.results = results
    _finish(rep, out, t0)
    if not results["converged"]:
        print(f"no convergence after {args.max_iter} iterations", file=sys.stderr)
        return EXIT_NONCONVERGED
    if u.trivial:
        print(f"trivial solution u = 0: {u.reason}")
    else:
        print(f"converged in {results['iterations']} iterations, residual {results['residual']:.3g}")
    return EXIT_OK


def _verify_lower_bound(sigma, params, args) -> dg.InequalityCertificate:
    """u >= c0 (W_{1,p} sigma)^gamma for the computed minimal solution."""
    c0 = c0_max(params.with_alpha(1.0))
    cfg = {"c0": c0, "tol": args.tol, "max_iter": args.max_iter}
    u, _ = solver.solve(sigma, params, tol=args.tol, max_iter=args.max_iter, threads=args.threads)
    if u.trivial or sigma.is_zero():
        return dg.InequalityCertificate("lower-bound", params.to_dict(), cfg, [], 0.0, True,
                                        ["zero solution: the bound is vacuous"])
    ratio = solver.lower_bound_ratio(u, sigma, params)
    slack = ratio / c0 - 1
    notes = [] if u.converged else ["solver did not converge"]
    return dg.InequalityCertificate("lower-bound", params.to_dict(), cfg,
                                    [{"min_ratio": ratio, "iterations": u.iterations}],
                                    slack, bool(slack >= -1e-9 and u.converged), notes)


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    params, (sigma, source) = load_params(args), load_sigma(args)
    kind = args.inequality
    if kind in ("composition", "maximal") and isinstance(sigma, AtomicMeasure) and not sigma.is_zero():
        raise InputError(f"--inequality {kind} needs a grid measure")
    if not isinstance(sigma, (AtomicMeasure, GridMeasure)):
        raise InputError("verify needs an atomic or grid measure")
    if kind == "composition":
        cert = dg.check_composition_bound(sigma, params, count=args.samples, seed=args.seed, threads=args.threads)
    elif kind == "wolff-energy":
        cert = dg.check_wolff_inequality(sigma, params, bracket=args.bracket)
    elif kind == "maximal":
        f = np.random.default_rng(args.seed).random(len(sigma.support_masses))
        cert = dg.check_maximal_domination(sigma, params, f, count=args.samples, seed=args.seed)
    else:
        cert = _verify_lower_bound(sigma, params, args)
    out = _out_dir(args)
    cd = cert.to_dict()
    _write_json(out / "certificate.json", cd)
    rep = _base_report(args, "verify", params, sigma, source)
    rep.config.update({"inequality": kind, "samples": args.samples})
    rep.outputs.append("certificate.json")
    rep.certificates = [cd]
    rep.results = {"pass": cert.passed, "min_slack": cd["min_slack"]}
    _finish(rep, out, t0)
    print(f"{kind}: {'pass' if cert.passed else 'FAIL'} (min slack {cd['min_slack']})")
    return EXIT_OK if cert.passed else EXIT_CERT


def cmd_energy(args) -> int:
    t0 = time.perf_counter()
    params, (sigma, source) = load_params(args), load_sigma(args)
    we = dg.wolff_energy(sigma, params, threads=args.threads)
    re = dg.riesz_energy(sigma, params) if not sigma.is_zero() else 0.0
    ratio = we / re if re > 0 and math.isfinite(re) and math.isfinite(we) else None
    out = _out_dir(args)
    data = {"wolff_energy": we, "riesz_energy": re, "ratio": ratio}
    _write_json(out / "energy.json", dg._jsonable(data))
    rep = _base_report(args, "energy", params, sigma, source)
    rep.outputs.append("energy.json")
    rep.results = data
    _finish(rep, out, t0)
    print(f"wolff energy {format_value(we)}, riesz energy {format_value(re)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wolffkit", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--measure", help="measure spec JSON file (or inline JSON)")
    common.add_argument("--fixture", help=f"built-in measure: {', '.join(sorted(FIXTURES))}")
    common.add_argument("--params", help="parameters JSON file (or inline JSON) {n, p, q, alpha}")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--max-iter", type=int, default=500)
    common.add_argument("--quad-points-per-decade", type=int, default=32)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--seed", type=int, default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("potential", parents=[common], help="evaluate W_{alpha,p} or I_alpha at points")
    p.add_argument("--points", help="CSV of evaluation points")
    p.add_argument("--grid", help="lattice lo:hi:count on every axis (write --grid=-1:1:5 for negative lo)")
    p.add_argument("--kind", choices=["wolff", "riesz"], default="wolff")
    p.add_argument("--method", choices=["auto", "exact", "quadrature"], default="auto")
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("criterion", parents=[common], help="refinement study of the existence criterion")
    p.add_argument("--level", action="append", help="grid measure per refinement level (coarse first)")
    p.add_argument("--refine", type=int, default=1, help="extra levels by subdividing the measure's grid")
    p.add_argument("--crit-tol", type=float, default=0.01)
    p.set_defaults(func=cmd_criterion)

    p = sub.add_parser("solve", parents=[common], help="minimal solution by monotone iteration")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="check an inequality and write a certificate")
    p.add_argument("--inequality", required=True,
                   choices=["composition", "wolff-energy", "maximal", "lower-bound"])
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--bracket", type=float, default=1e3)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("energy", parents=[common], help="Wolff and Riesz energies")
    p.set_defaults(func=cmd_energy)
    return ap


def _setup_logging() -> None:
    level = os.environ.get("WOLFFKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ParameterError, MeasureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except solver.DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
