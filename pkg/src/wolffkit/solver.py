"""Minimal solution of u = W_{1,p}(u^q dsigma) by monotone iteration.

The equation only constrains u on the support of sigma, so a solution is
a vector of values at the atoms / occupied cell centers. Starting from
u_0 = c_0 (W_{1,p} sigma)^gamma with the largest c_0 allowed by the
composition bound, the iterates increase to the minimal solution.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import InequalityCertificate
from .measure import AtomicMeasure, GridMeasure, Measure
from .parameters import Parameters, c0_max, require_solver_mode, solver_issue
from .potential import WolffOperator

log = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-12


class DivergenceError(RuntimeError):
    """Iterates left the a-priori bound; indicates a bug or a corrupted start."""


class CriterionFailure(ValueError):
    """The measure fails the finite-energy criterion; no solution is attempted."""


@dataclass
class SolutionField:
    points: np.ndarray
    values: np.ndarray
    params: Parameters
    iterations: int = 0
    c0: float | None = None
    converged: bool = True
    trivial: bool = False
    reason: str = ""

    def to_csv(self, path) -> None:
        n = self.points.shape[1]
        lines = [",".join([f"x_{k + 1}" for k in range(n)] + ["u"])]
        for x, v in zip(self.points, self.values):
            lines.append(",".join([repr(float(c)) for c in x] + [repr(float(v))]))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass
class IterationTrace:
    sup_change: list[float] = field(default_factory=list)
    norms: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    violations: list[tuple[int, float]] = field(default_factory=list)
    stop_reason: str = ""
    direction: str = "up"
    start_norm: float = 0.0

    def to_dict(self) -> dict:
        return {"direction": self.direction, "start_norm": self.start_norm,
                "sup_change": self.sup_change, "norms": self.norms, "residuals": self.residuals,
                "violations": [list(v) for v in self.violations], "stop_reason": self.stop_reason}


def _w1(params: Parameters) -> Parameters:
    return params.with_alpha(1.0)


def _trivial(sigma: Measure, params: Parameters, reason: str) -> SolutionField:
    pts = getattr(sigma, "support", np.empty((0, sigma.dim)))
    return SolutionField(pts, np.zeros(len(pts)), params, 0, None, True, True, reason)


class FixedPointMap:
    """u -> W_{1,p}(u^q dsigma) on the support, with its sorted-distance cache."""

    def __init__(self, sigma: AtomicMeasure | GridMeasure, params: Parameters, threads: int | None = None):
        self.sigma = sigma
        self.params = params
        self.q = params.q
        self.op = WolffOperator(sigma, _w1(params), sigma.support, threads=threads)
        self.masses = sigma.support_masses
        self._base = None

    @property
    def base(self) -> np.ndarray:
        """W_{1,p} sigma on the support."""
        if self._base is None:
            self._base = self.op.apply()
        return self._base

    def __call__(self, u) -> np.ndarray:
        return self.op.apply(np.asarray(u, dtype=float) ** self.q)

    def norm(self, u) -> float:
        return float((np.asarray(u) ** (1 + self.q)) @ self.masses)


def _check_measure(sigma: Measure) -> None:
    if isinstance(sigma, AtomicMeasure) and not sigma.is_zero():
        raise CriterionFailure("atomic measure: W_{1,p} sigma is infinite at its atoms, "
                               "the existence criterion fails")
    if not isinstance(sigma, (AtomicMeasure, GridMeasure)):
        raise TypeError("the solver works on grid measures")


def init_u0(sigma: Measure, params: Parameters, fmap: FixedPointMap | None = None) -> SolutionField:
    """u_0 = c_0 (W_{1,p} sigma)^((p-1)/(p-1-q)) with c_0 = kappa^((p-1)/(p-1-q))."""
    if params.p >= params.n:
        return _trivial(sigma, params, solver_issue(params))
    d = require_solver_mode(params)
    _check_measure(sigma)
    c0 = c0_max(_w1(params))
    if sigma.is_zero():
        return SolutionField(sigma.support, np.zeros(len(sigma.support_masses)), params, 0, c0)
    fmap = fmap or FixedPointMap(sigma, params)
    return SolutionField(sigma.support, c0 * fmap.base ** d.gamma, params, 0, c0)


def apriori_sup_bound(fmap: FixedPointMap, u_start) -> float:
    """If sup u <= K with K >= (max W sigma)^gamma, every iterate stays <= K."""
    d = require_solver_mode(fmap.params)
    k_star = float(fmap.base.max()) ** d.gamma if fmap.base.size else 0.0
    return max(k_star, float(np.max(u_start)) if np.size(u_start) else 0.0)


def iterate(sigma: Measure, params: Parameters, u_start: SolutionField, tol: float = 1e-8,
            max_iter: int = 500, fmap: FixedPointMap | None = None,
            direction: str = "up", threads: int | None = None) -> tuple[SolutionField, IterationTrace]:
    """Picard iteration u <- W_{1,p}(u^q dsigma) until both the sup-relative
    change and the relative change of int u^(1+q) dsigma are <= ``tol``.

    ``direction`` is ``up`` for runs expected to increase (from ``init_u0``)
    and ``down`` for runs from a supersolution; steps against it beyond
    ``MONOTONE_SLACK`` (relative) are recorded in ``trace.violations``.
    """
    if params.p >= params.n:
        return _trivial(sigma, params, solver_issue(params)), IterationTrace(stop_reason="trivial")
    require_solver_mode(params)
    _check_measure(sigma)
    u = np.asarray(u_start.values, dtype=float).copy()
    if np.any(~np.isfinite(u)) or np.any(u < 0):
        raise ValueError("u_start must be finite and nonnegative")
    trace = IterationTrace(direction=direction)
    if sigma.is_zero():
        trace.stop_reason = "zero measure"
        trace.sup_change.append(0.0)
        trace.norms.append(0.0)
        trace.residuals.append(0.0)
        return SolutionField(sigma.support, np.zeros_like(u), params, 1, u_start.c0), trace
    fmap = fmap or FixedPointMap(sigma, params, threads=threads)
    bound = apriori_sup_bound(fmap, u) * (1 + 1e-9)
    norm = fmap.norm(u)
    trace.start_norm = norm
    converged = False
    j = 0
    for j in range(1, max_iter + 1):
        nxt = fmap(u)
        denom = np.maximum(nxt, 1e-300)
        change = float(np.max(np.abs(nxt - u) / denom))
        trace.residuals.append(float(np.max(np.abs(nxt - u) / np.maximum(u, 1e-300))))
        if direction == "up":
            bad = nxt < u - MONOTONE_SLACK * u
        else:
            bad = nxt > u + MONOTONE_SLACK * u
        if bad.any():
            worst = float(np.max(np.abs(nxt - u)[bad] / np.maximum(u[bad], 1e-300)))
            trace.violations.append((j, worst))
        if float(np.max(nxt)) > bound:
            raise DivergenceError(f"iterate {j} exceeds the a-priori sup bound {bound:.6g}")
        new_norm = fmap.norm(nxt)
        norm_change = abs(new_norm - norm) / max(new_norm, 1e-300)
        trace.sup_change.append(change)
        trace.norms.append(new_norm)
        u, norm = nxt, new_norm
        if change <= tol and norm_change <= tol:
            converged = True
            break
    trace.stop_reason = "converged" if converged else f"max_iter ({max_iter}) reached"
    if not converged:
        log.warning("fixed-point iteration did not converge in %d steps (last change %.3g)",
                    max_iter, trace.sup_change[-1])
    return SolutionField(sigma.support, u, params, j, u_start.c0, converged), trace


def solve(sigma: Measure, params: Parameters, tol: float = 1e-8, max_iter: int = 500,
          threads: int | None = None) -> tuple[SolutionField, IterationTrace]:
    """Minimal solution from ``init_u0``; the zero solution when p >= n."""
    if params.p >= params.n:
        return _trivial(sigma, params, solver_issue(params)), IterationTrace(stop_reason="trivial")
    require_solver_mode(params)
    _check_measure(sigma)
    fmap = None if sigma.is_zero() else FixedPointMap(sigma, params, threads=threads)
    u0 = init_u0(sigma, params, fmap)
    return iterate(sigma, params, u0, tol, max_iter, fmap=fmap)


def energy_bound(trace: IterationTrace, params: Parameters, slack: float = 1e-12) -> InequalityCertificate:
    """Checks int u_j^(1+q) dsigma is nondecreasing and reports the smallest
    C with N_{j+1} <= C N_j^(q/(p-1)) along the run."""
    d = require_solver_mode(params)
    s = params.q / (params.p - 1)
    norms = [trace.start_norm] + list(trace.norms)
    samples, c_emp, ok = [], 0.0, True
    for j in range(1, len(norms)):
        prev, cur = norms[j - 1], norms[j]
        ratio = cur / prev ** s if prev > 0 else (0.0 if cur == 0 else math.inf)
        c_emp = max(c_emp, ratio)
        mono = cur >= prev * (1 - slack)
        ok &= mono
        samples.append({"step": j, "norm": cur, "ratio": ratio, "monotone": bool(mono)})
    bounded = math.isfinite(c_emp)
    limit = c_emp ** (1 / (1 - s)) if c_emp > 0 and bounded else 0.0
    notes = [f"empirical C = {c_emp:.6g}; implied bound on the norms C^((p-1)/(p-1-q)) = {limit:.6g}"]
    min_slack = min((smp["norm"] / norms[i] - 1 for i, smp in enumerate(samples) if norms[i] > 0),
                    default=0.0)
    cfg = {"slack": slack, "exponent": s, "gamma": d.gamma, "C_emp": c_emp}
    return InequalityCertificate("energy-bound", params.to_dict(), cfg, samples, min_slack,
                                 bool(ok and bounded and all(n_ <= limit * (1 + 1e-9) for n_ in norms[1:])
                                      if samples else True), notes)


def residual(u: SolutionField, sigma: Measure, params: Parameters, floor: float = 1e-300,
             fmap: FixedPointMap | None = None) -> float:
    """max over the support of |u - W_{1,p}(u^q dsigma)| / max(u, floor)."""
    if sigma.is_zero():
        return 0.0
    fmap = fmap or FixedPointMap(sigma, params)
    tu = fmap(u.values)
    diff = np.abs(u.values - tu)
    rel = np.where(diff == 0, 0.0, diff / np.maximum(u.values, floor))
    return float(rel.max())


def lower_bound_ratio(u: SolutionField, sigma: Measure, params: Parameters,
                      fmap: FixedPointMap | None = None) -> float:
    """min over the support of u / (W_{1,p} sigma)^gamma (+inf for an empty support)."""
    d = require_solver_mode(params)
    if sigma.is_zero():
        return math.inf
    fmap = fmap or FixedPointMap(sigma, params)
    base = fmap.base ** d.gamma
    pos = base > 0
    if not pos.any():
        return math.inf
    return float(np.min(u.values[pos] / base[pos]))


def uniqueness_probe(sigma: Measure, params: Parameters, tol: float = 1e-8, max_iter: int = 500,
                     factor: float = 10.0, threads: int | None = None) -> InequalityCertificate:
    """Run from u_0 (upward) and from ``factor`` times that limit (downward);
    pass iff the limits agree within 5 * tol in sup-relative distance."""
    cfg = {"tol": tol, "max_iter": max_iter, "factor": factor}
    if params.p >= params.n or sigma.is_zero():
        return InequalityCertificate("uniqueness", params.to_dict(), cfg, [], 0.0, True,
                                     ["only the zero solution exists"])
    fmap = FixedPointMap(sigma, params, threads=threads)
    u0 = init_u0(sigma, params, fmap)
    low, tr_low = iterate(sigma, params, u0, tol, max_iter, fmap=fmap, direction="up")
    start = SolutionField(low.points, factor * low.values, params, 0, None)
    high, tr_high = iterate(sigma, params, start, tol, max_iter, fmap=fmap, direction="down")
    notes = []
    if not (low.converged and high.converged):
        notes.append("inconclusive: a run did not converge")
    dist = float(np.max(np.abs(low.values - high.values) / np.maximum(np.abs(high.values), 1e-300)))
    samples = [{"lower_iterations": low.iterations, "upper_iterations": high.iterations,
                "sup_relative_distance": dist,
                "lower_violations": len(tr_low.violations), "upper_violations": len(tr_high.violations)}]
    ok = low.converged and high.converged and dist <= 5 * tol
    return InequalityCertificate("uniqueness", params.to_dict(), cfg, samples, 5 * tol - dist, ok, notes)


__all__ = [
    "CriterionFailure",
    "DivergenceError",
    "FixedPointMap",
    "IterationTrace",
    "SolutionField",
    "energy_bound",
    "init_u0",
    "iterate",
    "lower_bound_ratio",
    "residual",
    "solve",
    "uniqueness_probe",
]
