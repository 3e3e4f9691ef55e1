"""Energies, the finite-energy existence criterion, and numerical
certificates for the explicit inequalities the theory relies on."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .measure import AtomicMeasure, GridMeasure, Measure, _distances
from .parameters import (
    Parameters,
    ParameterError,
    derive,
    kappa_r,
    require_solver_mode,
    unit_ball_volume,
)
from .potential import (
    QuadratureConfig,
    WolffOperator,
    _log_nodes,
    _panel_rule,
    _riesz_many,
    format_value,
    tail_integral,
)


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        return format_value(float(v)) if math.isinf(v) else float(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, np.integer):
        return int(v)
    return v


@dataclass
class InequalityCertificate:
    id: str
    params: dict
    config: dict
    samples: list[dict]
    min_slack: float
    passed: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return _jsonable({"id": self.id, "params": self.params, "config": self.config,
                          "samples": self.samples, "min_slack": self.min_slack,
                          "pass": self.passed, "notes": self.notes})


@dataclass
class CriterionReport:
    spacings: list[float]
    estimates: list[float]
    trend: str
    verdict: str
    slope: float | None = None
    nontriviality: float | None = None
    explanation: str = ""

    def to_dict(self) -> dict:
        return _jsonable({"spacings": self.spacings, "estimates": self.estimates,
                          "trend": self.trend, "verdict": self.verdict, "slope": self.slope,
                          "nontriviality": self.nontriviality, "explanation": self.explanation})


def sample_points(sigma: GridMeasure, count: int = 100, seed: int = 0) -> np.ndarray:
    """Halton points over the support's bounding box (scrambled with ``seed``)."""
    lo, hi = sigma.bounding_box()
    pts = qmc.Halton(d=sigma.dim, scramble=True, seed=seed).random(count)
    return qmc.scale(pts, lo, hi) if np.all(hi > lo) else np.tile(lo, (count, 1))


def _support_potential(sigma, params, threads=None) -> np.ndarray:
    return WolffOperator(sigma, params, sigma.support, threads=threads).apply()


def wolff_energy(sigma: Measure, params: Parameters, threads: int | None = None) -> float:
    """Sum over occupied cells of W_{alpha,p} sigma(center) * cell mass."""
    derive(params)
    if sigma.is_zero():
        return 0.0
    if isinstance(sigma, AtomicMeasure):
        return math.inf
    if not isinstance(sigma, GridMeasure):
        raise TypeError("wolff_energy needs a grid (or atomic) measure")
    W = _support_potential(sigma, params, threads)
    return float(W @ sigma.cell_masses)


def riesz_energy(sigma: Measure, params: Parameters, margin: float = 0.5) -> float:
    """int (I_alpha sigma)^{p'} dx over a box around the support plus a far-field tail.

    The box is the support's bounding box widened by ``margin`` times its
    half-width and snapped to the measure's lattice; I_alpha is sampled at
    the box's cell centers. Outside the box, I_alpha sigma is replaced by
    mass / ((n - alpha) |x - c|^(n - alpha)) and integrated exactly over the
    exterior of the ball with the box's volume.
    """
    d = derive(params)
    n, a, pp = params.n, params.alpha, d.p_prime
    if (n - a) * pp <= n:
        raise ParameterError(f"(n - alpha) p' = {(n - a) * pp:g} <= n: the energy diverges at infinity")
    if sigma.is_zero():
        return 0.0
    if isinstance(sigma, AtomicMeasure):
        # |x|^((alpha - n) p') is not integrable at an atom when (n - alpha) p' > n
        return math.inf
    if not isinstance(sigma, GridMeasure):
        raise TypeError("riesz_energy needs a grid (or atomic) measure")
    h = sigma.h
    lo_i = sigma.occupied.min(axis=0)
    hi_i = sigma.occupied.max(axis=0) + 1
    pad = np.ceil(margin * (hi_i - lo_i) / 2).astype(int)
    lo_i, hi_i = lo_i - pad, hi_i + pad
    axes = [sigma.origin[k] + (np.arange(lo_i[k], hi_i[k]) + 0.5) * h for k in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.empty(len(pts))
    step = max(1, 2_000_000 // max(len(sigma.cell_masses), 1))
    for s in range(0, len(pts), step):
        vals[s:s + step] = _riesz_many(sigma, a, pts[s:s + step])
    inner = float(np.sum(vals ** pp)) * h ** n
    box_volume = float(np.prod((hi_i - lo_i) * h))
    R = (box_volume / unit_ball_volume(n)) ** (1 / n)
    M = sigma.total_mass()
    expo = (n - a) * pp - n
    tail = (M / (n - a)) ** pp * n * unit_ball_volume(n) * R ** (-expo) / expo
    return inner + tail


def check_wolff_inequality(sigma: Measure, params: Parameters, bracket: float = 1e3,
                           margin: float = 0.5) -> InequalityCertificate:
    """Two-sided comparability of int W dsigma and int (I_alpha sigma)^{p'} dx."""
    cfg = {"bracket": bracket, "margin": margin}
    if sigma.is_zero():
        return InequalityCertificate("wolff-energy", params.to_dict(), cfg, [], 0.0, True,
                                     ["zero measure: both energies vanish"])
    we = wolff_energy(sigma, params)
    re = riesz_energy(sigma, params, margin)
    if not (math.isfinite(we) and math.isfinite(re)):
        return InequalityCertificate("wolff-energy", params.to_dict(), cfg,
                                     [{"wolff_energy": we, "riesz_energy": re}], -math.inf, False,
                                     ["inconclusive: an energy is infinite"])
    ratio = we / re
    # log-distance to the nearer end of [1/bracket, bracket]
    slack = math.log(bracket) - abs(math.log(ratio)) if ratio > 0 else -math.inf
    return InequalityCertificate("wolff-energy", params.to_dict(), cfg,
                                 [{"wolff_energy": we, "riesz_energy": re, "ratio": ratio}],
                                 slack, slack >= 0)


def nontriviality_integral(sigma: Measure, params: Parameters) -> float:
    """int_1^inf (sigma(B(0,t)) / t^(n-p))^(1/(p-1)) dt/t for the W_{1,p} kernel."""
    p1 = params.with_alpha(1.0)
    e = (p1.n - p1.p) / (p1.p - 1)
    if e <= 0:
        return math.inf if not sigma.is_zero() else 0.0
    origin = np.zeros(sigma.dim)
    T = max(sigma.saturation_radius(origin), 1.0)
    val = tail_integral(sigma.total_mass(), T, p1)
    if T > 1.0:
        nodes = _log_nodes(1.0, T, QuadratureConfig().points_per_decade, sigma.breakpoints(origin))
        val += _panel_rule(sigma, origin, nodes, e, 1 / (p1.p - 1))
    return val


def criterion_estimate(sigma: Measure, params: Parameters, threads: int | None = None) -> float:
    """int (W_{1,p} sigma)^{(1+q)(p-1)/(p-1-q)} dsigma for one measure."""
    d = require_solver_mode(params)
    p1 = params.with_alpha(1.0)
    if sigma.is_zero():
        return 0.0
    if isinstance(sigma, AtomicMeasure):
        return math.inf
    W = _support_potential(sigma, p1, threads)
    return float((W ** d.crit_exp) @ sigma.cell_masses)


def existence_criterion(levels, params: Parameters, tol: float = 0.01,
                        slope_threshold: float = 0.5, threads: int | None = None) -> CriterionReport:
    """Refinement study of the finite-energy criterion.

    ``levels`` is a measure or a sequence of grid measures ordered by
    decreasing spacing. The verdict is ``finite`` when the last two
    successive estimates (or the only one available) change by less than
    ``tol`` relative, ``infinite`` when log(estimate) grows against log(1/h)
    with slope above ``slope_threshold`` over at least 3 levels, and
    ``unknown`` otherwise.
    """
    require_solver_mode(params)
    if isinstance(levels, Measure):
        levels = [levels]
    levels = list(levels)
    if not levels:
        raise ValueError("at least one refinement level is required")
    if any(isinstance(s, AtomicMeasure) and not s.is_zero() for s in levels):
        return CriterionReport([], [math.inf], "diverging", "infinite", None, None,
                               "atomic measure: W_{1,p} sigma = +inf at every atom of positive mass, "
                               "so the integral against sigma diverges")
    if all(s.is_zero() for s in levels):
        return CriterionReport([getattr(s, "h", 0.0) for s in levels], [0.0] * len(levels),
                               "converging", "finite", None, 0.0, "zero measure")
    hs = [float(s.h) for s in levels]
    est = [criterion_estimate(s, params, threads) for s in levels]
    nontriv = nontriviality_integral(levels[-1], params)
    diffs = [abs(b - a) / max(abs(b), 1e-300) for a, b in zip(est, est[1:])]
    slope = None
    if len(est) >= 3 and all(e > 0 for e in est):
        slope = float(np.polyfit(np.log(1 / np.asarray(hs)), np.log(est), 1)[0])
    if diffs and all(d < tol for d in diffs[-2:]):
        return CriterionReport(hs, est, "converging", "finite", slope, nontriv,
                               f"successive estimates agree within {tol:g}")
    if slope is not None and slope > slope_threshold and all(b > a for a, b in zip(est, est[1:])):
        return CriterionReport(hs, est, "diverging", "infinite", slope, nontriv,
                               f"estimates grow like h^-{slope:.3g} under refinement")
    if len(est) == 1:
        return CriterionReport(hs, est, "inconclusive", "unknown", None, nontriv,
                               "a single level cannot show a refinement trend")
    return CriterionReport(hs, est, "inconclusive", "unknown", slope, nontriv,
                           "neither stable nor growing at a power rate")


def check_composition_bound(sigma: GridMeasure, params: Parameters, r: float | None = None,
                            points=None, count: int = 100, seed: int = 0,
                            tol: float = 1e-9, threads: int | None = None) -> InequalityCertificate:
    """W((W sigma)^r dsigma)(x) >= kappa_r (W sigma(x))^(r/(p-1) + 1) at sample points.

    ``r`` defaults to q(p-1)/(p-1-q). Slack is reported relative to the
    right-hand side.
    """
    if r is None:
        r = require_solver_mode(params).r
    if isinstance(sigma, AtomicMeasure) and not sigma.is_zero():
        raise ValueError("composition bound needs W sigma finite on the support: use a grid measure")
    k = kappa_r(params, r)
    cfg = {"r": r, "kappa_r": k, "tol": tol, "seed": seed, "count": count}
    if sigma.is_zero():
        return InequalityCertificate("composition", params.to_dict(), cfg, [], 0.0, True,
                                     ["zero measure: both sides vanish"])
    pts = sample_points(sigma, count, seed) if points is None else np.atleast_2d(points)
    w_support = _support_potential(sigma, params, threads)
    if not np.all(np.isfinite(w_support)):
        raise ValueError("W sigma is infinite on the support; weights would be infinite")
    op = WolffOperator(sigma, params, pts, threads=threads)
    w_pts = op.apply()
    lhs = op.apply(w_support ** r)
    rhs = k * w_pts ** (r / (params.p - 1) + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        slack = np.where(rhs > 0, (lhs - rhs) / rhs, np.where(lhs >= 0, 0.0, -math.inf))
    samples = [{"x": x.tolist(), "lhs": float(a), "rhs": float(b), "slack": float(s)}
               for x, a, b, s in zip(pts, lhs, rhs, slack)]
    ms = float(slack.min())
    return InequalityCertificate("composition", params.to_dict(), cfg, samples, ms, ms >= -tol)


def maximal_function(sigma: AtomicMeasure | GridMeasure, f, x, radius_candidates=None) -> float:
    """Centered maximal function sup_r (1/sigma(B(x,r))) int_{B(x,r)} f dsigma.

    Without ``radius_candidates`` the supremum is exact: it runs over every
    distinct set of support points a ball around ``x`` can contain (and, for
    grid measures, over sub-cell balls, whose average is f of x's cell).
    """
    f = np.asarray(f, dtype=float)
    m = sigma.support_masses
    if f.shape != m.shape:
        raise ValueError("f must have one value per support point")
    if np.any(f < 0):
        raise ValueError("f must be nonnegative")
    x = np.asarray(x, dtype=float)
    if len(m) == 0:
        return 0.0
    d = _distances(sigma.support, x)
    t0 = sigma.h / 2 if isinstance(sigma, GridMeasure) else 0.0
    sub_avg = None
    if isinstance(sigma, GridMeasure):
        cell = sigma.cell_of(x)
        if cell is not None and sigma.density[cell] > 0:
            j = int(np.flatnonzero(np.all(sigma.occupied == np.asarray(cell), axis=1))[0])
            sub_avg = float(f[j])
    if radius_candidates is not None:
        best = 0.0
        for r in np.asarray(radius_candidates, dtype=float):
            if r < t0:
                if sub_avg is not None:
                    best = max(best, sub_avg)
                continue
            inside = d < r
            mass = m[inside].sum()
            if mass > 0:
                best = max(best, float((m[inside] * f[inside]).sum() / mass))
        return best
    order = np.argsort(d, kind="stable")
    ds = d[order]
    cm = np.cumsum(m[order])
    cf = np.cumsum((m * f)[order])
    # a prefix is a ball iff it ends a distance tie group and some radius >= t0 realizes it
    nxt = np.append(ds[1:], math.inf)
    ends = (nxt > ds) & (nxt >= t0)
    avgs = cf[ends] / cm[ends]
    best = float(avgs.max()) if avgs.size else 0.0
    if sub_avg is not None:
        best = max(best, sub_avg)
    return best


def check_maximal_domination(sigma: AtomicMeasure | GridMeasure, params: Parameters, f,
                             points=None, count: int = 50, seed: int = 0,
                             tol: float = 1e-9) -> InequalityCertificate:
    """W(f dsigma)(x) <= (M_sigma f(x))^(p'-1) W sigma(x) at sample points."""
    f = np.asarray(f, dtype=float)
    cfg = {"tol": tol, "seed": seed, "count": count}
    if sigma.is_zero():
        return InequalityCertificate("maximal", params.to_dict(), cfg, [], 0.0, True,
                                     ["zero measure: both sides vanish"])
    if points is None:
        pts = sample_points(sigma, count, seed) if isinstance(sigma, GridMeasure) else sigma.support
    else:
        pts = np.atleast_2d(points)
    pp = derive(params).p_prime
    op = WolffOperator(sigma, params, pts)
    lhs = op.apply(f)
    base = op.apply()
    mf = np.array([maximal_function(sigma, f, x) for x in pts])
    rhs = mf ** (pp - 1) * base
    with np.errstate(invalid="ignore", divide="ignore"):
        slack = np.where(np.isinf(rhs), 0.0,
                         np.where(rhs > 0, (rhs - lhs) / rhs, np.where(lhs <= 0, 0.0, -math.inf)))
    samples = [{"x": x.tolist(), "lhs": float(a), "rhs": float(b), "maximal": float(mm), "slack": float(s)}
               for x, a, b, mm, s in zip(pts, lhs, rhs, mf, slack)]
    ms = float(slack.min())
    return InequalityCertificate("maximal", params.to_dict(), cfg, samples, ms, ms >= -tol)
