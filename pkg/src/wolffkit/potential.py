"""Wolff potentials W_{alpha,p} sigma and Riesz potentials I_alpha sigma.

    W_{alpha,p} sigma(x) = int_0^inf (sigma(B(x,t)) / t^(n - alpha p))^(1/(p-1)) dt/t

Writing ``e = (n - alpha p)/(p - 1)`` and ``beta = 1/(p - 1)``, the integrand
is ``sigma(B(x,t))^beta * t^(-e-1)``. For atomic measures (and grid
measures above the sub-cell radius) the ball mass is a step function of
``t``, so the integral is a finite sum of power integrals. That exact path
is the reference; the log-spaced quadrature handles any measure exposing
``ball_mass_many`` and is checked against it.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from .measure import AtomicMeasure, GridMeasure, Measure, UniformBall, _distances
from .parameters import Parameters, ParameterError, derive, unit_ball_volume

log = logging.getLogger(__name__)


class QuadratureError(RuntimeError):
    """Successive refinements disagree by more than the requested tolerance."""


class QuadratureWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class QuadratureConfig:
    """Log-spaced panels per decade; ``t_min``/``t_max`` are extra mesh nodes.

    Panels are refined by doubling up to ``max_doublings`` times and
    Richardson-extrapolated; ``rtol`` is the acceptance threshold on the
    change between successive extrapolants.
    """

    points_per_decade: int = 32
    t_min: float | None = None
    t_max: float | None = None
    rtol: float = 1e-8
    max_doublings: int = 5
    insert_breakpoints: bool = True

    def __post_init__(self):
        if self.points_per_decade < 4:
            raise ValueError("points_per_decade must be at least 4")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _kernel_exps(params: Parameters) -> tuple[float, float]:
    d = derive(params)
    if d.wolff_exp <= 0:
        raise ParameterError("n = alpha p (logarithmic kernel) is not supported")
    return d.wolff_exp, 1.0 / (params.p - 1)


def _power_integral(a, b, e):
    """int_a^b t^(-e-1) dt for 0 < a <= b <= inf, free of cancellation."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ratio = np.where(np.isinf(b), 0.0, (a / b) ** e)
        return a ** (-e) * (1.0 - ratio) / e


def head_integral(rho: float, t0: float, params: Parameters) -> float:
    """int_0^t0 (rho omega_n t^n / t^(n - alpha p))^(1/(p-1)) dt/t."""
    if rho <= 0 or t0 <= 0:
        return 0.0
    s = params.alpha * params.p / (params.p - 1)
    return (rho * unit_ball_volume(params.n)) ** (1 / (params.p - 1)) * t0 ** s / s


def tail_integral(mass: float, T: float, params: Parameters) -> float:
    """int_T^inf (mass / t^(n - alpha p))^(1/(p-1)) dt/t."""
    e, beta = _kernel_exps(params)
    if mass <= 0:
        return 0.0
    if T <= 0:
        return math.inf
    return mass ** beta * T ** (-e) / e


def _profile_sum(d_sorted, cum, t0, e, beta):
    """Exact integral over t > t0 of a step profile (open-ball convention)."""
    a = np.maximum(d_sorted, t0)
    with np.errstate(divide="ignore"):
        a = a ** (-e) / e
    kw = a - np.append(a[1:], 0.0)
    if np.isinf(a[0]):
        return math.inf if cum[0] > 0 else float(np.dot(cum[1:] ** beta, kw[1:]))
    return float(np.dot(cum ** beta, kw))


def wolff_exact_atomic(sigma: AtomicMeasure, params: Parameters, x) -> float:
    """Closed-form Wolff potential of an atomic measure; +inf at atoms."""
    if not isinstance(sigma, AtomicMeasure):
        raise TypeError("wolff_exact_atomic needs an AtomicMeasure")
    e, beta = _kernel_exps(params)
    if len(sigma) == 0:
        return 0.0
    prof = sigma.profile(x)
    return _profile_sum(prof.distances, prof.cumulative, 0.0, e, beta)


def wolff_exact_grid(sigma: GridMeasure, params: Parameters, x) -> float:
    """Grid Wolff potential: sub-cell head plus exact sum over the center profile."""
    e, beta = _kernel_exps(params)
    if len(sigma.cell_masses) == 0:
        return 0.0
    t0, rho = sigma.head(x)
    prof = sigma.profile(x)
    return head_integral(rho, t0, params) + _profile_sum(prof.distances, prof.cumulative, t0, e, beta)


def _log_nodes(lo, hi, ppd, extra, refine: int = 1):
    """Geometric nodes on [lo, hi] with every point of ``extra`` inside it as a node.

    Each segment between structural nodes gets ceil(ppd * decades) panels
    times ``refine``, so doubling ``refine`` nests the meshes exactly.
    """
    cuts = np.array([lo, hi], dtype=float)
    if extra is not None and len(extra):
        extra = np.asarray(extra, dtype=float)
        cuts = np.union1d(cuts, extra[(extra > lo) & (extra < hi)])
    a, b = cuts[:-1], cuts[1:]
    k = np.maximum(1, np.ceil(ppd * np.log10(b / a) - 1e-9)).astype(np.intp) * refine
    seg = np.repeat(np.arange(len(a)), k)
    j = np.arange(len(seg)) - np.repeat(np.cumsum(k) - k, k)
    nodes = a[seg] * (b[seg] / a[seg]) ** (j / k[seg])
    return np.append(nodes, hi)


def _panel_rule(sigma, x, nodes, e, beta):
    """Kernel-exact midpoint rule in log t: mass sampled at geometric panel midpoints."""
    a, b = nodes[:-1], nodes[1:]
    mid = np.sqrt(a * b)
    m = np.asarray(sigma.ball_mass_many(x, mid), dtype=float)
    return float(np.dot(m ** beta, _power_integral(a, b, e)))


@dataclass
class QuadratureResult:
    value: float
    converged: bool
    levels: list[float]
    panels: int


def wolff_quadrature_detail(sigma: Measure, params: Parameters, x,
                            cfg: QuadratureConfig | None = None) -> QuadratureResult:
    cfg = cfg or QuadratureConfig()
    e, beta = _kernel_exps(params)
    x = np.asarray(x, dtype=float)
    M = sigma.total_mass()
    if M == 0:
        return QuadratureResult(0.0, True, [0.0], 0)
    t0, rho = sigma.head(x)
    if t0 <= 0 and rho == 0:
        # an atom sits at x: the integrand blows up like t^(-e-1) at 0
        return QuadratureResult(math.inf, True, [math.inf], 0)
    T = sigma.saturation_radius(x)
    if t0 >= T:
        # head model up to t0, full mass beyond it
        v = head_integral(rho, t0, params) + tail_integral(M, t0, params)
        return QuadratureResult(v, True, [v], 0)
    head = head_integral(rho, t0, params)
    tail = tail_integral(M, T, params)
    extra = list(sigma.breakpoints(x)) if cfg.insert_breakpoints else []
    extra += [t for t in (cfg.t_min, cfg.t_max) if t is not None]
    levels, extrap = [], []
    panels = 0
    for level in range(cfg.max_doublings + 1):
        nodes = _log_nodes(t0, T, cfg.points_per_decade, np.asarray(extra), 2 ** level)
        panels = len(nodes) - 1
        levels.append(_panel_rule(sigma, x, nodes, e, beta))
        if level > 0:
            extrap.append((4 * levels[-1] - levels[-2]) / 3)
        if extrap:
            prev = levels[-1] if len(extrap) == 1 else extrap[-2]
            cur = extrap[-1]
            if abs(cur - prev) <= cfg.rtol * max(abs(head + cur + tail), 1e-300):
                return QuadratureResult(head + cur + tail, True, levels, panels)
    best = extrap[-1] if extrap else levels[-1]
    return QuadratureResult(head + best + tail, False, levels, panels)


def wolff_quadrature(sigma: Measure, params: Parameters, x,
                     cfg: QuadratureConfig | None = None, strict: bool = False) -> float:
    """Log-spaced composite quadrature with analytic head and tail.

    With ``strict=True`` nonconvergence raises ``QuadratureError``;
    otherwise it is reported as a ``QuadratureWarning``.
    """
    res = wolff_quadrature_detail(sigma, params, x, cfg)
    if not res.converged:
        msg = f"quadrature did not converge at x={np.asarray(x).tolist()} (levels {res.levels[-2:]})"
        if strict:
            raise QuadratureError(msg)
        warnings.warn(msg, QuadratureWarning, stacklevel=2)
    return res.value


def riesz_potential(sigma: Measure, alpha: float, x) -> float:
    """(1/(n - alpha)) int |x - y|^(alpha - n) dsigma(y); +inf at atoms."""
    n = sigma.dim
    if not 0 < alpha < n:
        raise ParameterError(f"alpha must lie in (0, n) = (0, {n}), got {alpha}")
    x = np.asarray(x, dtype=float)
    return float(_riesz_many(sigma, alpha, x[None, :])[0])


def _riesz_many(sigma: Measure, alpha: float, points: np.ndarray) -> np.ndarray:
    n = sigma.dim
    c = 1.0 / (n - alpha)
    if isinstance(sigma, UniformBall):
        # I_alpha = W_{alpha/2, 2}
        p2 = Parameters(n, 2.0, None, alpha / 2)
        return np.array([wolff_quadrature(sigma, p2, x) for x in points])
    if isinstance(sigma, AtomicMeasure):
        if len(sigma) == 0:
            return np.zeros(len(points))
        out = np.empty(len(points))
        for i, x in enumerate(points):
            d = _distances(sigma.points, x)
            if np.any(d == 0):
                out[i] = math.inf
            else:
                out[i] = c * float(np.dot(sigma.masses, d ** (alpha - n)))
        return out
    if isinstance(sigma, GridMeasure):
        if len(sigma.cell_masses) == 0:
            return np.zeros(len(points))
        # self cell replaced by the integral over a ball of the cell's volume
        a = (sigma.cell_volume / unit_ball_volume(n)) ** (1 / n)
        self_factor = n * unit_ball_volume(n) * a ** alpha / alpha
        lookup = _cell_lookup(sigma)
        out = np.empty(len(points))
        for i, x in enumerate(points):
            d = _distances(sigma.centers, x)
            j = lookup(x)
            with np.errstate(divide="ignore"):
                terms = sigma.cell_masses * d ** (alpha - n)
            s = 0.0
            if j >= 0:
                terms[j] = 0.0
                s = sigma.cell_masses[j] / sigma.cell_volume * self_factor
            out[i] = c * (float(terms.sum()) + s)
        return out
    raise TypeError(f"unsupported measure {type(sigma).__name__}")


def _cell_lookup(sigma: GridMeasure):
    """Map a point to the index (in ``occupied`` order) of its cell, or -1."""
    table = -np.ones(sigma.dims, dtype=np.int64)
    table[tuple(sigma.occupied.T)] = np.arange(len(sigma.cell_masses))

    def lookup(x):
        cell = sigma.cell_of(x)
        return -1 if cell is None else int(table[cell])

    return lookup


class WolffOperator:
    """Wolff potential of ``weight(sigma, f)`` at fixed points, for many ``f``.

    Sorted distance orders are computed once (cached when the
    points-by-support table fits ``cache_limit`` entries, recomputed per
    chunk otherwise). ``apply(f)`` then costs one cumulative sum per point.
    Works for atomic and grid measures.
    """

    def __init__(self, sigma: AtomicMeasure | GridMeasure, params: Parameters, points,
                 threads: int | None = None, cache_limit: int = 25_000_000, chunk: int | None = None):
        if not isinstance(sigma, (AtomicMeasure, GridMeasure)):
            raise TypeError("WolffOperator supports atomic and grid measures")
        self.sigma = sigma
        self.params = params
        self.e, self.beta = _kernel_exps(params)
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.points.shape[1] != sigma.dim:
            raise ValueError(f"points must be {sigma.dim}-dimensional")
        self.support = sigma.support
        self.base_masses = sigma.support_masses
        m, N = len(self.points), len(self.base_masses)
        self.threads = resolve_threads(threads)
        self.chunk = chunk or max(1, min(m, 4_000_000 // max(N, 1)))
        if isinstance(sigma, GridMeasure):
            self.t0 = sigma.h / 2
            lookup = _cell_lookup(sigma)
            self.head_index = np.array([lookup(x) for x in self.points], dtype=np.int64)
            self.head_density = np.where(self.head_index >= 0, 1.0, 0.0)
            if N:
                hd = sigma.density[tuple(sigma.occupied.T)]
                self.head_density[self.head_index >= 0] = hd[self.head_index[self.head_index >= 0]]
        else:
            self.t0 = 0.0
            self.head_index = -np.ones(m, dtype=np.int64)
            self.head_density = np.zeros(m)
        self._cache = None
        if N and m * N <= cache_limit:
            self._cache = self._run(self._prepare)

    def _chunks(self):
        m = len(self.points)
        return [(s, min(s + self.chunk, m)) for s in range(0, m, self.chunk)]

    def _run(self, fn):
        chunks = self._chunks()
        if self.threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(self.threads) as ex:
                return list(ex.map(fn, chunks))
        return [fn(c) for c in chunks]

    def _prepare(self, span):
        s, t = span
        pts = self.points[s:t]
        D = np.sqrt(sum((pts[:, None, k] - self.support[None, :, k]) ** 2 for k in range(pts.shape[1])))
        if self.beta == 1.0:
            # linear case: no ordering needed, W = sum_j m_j int_{max(d_j, t0)}^inf t^(-e-1) dt
            singular = (D == 0) & (self.t0 == 0)
            with np.errstate(divide="ignore"):
                kw = np.maximum(D, self.t0) ** (-self.e) / self.e
            if not singular.any():
                return None, kw, None
            kw[singular] = 0.0
            return None, kw, singular
        order = np.argsort(D, axis=1, kind="stable")
        Ds = np.take_along_axis(D, order, axis=1)
        singular = (Ds[:, 0] == 0) & (self.t0 == 0)
        with np.errstate(divide="ignore"):
            a = np.maximum(Ds, self.t0) ** (-self.e) / self.e
        a[singular, 0] = a[singular, 1] if a.shape[1] > 1 else 0.0
        kw = a - np.concatenate([a[:, 1:], np.zeros((len(a), 1))], axis=1)
        idx = order.astype(np.int32) if len(self.support) < 2**31 else order
        return idx, kw, singular

    def apply(self, f=None) -> np.ndarray:
        """W_{alpha,p}(f dsigma) at the operator's points (f on the support)."""
        m = len(self.points)
        if len(self.base_masses) == 0:
            return np.zeros(m)
        if f is None:
            f = np.ones(len(self.base_masses))
        f = np.asarray(f, dtype=float)
        if f.shape != self.base_masses.shape:
            raise ValueError("f must have one value per support point")
        if np.any(~np.isfinite(f)) or np.any(f < 0):
            raise ValueError("f must be finite and nonnegative")
        masses = self.base_masses * f
        chunks = self._chunks()

        def work(i):
            prep = self._cache[i] if self._cache is not None else self._prepare(chunks[i])
            idx, kw, singular = prep
            if idx is None:
                w = kw @ masses
                if singular is not None:
                    hit = (singular & (masses > 0)[None, :]).any(axis=1)
                    w[hit] = math.inf
                return w
            cum = np.cumsum(masses[idx], axis=1)
            cb = cum if self.beta == 1.0 else cum ** self.beta
            w = np.einsum("ij,ij->i", cb, kw)
            if singular.any():
                first = masses[idx[singular, 0]]
                w[singular] = np.where(first > 0, math.inf, w[singular])
            return w

        if self.threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(self.threads) as ex:
                parts = list(ex.map(work, range(len(chunks))))
        else:
            parts = [work(i) for i in range(len(chunks))]
        out = np.concatenate(parts)
        if isinstance(self.sigma, GridMeasure):
            hf = np.where(self.head_index >= 0, f[np.maximum(self.head_index, 0)], 0.0)
            rho = self.head_density * hf
            s = self.params.alpha * self.params.p / (self.params.p - 1)
            out = out + (rho * unit_ball_volume(self.params.n)) ** self.beta * self.t0 ** s / s
        return out


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        return os.cpu_count() or 1
    return max(1, int(threads))


@dataclass
class PotentialField:
    points: np.ndarray
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict)
    warnings: list[str] = dc_field(default_factory=list)

    def to_csv(self, path) -> None:
        n = self.points.shape[1]
        method = self.meta.get("method", "")
        header = ",".join([f"x_{k + 1}" for k in range(n)] + ["value", "method"])
        lines = [header]
        for x, v in zip(self.points, self.values):
            lines.append(",".join([repr(float(c)) for c in x] + [format_value(v), method]))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def format_value(v: float) -> str:
    return "inf" if math.isinf(v) else repr(float(v))


def field(sigma: Measure, params: Parameters, points, cfg: QuadratureConfig | None = None,
          method: str = "auto", threads: int | None = None, kind: str = "wolff") -> PotentialField:
    """Evaluate a potential at every point, preserving input order.

    ``method`` is ``exact`` (atomic and grid measures), ``quadrature`` or
    ``auto``. ``kind="riesz"`` evaluates I_alpha with ``params.alpha``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        pts = pts.reshape(0, sigma.dim)
    cfg = cfg or QuadratureConfig()
    meta = {"params": params.to_dict(), "kind": kind, "quadrature": cfg.digest()}
    notes: list[str] = []
    if kind == "riesz":
        vals = _riesz_many(sigma, params.alpha, pts)
        meta["method"] = "exact" if not isinstance(sigma, UniformBall) else "quadrature"
        return PotentialField(pts, vals, meta, notes)
    if kind != "wolff":
        raise ValueError(f"unknown potential kind {kind!r}")
    _kernel_exps(params)
    if method == "auto":
        method = "exact" if isinstance(sigma, (AtomicMeasure, GridMeasure)) else "quadrature"
    meta["method"] = method
    if method == "exact":
        if not isinstance(sigma, (AtomicMeasure, GridMeasure)):
            raise TypeError("exact evaluation needs an atomic or grid measure")
        vals = WolffOperator(sigma, params, pts, threads=threads).apply()
    elif method == "quadrature":
        vals = np.empty(len(pts))

        def one(i):
            res = wolff_quadrature_detail(sigma, params, pts[i], cfg)
            if not res.converged:
                notes.append(f"point {i}: quadrature not converged")
            return res.value

        nthreads = resolve_threads(threads)
        if nthreads > 1 and len(pts) > 1:
            with ThreadPoolExecutor(nthreads) as ex:
                vals[:] = list(ex.map(one, range(len(pts))))
        else:
            vals[:] = [one(i) for i in range(len(pts))]
        notes.sort(key=lambda s: int(s.split()[1].rstrip(":")))
    else:
        raise ValueError(f"unknown method {method!r}")
    for w in notes:
        log.warning(w)
    return PotentialField(pts, vals, meta, notes)
