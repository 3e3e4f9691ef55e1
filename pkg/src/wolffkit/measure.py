"""Nonnegative measures on R^n and ball-mass queries sigma(B(x, t)).

Balls are open: a point at distance exactly ``t`` from ``x`` is not counted.

Three concrete measures are provided:

``AtomicMeasure``
    finitely many weighted points.
``GridMeasure``
    piecewise-constant density on a uniform lattice of cubes. For radii
    ``t >= h/2`` a cell's mass sits at its center; below ``h/2`` the density
    of the cell containing ``x`` is taken as locally uniform, so
    ``sigma(B(x, t)) = rho(x) * omega_n * t^n``.
``UniformBall``
    constant density on one ball, with closed-form ball masses. It exists
    as an analytic oracle for the quadrature path.

Every measure exposes the same small surface used by the potential code:
``ball_mass``, ``ball_mass_many``, ``profile``, ``head``, ``breakpoints``,
``saturation_radius``, ``total_mass`` and ``support_radius``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import betainc

from .parameters import unit_ball_volume


class MeasureError(ValueError):
    pass


def _sqdist(coords, x) -> np.ndarray:
    """Squared distances, summed coordinate by coordinate in a fixed order.

    ``coords`` is a sequence of n arrays (one per axis). Brute-force and
    accelerated queries both go through here, so they agree bit for bit.
    """
    s = (coords[0] - x[0]) ** 2
    for k in range(1, len(coords)):
        s = s + (coords[k] - x[k]) ** 2
    return s


def _distances(points: np.ndarray, x) -> np.ndarray:
    return np.sqrt(_sqdist([points[:, k] for k in range(points.shape[1])], x))


@dataclass(frozen=True)
class BallMassProfile:
    """Sorted distances from a query point and cumulative masses.

    ``sigma(B(x, t)) = cumulative[k]`` for ``distances[k] < t <= distances[k+1]``.
    """

    distances: np.ndarray
    cumulative: np.ndarray

    def mass_below(self, t) -> np.ndarray:
        k = np.searchsorted(self.distances, t, side="left")
        cum = np.concatenate([[0.0], self.cumulative])
        return cum[k]


class Measure:
    """Common interface. Subclasses are immutable after construction."""

    dim: int

    def total_mass(self) -> float:
        raise NotImplementedError

    def ball_mass(self, x, t: float) -> float:
        raise NotImplementedError

    def ball_mass_many(self, x, radii) -> np.ndarray:
        return np.array([self.ball_mass(x, t) for t in np.asarray(radii, dtype=float)])

    def support_radius(self, center=None) -> float:
        raise NotImplementedError

    def saturation_radius(self, x) -> float:
        """Radius beyond which every ball around ``x`` holds the full mass."""
        raise NotImplementedError

    def head(self, x) -> tuple[float, float]:
        """``(t0, rho)`` with ``sigma(B(x, t)) = rho * omega_n * t^n`` for ``t <= t0``."""
        raise NotImplementedError

    def breakpoints(self, x) -> np.ndarray:
        """Radii where t -> sigma(B(x, t)) is not smooth."""
        return np.empty(0)

    def is_zero(self) -> bool:
        return self.total_mass() == 0.0

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise MeasureError(f"expected a point in R^{self.dim}, got shape {x.shape}")
        return x


class AtomicMeasure(Measure):
    def __init__(self, points, masses, dim: int | None = None):
        pts = np.asarray(points, dtype=float)
        m = np.asarray(masses, dtype=float).ravel()
        if pts.size == 0:
            if dim is None:
                raise MeasureError("dimension required for an empty atomic measure")
            pts = pts.reshape(0, dim)
        if pts.ndim != 2 or pts.shape[0] != m.shape[0]:
            raise MeasureError("points must be (N, n) with one mass per point")
        if dim is not None and pts.shape[1] != dim:
            raise MeasureError(f"points are {pts.shape[1]}-dimensional, expected {dim}")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(pts))):
            raise MeasureError("points and masses must be finite")
        if np.any(m < 0):
            raise MeasureError("masses must be nonnegative")
        keep = m > 0
        pts, m = pts[keep], m[keep]
        if pts.shape[0]:
            pts, inverse = np.unique(pts, axis=0, return_inverse=True)
            m = np.bincount(inverse.ravel(), weights=m, minlength=pts.shape[0])
        self.points = pts
        self.masses = m
        self.dim = pts.shape[1]
        self._tree = None
        self.points.setflags(write=False)
        self.masses.setflags(write=False)

    @classmethod
    def empty(cls, dim: int) -> "AtomicMeasure":
        return cls(np.empty((0, dim)), np.empty(0), dim=dim)

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return f"AtomicMeasure(N={len(self)}, n={self.dim}, mass={self.total_mass():g})"

    @property
    def support(self) -> np.ndarray:
        return self.points

    @property
    def support_masses(self) -> np.ndarray:
        return self.masses

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree

    def total_mass(self) -> float:
        return float(self.masses.sum())

    def ball_mass(self, x, t: float) -> float:
        x = self._check_point(x)
        if len(self) == 0 or t <= 0:
            return 0.0
        # tree query is closed and approximate near the boundary; widen, then filter exactly
        idx = self.tree.query_ball_point(x, t * (1 + 1e-9) + 1e-300)
        if not idx:
            return 0.0
        idx = np.sort(np.asarray(idx, dtype=np.intp))
        inside = _distances(self.points[idx], x) < t
        return float(self.masses[idx[inside]].sum())

    def ball_mass_brute(self, x, t: float) -> float:
        x = self._check_point(x)
        if len(self) == 0:
            return 0.0
        return float(self.masses[_distances(self.points, x) < t].sum())

    def profile(self, x) -> BallMassProfile:
        x = self._check_point(x)
        d = _distances(self.points, x)
        order = np.argsort(d, kind="stable")
        return BallMassProfile(d[order], np.cumsum(self.masses[order]))

    def ball_mass_many(self, x, radii) -> np.ndarray:
        return self.profile(x).mass_below(np.asarray(radii, dtype=float))

    def support_radius(self, center=None) -> float:
        if len(self) == 0:
            return 0.0
        c = np.zeros(self.dim) if center is None else self._check_point(center)
        return float(_distances(self.points, c).max())

    def saturation_radius(self, x) -> float:
        return self.support_radius(x)

    def head(self, x) -> tuple[float, float]:
        if len(self) == 0:
            return math.inf, 0.0
        return float(_distances(self.points, self._check_point(x)).min()), 0.0

    def breakpoints(self, x) -> np.ndarray:
        return np.unique(_distances(self.points, self._check_point(x)))

    def weight(self, f) -> "AtomicMeasure":
        f = _check_weight(f, len(self))
        return AtomicMeasure(self.points, self.masses * f, dim=self.dim)

    def scaled(self, lam: float) -> "AtomicMeasure":
        return AtomicMeasure(self.points, self.masses * lam, dim=self.dim)

    def dilated(self, r: float) -> "AtomicMeasure":
        """Push-forward under x -> r x, i.e. sigma_r(E) = sigma(E / r)."""
        return AtomicMeasure(self.points * r, self.masses, dim=self.dim)

    def to_spec(self) -> dict:
        return {"type": "atomic", "points": self.points.tolist(), "masses": self.masses.tolist()}


class GridMeasure(Measure):
    """Cellwise-constant density; ``origin`` is the lower corner of cell (0, ..., 0)."""

    def __init__(self, origin, spacing: float, density):
        rho = np.array(density, dtype=float)
        origin = np.asarray(origin, dtype=float).ravel()
        if rho.ndim != origin.shape[0]:
            raise MeasureError(f"density has {rho.ndim} axes but origin has {origin.shape[0]} coordinates")
        if rho.ndim < 1 or min(rho.shape) < 1:
            raise MeasureError("grid dims must be positive")
        if not spacing > 0 or not math.isfinite(spacing):
            raise MeasureError(f"spacing must be positive, got {spacing}")
        if not np.all(np.isfinite(rho)) or np.any(rho < 0):
            raise MeasureError("density must be finite and nonnegative")
        self.origin = origin
        self.h = float(spacing)
        self.density = rho
        self.dim = rho.ndim
        self.dims = rho.shape
        self.cell_volume = self.h ** self.dim
        self.occupied = np.argwhere(rho > 0)
        self.centers = self.origin + (self.occupied + 0.5) * self.h
        self.cell_masses = rho[tuple(self.occupied.T)] * self.cell_volume
        self._row_prefix = None
        for a in (self.origin, self.density, self.centers, self.cell_masses, self.occupied):
            a.setflags(write=False)

    def __repr__(self):
        return (f"GridMeasure(dims={self.dims}, h={self.h:g}, occupied={len(self.cell_masses)}, "
                f"mass={self.total_mass():g})")

    @property
    def support(self) -> np.ndarray:
        return self.centers

    @property
    def support_masses(self) -> np.ndarray:
        return self.cell_masses

    def total_mass(self) -> float:
        return float(self.cell_masses.sum())

    def cell_of(self, x) -> tuple[int, ...] | None:
        idx = np.floor((np.asarray(x, dtype=float) - self.origin) / self.h).astype(np.int64)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.dims)):
            return None
        return tuple(int(i) for i in idx)

    def density_at(self, x) -> float:
        c = self.cell_of(x)
        return 0.0 if c is None else float(self.density[c])

    def _subcell(self, x, t) -> float:
        return self.density_at(x) * unit_ball_volume(self.dim) * t ** self.dim

    def _axis_centers(self, k: int, idx) -> np.ndarray:
        return self.origin[k] + (np.asarray(idx) + 0.5) * self.h

    def ball_mass_brute(self, x, t: float) -> float:
        x = self._check_point(x)
        if t <= 0:
            return 0.0
        if t < self.h / 2:
            return self._subcell(x, t)
        coords = [self._axis_centers(k, self.occupied[:, k]) for k in range(self.dim)]
        inside = np.sqrt(_sqdist(coords, x)) < t
        return float(self.cell_masses[inside].sum())

    def _prefix(self) -> np.ndarray:
        if self._row_prefix is None:
            m = self.density * self.cell_volume
            pad = [(0, 0)] * (self.dim - 1) + [(1, 0)]
            self._row_prefix = np.pad(np.cumsum(m, axis=-1), pad)
        return self._row_prefix

    def ball_mass(self, x, t: float) -> float:
        """Row-wise prefix sums along the last axis; boundary cells checked exactly."""
        x = self._check_point(x)
        if t <= 0:
            return 0.0
        if t < self.h / 2:
            return self._subcell(x, t)
        n, h = self.dim, self.h
        dims = np.asarray(self.dims)
        lo = np.maximum(np.floor((x - t - self.origin) / h - 0.5).astype(np.int64) - 1, 0)
        hi = np.minimum(np.ceil((x + t - self.origin) / h - 0.5).astype(np.int64) + 1, dims - 1)
        if np.any(hi < lo):
            return 0.0
        axes = [np.arange(lo[k], hi[k] + 1) for k in range(n - 1)]
        grids = np.meshgrid(*axes, indexing="ij") if n > 1 else []
        rows = [g.ravel() for g in grids]
        nrows = rows[0].size if rows else 1
        coords = [self._axis_centers(k, rows[k]) for k in range(n - 1)]
        last = n - 1

        def inside(j):
            cc = coords + [self._axis_centers(last, j)]
            return np.sqrt(_sqdist(cc, x)) < t

        perp2 = _sqdist(coords, x[: n - 1]) if n > 1 else np.zeros(1)
        w = np.sqrt(np.maximum(t * t - perp2, 0.0))
        jl = np.floor((x[last] - w - self.origin[last]) / h - 0.5).astype(np.int64) - 1
        jh = np.ceil((x[last] + w - self.origin[last]) / h - 0.5).astype(np.int64) + 1
        jl = np.clip(jl, 0, dims[last] - 1) * np.ones(nrows, dtype=np.int64)
        jh = np.clip(jh, 0, dims[last] - 1) * np.ones(nrows, dtype=np.int64)
        # shrink each interval until both ends are inside (distance is monotone along a row)
        for _ in range(int(dims[last]) + 1):
            move = (jl <= jh) & ~inside(jl)
            if not move.any():
                break
            jl = jl + move
        for _ in range(int(dims[last]) + 1):
            move = (jl <= jh) & ~inside(jh)
            if not move.any():
                break
            jh = jh - move
        ok = jl <= jh
        if not ok.any():
            return 0.0
        pre = self._prefix()
        idx_rows = tuple(r[ok] for r in rows)
        total = pre[idx_rows + (jh[ok] + 1,)] - pre[idx_rows + (jl[ok],)]
        return float(total.sum())

    def profile(self, x) -> BallMassProfile:
        """Center-distance profile (valid for ``t >= h/2``)."""
        x = self._check_point(x)
        d = _distances(self.centers, x)
        order = np.argsort(d, kind="stable")
        return BallMassProfile(d[order], np.cumsum(self.cell_masses[order]))

    def ball_mass_many(self, x, radii) -> np.ndarray:
        x = self._check_point(x)
        radii = np.asarray(radii, dtype=float)
        out = self.profile(x).mass_below(radii)
        small = radii < self.h / 2
        if np.any(small):
            out[small] = self.density_at(x) * unit_ball_volume(self.dim) * radii[small] ** self.dim
        return out

    def support_radius(self, center=None) -> float:
        if len(self.cell_masses) == 0:
            return 0.0
        c = np.zeros(self.dim) if center is None else self._check_point(center)
        return float(_distances(self.centers, c).max() + self.h * math.sqrt(self.dim) / 2)

    def saturation_radius(self, x) -> float:
        if len(self.cell_masses) == 0:
            return 0.0
        return float(max(_distances(self.centers, self._check_point(x)).max(), self.h / 2))

    def head(self, x) -> tuple[float, float]:
        return self.h / 2, self.density_at(self._check_point(x))

    def breakpoints(self, x) -> np.ndarray:
        d = np.unique(_distances(self.centers, self._check_point(x)))
        return d[d > self.h / 2]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self.cell_masses) == 0:
            return self.origin.copy(), self.origin.copy()
        lo = self.origin + self.occupied.min(axis=0) * self.h
        hi = self.origin + (self.occupied.max(axis=0) + 1) * self.h
        return lo, hi

    def weight(self, f) -> "GridMeasure":
        """Multiply the density of each occupied cell (in ``occupied`` order) by ``f``."""
        f = _check_weight(f, len(self.cell_masses))
        rho = np.zeros(self.dims)
        rho[tuple(self.occupied.T)] = self.density[tuple(self.occupied.T)] * f
        return GridMeasure(self.origin, self.h, rho)

    def scaled(self, lam: float) -> "GridMeasure":
        return GridMeasure(self.origin, self.h, self.density * lam)

    def refined(self, factor: int = 2) -> "GridMeasure":
        """Mass-preserving subdivision of every cell into ``factor**n`` children."""
        rho = self.density
        for ax in range(self.dim):
            rho = np.repeat(rho, factor, axis=ax)
        return GridMeasure(self.origin, self.h / factor, rho)

    def to_spec(self) -> dict:
        return {"type": "grid", "origin": self.origin.tolist(), "spacing": self.h,
                "dims": list(self.dims), "density": self.density.ravel().tolist()}


def _cap_volume(n: int, radius: float, height: float) -> float:
    if height <= 0:
        return 0.0
    full = unit_ball_volume(n) * radius ** n
    if height >= 2 * radius:
        return full
    if height > radius:
        return full - _cap_volume(n, radius, 2 * radius - height)
    z = min(1.0, height * (2 * radius - height) / (radius * radius))
    return 0.5 * full * float(betainc((n + 1) / 2, 0.5, z))


def ball_intersection_volume(n: int, R: float, t: float, d: float) -> float:
    """Volume of B(0, R) intersected with B(y, t), |y| = d."""
    w = unit_ball_volume(n)
    if d >= R + t:
        return 0.0
    if d + t <= R:
        return w * t ** n
    if d + R <= t:
        return w * R ** n
    # cap heights R - a and t - (d - a), a = (d^2 + R^2 - t^2) / 2d, without cancellation
    h_big = (t - d + R) * (t + d - R) / (2 * d)
    h_small = (R - d + t) * (R + d - t) / (2 * d)
    return _cap_volume(n, R, h_big) + _cap_volume(n, t, h_small)


class UniformBall(Measure):
    """Mass ``mass`` spread uniformly over B(center, radius)."""

    def __init__(self, center, radius: float, mass: float = 1.0):
        self.center = np.asarray(center, dtype=float).ravel()
        self.dim = self.center.shape[0]
        if not radius > 0 or mass < 0:
            raise MeasureError("radius must be positive and mass nonnegative")
        self.radius = float(radius)
        self.mass = float(mass)
        self.rho = self.mass / (unit_ball_volume(self.dim) * self.radius ** self.dim)

    def __repr__(self):
        return f"UniformBall(n={self.dim}, radius={self.radius:g}, mass={self.mass:g})"

    def total_mass(self) -> float:
        return self.mass

    def _offset(self, x) -> float:
        return float(np.linalg.norm(self._check_point(x) - self.center))

    def ball_mass(self, x, t: float) -> float:
        if t <= 0:
            return 0.0
        return self.rho * ball_intersection_volume(self.dim, self.radius, float(t), self._offset(x))

    def ball_mass_many(self, x, radii) -> np.ndarray:
        d = self._offset(x)
        return np.array([self.rho * ball_intersection_volume(self.dim, self.radius, float(t), d)
                         if t > 0 else 0.0 for t in np.asarray(radii, dtype=float)])

    def support_radius(self, center=None) -> float:
        c = np.zeros(self.dim) if center is None else self._check_point(center)
        return float(np.linalg.norm(self.center - c) + self.radius)

    def saturation_radius(self, x) -> float:
        return self._offset(x) + self.radius

    def head(self, x) -> tuple[float, float]:
        d = self._offset(x)
        if d < self.radius:
            return self.radius - d, self.rho
        if d == self.radius:
            # on the sphere small balls are half inside, up to O(t / radius)
            return 1e-9 * self.radius, self.rho / 2
        return d - self.radius, 0.0

    def breakpoints(self, x) -> np.ndarray:
        d = self._offset(x)
        return np.unique([abs(self.radius - d), self.radius + d])

    def scaled(self, lam: float) -> "UniformBall":
        return UniformBall(self.center, self.radius, self.mass * lam)

    def to_spec(self) -> dict:
        return {"type": "uniform_ball", "center": self.center.tolist(),
                "radius": self.radius, "mass": self.mass}


def _check_weight(f, size: int) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim == 0:
        f = np.full(size, float(f))
    if f.shape != (size,):
        raise MeasureError(f"weight must have one value per support point ({size}), got {f.shape}")
    if np.any(np.isnan(f)) or np.any(np.isinf(f)):
        raise MeasureError("weight values must be finite; filter singular points first")
    if np.any(f < 0):
        raise MeasureError("weight values must be nonnegative")
    return f


def ball_mass(sigma: Measure, x, t: float) -> float:
    return sigma.ball_mass(x, t)


def profile(sigma: Measure, x) -> BallMassProfile:
    return sigma.profile(x)


def total_mass(sigma: Measure) -> float:
    return sigma.total_mass()


def support_radius(sigma: Measure, center=None) -> float:
    return sigma.support_radius(center)


def weight(sigma: Measure, f) -> Measure:
    return sigma.weight(f)


def load_measure(spec: dict, base_dir: str | Path = ".") -> Measure:
    """Build a measure from its JSON description."""
    kind = spec.get("type")
    if kind == "atomic":
        pts = spec.get("points", [])
        dim = spec.get("dim")
        if not pts and dim is None:
            raise MeasureError("empty atomic measure needs a 'dim' field")
        return AtomicMeasure(pts, spec.get("masses", []), dim=dim)
    if kind == "grid":
        dims = tuple(int(d) for d in spec["dims"])
        if "density_file" in spec:
            path = Path(base_dir) / spec["density_file"]
            flat = np.fromfile(path, dtype="<f8")
        elif "density" in spec:
            flat = np.asarray(spec["density"], dtype=float)
        else:
            raise MeasureError("grid measure needs 'density' or 'density_file'")
        if flat.size != math.prod(dims):
            raise MeasureError(f"density has {flat.size} values, dims {dims} need {math.prod(dims)}")
        return GridMeasure(spec["origin"], float(spec["spacing"]), flat.reshape(dims))
    if kind == "uniform_ball":
        return UniformBall(spec["center"], spec["radius"], spec.get("mass", 1.0))
    raise MeasureError(f"unknown measure type {kind!r}")


def load_measure_file(path: str | Path) -> Measure:
    path = Path(path)
    return load_measure(json.loads(path.read_text()), base_dir=path.parent)


def write_density_file(sigma: GridMeasure, path: str | Path) -> dict:
    """Write the density as row-major little-endian float64; return a spec pointing at it."""
    path = Path(path)
    sigma.density.astype("<f8").tofile(path)
    return {"type": "grid", "origin": sigma.origin.tolist(), "spacing": sigma.h,
            "dims": list(sigma.dims), "density_file": path.name}
