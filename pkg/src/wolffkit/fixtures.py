"""Reference measures used by tests, demos and the CLI ``--fixture`` flag."""

from __future__ import annotations

import numpy as np

from .measure import AtomicMeasure, GridMeasure, Measure, UniformBall


def dirac(n: int = 3, mass: float = 1.0) -> AtomicMeasure:
    return AtomicMeasure(np.zeros((1, n)), [mass])


def two_atoms(n: int = 3) -> AtomicMeasure:
    """Unit atoms at distance 1 and 2 from the origin."""
    pts = np.zeros((2, n))
    pts[0, 0] = 1.0
    pts[1, 1] = 2.0
    return AtomicMeasure(pts, [1.0, 1.0])


def _cell_fractions(inside, n: int, k: int, extent: float, sub: int) -> tuple[np.ndarray, float, np.ndarray]:
    """Fraction of each cell of a (2k)^n grid over [-extent, extent]^n where ``inside`` holds."""
    h = extent / k
    dims = (2 * k,) * n
    offs = (np.arange(sub) + 0.5) / sub
    axes = [(-extent + (np.arange(2 * k)[:, None] + offs[None, :]) * h).ravel() for _ in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
    hit = inside(mesh).astype(float)
    shape = []
    for _ in range(n):
        shape += [2 * k, sub]
    frac = hit.reshape(shape).mean(axis=tuple(range(1, 2 * n, 2)))
    origin = np.full(n, -extent)
    return frac.reshape(dims), h, origin


def uniform_ball_grid(cells_per_radius: int = 8, n: int = 3, radius: float = 1.0,
                      mass: float = 1.0, sub: int = 4) -> GridMeasure:
    """Uniform density on B(0, radius); boundary cells carry their covered volume fraction."""
    frac, h, origin = _cell_fractions(
        lambda m: sum(c * c for c in m) < radius ** 2, n, cells_per_radius, radius, sub)
    rho = frac * (mass / (frac.sum() * h ** n))
    return GridMeasure(origin, h, rho)


def thin_shell_grid(cells_per_radius: int = 16, n: int = 3, radius: float = 1.0,
                    thickness: float | None = None, mass: float = 1.0, sub: int = 4) -> GridMeasure:
    """Uniform density on the shell radius - w/2 < |y| < radius + w/2 (default w = 2h)."""
    h0 = radius / cells_per_radius
    w = 2 * h0 if thickness is None else thickness
    extent = radius + w
    k = int(np.ceil(extent / h0))
    extent = k * h0
    frac, h, origin = _cell_fractions(
        lambda m: np.abs(np.sqrt(sum(c * c for c in m)) - radius) < w / 2, n, k, extent, sub)
    rho = frac * (mass / (frac.sum() * h ** n))
    return GridMeasure(origin, h, rho)


def power_density_grid(beta: float, cells_per_radius: int = 8, n: int = 3, radius: float = 1.0) -> GridMeasure:
    """Density |y|^(-beta) on B(0, radius), sampled at cell centers (the origin is a cell corner)."""
    h = radius / cells_per_radius
    ax = -radius + (np.arange(2 * cells_per_radius) + 0.5) * h
    mesh = np.meshgrid(*([ax] * n), indexing="ij")
    r = np.sqrt(sum(m * m for m in mesh))
    rho = np.where(r < radius, r ** (-beta), 0.0)
    return GridMeasure(np.full(n, -radius), h, rho)


def uniform_ball(n: int = 3, radius: float = 1.0, mass: float = 1.0) -> UniformBall:
    return UniformBall(np.zeros(n), radius, mass)


FIXTURES = {
    "dirac": lambda: dirac(),
    "two-atoms": lambda: two_atoms(),
    "uniform-ball": lambda: uniform_ball_grid(4),
    "uniform-ball-2": lambda: uniform_ball_grid(6),
    "uniform-ball-3": lambda: uniform_ball_grid(8),
    "thin-shell": lambda: thin_shell_grid(10, sub=1),
    "uniform-ball-x10": lambda: uniform_ball_grid(4).scaled(10.0),
    "uniform-ball-x0.1": lambda: uniform_ball_grid(4).scaled(0.1),
    "thin-shell-x10": lambda: thin_shell_grid(10, sub=1).scaled(10.0),
    "thin-shell-x0.1": lambda: thin_shell_grid(10, sub=1).scaled(0.1),
    "analytic-ball": lambda: uniform_ball(),
}


def get_fixture(name: str) -> Measure:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
