"""Reference values for the built-in fixtures, computed without wolffkit.

Closed forms where they exist; otherwise 1-D radial integrals of the
continuum measure the grid fixtures discretize (scipy.integrate.quad).
Writes tests/data/expected_fixtures.json.

    python scripts/make_expected.py
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy.integrate import quad

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "expected_fixtures.json"


def dirac_wolff(n, p, alpha, d, mass=1.0):
    # sigma(B(x,t)) = mass for t > d, else 0
    e = (n - alpha * p) / (p - 1)
    return mass ** (1 / (p - 1)) * d ** (-e) / e


def ball_newton(r):
    """W_{1,2} = I_2 of the unit-mass uniform unit ball in R^3."""
    return (3 - r * r) / 2 if r < 1 else 1 / r


def ball_riesz1(r):
    """I_1 of the unit-mass uniform unit ball in R^3: (1/2) int |x-y|^-2 dsigma."""
    rho = 3 / (4 * math.pi)
    if r == 0:
        return 0.5 * rho * 4 * math.pi
    f = lambda s: 2 * math.pi * s / r * math.log(abs((r + s) / (r - s))) if s != r else 0.0
    val, _ = quad(f, 0, 1, points=[r] if r < 1 else None, limit=200)
    return 0.5 * rho * val


def ball_energies():
    dens = lambda r: 3 * r * r  # d sigma in the radial variable
    wolff, _ = quad(lambda r: ball_newton(r) * dens(r), 0, 1)
    crit, _ = quad(lambda r: ball_newton(r) ** 3 * dens(r), 0, 1)
    inner, _ = quad(lambda r: ball_riesz1(r) ** 2 * 4 * math.pi * r * r, 0, 4, points=[1.0], limit=400)
    tail = 4 * math.pi * quad(lambda r: ball_riesz1(r) ** 2 * r * r, 4, math.inf, limit=200)[0]
    return wolff, crit, inner + tail


def shell_fixed_point(w, q=0.5, m=4000):
    """Radial Picard iteration for u = W_{1,2}(u^q dsigma), sigma uniform on 1-w/2 < |y| < 1+w/2."""
    lo, hi = 1 - w / 2, 1 + w / 2
    s = lo + (np.arange(m) + 0.5) * (hi - lo) / m
    mass = s ** 2 / np.sum(s ** 2)
    K = 1 / np.maximum(s[:, None], s[None, :])   # spherical mean of 1/|x-y| in R^3
    A = K @ mass
    u = A ** (1 / (1 - q))
    for _ in range(200):
        u = K @ (u ** q * mass)
    return float(mass @ A), float(mass @ u)


def main():
    wolff, crit, riesz = ball_energies()
    A_thin, u_thin = shell_fixed_point(0.2)
    data = {
        "dirac": {"params": {"n": 3, "p": 2, "alpha": 1},
                  "points": [[1, 0, 0], [0, 2, 0]],
                  "wolff": [dirac_wolff(3, 2, 1, 1.0), dirac_wolff(3, 2, 1, 2.0)],
                  "rtol_exact": 1e-12, "rtol_quadrature": 1e-6},
        "two-atoms": {"params": {"n": 3, "p": 2, "alpha": 1},
                      "points": [[0, 0, 0]], "wolff": [1.0 / 1 + 1.0 / 2], "rtol_exact": 1e-12},
        "analytic-ball": {"params": {"n": 3, "p": 2, "alpha": 1},
                          "points": [[0, 0, 0], [0.5, 0, 0], [2, 0, 0]],
                          "wolff": [ball_newton(0), ball_newton(0.5), ball_newton(2)],
                          "rtol_quadrature": 1e-6},
        "uniform-ball-continuum": {
            "params": {"n": 3, "p": 2, "q": 0.5, "alpha": 1},
            "wolff_energy": wolff, "criterion": crit, "riesz_energy": riesz,
            "energy_ratio": wolff / riesz,
            "note": "continuum values; grid fixtures approach them under refinement",
            "rtol_grid": 0.05},
        "thin-shell-continuum": {
            "params": {"n": 3, "p": 2, "q": 0.5, "alpha": 1},
            "thickness": 0.2, "mean_potential": A_thin, "mean_solution": u_thin,
            "note": "mass-weighted means over the continuum shell of thickness 2h, h = 0.1",
            "rtol_grid": 0.05},
    }
    OUT.write_text(json.dumps(data, indent=2) + "\n")
    print(f"wrote {OUT}")
    print(json.dumps(data, indent=2))


if __name__ == "__main__":
    main()
