"""Wolff energy int W sigma dsigma against Riesz energy int (I_alpha sigma)^p' dx.

The two are comparable up to constants depending on n, p, alpha; on the
uniform ball their ratio stabilises under refinement.

Run:  python demos/05_energies.py
"""

from __future__ import annotations

import math

from wolffkit import Parameters
from wolffkit import diagnostics as dg
from wolffkit.fixtures import uniform_ball_grid

P = Parameters(3, 2.0, 0.5)
print("  k      h       Wolff      Riesz     ratio")
for k in (4, 6, 8):
    g = uniform_ball_grid(k)
    we, re = dg.wolff_energy(g, P), dg.riesz_energy(g, P)
    print(f"{k:3d}  {g.h:.4f}  {we:.6f}  {re:.6f}  {we / re:.5f}")
# continuum: 6/5 and (pi^3/4)(6/5), so the ratio tends to 4/pi^3
print("continuum ratio", 4 / math.pi ** 3)
