"""Pointwise inequalities behind the existence theory, checked on grids.

Run:  python demos/04_inequalities.py
"""

from __future__ import annotations

import numpy as np

from wolffkit import Parameters
from wolffkit import diagnostics as dg
from wolffkit.fixtures import thin_shell_grid, uniform_ball_grid
from wolffkit.parameters import kappa

ball = uniform_ball_grid(6)
shell = thin_shell_grid(10, sub=1)

# W((W sigma)^r dsigma) >= kappa_r (W sigma)^(r/(p-1) + 1); the slack is relative to the right side
for P in (Parameters(3, 2.0, 0.5), Parameters(3, 1.5, 0.25), Parameters(3, 2.0, 0.5, 0.7)):
    for name, g in (("ball", ball), ("shell", shell)):
        cert = dg.check_composition_bound(g, P, count=100)
        print(f"{name:5s} p={P.p} alpha={P.alpha}: kappa={kappa(P):.4g} min slack {cert.min_slack:.3f} "
              f"{'pass' if cert.passed else 'FAIL'}")

# W(f dsigma) <= (M_sigma f)^(p'-1) W sigma with the centered maximal function M_sigma
rng = np.random.default_rng(1)
P = Parameters(3, 1.7)
f = rng.uniform(0, 1, len(ball.support_masses)) ** 4
cert = dg.check_maximal_domination(ball, P, f, count=50)
print("maximal domination:", cert.passed, f"min slack {cert.min_slack:.3f}")
