"""Does u = W_{1,p}(u^q dsigma) have a nontrivial finite-energy solution?

The answer is yes exactly when int (W_{1,p} sigma)^((1+q)(p-1)/(p-1-q)) dsigma
is finite. Numerically we can only watch the integral under grid refinement.

Run:  python demos/02_existence_criterion.py
"""

from __future__ import annotations

from wolffkit import Parameters
from wolffkit.diagnostics import existence_criterion
from wolffkit.fixtures import dirac, power_density_grid, uniform_ball_grid

P = Parameters(n=3, p=2.0, q=0.5)

# bounded density: estimates settle
rep = existence_criterion([uniform_ball_grid(k) for k in (6, 8, 12)], P)
print("uniform ball     ", rep.verdict, [f"{e:.4f}" for e in rep.estimates], rep.explanation)

# density |y|^-2.8 near the origin: here W ~ |y|^-0.8, the integrand ~ |y|^-5.2,
# and the integral diverges, so estimates grow like a power of 1/h
rep = existence_criterion([power_density_grid(2.8, k) for k in (3, 4, 6, 8)], P)
print("|y|^-2.8 density ", rep.verdict, [f"{e:.3g}" for e in rep.estimates], f"slope {rep.slope:.2f}")

# a milder singularity is integrable but converges too slowly for three coarse levels to tell
rep = existence_criterion([power_density_grid(1.5, k) for k in (3, 4, 6, 8)], P)
print("|y|^-1.5 density ", rep.verdict, [f"{e:.4g}" for e in rep.estimates], rep.explanation)

# point masses: W is infinite on every atom, no refinement needed
print("Dirac            ", existence_criterion(dirac(), P).verdict)
