"""Minimal solution of u = W_{1,p}(u^q dsigma) by monotone iteration.

Run:  python demos/03_minimal_solution.py
"""

from __future__ import annotations

import numpy as np

from wolffkit import Parameters
from wolffkit import solver
from wolffkit.fixtures import thin_shell_grid, uniform_ball_grid

P = Parameters(n=3, p=2.0, q=0.5)
shell = thin_shell_grid(10, sub=1)

# u_0 = c_0 (W sigma)^gamma is a subsolution, so the iterates only go up.
u, trace = solver.solve(shell, P, tol=1e-8)
print(f"shell: {u.iterations} iterations, c0 = {u.c0}, stop: {trace.stop_reason}")
print(f"residual {solver.residual(u, shell, P):.2e}, monotonicity violations {len(trace.violations)}")
for j in (0, 4, 9, 19, len(trace.norms) - 1):
    print(f"  step {j + 1:3d}  sup change {trace.sup_change[j]:.3e}  int u^(1+q) dsigma {trace.norms[j]:.10f}")

# On a thin shell W sigma is nearly constant (= A), so u is close to A^gamma.
fmap = solver.FixedPointMap(shell, P)
w = shell.support_masses / shell.total_mass()
A = w @ fmap.base
print(f"mean u {w @ u.values:.6f}  vs  A^gamma {A ** 2:.6f}")

# Homogeneity: u[lambda sigma] = lambda^(1/(p-1-q)) u[sigma].
u10, _ = solver.solve(shell.scaled(10.0), P)
print("homogeneity error:", np.max(np.abs(u10.values / u.values - 10 ** 2) / 10 ** 2))

# Starting ten times above the solution the iterates decrease to the same limit.
print(solver.uniqueness_probe(uniform_ball_grid(6), P).samples[0])

# p >= n: only u = 0.
triv, _ = solver.solve(shell, Parameters(3, 3.0, 0.5))
print("p = n:", triv.trivial, triv.reason)
