"""Wolff and Riesz potentials of simple measures.

Run:  python demos/01_wolff_potentials.py
"""

from __future__ import annotations

import numpy as np

from wolffkit import AtomicMeasure, Parameters, QuadratureConfig, UniformBall, field
from wolffkit.fixtures import dirac, uniform_ball_grid
from wolffkit.potential import riesz_potential, wolff_exact_atomic, wolff_quadrature

# A unit point mass at the origin. Its ball-mass profile is a single step,
# so W_{1,p} reduces to one power integral: W(x) = |x|^(-e) / e, e = (n-p)/(p-1).
P = Parameters(n=3, p=2.0)
delta = dirac(3)
for r in (0.5, 1.0, 2.0):
    x = np.array([r, 0.0, 0.0])
    print(f"|x| = {r}:  exact {wolff_exact_atomic(delta, P, x):.12f}  "
          f"quadrature {wolff_quadrature(delta, P, x):.12f}")

# With p = 2 the Wolff potential is linear in sigma: W_{1,2} = I_2.
rng = np.random.default_rng(0)
cloud = AtomicMeasure(rng.uniform(-1, 1, (200, 3)), rng.uniform(0, 1, 200))
x = np.array([1.7, -0.3, 0.4])
print("\nW_{1,2} vs I_2 on a random cloud:", wolff_exact_atomic(cloud, P, x), riesz_potential(cloud, 2.0, x))

# p != 2 is genuinely nonlinear: doubling the mass multiplies W by 2^(1/(p-1)).
P3 = Parameters(n=3, p=1.5)
print("mass doubling factor at p = 1.5:",
      wolff_exact_atomic(cloud.scaled(2.0), P3, x) / wolff_exact_atomic(cloud, P3, x))

# The uniform unit ball has the Newtonian potential (3 - r^2)/2 inside, 1/r outside.
ball = UniformBall(np.zeros(3), 1.0, 1.0)
radii = np.array([0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 3.0])
pts = np.stack([radii, 0 * radii, 0 * radii], axis=1)
quad = field(ball, P, pts, QuadratureConfig(points_per_decade=32)).values
print("\n  r     quadrature       closed form")
for r, v in zip(radii, quad):
    print(f"{r:4.2f}  {v:.12f}  {(3 - r * r) / 2 if r < 1 else 1 / r:.12f}")

# The same ball as a grid: cell masses sit at centers, and inside a cell the
# density is resolved exactly, so the center value approaches 1.5 as h -> 0.
for k in (4, 8, 12):
    g = uniform_ball_grid(k)
    print(f"grid k={k:2d}  h={g.h:.4f}  W(0) = {field(g, P, [[0, 0, 0]]).values[0]:.6f}")
