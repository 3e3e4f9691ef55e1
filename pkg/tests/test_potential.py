from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from wolffkit import AtomicMeasure, Parameters, QuadratureConfig, UniformBall, field
from wolffkit.fixtures import dirac, two_atoms, uniform_ball_grid
from wolffkit.parameters import ParameterError
from wolffkit.potential import (
    QuadratureError,
    QuadratureWarning,
    WolffOperator,
    head_integral,
    riesz_potential,
    tail_integral,
    wolff_exact_atomic,
    wolff_exact_grid,
    wolff_quadrature,
    wolff_quadrature_detail,
)


def step_oracle(sigma: AtomicMeasure, params: Parameters, x) -> float:
    """Direct adaptive integration of the definition, panel by panel."""
    n, p, a = params.n, params.p, params.alpha
    d = np.sort(np.linalg.norm(sigma.support - x, axis=1))
    total = 0.0
    for lo, hi in zip(d, np.append(d[1:], math.inf)):
        if hi <= lo:
            continue
        M = sigma.ball_mass_brute(x, 0.5 * (lo + hi) if math.isfinite(hi) else lo + 1)
        f = lambda t: (M / t ** (n - a * p)) ** (1 / (p - 1)) / t
        total += quad(f, lo, hi, limit=200, epsabs=0, epsrel=1e-13)[0]
    return total


def test_dirac_closed_form_all_orders():
    for n, p, a in ((3, 2, 1), (4, 3, 1), (2, 1.5, 0.5), (5, 2.5, 1.5)):
        P = Parameters(n, p, None, a)
        e = (n - a * p) / (p - 1)
        for r in (0.5, 1.0, 2.0):
            x = np.zeros(n)
            x[0] = r
            assert wolff_exact_atomic(dirac(n), P, x) == pytest.approx(r ** (-e) / e, rel=1e-14)


def test_two_atoms_value():
    assert wolff_exact_atomic(two_atoms(), Parameters(3, 2), np.zeros(3)) == pytest.approx(1.5, rel=1e-15)


def test_exact_matches_direct_integration():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(2, 5))
        p = float(rng.uniform(1.3, 3.0))
        P = Parameters(n, p, None, float(rng.uniform(0.2, 0.8) * n / p))
        s = AtomicMeasure(rng.uniform(-1, 1, (8, n)), rng.uniform(0.1, 1, 8))
        x = rng.uniform(-1, 1, n)
        assert wolff_exact_atomic(s, P, x) == pytest.approx(step_oracle(s, P, x), rel=1e-9)


def test_value_at_atom_is_infinite():
    P = Parameters(3, 2)
    assert wolff_exact_atomic(dirac(), P, np.zeros(3)) == math.inf
    assert wolff_quadrature(dirac(), P, np.zeros(3)) == math.inf
    pf = field(two_atoms(), P, [[1, 0, 0], [5, 5, 5]])
    assert pf.values[0] == math.inf and math.isfinite(pf.values[1])


def test_zero_measure_gives_zero():
    P = Parameters(3, 2)
    z = AtomicMeasure.empty(3)
    assert wolff_exact_atomic(z, P, np.ones(3)) == 0.0
    assert wolff_quadrature(z, P, np.ones(3)) == 0.0


def test_critical_exponent_rejected():
    with pytest.raises(ParameterError):
        wolff_exact_atomic(dirac(), Parameters(3, 3, None, 1.0), np.ones(3))


def test_analytic_ball_profile():
    ball = UniformBall(np.zeros(3), 1.0, 1.0)
    P = Parameters(3, 2)
    for r in (0.0, 0.3, 0.7, 0.999, 1.0, 1.5, 3.0):
        want = (3 - r * r) / 2 if r < 1 else 1 / r
        x = np.array([r, 0, 0])
        assert wolff_quadrature(ball, P, x, strict=True) == pytest.approx(want, rel=1e-9)


def test_quadrature_second_order_on_analytic_ball():
    ball = UniformBall(np.zeros(3), 1.0, 1.0)
    P = Parameters(3, 2)
    x = np.array([0.5, 0, 0])
    cfg = QuadratureConfig(points_per_decade=4, rtol=1e-300, max_doublings=4, insert_breakpoints=True)
    res = wolff_quadrature_detail(ball, P, x, cfg)
    t0, rho = ball.head(x)
    T = ball.saturation_radius(x)
    outside = head_integral(rho, t0, P) + tail_integral(1.0, T, P)
    errs = [abs(outside + v - 1.375) for v in res.levels]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    # halving the log-spacing divides the midpoint-rule error by ~4
    assert all(3.5 < r < 4.5 for r in ratios[1:]), ratios
    assert abs(res.value - 1.375) < errs[-1] / 10


def test_grid_quadrature_matches_exact():
    g = uniform_ball_grid(4)
    P = Parameters(3, 2.5, None, 0.9)
    rng = np.random.default_rng(4)
    for x in rng.uniform(-1.5, 1.5, (8, 3)):
        ex = wolff_exact_grid(g, P, x)
        assert wolff_quadrature(g, P, x, QuadratureConfig(points_per_decade=64), strict=True) == pytest.approx(ex, rel=1e-6)


def test_nonconvergence_is_reported():
    ball = UniformBall(np.zeros(3), 1.0, 1.0)
    cfg = QuadratureConfig(points_per_decade=4, rtol=1e-15, max_doublings=1)
    x = np.array([0.5, 0, 0])
    with pytest.warns(QuadratureWarning):
        wolff_quadrature(ball, Parameters(3, 2), x, cfg)
    with pytest.raises(QuadratureError):
        wolff_quadrature(ball, Parameters(3, 2), x, cfg, strict=True)


def test_riesz_normalisation_and_newtonian_bridge():
    assert riesz_potential(dirac(), 1.0, [1, 0, 0]) == pytest.approx(0.5)
    assert riesz_potential(dirac(), 2.0, [2, 0, 0]) == pytest.approx(0.5)
    ball = UniformBall(np.zeros(3), 1.0, 1.0)
    assert riesz_potential(ball, 2.0, np.zeros(3)) == pytest.approx(1.5, rel=1e-9)
    with pytest.raises(ParameterError):
        riesz_potential(dirac(), 3.0, [1, 0, 0])


def test_grid_riesz_far_field_matches_point_mass():
    g = uniform_ball_grid(4)
    x = np.array([30.0, 0, 0])
    assert riesz_potential(g, 1.0, x) == pytest.approx(0.5 / 30 ** 2, rel=1e-3)


def test_operator_matches_scalar_paths_and_is_thread_invariant():
    rng = np.random.default_rng(11)
    s = AtomicMeasure(rng.uniform(-1, 1, (300, 3)), rng.uniform(0, 1, 300))
    g = uniform_ball_grid(4)
    pts = rng.uniform(-1.5, 1.5, (40, 3))
    for P in (Parameters(3, 2), Parameters(3, 1.7, None, 0.8)):
        one = WolffOperator(s, P, pts, threads=1, chunk=7).apply()
        many = WolffOperator(s, P, pts, threads=4, chunk=7).apply()
        assert np.array_equal(one, many)
        assert WolffOperator(s, P, pts).apply() == pytest.approx(one, rel=1e-13)
        assert one == pytest.approx([wolff_exact_atomic(s, P, x) for x in pts], rel=1e-12)
        gv = WolffOperator(g, P, pts, threads=3, chunk=5).apply()
        assert gv == pytest.approx([wolff_exact_grid(g, P, x) for x in pts], rel=1e-12)


def test_field_csv(tmp_path):
    pf = field(two_atoms(), Parameters(3, 2), [[1, 0, 0], [0, 0, 0]], threads=1)
    pf.to_csv(tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x_1,x_2,x_3,value,method"
    assert lines[1].split(",")[3] == "inf"
    assert float(lines[2].split(",")[3]) == pytest.approx(1.5)


def test_field_quadrature_method_preserves_order():
    ball = UniformBall(np.zeros(3), 1.0, 1.0)
    pts = np.array([[r, 0, 0] for r in (2.0, 0.0, 0.5, 4.0)])
    pf = field(ball, Parameters(3, 2), pts, threads=2)
    assert pf.meta["method"] == "quadrature"
    assert pf.values == pytest.approx([0.5, 1.5, 1.375, 0.25], rel=1e-9)


# property tests

atomic_params = st.tuples(st.integers(2, 4), st.floats(1.2, 4.0), st.floats(0.05, 0.95))


def _params(t):
    n, p, frac = t
    return Parameters(n, p, None, frac * n / p)


@settings(max_examples=40, deadline=None)
@given(t=atomic_params, seed=st.integers(0, 2**31))
def test_permutation_and_merge_invariance(t, seed):
    P = _params(t)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (20, P.n))
    m = rng.uniform(0.1, 1, 20)
    x = rng.uniform(-2, 2, P.n)
    base = wolff_exact_atomic(AtomicMeasure(pts, m), P, x)
    perm = rng.permutation(20)
    assert wolff_exact_atomic(AtomicMeasure(pts[perm], m[perm]), P, x) == pytest.approx(base, rel=1e-13)
    halves = AtomicMeasure(np.vstack([pts, pts]), np.concatenate([0.5 * m, 0.5 * m]))
    assert wolff_exact_atomic(halves, P, x) == pytest.approx(base, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(t=atomic_params, seed=st.integers(0, 2**31), lam=st.floats(0.01, 100), r=st.floats(0.1, 10))
def test_mass_scaling_and_dilation(t, seed, lam, r):
    P = _params(t)
    rng = np.random.default_rng(seed)
    s = AtomicMeasure(rng.uniform(-1, 1, (15, P.n)), rng.uniform(0.1, 1, 15))
    x = rng.uniform(-2, 2, P.n)
    base = wolff_exact_atomic(s, P, x)
    beta = 1 / (P.p - 1)
    e = (P.n - P.alpha * P.p) / (P.p - 1)
    assert wolff_exact_atomic(s.scaled(lam), P, x) == pytest.approx(lam ** beta * base, rel=1e-12)
    assert wolff_exact_atomic(s.dilated(r), P, r * x) == pytest.approx(r ** (-e) * base, rel=1e-11)


@settings(max_examples=40, deadline=None)
@given(t=atomic_params, seed=st.integers(0, 2**31))
def test_monotone_and_superadditivity(t, seed):
    P = _params(t)
    rng = np.random.default_rng(seed)
    a = AtomicMeasure(rng.uniform(-1, 1, (10, P.n)), rng.uniform(0.1, 1, 10))
    b = AtomicMeasure(rng.uniform(-1, 1, (10, P.n)) + 3, rng.uniform(0.1, 1, 10))
    both = AtomicMeasure(np.vstack([a.support, b.support]), np.concatenate([a.masses, b.masses]))
    x = rng.uniform(-2, 4, P.n)
    wa, wb, wab = (wolff_exact_atomic(m, P, x) for m in (a, b, both))
    assert wab >= max(wa, wb) * (1 - 1e-13)
    # (s + t)^beta vs s^beta + t^beta: super- for p <= 2, sub-additive for p >= 2
    if P.p <= 2:
        assert wab >= (wa + wb) * (1 - 1e-12)
    else:
        assert wab <= (wa + wb) * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_p2_bridge(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 6))
    s = AtomicMeasure(rng.uniform(-1, 1, (12, n)), rng.uniform(0.1, 1, 12))
    x = rng.uniform(-2, 2, n)
    for a in (0.5, 1.0):
        assert wolff_exact_atomic(s, Parameters(n, 2, None, a), x) == pytest.approx(
            riesz_potential(s, 2 * a, x), rel=1e-12)
