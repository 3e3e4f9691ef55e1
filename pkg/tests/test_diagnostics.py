from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wolffkit import AtomicMeasure, GridMeasure, Parameters
from wolffkit import diagnostics as dg
from wolffkit.fixtures import dirac, get_fixture, power_density_grid, uniform_ball_grid

P = Parameters(3, 2.0, 0.5, 1.0)


def test_energies_of_trivial_measures():
    z = GridMeasure(np.zeros(3), 0.1, np.zeros((2, 2, 2)))
    assert dg.wolff_energy(z, P) == 0.0
    assert dg.riesz_energy(z, P) == 0.0
    assert dg.wolff_energy(dirac(), P) == math.inf
    cert = dg.check_wolff_inequality(z, P)
    assert cert.passed and cert.to_dict()["pass"] is True


def test_wolff_energy_refinement_stable(expected):
    ref = expected["uniform-ball-continuum"]
    e2, e3 = (dg.wolff_energy(get_fixture(f), P) for f in ("uniform-ball-2", "uniform-ball-3"))
    assert abs(e3 - e2) / e3 < 0.01
    assert e3 == pytest.approx(ref["wolff_energy"], rel=ref["rtol_grid"])
    assert dg.riesz_energy(get_fixture("uniform-ball-3"), P) == pytest.approx(ref["riesz_energy"], rel=ref["rtol_grid"])


@pytest.mark.parametrize("lam", [0.1, 7.0])
def test_energy_homogeneity(lam):
    g = uniform_ball_grid(4)
    for params in (P, Parameters(3, 1.5, 0.25, 0.8)):
        pp = params.p / (params.p - 1)
        assert dg.wolff_energy(g.scaled(lam), params) == pytest.approx(lam ** pp * dg.wolff_energy(g, params), rel=1e-12)
        assert dg.riesz_energy(g.scaled(lam), params) == pytest.approx(lam ** pp * dg.riesz_energy(g, params), rel=1e-12)


def two_balls():
    a = uniform_ball_grid(3)
    rho = np.zeros((18, 6, 6))
    rho[:6] = a.density
    rho[12:] = a.density
    both = GridMeasure(a.origin, a.h, rho)
    left = GridMeasure(a.origin, a.h, np.where(np.arange(18)[:, None, None] < 6, rho, 0))
    right = GridMeasure(a.origin, a.h, np.where(np.arange(18)[:, None, None] >= 12, rho, 0))
    return both, left, right


def test_two_disjoint_balls_superadditive():
    both, left, right = two_balls()
    for f in (dg.wolff_energy, dg.riesz_energy):
        assert f(both, P) >= f(left, P) + f(right, P)
    assert dg.check_wolff_inequality(both, P).passed


def test_criterion_verdicts():
    assert dg.existence_criterion(dirac(), P).verdict == "infinite"
    z = dg.existence_criterion(GridMeasure(np.zeros(3), 1.0, np.zeros((1, 1, 1))), P)
    assert z.verdict == "finite" and z.estimates == [0.0]
    one = dg.existence_criterion(uniform_ball_grid(4), P)
    assert one.verdict == "unknown"
    rep = dg.existence_criterion([uniform_ball_grid(k) for k in (6, 8, 12)], P)
    assert rep.verdict == "finite" and rep.trend == "converging"
    assert all(b >= a for a, b in zip(rep.estimates, rep.estimates[1:]))


def test_criterion_detects_divergence():
    # density |y|^-2.8 in R^3: the criterion integral diverges (it converges iff the exponent < 9/4)
    rep = dg.existence_criterion([power_density_grid(2.8, k) for k in (3, 4, 6, 8)], P)
    assert rep.verdict == "infinite"
    assert rep.slope > 0.5


@pytest.mark.parametrize("lam", [0.1, 10.0])
def test_criterion_homogeneity(lam):
    g = uniform_ball_grid(4)
    d = (P.p - 1) / (P.p - 1 - P.q) * (1 + P.q)
    assert dg.criterion_estimate(g.scaled(lam), P) == pytest.approx(
        lam ** (d / (P.p - 1) + 1) * dg.criterion_estimate(g, P), rel=1e-12)


def test_composition_certificate_records_kappa():
    cert = dg.check_composition_bound(uniform_ball_grid(4), P, count=30)
    assert cert.passed
    assert cert.config["kappa_r"] == pytest.approx(0.25)
    assert len(cert.samples) == 30
    d = cert.to_dict()
    assert set(d) >= {"id", "params", "config", "samples", "min_slack", "pass"}
    with pytest.raises(ValueError):
        dg.check_composition_bound(dirac(), P)
    z = GridMeasure(np.zeros(3), 1.0, np.zeros((2, 2, 2)))
    assert dg.check_composition_bound(z, P).passed


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), r=st.floats(0.2, 3.0))
def test_composition_bound_any_r(seed, r):
    rng = np.random.default_rng(seed)
    g = GridMeasure(np.zeros(2), 0.25, rng.uniform(0, 1, (5, 5)) * (rng.uniform(size=(5, 5)) < 0.7) + 1e-3)
    params = Parameters(2, float(rng.uniform(1.2, 1.9)), None, float(rng.uniform(0.2, 0.8)))
    assert dg.check_composition_bound(g, params, r=r, count=20, seed=seed).passed


def test_sample_points_deterministic():
    g = uniform_ball_grid(4)
    a, b = dg.sample_points(g, 10, seed=3), dg.sample_points(g, 10, seed=3)
    assert np.array_equal(a, b)
    lo, hi = g.bounding_box()
    assert np.all(a >= lo) and np.all(a <= hi)


def test_maximal_function_basic():
    g = uniform_ball_grid(3)
    f = np.full(len(g.support_masses), 2.5)
    for x in ([0, 0, 0], [0.9, 0.1, -0.3], [3, 3, 3]):
        assert dg.maximal_function(g, f, x) == pytest.approx(2.5)
    s = AtomicMeasure([[1.0, 2.0]], [0.3])
    assert dg.maximal_function(s, [4.0], [-5, 7]) == 4.0


def test_maximal_function_matches_candidate_scan():
    rng = np.random.default_rng(8)
    s = AtomicMeasure(rng.uniform(-1, 1, (40, 2)), rng.uniform(0.1, 1, 40))
    f = rng.uniform(0, 1, 40)
    for x in rng.uniform(-1, 1, (5, 2)):
        d = np.sort(np.linalg.norm(s.support - x, axis=1))
        radii = np.append(d[1:], d[-1] + 1) * (1 + 1e-12)
        radii = np.concatenate([radii, d * (1 + 1e-12)])
        assert dg.maximal_function(s, f, x) == pytest.approx(dg.maximal_function(s, f, x, radii), rel=1e-14)


def test_maximal_domination_atomic_support():
    rng = np.random.default_rng(12)
    s = AtomicMeasure(rng.uniform(-1, 1, (30, 3)), rng.uniform(0.1, 1, 30))
    f = rng.uniform(0, 1, 30)
    cert = dg.check_maximal_domination(s, Parameters(3, 1.8, None, 1.0), f, points=rng.uniform(-2, 2, (20, 3)))
    assert cert.passed


def test_nontriviality_integral_bounded_for_compact_support():
    v = dg.nontriviality_integral(uniform_ball_grid(4), P)
    assert 0 < v < math.inf
    # for mass inside the unit ball the integral is the tail alone: M^(1/(p-1)) / e
    assert v == pytest.approx(1.0, rel=1e-2)
