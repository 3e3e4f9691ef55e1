from __future__ import annotations

import json
import math
import sys

import pytest
import sympy as sp
from hypothesis import given, strategies as st

from wolffkit.parameters import (
    ParameterError,
    Parameters,
    SolverModeError,
    c0_max,
    derive,
    kappa,
    kappa_r,
    require_solver_mode,
    solver_issue,
)


def test_derived_exponents_reference_case():
    d = derive(Parameters(3, 2, 0.5, 1))
    assert d.p_prime == 2.0
    assert d.wolff_exp == 1.0
    assert d.gamma == 2.0
    assert d.r == 1.0
    assert d.crit_exp == 3.0
    assert d.solver_ok


def test_kappa_reference_values():
    assert kappa(Parameters(3, 2, 0.5, 1)) == pytest.approx(0.25, rel=1e-15)
    assert kappa(Parameters(4, 2, 0.5, 1)) == pytest.approx(0.125, rel=1e-15)
    assert c0_max(Parameters(3, 2, 0.5, 1)) == pytest.approx(0.0625, rel=1e-15)


def test_c0_satisfies_initialisation_constraint():
    # c0^(q/(p-1)) * kappa >= c0 with equality at the maximal choice
    for P in (Parameters(3, 2, 0.5), Parameters(3, 1.5, 0.25), Parameters(5, 3, 1.7)):
        c0 = c0_max(P)
        assert c0 ** (P.q / (P.p - 1)) * kappa(P) == pytest.approx(c0, rel=1e-12)


@pytest.mark.parametrize("bad", [
    dict(n=3, p=1.0), dict(n=3, p=2, alpha=1.5), dict(n=3, p=2, alpha=0.0),
])
def test_potential_mode_rejects(bad):
    with pytest.raises(ParameterError):
        derive(Parameters(**bad))


def test_dimension_must_be_integer():
    with pytest.raises(ParameterError):
        Parameters(2.5, 2)
    with pytest.raises(ParameterError):
        Parameters(1, 2)


@pytest.mark.parametrize("q", [0.0, 1.0, 1.5, -0.1, None])
def test_solver_mode_rejects_q(q):
    P = Parameters(3, 2, q)
    assert solver_issue(P) is not None
    with pytest.raises(SolverModeError):
        require_solver_mode(P)


def test_p_at_least_n_is_flagged_trivial():
    assert "trivial" in solver_issue(Parameters(3, 3.0, 0.5))
    assert "trivial" in solver_issue(Parameters(2, 2.5, 0.5))


def test_json_round_trip():
    P = Parameters(4, 2.5, 0.75, 0.9)
    assert Parameters.from_dict(json.loads(P.to_json())) == P
    with pytest.raises(ParameterError):
        Parameters.from_dict({"n": 3, "p": 2, "beta": 1})


def test_composition_exponent_specialisation_symbolic():
    # r = q(p-1)/(p-1-q) turns r/(p-1) + 1 into (p-1)/(p-1-q)
    p, q = sp.symbols("p q", positive=True)
    r = q * (p - 1) / (p - 1 - q)
    assert sp.simplify(r / (p - 1) + 1 - (p - 1) / (p - 1 - q)) == 0
    # and the criterion exponent (1 + q) gamma equals r + gamma... consistency of derive()
    gamma = (p - 1) / (p - 1 - q)
    assert sp.simplify((1 + q) * gamma - (r + gamma)) == 0


@given(n=st.integers(2, 8), p=st.floats(1.05, 6.0), frac=st.floats(0.01, 0.99), s=st.floats(0.01, 0.99))
def test_kappa_in_unit_interval(n, p, frac, s):
    P = Parameters(n, p, None, frac * n / p)
    r = s * 5
    k = kappa_r(P, r)
    e = (n - P.alpha * p) / (p - 1)
    log_k = -(r / (p - 1)) * e * math.log(2) - math.log1p(r / (p - 1))
    assert log_k < 0
    assert 0 <= k <= 1
    if log_k > math.log(sys.float_info.min):
        assert k > 0 and math.log(k) == pytest.approx(log_k, rel=1e-9, abs=1e-12)


@given(p=st.floats(1.1, 6.0), frac=st.floats(0.01, 0.99))
def test_derived_exponents_match_definitions(p, frac):
    q = frac * (p - 1)
    d = derive(Parameters(9, p, q))
    assert d.gamma == pytest.approx((p - 1) / (p - 1 - q))
    assert d.r / (p - 1) + 1 == pytest.approx(d.gamma, rel=1e-9)
    assert d.crit_exp == pytest.approx((1 + q) * d.gamma)
