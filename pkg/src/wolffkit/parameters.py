"""Exponents and derived constants shared by every other module."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass


class ParameterError(ValueError):
    """Raised when exponents violate the standing hypotheses."""


class SolverModeError(ParameterError):
    """Raised when parameters are fine for potentials but not for the solver."""


@dataclass(frozen=True)
class Parameters:
    n: int
    p: float
    q: float | None = None
    alpha: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"dimension n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.q is not None:
            object.__setattr__(self, "q", float(self.q))

    @classmethod
    def from_dict(cls, d: dict) -> "Parameters":
        unknown = set(d) - {"n", "p", "q", "alpha"}
        if unknown:
            raise ParameterError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(n=d["n"], p=d["p"], q=d.get("q"), alpha=d.get("alpha", 1.0))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def with_alpha(self, alpha: float) -> "Parameters":
        return Parameters(self.n, self.p, self.q, alpha)


@dataclass(frozen=True)
class DerivedExponents:
    """Exponents computed once from ``Parameters``.

    ``gamma``, ``r`` and ``crit_exp`` are ``None`` unless ``0 < q < p - 1``.
    ``solver_issue`` holds a message when solver-mode hypotheses fail.
    """

    p_prime: float
    wolff_exp: float
    gamma: float | None
    r: float | None
    crit_exp: float | None
    solver_issue: str | None

    @property
    def solver_ok(self) -> bool:
        return self.solver_issue is None


def validate_potential(params: Parameters) -> None:
    if not params.p > 1:
        raise ParameterError(f"p must exceed 1, got {params.p}")
    if not 0 < params.alpha < params.n / params.p:
        raise ParameterError(
            f"alpha must lie in (0, n/p) = (0, {params.n / params.p:g}), got {params.alpha}"
        )


def solver_issue(params: Parameters) -> str | None:
    """Return why ``params`` cannot be used by the solver, or ``None``."""
    n, p, q = params.n, params.p, params.q
    if not p > 1:
        return f"p must exceed 1, got {p}"
    if p >= n:
        return f"p >= n ({p} >= {n}): only the trivial solution u = 0 exists"
    if q is None:
        return "q is required in solver mode"
    if not 0 < q < p - 1:
        return f"q must lie in (0, p - 1) = (0, {p - 1:g}), got {q}"
    return None


def derive(params: Parameters) -> DerivedExponents:
    validate_potential(params)
    n, p, q, a = params.n, params.p, params.q, params.alpha
    p_prime = p / (p - 1)
    wolff_exp = (n - a * p) / (p - 1)
    gamma = r = crit = None
    if q is not None and 0 < q < p - 1:
        gamma = (p - 1) / (p - 1 - q)
        r = q * gamma
        crit = (1 + q) * gamma
    return DerivedExponents(p_prime, wolff_exp, gamma, r, crit, solver_issue(params))


def require_solver_mode(params: Parameters) -> DerivedExponents:
    issue = solver_issue(params)
    if issue is not None:
        raise SolverModeError(issue)
    return derive(params)


def halving_constant(params: Parameters) -> float:
    """(1/2)^((n - alpha p)/(p - 1)), the ball-doubling loss in the composition bound."""
    validate_potential(params)
    return 0.5 ** ((params.n - params.alpha * params.p) / (params.p - 1))


def kappa_r(params: Parameters, r: float) -> float:
    """Constant in W((W sigma)^r dsigma) >= kappa_r (W sigma)^(r/(p-1) + 1)."""
    if not r > 0:
        raise ParameterError(f"r must be positive, got {r}")
    s = r / (params.p - 1)
    return halving_constant(params) ** s / (s + 1)


def kappa(params: Parameters) -> float:
    """``kappa_r`` at r = q(p-1)/(p-1-q)."""
    d = require_solver_mode(params)
    return kappa_r(params, d.r)


def c0_max(params: Parameters) -> float:
    """Largest c0 with c0^(q/(p-1)) * kappa >= c0, i.e. kappa^((p-1)/(p-1-q))."""
    d = require_solver_mode(params)
    return kappa(params) ** d.gamma


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)
