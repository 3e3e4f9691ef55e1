"""Wolff and Riesz potentials, existence diagnostics and a monotone solver
for u = W_{1,p}(u^q dsigma)."""

from .measure import AtomicMeasure, GridMeasure, UniformBall, load_measure
from .parameters import DerivedExponents, Parameters, derive, kappa
from .potential import (
    PotentialField,
    QuadratureConfig,
    WolffOperator,
    field,
    riesz_potential,
    wolff_exact_atomic,
    wolff_quadrature,
)
from .solver import SolutionField, solve

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "DerivedExponents",
    "GridMeasure",
    "Parameters",
    "PotentialField",
    "QuadratureConfig",
    "SolutionField",
    "UniformBall",
    "WolffOperator",
    "derive",
    "field",
    "kappa",
    "load_measure",
    "riesz_potential",
    "solve",
    "wolff_exact_atomic",
    "wolff_quadrature",
]
