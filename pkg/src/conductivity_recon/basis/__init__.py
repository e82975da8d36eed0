"""Reference-triangle Lagrange bases and quadrature rules."""

from __future__ import annotations

from .lagrange import (
    MAX_DEGREE,
    BasisSet,
    basis_dimension,
    eval_basis,
    lagrange_basis,
    reference_lattice,
)
from .quadrature import (
    QuadratureRule,
    edge_quadrature,
    monomial_integral,
    triangle_quadrature,
)

__all__ = [
    "BasisSet",
    "MAX_DEGREE",
    "basis_dimension",
    "eval_basis",
    "lagrange_basis",
    "reference_lattice",
    "QuadratureRule",
    "edge_quadrature",
    "monomial_integral",
    "triangle_quadrature",
]
