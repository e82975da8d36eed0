"""Manufactured cases and the elliptic forward solver used to synthesize data."""

from .cases import (
    INCLUSION_CONTRAST,
    INCLUSION_EDGE_WIDTH,
    INCLUSION_HIGH,
    INCLUSION_LOW,
    ManufacturedCase,
    manufactured_case,
    regularized_solution,
    transport_residual,
)
from .elliptic import EllipticSolution, solve_elliptic

__all__ = [
    "ManufacturedCase",
    "manufactured_case",
    "transport_residual",
    "regularized_solution",
    "EllipticSolution",
    "solve_elliptic",
    "INCLUSION_LOW",
    "INCLUSION_HIGH",
    "INCLUSION_CONTRAST",
    "INCLUSION_EDGE_WIDTH",
]
