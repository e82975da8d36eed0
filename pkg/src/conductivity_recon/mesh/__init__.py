"""Triangulations of the unit square, boundary classification and VTK export."""

from .structured import (
    BOUNDARY_NAMES,
    CHARACTERISTIC,
    INFLOW,
    OUTFLOW,
    BoundaryClassification,
    Mesh,
    build_structured_mesh,
    check_mesh,
    classify_boundary,
)
from .vtk import SAMPLE_REFERENCE_POINTS, write_field_vtk, write_mesh_vtk

__all__ = [
    "Mesh",
    "BoundaryClassification",
    "build_structured_mesh",
    "classify_boundary",
    "check_mesh",
    "BOUNDARY_NAMES",
    "INFLOW",
    "OUTFLOW",
    "CHARACTERISTIC",
    "write_mesh_vtk",
    "write_field_vtk",
    "SAMPLE_REFERENCE_POINTS",
]
