"""Legacy ASCII VTK export of meshes and broken polynomial fields.

Discontinuous fields are written on an exploded grid: every triangle gets its
own copies of its three vertices plus its centroid and is drawn as three
sub-triangles, so jumps across edges survive in the point data.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError
from .structured import Mesh

logger = logging.getLogger(__name__)

VTK_TRIANGLE = 5

# reference vertices followed by the centroid
SAMPLE_REFERENCE_POINTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0 / 3.0, 1.0 / 3.0]])


def _write_grid(handle, title: str, points: np.ndarray, cells: np.ndarray) -> None:
    handle.write("# vtk DataFile Version 3.0\n")
    handle.write(f"{title}\n")
    handle.write("ASCII\n")
    handle.write("DATASET UNSTRUCTURED_GRID\n")
    handle.write(f"POINTS {points.shape[0]} double\n")
    for x, y in points:
        handle.write(f"{x:.17g} {y:.17g} 0.0\n")
    handle.write(f"CELLS {cells.shape[0]} {cells.shape[0] * 4}\n")
    for a, b, c in cells:
        handle.write(f"3 {a} {b} {c}\n")
    handle.write(f"CELL_TYPES {cells.shape[0]}\n")
    handle.write(f"{VTK_TRIANGLE}\n" * cells.shape[0])


def write_mesh_vtk(path: str | Path, mesh: Mesh) -> Path:
    """Write the mesh with a per-cell triangle id."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        _write_grid(f, f"structured mesh n={mesh.divisions}", mesh.vertices, mesh.triangles)
        f.write(f"CELL_DATA {mesh.num_triangles}\n")
        f.write("SCALARS triangle_id int 1\nLOOKUP_TABLE default\n")
        f.write("\n".join(str(i) for i in range(mesh.num_triangles)) + "\n")
    logger.debug("Wrote mesh VTK to %s", path)
    return path


def write_field_vtk(path: str | Path, mesh: Mesh, fields: dict[str, np.ndarray], title: str = "dg field") -> Path:
    """Write broken fields sampled at SAMPLE_REFERENCE_POINTS.

    Args:
        path: Output file
        mesh: Mesh the samples belong to
        fields: name -> (T, 4) samples at the three vertices and the centroid of each triangle
        title: Header line

    Raises:
        InvalidArgumentError: If a sample array does not have shape (T, 4).
    """
    t = mesh.num_triangles
    for name, values in fields.items():
        if np.shape(values) != (t, SAMPLE_REFERENCE_POINTS.shape[0]):
            raise InvalidArgumentError(f"field {name!r} has shape {np.shape(values)}, expected ({t}, 4)")

    points = mesh.to_physical(SAMPLE_REFERENCE_POINTS).reshape(-1, 2)
    base = 4 * np.arange(t)[:, None]
    local = np.array([[0, 1, 3], [1, 2, 3], [2, 0, 3]])
    cells = (base[:, None, :] + local[None, :, :]).reshape(-1, 3)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        _write_grid(f, title, points, cells)
        f.write(f"POINT_DATA {points.shape[0]}\n")
        for name, values in fields.items():
            f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            f.write("\n".join(f"{v:.17g}" for v in np.asarray(values, dtype=float).ravel()) + "\n")
    logger.debug("Wrote %d field(s) to %s", len(fields), path)
    return path


__all__ = ["write_mesh_vtk", "write_field_vtk", "SAMPLE_REFERENCE_POINTS", "VTK_TRIANGLE"]
