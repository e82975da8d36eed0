"""conductivity-recon: conductivity reconstruction from internal data.

Recovers sigma in div(sigma grad u) = 0 from interior measurements of u by
solving the regularized transport equation

    grad(U) . grad(gamma) + (lap(U) / 2 + eps) gamma = 0,   sigma = gamma^2,

with an upwind discontinuous Galerkin method on structured triangulations of
the unit square, gamma prescribed on the inflow boundary.

Pipeline:
    forward: manufactured (sigma, u) cases and a Neumann elliptic solver
    data: measurements, multiplicative noise, broken polynomial datum U
    transport: DG assembly and sparse solve for gamma_h
    core: metrics, single runs, parameter sweeps, property suite

Public API:
    RunConfig: Parameters of one reconstruction
    reconstruct: Run the pipeline, returning a ReconstructionReport
    sweep: Parameter grid with log-log rate fits
    run_verification: Property suite
    build_structured_mesh: Uniform triangulation of the unit square
    manufactured_case: Evaluators of cases 1-4
    solve_elliptic: Continuous Galerkin forward solver
    assemble / solve: DG transport system and its solution
    DGField: Broken polynomial field
"""

from __future__ import annotations

__version__ = "0.1.0"

from .core.config import RunConfig
from .core.runner import ReconstructionReport, reconstruct, save_outputs
from .core.sweep import SweepReport, sweep
from .core.verify import run_verification
from .data.fields import DGField
from .errors import (
    DataError,
    InvalidArgumentError,
    ReconstructionError,
    SolverError,
    StageError,
    UnsupportedError,
)
from .forward.cases import ManufacturedCase, manufactured_case
from .forward.elliptic import solve_elliptic
from .mesh.structured import Mesh, build_structured_mesh
from .transport.assembly import TransportProblem, assemble
from .transport.solver import solve

__all__ = [
    "__version__",
    "RunConfig",
    "ReconstructionReport",
    "reconstruct",
    "save_outputs",
    "SweepReport",
    "sweep",
    "run_verification",
    "DGField",
    "Mesh",
    "build_structured_mesh",
    "ManufacturedCase",
    "manufactured_case",
    "solve_elliptic",
    "TransportProblem",
    "assemble",
    "solve",
    "ReconstructionError",
    "InvalidArgumentError",
    "DataError",
    "SolverError",
    "UnsupportedError",
    "StageError",
]
