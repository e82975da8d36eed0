"""Internal data: broken polynomial fields, measurements, noise and transport coefficients."""

from .fields import BASIS_NAME, DGField, interpolate, read_field_csv, transfer, write_field_csv
from .measurement import (
    NOISE_MODELS,
    MeasurementSet,
    add_noise,
    measure,
    measurement_points,
    project_to_dg,
    relative_data_error,
)
from .velocity import AnalyticVelocity, PolynomialVelocity, VelocityField, constant_velocity, derive_fields

__all__ = [
    "DGField",
    "interpolate",
    "transfer",
    "write_field_csv",
    "read_field_csv",
    "BASIS_NAME",
    "MeasurementSet",
    "measurement_points",
    "measure",
    "add_noise",
    "NOISE_MODELS",
    "relative_data_error",
    "project_to_dg",
    "VelocityField",
    "PolynomialVelocity",
    "AnalyticVelocity",
    "derive_fields",
    "constant_velocity",
]
