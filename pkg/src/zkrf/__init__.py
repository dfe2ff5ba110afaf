"""Pseudospectral toolkit for the randomized final-state problem of the 3D Zakharov system."""

from .fields import (
    GridSpec,
    SpectralField,
    make_grid,
    field_from_physical,
    field_from_frequency,
    zero_field,
    plane_wave,
    gaussian_field,
    random_band_limited,
    apply_radial_multiplier,
    schrodinger_propagate,
    half_wave_propagate,
    product_dealiased,
    abs_squared,
    real_part,
    write_field,
    read_field,
    SingularMultiplierError,
    GridError,
)

__all__ = [
    "GridSpec",
    "SpectralField",
    "make_grid",
    "field_from_physical",
    "field_from_frequency",
    "zero_field",
    "plane_wave",
    "gaussian_field",
    "random_band_limited",
    "apply_radial_multiplier",
    "schrodinger_propagate",
    "half_wave_propagate",
    "product_dealiased",
    "abs_squared",
    "real_part",
    "write_field",
    "read_field",
    "SingularMultiplierError",
    "GridError",
]

__version__ = "0.1.0"
