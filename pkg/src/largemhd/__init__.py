"""Pseudo-spectral simulation and verification of the generalized MHD system with large data."""

from .background import BackgroundState, background_at, forcing_terms, source_g
from .initial_data import DataSpec, build_data, build_data_2d, build_data_3d, largeness_lhs, radial_bump
from .solver import FlowState, SolverConfig, Trajectory, run
from .spectral import (
    DomainSpec,
    PhysicalField,
    SpectralField,
    apply_radial_multiplier,
    differentiate,
    forward_transform,
    inverse_transform,
    leray_project,
    multiply_dealiased,
)

__version__ = "0.1.0"

__all__ = [
    "BackgroundState",
    "DataSpec",
    "DomainSpec",
    "FlowState",
    "PhysicalField",
    "SolverConfig",
    "SpectralField",
    "Trajectory",
    "apply_radial_multiplier",
    "background_at",
    "build_data",
    "build_data_2d",
    "build_data_3d",
    "differentiate",
    "forcing_terms",
    "forward_transform",
    "inverse_transform",
    "largeness_lhs",
    "leray_project",
    "multiply_dealiased",
    "radial_bump",
    "run",
    "source_g",
]
