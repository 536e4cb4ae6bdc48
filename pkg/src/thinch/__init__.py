"""Cahn--Hilliard dynamics in curved thin shells and their weighted surface limit."""
from .analysis import ConvergenceReport, bulk_difference, fit_rate, surface_norm
from .averaging import average, pairing_residual, residual_zeta_delta, residual_zeta_F
from .bulk import BulkStepperConfig, ThinDomain, run
from .config import ConfigError, ExperimentConfig
from .geometry import GeometryError, SurfaceChart, ThicknessProfile, epsilon_limit, shape_data
from .potential import Potential, verify_growth
from .pullback import ReferenceGrid, build_coefficients
from .surface import SurfaceDomain, SurfaceStepperConfig, run_surface

__all__ = [
    "BulkStepperConfig", "ConfigError", "ConvergenceReport", "ExperimentConfig",
    "GeometryError", "Potential", "ReferenceGrid", "SurfaceChart", "SurfaceDomain",
    "SurfaceStepperConfig", "ThicknessProfile", "ThinDomain", "average",
    "build_coefficients", "bulk_difference", "epsilon_limit", "fit_rate",
    "pairing_residual", "residual_zeta_F", "residual_zeta_delta", "run", "run_surface",
    "shape_data", "surface_norm", "verify_growth",
]
