"""CKLS short-rate model: simulation, least-squares estimation, stationary law,
boundary classification and mean-reversion diagnostics."""

__version__ = "0.1.0"

from .boundary import BoundaryReport, classify, stationary_from_speed
from .errors import CklsError
from .estimate import FitResult, build_design, fit, fit_path
from .meanrev import HalfLifeResult, expected_deviation, half_life_mc, mean_reversion_rate, ratio_sweep
from .model import CklsParams, PolyDynamics, ckls_as_poly, make_ckls
from .simulate import SamplePath, Scheme, SimConfig, first_passage_time, simulate_ckls, simulate_generalized
from .stationary import build_density, moment, sigma_matrix, sigma_matrix_cir

__all__ = [
    "BoundaryReport", "CklsError", "CklsParams", "FitResult", "HalfLifeResult", "PolyDynamics",
    "SamplePath", "Scheme", "SimConfig", "build_density", "build_design", "ckls_as_poly", "classify",
    "expected_deviation", "first_passage_time", "fit", "fit_path", "half_life_mc", "make_ckls",
    "mean_reversion_rate", "moment", "ratio_sweep", "sigma_matrix", "sigma_matrix_cir",
    "simulate_ckls", "simulate_generalized", "stationary_from_speed",
]
