"""Stochastic fractional neutral delay equations with Levy noise.

Mild solutions on a uniform grid, successive approximations, and Monte Carlo
checks of S-asymptotic periodicity in square mean and in distribution.
"""

from ._accel import backend_name
from .errors import ConfigError, FracSapError, InvalidArgument, SolverError, ValidationError
from .mittag_leffler import MittagLefflerTable, ml_eval
from .model import (CoefficientSet, InitialSegment, ModelSpec, Preset, Profile,
                    contraction_constant, kappa1, kappa2, validate_hypotheses)
from .noise import LevySpec, NoisePath, big_jump_intensity, sample_path, small_jump_compensator
from .periodicity import (EmpiricalLaw, PeriodicityReport, bl_distance, distribution_gap,
                          mean_square_gap, periodicity_report, sap_decay_verdict,
                          truncated_moment_bound)
from .solution_operator import SectorialSpec, check_sectorial, decay_envelope, solution_operator_eval
from .solver import SolverConfig, Trajectory, picard_iterate, run_ensemble, segment_at, simulate_mild

__version__ = "0.1.0"

__all__ = [
    "__version__", "backend_name", "ConfigError", "FracSapError", "InvalidArgument",
    "SolverError", "ValidationError", "MittagLefflerTable", "ml_eval", "CoefficientSet",
    "InitialSegment", "ModelSpec", "Preset", "Profile", "contraction_constant", "kappa1",
    "kappa2", "validate_hypotheses", "LevySpec", "NoisePath", "big_jump_intensity", "sample_path",
    "small_jump_compensator", "EmpiricalLaw", "PeriodicityReport", "bl_distance",
    "distribution_gap", "mean_square_gap", "periodicity_report", "sap_decay_verdict",
    "truncated_moment_bound", "SectorialSpec", "check_sectorial", "decay_envelope",
    "solution_operator_eval", "SolverConfig", "Trajectory", "picard_iterate", "run_ensemble",
    "segment_at", "simulate_mild",
]
