"""False discovery proportion burstiness under short- and long-range dependence."""

__version__ = "0.1.0"

from .asymptotics import AsymptoticSummary, LimitFunctions, analyze, simes_point
from .bh import run_bh, tau_via_ecdf
from .factorfit import FittedFactorModel, fit, planted_factor_data, to_loading_groups
from .model import (ExperimentConfig, LoadingGroups, NoiseSpec, NonnullSchedule, assign_groups,
                    validate)
from .montecarlo import ExperimentResult, compare_to_clt, run_experiment, simulate, summarize
from .sampler import Sampler, draw_replicate

__all__ = [
    "AsymptoticSummary", "ExperimentConfig", "ExperimentResult", "FittedFactorModel",
    "LimitFunctions", "LoadingGroups", "NoiseSpec", "NonnullSchedule", "Sampler", "analyze",
    "assign_groups", "compare_to_clt", "draw_replicate", "fit", "planted_factor_data", "run_bh",
    "run_experiment", "simes_point", "simulate", "summarize", "tau_via_ecdf", "to_loading_groups",
    "validate",
]
