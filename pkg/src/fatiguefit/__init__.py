"""Calibration of probabilistic S-N fatigue-limit models from censored data."""

__version__ = "0.1.0"

from .core import DataError, FatigueDataset, FatigueObservation, load_dataset, make_dataset
from .likelihood import ModelSpec, ParamVector, observation_loglik, total_loglik
from .mle import FitConfig, FitError, FittedModel, fit, param_count
from .inference import bootstrap_ci, information_criteria, profile_fatigue_limit
from .curves import probability_plot, quantile_curve, survival_curve
from .stress import StressTransform, equivalent_stress

__all__ = [
    "DataError",
    "FatigueDataset",
    "FatigueObservation",
    "FitConfig",
    "FitError",
    "FittedModel",
    "ModelSpec",
    "ParamVector",
    "StressTransform",
    "bootstrap_ci",
    "equivalent_stress",
    "fit",
    "information_criteria",
    "load_dataset",
    "make_dataset",
    "observation_loglik",
    "param_count",
    "probability_plot",
    "profile_fatigue_limit",
    "quantile_curve",
    "survival_curve",
    "total_loglik",
]
