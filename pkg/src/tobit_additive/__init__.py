"""Semi-parametric Tobit additive regression with B-spline components."""

__version__ = "0.1.0"

from .errors import (
    DegenerateData,
    DegenerateDesign,
    ExperimentFailure,
    FitError,
    InsufficientData,
    InvalidArgument,
    InvalidStart,
    NonConvergence,
    SelectionFailure,
    TobitError,
)
from .estimator import TobitFit, fit, fit_baseline, heldout_log_likelihood, predict
from .likelihood import CensoredDataset, NaturalParams, WorkingParams
from .model_selection import CvResult, cv_select
from .optimizer import OptimizerConfig, OptimizeResult, maximize
from .simulation import ImseReport, Scenario, run_experiment
from .splines import DesignMatrix, SplineSpec, build_design, component_curve, eval_basis

__all__ = [
    "CensoredDataset",
    "CvResult",
    "DegenerateData",
    "DegenerateDesign",
    "DesignMatrix",
    "ExperimentFailure",
    "FitError",
    "ImseReport",
    "InsufficientData",
    "InvalidArgument",
    "InvalidStart",
    "NaturalParams",
    "NonConvergence",
    "OptimizeResult",
    "OptimizerConfig",
    "Scenario",
    "SelectionFailure",
    "SplineSpec",
    "TobitError",
    "TobitFit",
    "WorkingParams",
    "build_design",
    "component_curve",
    "cv_select",
    "eval_basis",
    "fit",
    "fit_baseline",
    "heldout_log_likelihood",
    "maximize",
    "predict",
    "run_experiment",
]
