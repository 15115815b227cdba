"""Separation-of-variables toolkit for the antiperiodic spin-1/2 XXZ chain."""

from .errors import (
    ConditioningError,
    ConvergenceError,
    DomainError,
    SingularMatrixError,
    SovConditionError,
    UnsupportedError,
    XXZSovError,
)
from .params import ModelParams, Regime, Tolerances, eval_a, eval_d, validate_sov_condition

__version__ = "0.1.0"

__all__ = [
    "ConditioningError",
    "ConvergenceError",
    "DomainError",
    "ModelParams",
    "Regime",
    "SingularMatrixError",
    "SovConditionError",
    "Tolerances",
    "UnsupportedError",
    "XXZSovError",
    "eval_a",
    "eval_d",
    "validate_sov_condition",
]
