"""Estimation-error metrics: coefficient MSE, subspace angles, response error."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .decompose import FitResult
from .families import ExponentialFamily
from .linalg import sin_theta
from .simulate import SimTruth
from .tensors import fro_norm


@dataclass(frozen=True)
class EvalReport:
    mse_coefficient: float
    per_mode_sin_theta: tuple[float, ...]
    max_sin_theta: float
    response_error: float
    final_objective: float


def mse(b_hat: np.ndarray, b_true: np.ndarray) -> float:
    """Squared Frobenius norm of the difference."""
    b_hat = np.asarray(b_hat, dtype=float)
    b_true = np.asarray(b_true, dtype=float)
    if b_hat.shape != b_true.shape:
        raise ValueError(f"shape mismatch {b_hat.shape} vs {b_true.shape}")
    return fro_norm(b_hat - b_true) ** 2


def angle_errors(
    factors_hat: Sequence[np.ndarray], factors_true: Sequence[np.ndarray]
) -> list[float]:
    """Largest principal-angle sine per mode (rotation-invariant)."""
    if len(factors_hat) != len(factors_true):
        raise ValueError("factor lists have different lengths")
    return [sin_theta(a, b) for a, b in zip(factors_hat, factors_true)]


def response_error(y_hat_mean: np.ndarray, mean_true: np.ndarray) -> float:
    """One minus the Pearson correlation of the flattened tensors.

    Returns +inf when either input is constant, marking a degenerate fit.
    """
    a = np.asarray(y_hat_mean, dtype=float).ravel()
    b = np.asarray(mean_true, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("shape mismatch in response_error")
    a = a - a.mean()
    b = b - b.mean()
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0.0:
        return math.inf
    return 1.0 - float(np.dot(a, b) / denom)


def evaluation_report(
    fit: FitResult,
    truth: SimTruth,
    family: ExponentialFamily,
    effect_size: float,
) -> EvalReport:
    """Score a fit against simulation truth.

    The coefficient target is the effect-size-scaled truth, which is the
    quantity the fit estimates; the response error compares fitted and
    true conditional means.
    """
    per_mode = tuple(angle_errors(fit.factors, truth.factors))
    return EvalReport(
        mse_coefficient=mse(fit.coefficient, effect_size * truth.coefficient),
        per_mode_sin_theta=per_mode,
        max_sin_theta=max(per_mode),
        response_error=response_error(family.mean(fit.linear_predictor), truth.mean),
        final_objective=fit.final_objective,
    )
