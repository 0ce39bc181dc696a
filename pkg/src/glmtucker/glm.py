"""Newton/IRLS solver for canonical-link GLM blocks.

The solver maximizes ``sum_i [y_i eta_i - cumulant(eta_i)]`` over
coefficients with ``eta = design @ beta``. Step-halving keeps the
objective non-decreasing and the linear predictor inside the max-norm
bound, which is what makes the alternating tensor fit monotone.

Designs may be passed as plain matrices or as objects exposing
``shape``, ``matvec(beta)``, ``rmatvec(v)`` and ``weighted_gram(w)``;
the structured designs used by the tensor fit implement the same
protocol without materializing the matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .families import ExponentialFamily


@dataclass(frozen=True)
class GlmOptions:
    max_newton_iters: int = 25
    tol: float = 1e-8
    predictor_bound: float = 1e4
    ridge: float = 1e-8
    max_halvings: int = 20

    def __post_init__(self):
        if self.max_newton_iters < 1 or self.max_halvings < 0:
            raise ValueError("iteration counts must be positive")
        if self.tol <= 0 or self.predictor_bound <= 0 or self.ridge < 0:
            raise ValueError("tol and predictor_bound must be positive, ridge nonnegative")


@dataclass(frozen=True)
class GlmResult:
    coefficients: np.ndarray
    final_objective: float
    converged: bool
    n_iters: int
    hit_bound: bool
    failed: bool = False
    objective_path: tuple[float, ...] = field(default=(), repr=False)


class ExplicitDesign:
    """Adapter exposing the design protocol for a dense matrix."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("design must be a matrix")
        self.matrix = matrix
        self.shape = matrix.shape

    def matvec(self, beta: np.ndarray) -> np.ndarray:
        return self.matrix @ beta

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        return self.matrix.T @ v

    def weighted_gram(self, w: np.ndarray) -> np.ndarray:
        return self.matrix.T @ (self.matrix * w[:, None])


def _as_design(design) -> object:
    if isinstance(design, np.ndarray):
        return ExplicitDesign(design)
    return design


def solve_glm(
    family: ExponentialFamily,
    y: Sequence[float] | np.ndarray,
    design,
    warm_start: Optional[np.ndarray] = None,
    options: GlmOptions = GlmOptions(),
) -> GlmResult:
    """Maximize the GLM quasi log-likelihood for one coefficient block.

    Newton directions use the ridge-stabilized system
    ``(X'WX + ridge*I) delta = X'(y - mean(eta))`` with ``W`` the variance
    weights. A step is accepted only when the objective does not decrease
    and ``max|eta|`` stays within ``options.predictor_bound``; otherwise
    the step is halved up to ``max_halvings`` times. If no step is
    acceptable the solver stops at the last feasible iterate with
    ``failed=True`` (separation or divergence).
    """
    design = _as_design(design)
    y = np.asarray(y, dtype=float).ravel()
    n_rows, n_cols = design.shape
    if y.shape[0] != n_rows:
        raise ValueError(f"response length {y.shape[0]} != design rows {n_rows}")

    if warm_start is None:
        beta = np.zeros(n_cols)
    else:
        beta = np.asarray(warm_start, dtype=float).ravel().copy()
        if beta.shape[0] != n_cols:
            raise ValueError(f"warm start length {beta.shape[0]} != design cols {n_cols}")

    def objective(eta: np.ndarray) -> float:
        return float(y @ eta - np.sum(family.cumulant(eta)))

    eta = design.matvec(beta)
    obj = objective(eta)
    if not np.isfinite(obj):
        raise ValueError("objective not finite at the starting point")

    hit_bound = False
    converged = False
    failed = False
    path = [obj]
    n_iters = 0

    for n_iters in range(1, options.max_newton_iters + 1):
        w = family.variance(eta)
        gram = design.weighted_gram(w)
        trace = float(np.trace(gram))
        ridge = options.ridge * (trace / n_cols) if trace > 0 else options.ridge
        if ridge > 0:
            gram = gram + ridge * np.eye(n_cols)
        grad = design.rmatvec(y - family.mean(eta))
        delta = np.linalg.solve(gram, grad)

        flat_tol = 1e-13 * max(1.0, abs(obj))
        step = 1.0
        accepted = False
        best_obj = -np.inf
        for _ in range(options.max_halvings + 1):
            beta_new = beta + step * delta
            eta_new = design.matvec(beta_new)
            bound_ok = np.max(np.abs(eta_new)) <= options.predictor_bound if eta_new.size else True
            if not bound_ok:
                hit_bound = True
            obj_new = objective(eta_new)
            if bound_ok and np.isfinite(obj_new):
                best_obj = max(best_obj, obj_new)
                if obj_new >= obj:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            # a flat objective at the current iterate is convergence, not failure
            if best_obj >= obj - flat_tol:
                converged = True
            else:
                failed = True
            break

        rel_change = abs(obj_new - obj) / max(1.0, abs(obj), abs(obj_new))
        beta, eta, obj = beta_new, eta_new, obj_new
        path.append(obj)
        if rel_change < options.tol:
            converged = True
            break

    return GlmResult(
        coefficients=beta,
        final_objective=obj,
        converged=converged,
        n_iters=n_iters,
        hit_bound=hit_bound,
        failed=failed,
        objective_path=tuple(path),
    )
