"""Exponential-family distributions with canonical links.

Each family carries its cumulant function and the first two derivatives:
the mean function (the canonical link's inverse) and the variance
function. The dispersion parameter is fixed at 1 throughout; with a
canonical link it rescales the objective uniformly and does not move the
maximizer.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .tensors import inner

_KINDS = ("gaussian", "bernoulli", "poisson")


class ExponentialFamily:
    """One of the supported response distributions.

    Use the module-level singletons ``GAUSSIAN``, ``BERNOULLI``,
    ``POISSON`` or :func:`family_from_name`.
    """

    __slots__ = ("kind",)

    def __init__(self, kind: str):
        if kind not in _KINDS:
            raise ValueError(f"unknown family {kind!r}; expected one of {_KINDS}")
        object.__setattr__(self, "kind", kind)

    def __setattr__(self, *args):
        raise AttributeError("ExponentialFamily is immutable")

    def __reduce__(self):
        return (ExponentialFamily, (self.kind,))

    def __repr__(self) -> str:
        return f"ExponentialFamily({self.kind!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ExponentialFamily) and other.kind == self.kind

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.kind))

    def cumulant(self, theta):
        """Cumulant function of the natural parameter, elementwise.

        Gaussian: theta^2/2; Poisson: exp(theta); Bernoulli:
        log(1 + exp(theta)) evaluated overflow-safely.
        """
        theta = np.asarray(theta, dtype=float)
        if self.kind == "gaussian":
            return 0.5 * theta**2
        if self.kind == "poisson":
            with np.errstate(over="ignore"):
                return np.exp(theta)
        return np.logaddexp(0.0, theta)

    def mean(self, theta):
        """First derivative of the cumulant: the canonical mean function."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "gaussian":
            return theta.copy()
        if self.kind == "poisson":
            with np.errstate(over="ignore"):
                return np.exp(theta)
        return expit(theta)

    def variance(self, theta):
        """Second derivative of the cumulant; nonnegative everywhere."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "gaussian":
            return np.ones_like(theta)
        if self.kind == "poisson":
            with np.errstate(over="ignore"):
                return np.exp(theta)
        # expit(t) * expit(-t) stays accurate for large |t|
        return expit(theta) * expit(-theta)

    def validate_response(self, y: np.ndarray) -> None:
        """Check that all entries lie in the family's observation domain."""
        y = np.asarray(y)
        if not np.all(np.isfinite(y)):
            idx = tuple(int(i) for i in np.argwhere(~np.isfinite(np.atleast_1d(y)))[0])
            raise ValueError(f"non-finite response entry at index {idx}")
        if self.kind == "bernoulli":
            bad = (y != 0) & (y != 1)
        elif self.kind == "poisson":
            bad = (y < 0) | (y != np.floor(y))
        else:
            return
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(np.atleast_1d(bad))[0])
            val = np.atleast_1d(y)[idx] if y.ndim == 0 else y[idx]
            raise ValueError(
                f"response entry {val!r} at index {idx} is outside the "
                f"{self.kind} domain"
            )

    def sample(self, mean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw one response per entry of the given mean tensor."""
        if self.kind == "gaussian":
            return mean + rng.standard_normal(mean.shape)
        if self.kind == "poisson":
            return rng.poisson(mean).astype(float)
        return rng.binomial(1, mean).astype(float)


GAUSSIAN = ExponentialFamily("gaussian")
BERNOULLI = ExponentialFamily("bernoulli")
POISSON = ExponentialFamily("poisson")


def family_from_name(name: str) -> ExponentialFamily:
    return ExponentialFamily(name.lower())


def quasi_loglik(family: ExponentialFamily, y: np.ndarray, theta: np.ndarray) -> float:
    """<y, theta> minus the summed cumulant, with dispersion fixed at 1."""
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if y.shape != theta.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {theta.shape}")
    family.validate_response(y)
    return inner(y, theta) - float(np.sum(family.cumulant(theta)))
