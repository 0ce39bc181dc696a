"""Seeded generators for the synthetic experiments.

An instance draws a Uniform[-1,1] core, Haar-orthonormal factors, and
standard-Gaussian feature matrices, rescales the linear predictor to
unit max-norm, and samples responses whose mean is the canonical link
applied to ``effect_size`` times that predictor. The unscaled truth is
kept alongside the sampled problem so estimation error can be measured.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .decompose import SupervisedProblem, validate_rank
from .families import GAUSSIAN, ExponentialFamily
from .linalg import haar_orthonormal
from .tensors import max_norm, multilinear, unfold

_MAX_CORE_DRAWS = 100


@dataclass(frozen=True)
class SimSpec:
    """Shape, rank, family, signal strength and seed of one instance.

    ``feature_dims[k] is None`` requests an identity (featureless) mode.
    """

    dims: tuple[int, ...]
    feature_dims: tuple[Optional[int], ...]
    rank: tuple[int, ...]
    family: ExponentialFamily
    effect_size: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(
            self, "feature_dims", tuple(None if p is None else int(p) for p in self.feature_dims)
        )
        object.__setattr__(self, "rank", tuple(int(r) for r in self.rank))
        if len(self.feature_dims) != len(self.dims) or len(self.rank) != len(self.dims):
            raise ValueError("dims, feature_dims and rank must have equal length")
        if any(d < 1 for d in self.dims):
            raise ValueError("dims must be positive")
        if self.effect_size <= 0:
            raise ValueError("effect_size must be positive")
        for k, (d, p) in enumerate(zip(self.dims, self.feature_dims)):
            if p is not None and not 1 <= p <= d:
                raise ValueError(f"feature dimension {p} out of range [1, {d}] on mode {k}")
        validate_rank(self.rank, self.resolved_feature_dims)

    @property
    def resolved_feature_dims(self) -> tuple[int, ...]:
        return tuple(d if p is None else p for d, p in zip(self.dims, self.feature_dims))


@dataclass(frozen=True)
class SimTruth:
    """Ground-truth decomposition at unit predictor max-norm.

    ``mean`` is the conditional mean actually used for sampling, i.e.
    the link applied to ``effect_size * predictor``.
    """

    core: np.ndarray
    factors: tuple[np.ndarray, ...]
    coefficient: np.ndarray
    predictor: np.ndarray
    mean: np.ndarray


@dataclass(frozen=True)
class SimInstance:
    spec: SimSpec
    problem: SupervisedProblem
    truth: SimTruth


def _draw_structure(spec: SimSpec) -> tuple[np.ndarray, list[np.ndarray], list[Optional[np.ndarray]]]:
    # independent streams per object so resizing one draw leaves the others alone
    ss_core, ss_factors, ss_features, _ = np.random.SeedSequence(spec.seed).spawn(4)
    p_dims = spec.resolved_feature_dims

    factor_rngs = [np.random.default_rng(s) for s in ss_factors.spawn(len(spec.dims))]
    factors = [
        haar_orthonormal(p, r, rng) for p, r, rng in zip(p_dims, spec.rank, factor_rngs)
    ]

    feature_rngs = [np.random.default_rng(s) for s in ss_features.spawn(len(spec.dims))]
    features: list[Optional[np.ndarray]] = [
        None if p is None else rng.standard_normal((d, p))
        for d, p, rng in zip(spec.dims, spec.feature_dims, feature_rngs)
    ]

    core_rng = np.random.default_rng(ss_core)
    for _ in range(_MAX_CORE_DRAWS):
        core = core_rng.uniform(-1.0, 1.0, size=spec.rank)
        smallest = min(
            np.linalg.svd(unfold(core, k), compute_uv=False)[spec.rank[k] - 1]
            for k in range(len(spec.rank))
        )
        if smallest > 1e-10:
            return core, factors, features
    raise RuntimeError("could not draw a non-degenerate core tensor")


def _noise_rng(spec: SimSpec) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(4)[3])


def _build_truth(spec: SimSpec) -> tuple[SimTruth, list[Optional[np.ndarray]]]:
    core, factors, features = _draw_structure(spec)
    order = len(spec.dims)
    reduced = [
        m if x is None else x @ m for x, m in zip(features, factors)
    ]
    predictor = multilinear(core, list(zip(reduced, range(order))))
    scale = max_norm(predictor)
    predictor = predictor / scale
    core = core / scale
    coefficient = multilinear(core, list(zip(factors, range(order))))
    mean = spec.family.mean(spec.effect_size * predictor)
    truth = SimTruth(
        core=core,
        factors=tuple(factors),
        coefficient=coefficient,
        predictor=predictor,
        mean=mean,
    )
    return truth, features


def generate(spec: SimSpec) -> SimInstance:
    """Draw a full instance: structure, features, and sampled responses."""
    truth, features = _build_truth(spec)
    y = spec.family.sample(truth.mean, _noise_rng(spec))
    problem = SupervisedProblem(y, features, spec.family)
    return SimInstance(spec=spec, problem=problem, truth=truth)


def generate_noiseless(spec: SimSpec) -> SimInstance:
    """Gaussian-only variant with the response equal to its mean exactly."""
    if spec.family != GAUSSIAN:
        raise ValueError("noiseless generation is defined for the gaussian family only")
    truth, features = _build_truth(spec)
    y = spec.effect_size * truth.predictor
    problem = SupervisedProblem(y, features, spec.family)
    return SimInstance(spec=spec, problem=problem, truth=truth)
