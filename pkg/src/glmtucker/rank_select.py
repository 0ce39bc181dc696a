"""Rank selection by BIC over a grid of candidate multilinear ranks."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .decompose import FitConfig, FitResult, SupervisedProblem, fit, rank_is_admissible

Rank = tuple[int, ...]


@dataclass(frozen=True)
class BicEntry:
    rank: Rank
    bic: float
    loglik: float
    effective_params: int
    converged: bool


@dataclass(frozen=True)
class BicTable:
    entries: tuple[BicEntry, ...]
    selected: Rank


def effective_params(rank: Sequence[int], feature_dims: Sequence[int]) -> int:
    """Free parameters of the rank-constrained model:
    sum_k (p_k - r_k) r_k plus the core size."""
    rank = tuple(int(r) for r in rank)
    feature_dims = tuple(int(p) for p in feature_dims)
    if len(rank) != len(feature_dims):
        raise ValueError("rank and feature_dims must have equal length")
    for r, p in zip(rank, feature_dims):
        if r > p:
            raise ValueError(f"rank component {r} exceeds feature dimension {p}")
    return int(
        sum((p - r) * r for p, r in zip(feature_dims, rank))
        + math.prod(rank)
    )


def bic(problem: SupervisedProblem, result: FitResult) -> BicEntry:
    """Score a fitted model: -2 loglik + params * log(#tensor entries)."""
    rank = tuple(result.core.shape)
    p_e = effective_params(rank, problem.feature_dims)
    n = math.prod(problem.dims)
    loglik = result.final_objective
    return BicEntry(
        rank=rank,
        bic=-2.0 * loglik + p_e * math.log(n),
        loglik=loglik,
        effective_params=p_e,
        converged=result.converged,
    )


def candidate_ranks(
    center: Sequence[int], radius: int, feature_dims: Sequence[int]
) -> list[Rank]:
    """All ranks in the box around ``center``, clipped to [1, p_k] and
    filtered for admissibility, in lexicographic order."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    axes = []
    for c, p in zip(center, feature_dims):
        lo = max(1, c - radius)
        hi = min(p, c + radius)
        if lo > hi:
            raise ValueError(f"empty candidate range around {c} within [1, {p}]")
        axes.append(range(lo, hi + 1))
    ranks = [r for r in itertools.product(*axes) if rank_is_admissible(r)]
    if not ranks:
        raise ValueError("no admissible candidate ranks in the grid")
    return ranks


def _candidate_seed(base_seed: int, rank: Rank) -> int:
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(rank))
    return int(ss.generate_state(1)[0])


def _fit_candidate(args: tuple[SupervisedProblem, FitConfig, Rank]) -> BicEntry:
    problem, config, rank = args
    cfg = replace(config, rank=rank, seed=_candidate_seed(config.seed, rank))
    return bic(problem, fit(problem, cfg))


def grid_search(
    problem: SupervisedProblem,
    center: Sequence[int],
    radius: int,
    config: FitConfig,
    jobs: int = 1,
) -> BicTable:
    """Fit every admissible rank in the box and pick the BIC minimizer.

    Candidate fits are independent; with ``jobs > 1`` they run in worker
    processes. Seeds derive deterministically from ``config.seed`` and
    the candidate rank, so the table does not depend on scheduling. Ties
    in the minimum select the lexicographically smallest rank.
    """
    center = tuple(int(c) for c in center)
    if len(center) != problem.order:
        raise ValueError(f"grid center {center} has wrong length for order {problem.order}")
    ranks = candidate_ranks(center, radius, problem.feature_dims)
    tasks = [(problem, config, r) for r in ranks]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_fit_candidate, tasks))
    else:
        entries = [_fit_candidate(t) for t in tasks]
    selected = min(entries, key=lambda e: (e.bic, e.rank)).rank
    return BicTable(entries=tuple(entries), selected=selected)
