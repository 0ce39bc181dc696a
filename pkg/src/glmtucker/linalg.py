"""Dense linear-algebra primitives: thin QR, truncated SVD, HOSVD,
subspace angles, and Haar-distributed orthonormal sampling.

All factorizations carry deterministic sign conventions (QR: nonnegative
diagonal of R; SVD: largest-magnitude entry of each left singular vector
positive) because factor matrices are only identified up to rotation and
the tests need byte-stable results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensors import multilinear, unfold

_RANK_TOL = 1e-12


@dataclass(frozen=True)
class QrResult:
    q: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def thin_qr(m: np.ndarray) -> QrResult:
    """Reduced QR with nonnegative diagonal of R.

    Raises ValueError on wide or (numerically) rank-deficient input; rank
    deficiency in a feature matrix violates the full-column-rank model
    requirement.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("thin_qr expects a matrix")
    if m.shape[0] < m.shape[1]:
        raise ValueError(f"thin_qr needs rows >= cols, got {m.shape}")
    q, r = np.linalg.qr(m, mode="reduced")
    diag = np.abs(np.diag(r))
    if diag.size and diag.min() <= _RANK_TOL * max(diag.max(), 1e-300):
        raise ValueError("rank-deficient matrix in thin_qr")
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return QrResult(q=q * signs, r=r * signs[:, None])


def truncated_svd(m: np.ndarray, rank: int) -> SvdResult:
    """Top-``rank`` singular triplets with a deterministic sign fix.

    The largest-magnitude entry of each left singular vector is made
    positive (first index wins ties); the matching right vector is flipped
    with it so the reconstruction is unchanged.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("truncated_svd expects a matrix")
    if not 1 <= rank <= min(m.shape):
        raise ValueError(f"rank {rank} out of range for shape {m.shape}")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    u, s, v = u[:, :rank], s[:rank], vt[:rank].T
    flips = np.abs(u).argmax(axis=0)
    signs = np.where(u[flips, np.arange(rank)] < 0, -1.0, 1.0)
    return SvdResult(u=u * signs, s=s, v=v * signs)


def _check_hosvd_rank(dims: Sequence[int], rank: Sequence[int]) -> None:
    if len(rank) != len(dims):
        raise ValueError("rank vector length must equal tensor order")
    for k, (r, d) in enumerate(zip(rank, dims)):
        if not 1 <= r <= d:
            raise ValueError(f"rank {r} out of range [1, {d}] on mode {k}")
        others = int(np.prod([rj for j, rj in enumerate(rank) if j != k], dtype=np.int64))
        if r > others:
            raise ValueError(f"inadmissible rank {tuple(rank)}: mode {k} exceeds product of others")


def hosvd(t: np.ndarray, rank: Sequence[int]) -> tuple[np.ndarray, list[np.ndarray]]:
    """Truncated higher-order SVD.

    Returns ``(core, factors)`` where ``factors[k]`` holds the top left
    singular vectors of the mode-k unfolding and
    ``core = t x_k factors[k].T`` over all modes.
    """
    t = np.asarray(t, dtype=float)
    _check_hosvd_rank(t.shape, rank)
    factors = [truncated_svd(unfold(t, k), rank[k]).u for k in range(t.ndim)]
    core = multilinear(t, [(f.T, k) for k, f in enumerate(factors)])
    return core, factors


def _check_orthonormal(m: np.ndarray, tol: float, name: str) -> None:
    gram = m.T @ m
    if np.max(np.abs(gram - np.eye(m.shape[1]))) > tol:
        raise ValueError(f"{name} does not have orthonormal columns")


def sin_theta(a: np.ndarray, b: np.ndarray) -> float:
    """Sine of the largest principal angle between Span(a) and Span(b).

    Computed as sqrt(1 - sigma_min(a.T b)^2), clamped to [0, 1]. Both
    inputs must be same-shaped with orthonormal columns.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    _check_orthonormal(a, 1e-8, "first argument")
    _check_orthonormal(b, 1e-8, "second argument")
    smin = np.linalg.svd(a.T @ b, compute_uv=False).min()
    return float(np.sqrt(max(0.0, 1.0 - min(smin, 1.0) ** 2)))


def haar_orthonormal(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n-by-r matrix with orthonormal columns.

    QR of a standard Gaussian matrix with the nonnegative-diagonal sign fix
    gives the Haar distribution; results are deterministic given ``rng``.
    """
    if r > n:
        raise ValueError(f"cannot draw {r} orthonormal columns in dimension {n}")
    return thin_qr(rng.standard_normal((n, r))).q
