"""Dense tensor reshaping and multilinear algebra.

Tensors are plain ``numpy.ndarray`` objects of order K >= 1. The flat
("vec") layout used throughout the package and in file formats puts the
first index fastest, i.e. Fortran order. Unfoldings follow the matching
column convention: mode-k fibers become rows, remaining modes are ordered
increasingly with earlier modes varying faster, so that ``fold`` is a plain
reshape.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


def _check_mode(t: np.ndarray, mode: int) -> None:
    if not 0 <= mode < t.ndim:
        raise ValueError(f"mode {mode} out of range for order-{t.ndim} tensor")


def vec(t: np.ndarray) -> np.ndarray:
    """Flatten a tensor with the first index varying fastest."""
    return np.asarray(t).ravel(order="F")


def unfold(t: np.ndarray, mode: int) -> np.ndarray:
    """Matricize ``t`` along ``mode`` (0-based).

    The result has shape ``(d_mode, prod of the other dims)``; among the
    columns, earlier remaining modes vary faster.
    """
    t = np.asarray(t)
    _check_mode(t, mode)
    return np.reshape(np.moveaxis(t, mode, 0), (t.shape[mode], -1), order="F")


def fold(m: np.ndarray, mode: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold` for the given full tensor ``dims``."""
    m = np.asarray(m)
    dims = tuple(int(d) for d in dims)
    if not 0 <= mode < len(dims):
        raise ValueError(f"mode {mode} out of range for dims {dims}")
    rest = tuple(d for j, d in enumerate(dims) if j != mode)
    expected = (dims[mode], int(np.prod(rest, dtype=np.int64)) if rest else 1)
    if m.shape != expected:
        raise ValueError(f"matrix shape {m.shape} does not match unfold shape {expected}")
    return np.moveaxis(np.reshape(m, (dims[mode],) + rest, order="F"), 0, mode)


def ttm(t: np.ndarray, m: np.ndarray, mode: int) -> np.ndarray:
    """Mode-``mode`` product of tensor ``t`` with matrix ``m``.

    Computed as ``m @ unfold(t, mode)`` refolded, replacing ``d_mode`` by
    ``m.shape[0]`` in the result dims.
    """
    t = np.asarray(t)
    m = np.asarray(m)
    _check_mode(t, mode)
    if m.ndim != 2 or m.shape[1] != t.shape[mode]:
        raise ValueError(
            f"matrix shape {m.shape} not conformable with mode-{mode} size {t.shape[mode]}"
        )
    new_dims = list(t.shape)
    new_dims[mode] = m.shape[0]
    return fold(m @ unfold(t, mode), mode, new_dims)


def multilinear(t: np.ndarray, mats: Iterable[tuple[np.ndarray, int]]) -> np.ndarray:
    """Apply a mode product per listed ``(matrix, mode)`` pair.

    Modes absent from the list are left untouched, which realizes the
    identity-feature convention without materializing identity matrices.
    """
    t = np.asarray(t)
    seen: set[int] = set()
    out = t
    for m, mode in mats:
        if mode in seen:
            raise ValueError(f"duplicate mode {mode} in multilinear product")
        seen.add(mode)
        out = ttm(out, m, mode)
    return out


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of elementwise products of two same-shaped tensors."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.dot(a.ravel(), b.ravel()))


def fro_norm(t: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(t).ravel()))


def max_norm(t: np.ndarray) -> float:
    """Largest absolute entry (the bound used on linear predictors)."""
    t = np.asarray(t)
    if t.size == 0:
        return 0.0
    return float(np.max(np.abs(t)))
