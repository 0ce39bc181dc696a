"""Text file formats and result bundles.

Tensors use a small self-describing text format (``tns 1`` header,
order, dims, then one value per line in first-index-fastest order);
matrices are headerless CSV. Values are printed with 17 significant
digits so doubles round-trip exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .decompose import FitResult, SupervisedProblem
from .families import family_from_name, quasi_loglik
from .simulate import SimInstance, SimTruth

TENSOR_HEADER = "tns 1"


class DataError(ValueError):
    """Malformed or out-of-domain data in an input file."""


def format_value(v: float) -> str:
    return format(float(v), ".17g")


def write_tensor(path: str | Path, t: np.ndarray) -> None:
    t = np.asarray(t, dtype=float)
    lines = [TENSOR_HEADER, str(t.ndim), " ".join(str(d) for d in t.shape)]
    lines.extend(format_value(v) for v in t.ravel(order="F"))
    Path(path).write_text("\n".join(lines) + "\n")


def read_tensor(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read tensor file {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != TENSOR_HEADER:
        raise DataError(f"{path}: missing '{TENSOR_HEADER}' header")
    try:
        order = int(lines[1])
        dims = tuple(int(d) for d in lines[2].split())
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}: malformed header lines") from exc
    if len(dims) != order or any(d < 1 for d in dims) or order < 1:
        raise DataError(f"{path}: bad dims line {dims} for order {order}")
    body = " ".join(lines[3:]).split()
    expected = math.prod(dims)
    if len(body) != expected:
        raise DataError(f"{path}: expected {expected} values, found {len(body)}")
    try:
        values = np.array([float(v) for v in body])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric value in body") from exc
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: non-finite value in body")
    return values.reshape(dims, order="F")


def write_matrix(path: str | Path, m: np.ndarray) -> None:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("write_matrix expects a matrix")
    lines = [",".join(format_value(v) for v in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path: str | Path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read matrix file {path}: {exc}") from exc
    rows = []
    width = None
    for i, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise DataError(f"{path}: ragged row {i + 1}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise DataError(f"{path}: non-numeric field in row {i + 1}") from exc
    if not rows:
        raise DataError(f"{path}: empty matrix file")
    m = np.array(rows)
    if not np.all(np.isfinite(m)):
        raise DataError(f"{path}: non-finite value")
    return m


def write_meta(path: str | Path, meta: dict) -> None:
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_meta(path: str | Path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON") from exc


def write_trajectory(path: str | Path, values: Sequence[float]) -> None:
    lines = ["iteration,objective"]
    lines.extend(f"{i},{format_value(v)}" for i, v in enumerate(values))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory(path: str | Path) -> list[float]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "iteration,objective":
        raise DataError(f"{path}: missing trajectory header")
    return [float(line.split(",")[1]) for line in lines[1:] if line.strip()]


@dataclass(frozen=True)
class Bundle:
    """A reloaded result directory: either a fit or a simulation truth."""

    kind: str
    core: np.ndarray
    factors: tuple[np.ndarray, ...]
    coefficient: np.ndarray
    meta: dict
    trajectory: Optional[tuple[float, ...]] = None
    predictor: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None


def _factor_paths(directory: Path) -> list[Path]:
    paths = sorted(directory.glob("factor_*.csv"), key=lambda p: int(p.stem.split("_")[1]))
    if not paths:
        raise DataError(f"{directory}: no factor files")
    return paths


def save_fit_bundle(directory: str | Path, result: FitResult, meta: dict) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_tensor(directory / "core.tns", result.core)
    for k, m in enumerate(result.factors):
        write_matrix(directory / f"factor_{k + 1}.csv", m)
    write_tensor(directory / "coefficient.tns", result.coefficient)
    write_trajectory(directory / "trajectory.csv", result.trajectory)
    full_meta = {
        "kind": "fit",
        "rank": [int(r) for r in result.core.shape],
        "converged": bool(result.converged),
        "n_outer_iters": int(result.n_outer_iters),
        "final_objective": result.final_objective,
        "init_used": result.init_used,
    }
    full_meta.update(meta)
    write_meta(directory / "meta.json", full_meta)


def save_truth_bundle(directory: str | Path, truth: SimTruth, meta: dict) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_tensor(directory / "core.tns", truth.core)
    for k, m in enumerate(truth.factors):
        write_matrix(directory / f"factor_{k + 1}.csv", m)
    write_tensor(directory / "coefficient.tns", truth.coefficient)
    write_tensor(directory / "predictor.tns", truth.predictor)
    write_tensor(directory / "mean.tns", truth.mean)
    full_meta = {"kind": "truth"}
    full_meta.update(meta)
    write_meta(directory / "meta.json", full_meta)


def load_bundle(directory: str | Path) -> Bundle:
    directory = Path(directory)
    meta = read_meta(directory / "meta.json")
    kind = meta.get("kind")
    if kind not in ("fit", "truth"):
        raise DataError(f"{directory}: meta.json kind must be 'fit' or 'truth'")
    core = read_tensor(directory / "core.tns")
    factors = tuple(read_matrix(p) for p in _factor_paths(directory))
    for k, m in enumerate(factors):
        gram = m.T @ m
        if np.max(np.abs(gram - np.eye(m.shape[1]))) > 1e-8:
            raise DataError(f"{directory}: factor_{k + 1}.csv is not orthonormal")
    coefficient = read_tensor(directory / "coefficient.tns")
    trajectory = None
    traj_path = directory / "trajectory.csv"
    if traj_path.exists():
        trajectory = tuple(read_trajectory(traj_path))
    predictor = None
    mean = None
    if (directory / "predictor.tns").exists():
        predictor = read_tensor(directory / "predictor.tns")
    if (directory / "mean.tns").exists():
        mean = read_tensor(directory / "mean.tns")
    return Bundle(
        kind=kind,
        core=core,
        factors=factors,
        coefficient=coefficient,
        meta=meta,
        trajectory=trajectory,
        predictor=predictor,
        mean=mean,
    )


def save_simulation(directory: str | Path, instance: SimInstance) -> None:
    """Write a simulated dataset: response, feature files, truth bundle."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    spec = instance.spec
    problem = instance.problem
    write_tensor(directory / "y.tns", problem.response)
    for k, x in enumerate(problem.features):
        if x is not None:
            write_matrix(directory / f"x_{k + 1}.csv", x)
    objective_at_truth = quasi_loglik(
        spec.family, problem.response, spec.effect_size * instance.truth.predictor
    )
    meta = {
        "kind": "simulation",
        "family": spec.family.kind,
        "dims": list(spec.dims),
        "feature_dims": [None if p is None else int(p) for p in spec.feature_dims],
        "identity_modes": [k for k, p in enumerate(spec.feature_dims) if p is None],
        "rank": list(spec.rank),
        "effect_size": spec.effect_size,
        "seed": spec.seed,
        "objective_at_truth": objective_at_truth,
    }
    write_meta(directory / "meta.json", meta)
    save_truth_bundle(
        directory / "truth",
        instance.truth,
        {
            "family": spec.family.kind,
            "effect_size": spec.effect_size,
            "objective_at_truth": objective_at_truth,
        },
    )


def load_simulation_problem(directory: str | Path) -> tuple[SupervisedProblem, dict]:
    """Reload the (response, features, family) triple written by
    :func:`save_simulation`."""
    directory = Path(directory)
    meta = read_meta(directory / "meta.json")
    if meta.get("kind") != "simulation":
        raise DataError(f"{directory}: not a simulation directory")
    family = family_from_name(meta["family"])
    y = read_tensor(directory / "y.tns")
    features: list[Optional[np.ndarray]] = []
    for k in range(y.ndim):
        path = directory / f"x_{k + 1}.csv"
        features.append(read_matrix(path) if path.exists() else None)
    return SupervisedProblem(y, features, family), meta
