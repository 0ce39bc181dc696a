"""Command-line interface.

Subcommands: ``simulate`` (draw a dataset), ``fit`` (decompose a tensor
file), ``select-rank`` (BIC grid search), ``evaluate`` (score a fit
against simulation truth), ``experiment`` (canned replicate studies).

Exit codes: 0 success, 2 usage error, 3 data or domain error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .decompose import FitConfig, SupervisedProblem, fit
from .experiments import RUNNERS, write_rows
from .families import family_from_name
from .fileio import (
    Bundle,
    DataError,
    load_bundle,
    read_matrix,
    read_meta,
    read_tensor,
    save_fit_bundle,
    save_simulation,
    write_meta,
)
from .glm import GlmOptions
from .metrics import EvalReport, angle_errors, mse, response_error
from .rank_select import grid_search
from .simulate import SimSpec, generate
from .tensors import multilinear


class UsageError(Exception):
    pass


def _parse_int_list(text: str, flag: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}")
    if not values:
        raise UsageError(f"{flag} must not be empty")
    return values


def _parse_feature_dims(text: str) -> tuple[Optional[int], ...]:
    out: list[Optional[int]] = []
    for item in text.split(","):
        if item.strip().lower() == "identity":
            out.append(None)
        else:
            try:
                out.append(int(item))
            except ValueError:
                raise UsageError(
                    f"--feature-dims entries must be integers or 'identity', got {item!r}"
                )
    return tuple(out)


def _load_features(text: str, order: int) -> list[Optional[np.ndarray]]:
    items = text.split(",")
    if len(items) != order:
        raise UsageError(
            f"--features lists {len(items)} entries for an order-{order} tensor"
        )
    features: list[Optional[np.ndarray]] = []
    for item in items:
        if item.strip().lower() == "identity":
            features.append(None)
        else:
            features.append(read_matrix(item))
    return features


def _cmd_simulate(args) -> int:
    dims = _parse_int_list(args.dims, "--dims")
    feature_dims = _parse_feature_dims(args.feature_dims)
    rank = _parse_int_list(args.rank, "--rank")
    try:
        spec = SimSpec(
            dims=dims,
            feature_dims=feature_dims,
            rank=rank,
            family=family_from_name(args.model),
            effect_size=args.alpha,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    save_simulation(args.out, generate(spec))
    return 0


def _fit_config_from_args(args, rank) -> FitConfig:
    return FitConfig(
        rank=rank,
        init=args.init,
        max_outer_iters=args.max_iter,
        outer_tol=args.tol,
        glm=GlmOptions(predictor_bound=args.alpha),
        seed=args.seed,
    )


def _cmd_fit(args) -> int:
    rank = _parse_int_list(args.rank, "--rank")
    y = read_tensor(args.tensor)
    features = _load_features(args.features, y.ndim)
    problem = SupervisedProblem(y, features, family_from_name(args.model))
    config = _fit_config_from_args(args, rank)
    result = fit(problem, config)
    save_fit_bundle(
        args.out,
        result,
        {
            "family": args.model,
            "dims": list(problem.dims),
            "feature_dims": list(problem.feature_dims),
            "identity_modes": [k for k, x in enumerate(problem.features) if x is None],
            "config": {
                "rank": list(rank),
                "init": args.init,
                "max_outer_iters": args.max_iter,
                "outer_tol": args.tol,
                "predictor_bound": args.alpha,
                "seed": args.seed,
            },
        },
    )
    return 0


def _cmd_select_rank(args) -> int:
    center = _parse_int_list(args.grid_center, "--grid-center")
    y = read_tensor(args.tensor)
    features = _load_features(args.features, y.ndim)
    problem = SupervisedProblem(y, features, family_from_name(args.model))
    config = FitConfig(rank=tuple(min(c, p) for c, p in zip(center, problem.feature_dims)),
                       init="both", seed=args.seed)
    table = grid_search(problem, center, args.grid_radius, config, jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    order = problem.order
    header = [f"rank_{k + 1}" for k in range(order)] + ["loglik", "p_e", "bic", "converged"]
    lines = [",".join(header)]
    for e in table.entries:
        fields = [str(r) for r in e.rank]
        fields += [
            format(e.loglik, ".17g"),
            str(e.effective_params),
            format(e.bic, ".17g"),
            "true" if e.converged else "false",
        ]
        lines.append(",".join(fields))
    (out / "bic_table.csv").write_text("\n".join(lines) + "\n")
    write_meta(
        out / "meta.json",
        {
            "kind": "rank_selection",
            "selected": list(table.selected),
            "grid_center": list(center),
            "grid_radius": args.grid_radius,
            "seed": args.seed,
            "family": args.model,
        },
    )
    print(",".join(str(r) for r in table.selected))
    return 0


def _load_truth_side(truth_dir: Path) -> tuple[Bundle, dict, list[Optional[np.ndarray]]]:
    meta = read_meta(truth_dir / "meta.json")
    if meta.get("kind") != "simulation":
        raise DataError(f"{truth_dir}: expected a simulation directory (kind=simulation)")
    bundle = load_bundle(truth_dir / "truth")
    dims = meta["dims"]
    features: list[Optional[np.ndarray]] = []
    for k in range(len(dims)):
        path = truth_dir / f"x_{k + 1}.csv"
        features.append(read_matrix(path) if path.exists() else None)
    return bundle, meta, features


def _cmd_evaluate(args) -> int:
    fit_bundle = load_bundle(args.fit)
    truth_bundle, sim_meta, features = _load_truth_side(Path(args.truth))
    family = family_from_name(sim_meta["family"])
    alpha = float(sim_meta["effect_size"])

    if fit_bundle.kind == "truth":
        coefficient_hat = alpha * fit_bundle.coefficient
        predictor_hat = alpha * fit_bundle.predictor
        final_objective = float(fit_bundle.meta["objective_at_truth"])
    else:
        coefficient_hat = fit_bundle.coefficient
        predictor_hat = multilinear(
            coefficient_hat,
            [(x, k) for k, x in enumerate(features) if x is not None],
        )
        final_objective = float(fit_bundle.meta["final_objective"])

    target = alpha * truth_bundle.coefficient
    if coefficient_hat.shape != target.shape:
        raise DataError(
            f"coefficient shape {coefficient_hat.shape} does not match truth {target.shape}"
        )
    per_mode = angle_errors(fit_bundle.factors, truth_bundle.factors)
    report = EvalReport(
        mse_coefficient=mse(coefficient_hat, target),
        per_mode_sin_theta=tuple(per_mode),
        max_sin_theta=max(per_mode),
        response_error=response_error(family.mean(predictor_hat), truth_bundle.mean),
        final_objective=final_objective,
    )
    payload = {
        "mse_coefficient": report.mse_coefficient,
        "per_mode_sin_theta": list(report.per_mode_sin_theta),
        "max_sin_theta": report.max_sin_theta,
        "response_error": report.response_error,
        "final_objective": report.final_objective,
    }
    out = Path(args.out) if args.out else Path(args.fit) / "metrics.json"
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(json.dumps(payload, sort_keys=True))
    return 0


def _cmd_experiment(args) -> int:
    if args.name not in RUNNERS:
        raise UsageError(f"unknown experiment {args.name!r}; choose from {sorted(RUNNERS)}")
    rows = RUNNERS[args.name](reps=args.reps, seed=args.seed, jobs=args.jobs)
    write_rows(args.out, rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glmtucker",
        description="Supervised Tucker decomposition of exponential-family tensors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a synthetic dataset")
    p.add_argument("--model", required=True, choices=["gaussian", "bernoulli", "poisson"])
    p.add_argument("--dims", required=True, help="comma-separated tensor dims")
    p.add_argument("--feature-dims", required=True,
                   help="features per mode; use 'identity' for featureless modes")
    p.add_argument("--rank", required=True, help="comma-separated multilinear rank")
    p.add_argument("--alpha", type=float, required=True, help="effect size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit the decomposition to tensor files")
    p.add_argument("--tensor", required=True)
    p.add_argument("--features", required=True,
                   help="comma-separated feature CSV paths; 'identity' per featureless mode")
    p.add_argument("--model", required=True, choices=["gaussian", "bernoulli", "poisson"])
    p.add_argument("--rank", required=True)
    p.add_argument("--init", default="both", choices=["spectral", "random", "both"])
    p.add_argument("--alpha", type=float, default=1e4,
                   help="max-norm bound on the linear predictor")
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("select-rank", help="BIC grid search over ranks")
    p.add_argument("--tensor", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True, choices=["gaussian", "bernoulli", "poisson"])
    p.add_argument("--grid-center", required=True)
    p.add_argument("--grid-radius", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select_rank)

    p = sub.add_parser("evaluate", help="score a fit against simulation truth")
    p.add_argument("--fit", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("experiment", help="run a canned replicate study")
    p.add_argument("--name", required=True, choices=sorted(RUNNERS))
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
