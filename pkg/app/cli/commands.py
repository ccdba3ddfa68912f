"""Subcommand handlers. Each takes parsed arguments and returns an exit code."""
import argparse
import json
import logging
from typing import Any, Dict, List, Optional

import numpy as np

from app.core.config import settings
from app.core.exceptions import UsageError
from app.estimators.models import EstimatorResult
from app.estimators.service import solve_ols, solve_ro, solve_rr, solve_rro, solve_tls
from app.experiments.repository import ExperimentRepository, load_experiment_config
from app.experiments.service import density_curves, run_experiment
from app.problems.models import Box, FixedPoint, ProblemInstance, Proportional, QuantizationSpec, UncertaintySet
from app.problems.repository import read_matrix, read_vector
from app.problems.service import delta_from_round_digit
from app.regparam.models import MdpTarget
from app.regparam.service import select_lambda_gcv, select_lambda_mdp
from app.robust.service import corner_maximum, eval_f
from app.simulate.service import make_rng

logger = logging.getLogger(__name__)

# brute-force and closed form must agree to this relative gap
ORACLE_TOL = 1e-8


def _fmt(value: Optional[float]) -> str:
    """Shortest repr that round-trips the double exactly."""
    return "-" if value is None else repr(float(value))


def _uncertainty(args: argparse.Namespace, p: ProblemInstance) -> UncertaintySet:
    if args.delta is not None:
        return FixedPoint(delta=args.delta)
    if args.digit is not None:
        return delta_from_round_digit(QuantizationSpec(round_digit=args.digit))
    if args.box is not None:
        return Box(D=read_matrix(args.box))
    if args.proportional is not None:
        return Proportional(p=args.proportional)
    raise UsageError(f"--method {args.method} needs one of --delta, --digit, --box or --proportional")


def _lambda(args: argparse.Namespace, p: ProblemInstance) -> float:
    if args.lam is not None:
        if args.lam < 0:
            raise UsageError(f"--lambda must be non-negative, got {args.lam}")
        return args.lam
    if args.select == "gcv":
        selection = select_lambda_gcv(p)
        logger.info(f"GCV selected lambda={selection.lam!r} (boundary: {selection.at_boundary})")
        return selection.lam
    if args.select == "mdp":
        if args.noise_var is None:
            raise UsageError("--select mdp needs --noise-var")
        quantile = settings.MDP_QUANTILE if args.quantile is None else args.quantile
        target = MdpTarget.from_noise(args.noise_var, p.m, quantile=quantile)
        lam = select_lambda_mdp(p, target)
        logger.info(f"MDP selected lambda={lam!r} for rho={target.rho!r}")
        return lam
    raise UsageError(f"--method {args.method} needs --lambda or --select")


def _start(args: argparse.Namespace, p: ProblemInstance) -> Optional[np.ndarray]:
    if args.init == "random":
        return make_rng(args.seed).standard_normal(p.n)
    return None


def _print_result(result: EstimatorResult, as_json: bool) -> None:
    if as_json:
        print(json.dumps(result.to_json_dict()))
        return
    for value in np.asarray(result.x_hat):
        print(_fmt(value))
    print()
    print(f"method: {result.method.value}")
    print(f"objective: {_fmt(result.objective_value)}")
    print(f"lambda: {_fmt(result.lam)}")
    print(f"sigma_np1: {_fmt(result.sigma_np1)}")
    print(f"iterations: {'-' if result.iterations is None else result.iterations}")
    print(f"delta: {_fmt(result.delta)}")
    print(f"converged: {'-' if result.converged is None else result.converged}")


def cmd_solve(args: argparse.Namespace) -> int:
    """Solve one problem read from CSV files and print x_hat with diagnostics."""
    p = ProblemInstance(A=read_matrix(args.matrix), b=read_vector(args.rhs))
    options: Dict[str, Any] = {}
    if args.max_iters is not None:
        options["max_iters"] = args.max_iters

    method = args.method
    if method == "ols":
        result = solve_ols(p)
    elif method == "tls":
        result = solve_tls(p)
    elif method == "rr":
        result = solve_rr(p, _lambda(args, p))
    elif method == "ro":
        u = _uncertainty(args, p)
        result = solve_ro(p, u, x0=_start(args, p), solver=args.solver, **options)
    else:
        u = _uncertainty(args, p)
        result = solve_rro(p, u, _lambda(args, p), x0=_start(args, p), solver=args.solver, **options)

    logger.info(f"Solved {p.m}x{p.n} problem with {result.method.value}")
    _print_result(result, args.json)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    """Run a configured Monte-Carlo study and write its CSV outputs."""
    overrides: Dict[str, Any] = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    cfg = load_experiment_config(args.config, overrides)

    result = run_experiment(cfg, threads=args.threads)
    repository = ExperimentRepository(args.out_dir)
    repository.save_summary(result.summary)
    repository.save_densities(density_curves(result, cfg))
    if args.dump_trials:
        repository.save_trials(result.records)

    header = f"{'digit':>5}  {'method':<8}  {'mean_rel_error':>22}  {'sem':>22}  {'failures':>8}  {'trials':>6}"
    print(header)
    for row in result.summary:
        print(
            f"{row.round_digit:>5}  {row.method.value:<8}  {_fmt(row.mean_rel_error):>22}  "
            f"{_fmt(row.sem):>22}  {row.failures:>8}  {row.trials:>6}"
        )
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    """
    Compare the closed-form robust objective with brute-force corner maximization.

    Returns 2 when the two disagree beyond ORACLE_TOL relative.
    """
    p = ProblemInstance(A=read_matrix(args.matrix), b=read_vector(args.rhs))
    D = read_matrix(args.box)
    x = read_vector(args.x)

    corner = corner_maximum(p, D, x)
    closed = eval_f(p, D, x)
    gap = corner.relative_gap(closed)

    if args.json:
        payload: Dict[str, Any] = {
            "brute_force": corner.value,
            "closed_form": closed,
            "difference": closed - corner.value,
            "relative_gap": gap,
            "corners": corner.corners,
            "delta": corner.delta_list,
        }
        print(json.dumps(payload))
    else:
        rows: List[str] = [",".join(_fmt(v) for v in row) for row in np.asarray(corner.delta)]
        print(f"brute_force: {_fmt(corner.value)}")
        print(f"closed_form: {_fmt(closed)}")
        print(f"difference: {_fmt(closed - corner.value)}")
        print(f"corners: {corner.corners}")
        print("maximizing_delta:")
        for row in rows:
            print(row)

    if gap > ORACLE_TOL:
        logger.error(f"Closed form and brute force disagree: relative gap {gap!r}")
        return 2
    return 0
