"""Monte-Carlo experiment runner, aggregation and error densities."""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from scipy import stats

from app.core.config import settings
from app.core.exceptions import DegenerateSampleError, InputError, NumericalError
from app.core.linalg import as_vector
from app.estimators.models import EstimatorResult
from app.estimators.service import solve_ols, solve_ro, solve_rr, solve_rro, solve_tls
from app.experiments.models import (
    DensityCurve,
    ExperimentConfig,
    ExperimentMethod,
    ExperimentResult,
    KdeCurve,
    MethodOutcome,
    SummaryRow,
    TrialRecord,
)
from app.problems.models import FixedPoint, ProblemInstance, QuantizationSpec
from app.problems.service import delta_from_round_digit
from app.regparam.models import MdpTarget
from app.regparam.service import select_lambda_gcv, select_lambda_mdp
from app.simulate.models import TrialData
from app.simulate.service import draw_trial_data, quantize, trial_rng

logger = logging.getLogger(__name__)

# KDE grid extends this many bandwidths past the sample range
KDE_PADDING = 4.0


class ExperimentRunner:
    """
    Runs trials of one experiment configuration.

    Each trial's data comes from ``trial_rng(base_seed, trial_index)``, so a
    trial can be run alone, in any order, or on any worker and produces the
    same record. All rounding digits of a trial quantize the same A_bar.
    """

    def __init__(self, cfg: ExperimentConfig) -> None:
        """
        Initialize the runner.

        Args:
            cfg: Validated experiment configuration
        """
        self._cfg = cfg
        self._dist = cfg.dist

    @property
    def config(self) -> ExperimentConfig:
        return self._cfg

    def trial_data(self, trial_index: int) -> TrialData:
        """Draw the unquantized data of one trial."""
        cfg = self._cfg
        rng = trial_rng(cfg.base_seed, trial_index)
        return draw_trial_data(cfg.m, cfg.n, cfg.cond, cfg.snr, self._dist, rng)

    def run_trial(self, trial_index: int, round_digit: int) -> TrialRecord:
        """Run every configured method on one trial at one rounding digit."""
        return self._run_digit(self.trial_data(trial_index), trial_index, round_digit)

    def run_trial_digits(self, trial_index: int) -> List[TrialRecord]:
        """Run one trial at every configured digit, drawing its data once."""
        data = self.trial_data(trial_index)
        return [self._run_digit(data, trial_index, digit) for digit in self._cfg.round_digits]

    def _run_digit(self, data: TrialData, trial_index: int, round_digit: int) -> TrialRecord:
        spec = QuantizationSpec(round_digit=round_digit)
        p = ProblemInstance(A=quantize(data.A_bar, spec), b=data.observation.b)
        u = delta_from_round_digit(spec)
        lambdas: Dict[str, float] = {}

        outcomes: Dict[ExperimentMethod, MethodOutcome] = {}
        for method in self._cfg.methods:
            try:
                result = self._solve(method, p, u, data, lambdas)
            except NumericalError as e:
                logger.warning(
                    f"Trial {trial_index}, digit {round_digit}: {method.value} failed "
                    f"({type(e).__name__}: {e})"
                )
                outcomes[method] = MethodOutcome(failure=type(e).__name__)
                continue
            outcomes[method] = self._outcome(result, data.x_bar)

        logger.debug(f"Finished trial {trial_index} at digit {round_digit}")
        return TrialRecord(trial_index=trial_index, round_digit=round_digit, outcomes=outcomes)

    def _lambda(self, rule: str, p: ProblemInstance, data: TrialData, cache: Dict[str, float]) -> float:
        # RR and RRO on the same trial share the selected lambda
        if rule not in cache:
            if rule == "gcv":
                cache[rule] = select_lambda_gcv(p).lam
            else:
                target = MdpTarget.from_noise(
                    data.observation.noise_var,
                    p.m,
                    quantile=self._cfg.quantile,
                    rule=self._cfg.mdp_rule
                )
                cache[rule] = select_lambda_mdp(p, target)
        return cache[rule]

    def _solve(
        self,
        method: ExperimentMethod,
        p: ProblemInstance,
        u: FixedPoint,
        data: TrialData,
        lambdas: Dict[str, float]
    ) -> EstimatorResult:
        x0 = data.x0 if self._cfg.init == "random" else None
        if method is ExperimentMethod.OLS:
            return solve_ols(p)
        if method is ExperimentMethod.TLS:
            return solve_tls(p)
        if method is ExperimentMethod.RO:
            return solve_ro(p, u, x0=x0)
        lam = self._lambda(method.selection, p, data, lambdas)
        if method in (ExperimentMethod.RR_GCV, ExperimentMethod.RR_MDP):
            return solve_rr(p, lam)
        return solve_rro(p, u, lam, x0=x0)

    def _outcome(self, result: EstimatorResult, x_bar: np.ndarray) -> MethodOutcome:
        errors = np.asarray(result.x_hat) - x_bar
        relative = float(np.linalg.norm(errors) / np.linalg.norm(x_bar))
        if self._cfg.distribution == "spike":
            errors = errors.copy()
            errors[0] *= 1.0 if x_bar[0] >= 0 else -1.0
        return MethodOutcome(
            relative_error=relative,
            component_errors=errors,
            lam=result.lam,
            objective_value=result.objective_value,
            iterations=result.iterations
        )


def run_trial(cfg: ExperimentConfig, trial_index: int, round_digit: int) -> TrialRecord:
    """Run one (trial, digit) pair of ``cfg``."""
    return ExperimentRunner(cfg).run_trial(trial_index, round_digit)


def summarize(records: List[TrialRecord], cfg: ExperimentConfig) -> List[SummaryRow]:
    """
    Mean relative error, standard error of the mean and failure count per
    (digit, method), in config order. Failed trials are excluded from the
    mean and SEM but counted in ``failures``.
    """
    rows = [
        {
            "round_digit": record.round_digit,
            "method": method.value,
            "relative_error": np.nan if outcome.relative_error is None else outcome.relative_error,
            "failed": not outcome.ok,
        }
        for record in records
        for method, outcome in record.outcomes.items()
    ]
    frame = pd.DataFrame(rows, columns=["round_digit", "method", "relative_error", "failed"])
    grouped = frame.groupby(["round_digit", "method"], sort=False)["relative_error"]
    table = pd.DataFrame({
        "mean_rel_error": grouped.mean(),
        "sem": grouped.sem(ddof=1),
        "failures": frame.groupby(["round_digit", "method"], sort=False)["failed"].sum(),
        "trials": grouped.size(),
    })

    summary: List[SummaryRow] = []
    for digit in cfg.round_digits:
        for method in cfg.methods:
            if (digit, method.value) not in table.index:
                continue
            entry = table.loc[(digit, method.value)]
            summary.append(SummaryRow(
                round_digit=digit,
                method=method,
                mean_rel_error=float(entry["mean_rel_error"]),
                sem=float(entry["sem"]),
                failures=int(entry["failures"]),
                trials=int(entry["trials"])
            ))
    return summary


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> ExperimentResult:
    """
    Run every trial at every digit and aggregate.

    Args:
        cfg: Experiment configuration
        threads: Worker threads, default settings.DEFAULT_THREADS; the
            result does not depend on this value

    Returns:
        ExperimentResult with records sorted by (digit position, trial index)
    """
    threads = settings.DEFAULT_THREADS if threads is None else threads
    if threads < 1:
        raise InputError(f"threads must be at least 1, got {threads}")

    runner = ExperimentRunner(cfg)
    logger.info(
        f"Starting experiment: {cfg.distribution}, {cfg.m}x{cfg.n}, {cfg.trials} trials, "
        f"digits {cfg.round_digits}, methods {[m.value for m in cfg.methods]}, {threads} thread(s)"
    )
    started = time.perf_counter()

    indices = range(cfg.trials)
    if threads == 1:
        batches = [runner.run_trial_digits(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(runner.run_trial_digits, indices))

    position = {digit: k for k, digit in enumerate(cfg.round_digits)}
    records = sorted(
        (record for batch in batches for record in batch),
        key=lambda r: (position[r.round_digit], r.trial_index)
    )
    summary = summarize(records, cfg)
    logger.info(f"Experiment finished in {time.perf_counter() - started:.1f}s")
    return ExperimentResult(records=records, summary=summary)


def kde(
    samples: object,
    grid_points: Optional[int] = None,
    bandwidth: Optional[float] = None,
    padding: float = KDE_PADDING
) -> KdeCurve:
    """
    Gaussian kernel density estimate.

    The default bandwidth is the normal-reference rule 1.06 * sigma * N^(-1/5)
    with the sample standard deviation (ddof=1). The grid spans the sample
    range padded by ``padding`` bandwidths on each side.

    Raises:
        DegenerateSampleError: Fewer than two samples or zero spread
        InputError: Non-positive bandwidth or padding, or fewer than two grid points
    """
    grid_points = settings.KDE_GRID_POINTS if grid_points is None else grid_points
    if grid_points < 2:
        raise InputError(f"a density curve needs at least 2 grid points, got {grid_points}")
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSampleError(x.size)
    x = as_vector(x, "samples")
    sigma = float(np.std(x, ddof=1))
    if not sigma > 0:
        raise DegenerateSampleError(x.size)

    if bandwidth is None:
        bandwidth = 1.06 * sigma * x.size ** (-0.2)
    elif bandwidth <= 0:
        raise InputError(f"bandwidth must be positive, got {bandwidth}")
    if padding <= 0:
        raise InputError(f"grid padding must be positive, got {padding}")

    grid = np.linspace(x.min() - padding * bandwidth, x.max() + padding * bandwidth, grid_points)
    # gaussian_kde scales its factor by the sample standard deviation
    estimator = stats.gaussian_kde(x, bw_method=bandwidth / sigma)
    return KdeCurve(grid=grid, density=estimator(grid), bandwidth=bandwidth)


def density_curves(result: ExperimentResult, cfg: ExperimentConfig) -> List[DensityCurve]:
    """
    Component-error densities at ``cfg.density_digit``.

    Spike experiments split the sign-adjusted first component (``large``)
    from the others (``rest``); Cauchy experiments pool every component
    (``all``). Methods without enough successful trials are skipped.
    """
    digit = cfg.density_digit
    records = [r for r in result.records if r.round_digit == digit]
    curves: List[DensityCurve] = []

    for method in cfg.methods:
        errors = [
            np.asarray(r.outcomes[method].component_errors)
            for r in records
            if method in r.outcomes and r.outcomes[method].ok
        ]
        if not errors:
            logger.warning(f"No successful {method.value} trials at digit {digit}; density skipped")
            continue
        stacked = np.vstack(errors)
        if cfg.distribution == "spike":
            classes = {"large": stacked[:, 0], "rest": stacked[:, 1:].ravel()}
        else:
            classes = {"all": stacked.ravel()}

        for component_class, samples in classes.items():
            try:
                curve = kde(samples, cfg.kde_grid_points)
            except DegenerateSampleError as e:
                logger.warning(f"Density for {method.value}/{component_class} skipped: {e}")
                continue
            curves.append(DensityCurve(method=method, component_class=component_class, curve=curve))
    return curves
