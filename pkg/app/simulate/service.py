"""
Synthetic instance generators.

All randomness comes from numpy's PCG64 bit generator passed in
explicitly; ``trial_rng`` derives an independent stream per trial from
(base_seed, trial_index) so results do not depend on execution order.
"""
import logging

import numpy as np

from app.core.exceptions import DegenerateSignalError, InputError, ShapeMismatchError
from app.core.linalg import as_matrix, as_vector, svd
from app.problems.models import QuantizationSpec
from app.simulate.models import Cauchy, Observation, SolutionDistribution, Spike, TrialData

logger = logging.getLogger(__name__)


def make_rng(seed: int) -> np.random.Generator:
    """Generator backed by PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def trial_rng(base_seed: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one trial, keyed by (base_seed, trial_index)."""
    if base_seed < 0 or trial_index < 0:
        raise InputError(f"seeds must be non-negative, got base_seed={base_seed}, trial_index={trial_index}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([base_seed, trial_index])))


def make_conditioned_matrix(m: int, n: int, cond: float, rng: np.random.Generator) -> np.ndarray:
    """
    Standard normal m x n matrix with its singular values replaced by
    ``n`` values decaying linearly from 1 to 1/cond.

    Raises:
        InputError: If m <= n, n < 2 or cond < 1
    """
    if not m > n >= 2:
        raise InputError(f"need m > n >= 2, got m={m}, n={n}")
    if cond < 1:
        raise InputError(f"condition number must be at least 1, got {cond}")
    decomposition = svd(rng.standard_normal((m, n)))
    s = np.linspace(1.0, 1.0 / cond, n)
    return (decomposition.U * s) @ decomposition.V.T


def draw_solution(dist: SolutionDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw a true solution vector.

    Cauchy components use the inverse CDF median + scale * tan(pi (u - 1/2)).
    A spike has its first component +/-magnitude with a fair-coin sign.
    """
    if isinstance(dist, Cauchy):
        u = rng.random(n)
        return dist.median + dist.scale * np.tan(np.pi * (u - 0.5))
    if isinstance(dist, Spike):
        if n < 2:
            raise InputError(f"a spike solution needs n >= 2, got {n}")
        sign = 1.0 if rng.random() < 0.5 else -1.0
        rest = rng.normal(0.0, dist.n_rest_std, n - 1)
        return np.concatenate([[sign * dist.magnitude], rest])
    raise TypeError(f"unsupported distribution: {type(dist).__name__}")


def make_observation(A_bar: object, x_bar: object, snr: float, rng: np.random.Generator) -> Observation:
    """
    b = A_bar x_bar + eta with eta ~ N(0, ||b_bar||^2 / (m snr) I).

    Raises:
        ShapeMismatchError: If x_bar does not match A_bar
        DegenerateSignalError: If A_bar x_bar is zero
    """
    A_bar = as_matrix(A_bar, "A_bar")
    x_bar = as_vector(x_bar, "x_bar")
    if x_bar.shape[0] != A_bar.shape[1]:
        raise ShapeMismatchError("x_bar", (A_bar.shape[1],), x_bar.shape)
    if snr <= 0:
        raise InputError(f"SNR must be positive, got {snr}")

    m = A_bar.shape[0]
    b_bar = A_bar @ x_bar
    energy = float(b_bar @ b_bar)
    if energy == 0.0:
        raise DegenerateSignalError()
    noise_var = energy / (m * snr)
    b = b_bar + rng.normal(0.0, np.sqrt(noise_var), m)
    return Observation(b_bar=b_bar, b=b, noise_var=noise_var)


def quantize(A_bar: object, spec: QuantizationSpec) -> np.ndarray:
    """
    Round every entry to the nearest multiple of 10^-digit, ties away from zero.

    The result differs from A_bar by at most spec.delta per entry.
    """
    A_bar = as_matrix(A_bar, "A_bar")
    scale = 10.0 ** spec.round_digit
    return np.sign(A_bar) * np.floor(np.abs(A_bar) * scale + 0.5) / scale


def draw_trial_data(
    m: int,
    n: int,
    cond: float,
    snr: float,
    dist: SolutionDistribution,
    rng: np.random.Generator
) -> TrialData:
    """
    Draw A_bar, x_bar, the noise and a random start, always in that order.

    The start vector is drawn even when the caller starts from zero so the
    stream consumed by a trial does not depend on that choice.
    """
    A_bar = make_conditioned_matrix(m, n, cond, rng)
    x_bar = draw_solution(dist, n, rng)
    observation = make_observation(A_bar, x_bar, snr, rng)
    x0 = rng.standard_normal(n)
    logger.debug(f"Drew trial data: ||x_bar||={np.linalg.norm(x_bar):.6g}, noise_var={observation.noise_var:.6g}")
    return TrialData(A_bar=A_bar, x_bar=x_bar, observation=observation, x0=x0)
