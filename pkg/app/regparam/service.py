"""
Ridge regularization parameter selection.

Both selectors work on the SVD of A, computed once per instance: with
beta = U^T b the ridge residual is

    ||A x_RR(lam) - b||^2 = sum_i (lam^2 / (s_i^2 + lam^2))^2 beta_i^2 + ||b - U beta||^2

and the trace of the influence operator is sum_i s_i^2 / (s_i^2 + lam^2).
"""
import logging
import math
from typing import Optional

import numpy as np
from scipy import optimize

from app.core.config import settings
from app.core.exceptions import BracketExhaustedError, InfeasibleTargetError, InputError
from app.problems.models import ProblemInstance
from app.regparam.distributions import chi2_cdf, chi2_quantile
from app.regparam.models import GcvSelection, MdpTarget

logger = logging.getLogger(__name__)

__all__ = [
    "chi2_cdf",
    "chi2_quantile",
    "ridge_residual",
    "gcv_trace",
    "gcv_value",
    "select_lambda_mdp",
    "select_lambda_gcv",
]


def _spectral_parts(p: ProblemInstance) -> tuple[np.ndarray, np.ndarray, float]:
    decomposition = p.svd
    beta = decomposition.U.T @ p.b
    perp = p.b - decomposition.U @ beta
    return decomposition.singular_values, beta, float(perp @ perp)


def ridge_residual(p: ProblemInstance, lam: float) -> float:
    """Squared residual of the ridge solution at lam."""
    s, beta, perp_sq = _spectral_parts(p)
    lam_sq = float(lam) ** 2
    if lam_sq == 0.0:
        return perp_sq
    filt = lam_sq / (s ** 2 + lam_sq)
    return float(np.sum((filt * beta) ** 2) + perp_sq)


def gcv_trace(p: ProblemInstance, lam: float) -> float:
    """trace(I - H_lam) with H_lam = A (A^T A + lam^2 I)^-1 A^T."""
    s = p.svd.singular_values
    return float(p.m - np.sum(s ** 2 / (s ** 2 + float(lam) ** 2)))


def gcv_value(p: ProblemInstance, lam: float) -> float:
    """GCV(lam) = m ||(I - H_lam) b||^2 / trace(I - H_lam)^2."""
    return p.m * ridge_residual(p, lam) / gcv_trace(p, lam) ** 2


def select_lambda_mdp(
    p: ProblemInstance,
    target: MdpTarget,
    rel_tol: Optional[float] = None,
    max_bisections: Optional[int] = None,
    lam_cap: Optional[float] = None
) -> float:
    """
    Morozov's discrepancy principle: solve ||A x_RR(lam) - b||^2 = rho.

    The upper bracket doubles from 1 until the residual exceeds rho, then
    bisection on [lo, hi] runs until the equation holds to rel_tol * rho.

    Raises:
        InfeasibleTargetError: If rho is below the least-squares residual
        BracketExhaustedError: If no lambda up to lam_cap reaches rho
    """
    rel_tol = settings.MDP_REL_TOL if rel_tol is None else rel_tol
    max_bisections = settings.MDP_MAX_BISECTIONS if max_bisections is None else max_bisections
    lam_cap = settings.MDP_LAMBDA_CAP if lam_cap is None else lam_cap

    p.require_full_rank()
    rho = target.rho
    tol = rel_tol * rho

    floor = ridge_residual(p, 0.0)
    if abs(floor - rho) <= tol:
        return 0.0
    if rho < floor:
        raise InfeasibleTargetError(rho, floor)

    lo, hi = 0.0, 1.0
    res_hi = ridge_residual(p, hi)
    while res_hi < rho and abs(res_hi - rho) > tol:
        lo, hi = hi, 2.0 * hi
        if hi > lam_cap:
            raise BracketExhaustedError(rho, lam_cap)
        res_hi = ridge_residual(p, hi)
    if abs(res_hi - rho) <= tol:
        return hi

    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        res_mid = ridge_residual(p, mid)
        if abs(res_mid - rho) <= tol:
            return mid
        if res_mid < rho:
            lo = mid
        else:
            hi = mid

    logger.warning(f"MDP bisection reached {max_bisections} iterations; returning the bracket midpoint")
    return 0.5 * (lo + hi)


def select_lambda_gcv(
    p: ProblemInstance,
    lam_min: Optional[float] = None,
    lam_max: Optional[float] = None,
    grid_points: Optional[int] = None
) -> GcvSelection:
    """
    Minimize GCV over a log-spaced grid, then refine by golden-section search.

    The refinement works in log10(lam) on the bracket formed by the best
    grid point and its neighbours. A minimum at either end of the grid is
    returned as is with ``at_boundary`` set.
    """
    lam_min = settings.GCV_LAMBDA_MIN if lam_min is None else lam_min
    lam_max = settings.GCV_LAMBDA_MAX if lam_max is None else lam_max
    grid_points = settings.GCV_GRID_POINTS if grid_points is None else grid_points
    if not 0 < lam_min < lam_max or grid_points < 3:
        raise InputError(f"invalid GCV range [{lam_min}, {lam_max}] with {grid_points} points")

    log_grid = np.linspace(math.log10(lam_min), math.log10(lam_max), grid_points)
    values = np.array([gcv_value(p, 10.0 ** t) for t in log_grid])
    k = int(np.argmin(values))

    if k in (0, grid_points - 1):
        logger.warning(f"GCV minimum at the search boundary lambda={10.0 ** log_grid[k]:.3g}")
        return GcvSelection(lam=10.0 ** log_grid[k], value=float(values[k]), at_boundary=True)

    try:
        refined = optimize.minimize_scalar(
            lambda t: gcv_value(p, 10.0 ** t),
            bracket=(log_grid[k - 1], log_grid[k], log_grid[k + 1]),
            method="golden",
            tol=1e-10
        )
    except ValueError as e:
        # flat neighbourhood, the grid point is as good as it gets
        logger.debug(f"GCV refinement skipped: {e}")
        return GcvSelection(lam=10.0 ** log_grid[k], value=float(values[k]), at_boundary=False)

    if refined.fun > values[k] or not log_grid[k - 1] <= refined.x <= log_grid[k + 1]:
        return GcvSelection(lam=10.0 ** log_grid[k], value=float(values[k]), at_boundary=False)
    return GcvSelection(lam=10.0 ** float(refined.x), value=float(refined.fun), at_boundary=False)
