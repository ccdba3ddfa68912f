"""Ordinary, total, ridge and robust least-squares estimators."""
import logging
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.exceptions import InputError, NonGenericTLSError, NotPositiveDefiniteError, RankDeficientError
from app.core.linalg import solve_spd, svd
from app.estimators.models import EstimatorResult, Method
from app.problems.models import FixedPoint, ProblemInstance, UncertaintySet
from app.robust.service import refine_on_face, regularized_oracle
from app.solvers.service import minimize

logger = logging.getLogger(__name__)

TLS_GAP_TOL = 1e-12


def _gram(A: np.ndarray, shift: float = 0.0) -> np.ndarray:
    G = A.T @ A
    G = 0.5 * (G + G.T)
    if shift:
        G[np.diag_indices_from(G)] += shift
    return G


def _objective(p: ProblemInstance, x: np.ndarray) -> float:
    c = p.A @ x - p.b
    return float(c @ c)


def solve_ols(p: ProblemInstance) -> EstimatorResult:
    """
    Ordinary least squares x = (A^T A)^-1 A^T b via a Cholesky solve.

    Raises:
        RankDeficientError: If A lacks full column rank
    """
    p.require_overdetermined()
    p.require_full_rank()
    try:
        x = solve_spd(_gram(p.A), p.A.T @ p.b)
    except NotPositiveDefiniteError as e:
        s = p.svd.singular_values
        raise RankDeficientError(float(s[-1]), float(s[0])) from e
    return EstimatorResult(x_hat=x, method=Method.OLS, objective_value=_objective(p, x))


def solve_tls(p: ProblemInstance) -> EstimatorResult:
    """
    Total least squares x = (A^T A - sigma_{n+1}^2 I)^-1 A^T b.

    sigma_{n+1} is the smallest singular value of the augmented matrix
    [A b]; the de-regularized system must stay positive definite.

    Raises:
        RankDeficientError: If A lacks full column rank
        NonGenericTLSError: If sigma_{n+1}([A b]) is not strictly below sigma_n(A)
    """
    p.require_overdetermined()
    p.require_full_rank()
    s_A = p.svd.singular_values
    sigma_n = float(s_A[-1])
    sigma_np1 = float(svd(np.column_stack([p.A, p.b])).singular_values[-1])

    if sigma_np1 >= sigma_n - TLS_GAP_TOL or sigma_n ** 2 - sigma_np1 ** 2 < TLS_GAP_TOL * s_A[0] ** 2:
        raise NonGenericTLSError(sigma_np1, sigma_n)
    try:
        x = solve_spd(_gram(p.A, -sigma_np1 ** 2), p.A.T @ p.b)
    except NotPositiveDefiniteError as e:
        raise NonGenericTLSError(sigma_np1, sigma_n) from e

    return EstimatorResult(
        x_hat=x,
        method=Method.TLS,
        sigma_np1=sigma_np1,
        objective_value=sigma_np1 ** 2
    )


def tls_via_svd(p: ProblemInstance) -> np.ndarray:
    """
    TLS by the eigenvector construction: x = -v[:n] / v[n] for the last
    right singular vector v of [A b].
    """
    v = svd(np.column_stack([p.A, p.b])).V[:, -1]
    if abs(v[-1]) <= TLS_GAP_TOL:
        raise NonGenericTLSError(float("nan"), float("nan"))
    return -v[:-1] / v[-1]


def solve_rr(p: ProblemInstance, lam: float) -> EstimatorResult:
    """
    Ridge regression x = (A^T A + lam^2 I)^-1 A^T b.

    Raises:
        InputError: If lam is negative
        RankDeficientError: If lam is zero and A lacks full column rank
    """
    if lam < 0:
        raise InputError(f"lambda must be non-negative, got {lam}")
    if lam == 0:
        p.require_full_rank()
    try:
        x = solve_spd(_gram(p.A, lam ** 2), p.A.T @ p.b)
    except NotPositiveDefiniteError as e:
        s = p.svd.singular_values
        raise RankDeficientError(float(s[-1]), float(s[0])) from e
    return EstimatorResult(
        x_hat=x,
        method=Method.RR,
        lam=float(lam),
        objective_value=_objective(p, x) + lam ** 2 * float(x @ x)
    )


def _robust(
    p: ProblemInstance,
    u: UncertaintySet,
    lam: Optional[float],
    x0: Optional[np.ndarray],
    solver: str,
    **options
) -> EstimatorResult:
    start = np.zeros(p.n) if x0 is None else p.check_x(x0)
    weight = 0.0 if lam is None else float(lam)
    oracle = regularized_oracle(p, u, weight)
    report = minimize(oracle, start, method=solver, **options)
    if not report.converged:
        logger.debug(f"Robust solve stopped without convergence: {report.message}")

    x_hat, value = report.x_best, report.f_best
    if solver == "quasi_newton" and settings.FACE_REFINEMENT:
        x_hat, value = refine_on_face(p, u, weight, x_hat)
    return EstimatorResult(
        x_hat=x_hat,
        method=Method.RO if lam is None else Method.RRO,
        lam=None if lam is None else float(lam),
        objective_value=value,
        iterations=report.iterations,
        delta=u.delta if isinstance(u, FixedPoint) else None,
        converged=report.converged
    )


def solve_ro(
    p: ProblemInstance,
    u: UncertaintySet,
    x0: Optional[np.ndarray] = None,
    solver: str = "quasi_newton",
    **options
) -> EstimatorResult:
    """
    Robust estimator: minimize the worst-case residual over the uncertainty set.

    Args:
        p: Problem instance
        u: Uncertainty set (fixed-point, box or proportional)
        x0: Starting point, zero vector by default
        solver: "quasi_newton" or "subgradient"
        **options: Forwarded to the solver
    """
    return _robust(p, u, None, x0, solver, **options)


def solve_rro(
    p: ProblemInstance,
    u: UncertaintySet,
    lam: float,
    x0: Optional[np.ndarray] = None,
    solver: str = "quasi_newton",
    **options
) -> EstimatorResult:
    """Regularized robust estimator: robust objective plus lam^2 ||x||^2."""
    if lam < 0:
        raise InputError(f"lambda must be non-negative, got {lam}")
    return _robust(p, u, lam, x0, solver, **options)
