"""Minimization of convex functions given a value/subgradient oracle."""
import logging
from collections import deque
from typing import Deque, List, Optional, Tuple

import numpy as np
from scipy import optimize

from app.core.config import settings
from app.core.exceptions import InputError
from app.core.linalg import as_vector
from app.solvers.models import OracleFn, SolveReport

logger = logging.getLogger(__name__)

ARMIJO_C1 = 1e-4
CURVATURE_TOL = 1e-10
HULL_WEIGHT = 1e3
BUNDLE_SIZE = 8

METHODS = ("quasi_newton", "subgradient")


def subgradient_descent(
    oracle: OracleFn,
    x0: object,
    max_iters: Optional[int] = None,
    record_history: bool = False
) -> SolveReport:
    """
    Subgradient descent with the step t_k = 1 / (sqrt(k+1) ||g_k||).

    The method is not a descent method, so it runs a fixed number of
    iterations and returns the best iterate seen. A zero subgradient is
    exact stationarity and ends the run immediately.

    Args:
        oracle: Returns (value, subgradient) at a point
        x0: Starting point
        max_iters: Iterations to run, defaults to settings.SGD_MAX_ITERS
        record_history: Keep (iteration, value) pairs in the report

    Returns:
        SolveReport with the best iterate
    """
    max_iters = settings.SGD_MAX_ITERS if max_iters is None else max_iters
    if max_iters < 1:
        raise InputError(f"max_iters must be at least 1, got {max_iters}")

    x = np.array(as_vector(x0, "x0"))
    f, g = oracle(x)
    evaluations = 1
    best_x, best_f = x.copy(), f
    history: Optional[List[Tuple[int, float]]] = [(0, f)] if record_history else None

    converged = False
    message = f"completed {max_iters} iterations"
    iterations = 0
    for k in range(max_iters):
        g_norm = float(np.linalg.norm(g))
        if g_norm == 0.0:
            converged = True
            message = "zero subgradient"
            break
        x = x - g / (np.sqrt(k + 1.0) * g_norm)
        f, g = oracle(x)
        evaluations += 1
        iterations = k + 1
        if f < best_f:
            best_x, best_f = x.copy(), f
        if history is not None:
            history.append((iterations, f))

    logger.debug(f"Subgradient descent: {message}, f_best={best_f!r} after {iterations} iterations")
    return SolveReport(
        x_best=best_x,
        f_best=best_f,
        iterations=iterations,
        evaluations=evaluations,
        converged=converged,
        message=message,
        history=history
    )


def _two_loop(g: np.ndarray, S: Deque[np.ndarray], Y: Deque[np.ndarray]) -> np.ndarray:
    """Apply the limited-memory inverse Hessian approximation to g."""
    q = g.copy()
    coefficients = []
    for s, y in zip(reversed(S), reversed(Y)):
        rho = 1.0 / (y @ s)
        alpha = rho * (s @ q)
        q -= alpha * y
        coefficients.append((rho, alpha))

    gamma = (S[-1] @ Y[-1]) / (Y[-1] @ Y[-1]) if S else 1.0
    r = gamma * q
    for (s, y), (rho, alpha) in zip(zip(S, Y), reversed(coefficients)):
        beta = rho * (y @ r)
        r += s * (alpha - beta)
    return r


def _backtrack(
    oracle: OracleFn,
    x: np.ndarray,
    f: float,
    d: np.ndarray,
    gtd: float,
    t: float,
    min_step: float
) -> Tuple[Optional[Tuple[np.ndarray, float, np.ndarray]], int, List[np.ndarray]]:
    """
    Halve t until the Armijo sufficient decrease condition holds.

    Returns:
        ((x_new, f_new, g_new) or None when t fell below min_step, evaluations,
        subgradients at the rejected trial points)
    """
    evaluations = 0
    rejected: List[np.ndarray] = []
    while t >= min_step:
        x_new = x + t * d
        f_new, g_new = oracle(x_new)
        evaluations += 1
        if np.isfinite(f_new) and f_new <= f + ARMIJO_C1 * t * gtd:
            return (x_new, f_new, g_new), evaluations, rejected
        if np.all(np.isfinite(g_new)):
            rejected.append(g_new)
        t *= 0.5
    return None, evaluations, rejected


def _min_norm_element(G: np.ndarray) -> np.ndarray:
    """
    Shortest vector in the convex hull of the rows of G.

    The simplex constraint is imposed as a heavily weighted extra row of a
    non-negative least-squares problem, and the weights are renormalized.
    """
    norms = np.linalg.norm(G, axis=1)
    shortest = G[int(np.argmin(norms))]
    if G.shape[0] == 1:
        return shortest.copy()
    weight = HULL_WEIGHT * max(1.0, float(np.max(norms)))
    E = np.vstack([G.T, np.full((1, G.shape[0]), weight)])
    target = np.zeros(E.shape[0])
    target[-1] = weight
    coef, _ = optimize.nnls(E, target)
    total = float(np.sum(coef))
    if total <= 0:
        return shortest.copy()
    z = (coef / total) @ G
    return z if np.linalg.norm(z) < norms.min() else shortest.copy()


def quasi_newton(
    oracle: OracleFn,
    x0: object,
    tol: Optional[float] = None,
    max_iters: Optional[int] = None,
    memory: Optional[int] = None,
    min_step: Optional[float] = None,
    record_history: bool = False
) -> SolveReport:
    """
    Limited-memory BFGS with a backtracking Armijo line search.

    Curvature pairs failing y^T s > 0 (common at kinks) are skipped. When
    the line search stalls the memory is dropped and a steepest descent
    step is tried. If that stalls as well, the subgradients seen at the
    rejected trial points are bundled with the current one and the
    shortest element of their convex hull is computed. A short element
    means x is nonsmooth stationary, reported as converged with
    ``stalled=True``; otherwise its negative is tried as a descent
    direction, and only when that fails too does the run stop unconverged.

    Args:
        oracle: Returns (value, subgradient) at a point
        x0: Starting point
        tol: Stop when ||g|| <= tol * max(1, ||g_0||), default settings.QN_TOL
        max_iters: Iteration budget, default settings.QN_MAX_ITERS
        memory: Stored curvature pairs, default settings.QN_MEMORY
        min_step: Smallest line search step, default settings.LINE_SEARCH_MIN_STEP
        record_history: Keep (iteration, value) pairs in the report

    Returns:
        SolveReport; ``converged`` is False when the budget ran out or the
        line search stalled away from a stationary point
    """
    tol = settings.QN_TOL if tol is None else tol
    max_iters = settings.QN_MAX_ITERS if max_iters is None else max_iters
    memory = settings.QN_MEMORY if memory is None else memory
    min_step = settings.LINE_SEARCH_MIN_STEP if min_step is None else min_step
    if tol <= 0 or max_iters < 1 or memory < 1:
        raise InputError(f"invalid quasi-Newton options: tol={tol}, max_iters={max_iters}, memory={memory}")

    x = np.array(as_vector(x0, "x0"))
    f, g = oracle(x)
    evaluations = 1
    history: Optional[List[Tuple[int, float]]] = [(0, f)] if record_history else None
    scale = max(1.0, float(np.linalg.norm(g)))
    threshold = tol * scale
    # bar for the shortest bundle element
    stationarity = np.sqrt(tol) * scale

    S: Deque[np.ndarray] = deque(maxlen=memory)
    Y: Deque[np.ndarray] = deque(maxlen=memory)
    converged = float(np.linalg.norm(g)) <= threshold
    stalled = False
    message = "subgradient norm below tolerance" if converged else "iteration budget exhausted"
    iterations = 0

    while not converged and iterations < max_iters:
        iterations += 1
        d = -_two_loop(g, S, Y)
        gtd = float(g @ d)
        if not np.isfinite(gtd) or gtd >= 0:
            S.clear()
            Y.clear()
            d = -g
            gtd = float(g @ d)
        t = 1.0 if S else min(1.0, 1.0 / float(np.sum(np.abs(g))))

        step, used, rejected = _backtrack(oracle, x, f, d, gtd, t, min_step)
        evaluations += used
        if step is None:
            if S:
                # retry from steepest descent before giving up
                S.clear()
                Y.clear()
                continue
            z = _min_norm_element(np.array([g] + rejected[-BUNDLE_SIZE:]))
            z_sq = float(z @ z)
            if np.sqrt(z_sq) <= stationarity:
                converged = stalled = True
                message = "line search stalled at a nonsmooth stationary point"
                break
            t = min(1.0, 1.0 / float(np.sum(np.abs(z))))
            step, used, _ = _backtrack(oracle, x, f, -z, -z_sq, t, min_step)
            evaluations += used
            if step is None:
                stalled = True
                message = f"line search stalled with bundle subgradient norm {np.sqrt(z_sq):.3g}"
                break
            x, f, g = step
            if history is not None:
                history.append((iterations, f))
            continue

        x_new, f_new, g_new = step
        s = x_new - x
        y = g_new - g
        if y @ s > CURVATURE_TOL * np.linalg.norm(s) * np.linalg.norm(y):
            S.append(s)
            Y.append(y)
        x, f, g = x_new, f_new, g_new
        if history is not None:
            history.append((iterations, f))

        if float(np.linalg.norm(g)) <= threshold:
            converged = True
            message = "subgradient norm below tolerance"

    if not converged:
        logger.debug(f"Quasi-Newton stopped unconverged after {iterations} iterations at f={f!r}: {message}")
    return SolveReport(
        x_best=x,
        f_best=f,
        iterations=iterations,
        evaluations=evaluations,
        converged=converged,
        stalled=stalled,
        message=message,
        history=history
    )


def minimize(oracle: OracleFn, x0: object, method: str = "quasi_newton", **options) -> SolveReport:
    """
    Dispatch to a solver by name.

    Args:
        method: "quasi_newton" or "subgradient"
        **options: Forwarded to the solver (``max_iters`` is common to both)
    """
    if method == "quasi_newton":
        return quasi_newton(oracle, x0, **options)
    if method == "subgradient":
        return subgradient_descent(oracle, x0, **options)
    raise InputError(f"unknown solver '{method}', expected one of {', '.join(METHODS)}")
