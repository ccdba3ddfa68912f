"""
Worst-case least-squares objective over an element-wise box.

For |Delta| <= D the inner maximization has the closed form

    f(x) = ||Ax - b||^2 + 2 <|Ax - b|, D|x|> + ||D|x|||^2

attained at Delta_x = D * sign(c) sign(x)^T with c = Ax - b. Zero signs are
taken as +1 on each factor. A subgradient of the convex f is then
2 (A + Delta_x)^T ((A + Delta_x) x - b).

Functions accept either a bound matrix D or, for the fixed-point case, a
scalar delta standing for delta * ones(m, n); the scalar path never
allocates an m x n matrix.
"""
import logging
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg as la

from app.core.config import settings
from app.core.exceptions import InputError, ShapeMismatchError, SizeLimitError
from app.core.linalg import as_matrix
from app.problems.models import FixedPoint, ProblemInstance, UncertaintySet
from app.problems.service import materialize_box
from app.robust.models import CornerMaximum, RobustEvaluation
from app.solvers.models import OracleFn

logger = logging.getLogger(__name__)

Bound = Union[np.ndarray, float]

CORNER_CHUNK = 1 << 15


def _check_bound(p: ProblemInstance, D: object) -> np.ndarray:
    D = as_matrix(D, "D")
    if D.shape != p.A.shape:
        raise ShapeMismatchError("D", p.A.shape, D.shape)
    if np.any(D < 0):
        raise InputError("box bounds D must be element-wise non-negative")
    return D


def _sign(v: np.ndarray) -> np.ndarray:
    return np.where(v >= 0, 1.0, -1.0)


def _apply(D: Bound, v: np.ndarray, rows: int) -> np.ndarray:
    # D @ v, with a scalar standing for a constant matrix
    if np.ndim(D) == 0:
        return np.full(rows, float(D) * float(np.sum(v)))
    return D @ v


def _apply_t(D: Bound, w: np.ndarray, cols: int) -> np.ndarray:
    if np.ndim(D) == 0:
        return np.full(cols, float(D) * float(np.sum(w)))
    return D.T @ w


def _value_and_subgrad(
    A: np.ndarray,
    b: np.ndarray,
    D: Bound,
    x: np.ndarray,
    min_norm: bool = False
) -> Tuple[float, np.ndarray]:
    m, n = A.shape
    c = A @ x - b
    s_c = _sign(c)
    s_x = _sign(x)
    # (A + Delta_x) x - b without forming Delta_x
    r = c + s_c * _apply(D, np.abs(x), m)
    smooth = 2.0 * (A.T @ r)
    # s_c * r = |c| + D|x| >= 0, so the kink weights are non-negative
    kink = 2.0 * _apply_t(D, s_c * r, n)
    g = smooth + s_x * kink
    if min_norm:
        zero = x == 0
        if np.any(zero):
            # shortest element of smooth_j + [-kink_j, kink_j]
            g[zero] = np.sign(smooth[zero]) * np.maximum(np.abs(smooth[zero]) - kink[zero], 0.0)
    return float(r @ r), g


def eval_f(p: ProblemInstance, D: object, x: object) -> float:
    """
    Evaluate the worst-case residual f(x) over the box |Delta| <= D.

    Raises:
        ShapeMismatchError: If D or x does not match the instance
    """
    D = _check_bound(p, D)
    x = p.check_x(x)
    c = p.A @ x - p.b
    d_abs_x = D @ np.abs(x)
    return float(c @ c + 2.0 * (np.abs(c) @ d_abs_x) + d_abs_x @ d_abs_x)


def worst_case_delta(p: ProblemInstance, D: object, x: object) -> np.ndarray:
    """Return the maximizing perturbation Delta_x = D * sign(c) sign(x)^T."""
    D = _check_bound(p, D)
    x = p.check_x(x)
    c = p.A @ x - p.b
    return D * np.outer(_sign(c), _sign(x))


def subgradient_f(p: ProblemInstance, D: object, x: object) -> np.ndarray:
    """Return 2 (A + Delta_x)^T ((A + Delta_x) x - b), a subgradient of f at x."""
    D = _check_bound(p, D)
    x = p.check_x(x)
    return _value_and_subgrad(p.A, p.b, D, x)[1]


def evaluate(p: ProblemInstance, D: object, x: object, with_delta: bool = False) -> RobustEvaluation:
    """Evaluate value and subgradient together, optionally materializing Delta_x."""
    D = _check_bound(p, D)
    x = p.check_x(x)
    _, g = _value_and_subgrad(p.A, p.b, D, x)
    worst = worst_case_delta(p, D, x) if with_delta else None
    return RobustEvaluation(value=eval_f(p, D, x), subgrad=g, worst_delta=worst)


def eval_f_fixed(p: ProblemInstance, delta: float, x: object) -> float:
    """
    Fixed-point form ||Ax-b||^2 + 2 delta ||x||_1 ||Ax-b||_1 + m delta^2 ||x||_1^2.

    Equal to ``eval_f`` with D = delta * ones(m, n).
    """
    if delta < 0:
        raise InputError(f"delta must be non-negative, got {delta}")
    x = p.check_x(x)
    c = p.A @ x - p.b
    l1_x = float(np.sum(np.abs(x)))
    return float(c @ c + 2.0 * delta * l1_x * np.sum(np.abs(c)) + p.m * delta ** 2 * l1_x ** 2)


def eval_rro(p: ProblemInstance, delta: float, lam: float, x: object) -> Tuple[float, np.ndarray]:
    """
    Regularized robust objective g(x) = f_delta(x) + lam^2 ||x||^2 and a subgradient.

    Returns:
        Tuple (value, subgradient)
    """
    if delta < 0 or lam < 0:
        raise InputError(f"delta and lambda must be non-negative, got {delta}, {lam}")
    x = p.check_x(x)
    _, g = _value_and_subgrad(p.A, p.b, float(delta), x)
    value = eval_f_fixed(p, delta, x) + lam ** 2 * float(x @ x)
    return value, g + 2.0 * lam ** 2 * x


def corner_maximum(p: ProblemInstance, D: object, x: object, max_entries: Optional[int] = None) -> CornerMaximum:
    """
    Maximize ||(A + Delta) x - b||^2 by enumerating all 2^(mn) corners Delta = +/-D.

    A convex function attains its maximum over a box at a vertex, so this
    is an exact, exponential-time check of the closed form.

    Raises:
        SizeLimitError: If m*n exceeds ``max_entries`` (settings.ORACLE_MAX_ENTRIES)
    """
    D = _check_bound(p, D)
    x = p.check_x(x)
    limit = settings.ORACLE_MAX_ENTRIES if max_entries is None else max_entries
    m, n = p.A.shape
    entries = m * n
    if entries > limit:
        raise SizeLimitError(entries, limit)

    c = p.A @ x - p.b
    weights = (D * x[None, :]).ravel()
    bit_positions = np.arange(entries, dtype=np.int64)
    total = 1 << entries

    best_value = -np.inf
    best_signs: np.ndarray | None = None
    for start in range(0, total, CORNER_CHUNK):
        idx = np.arange(start, min(start + CORNER_CHUNK, total), dtype=np.int64)
        signs = 2.0 * ((idx[:, None] >> bit_positions) & 1) - 1.0
        residuals = (signs * weights).reshape(-1, m, n).sum(axis=2) + c
        values = np.einsum("ij,ij->i", residuals, residuals)
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value = float(values[k])
            best_signs = signs[k]

    logger.debug(f"Enumerated {total} corners for a {m}x{n} instance, max={best_value!r}")
    return CornerMaximum(value=best_value, delta=D * best_signs.reshape(m, n), corners=total)


def _bound_for(p: ProblemInstance, u: UncertaintySet) -> Bound:
    if isinstance(u, FixedPoint):
        return float(u.delta)
    return materialize_box(u, p.A)


def robust_oracle(p: ProblemInstance, u: UncertaintySet) -> OracleFn:
    """Value/subgradient oracle of the robust objective for any uncertainty set."""
    return regularized_oracle(p, u, 0.0)


def regularized_oracle(p: ProblemInstance, u: UncertaintySet, lam: float) -> OracleFn:
    """
    Value/subgradient oracle of f(x) + lam^2 ||x||^2.

    At components with x_j = 0 the returned subgradient is the shortest
    element of the interval allowed by the kink.

    The fixed-point flavour keeps delta as a scalar so each call is O(mn)
    arithmetic with no m x n temporaries.
    """
    if lam < 0:
        raise InputError(f"lambda must be non-negative, got {lam}")
    bound = _bound_for(p, u)
    A, b = p.A, p.b
    lam_sq = float(lam) ** 2

    def oracle(x: np.ndarray) -> Tuple[float, np.ndarray]:
        value, g = _value_and_subgrad(A, b, bound, x, min_norm=True)
        if lam_sq:
            value += lam_sq * float(x @ x)
            g = g + 2.0 * lam_sq * x
        return value, g

    return oracle


FACE_TOLERANCES = (1e-10, 1e-8, 1e-6, 1e-4, 1e-3)
FACE_ROUNDS = 3


def _face_minimizer(
    A: np.ndarray,
    b: np.ndarray,
    D: np.ndarray,
    lam: float,
    s_c: np.ndarray,
    s_x: np.ndarray,
    on_kink: np.ndarray,
    free: np.ndarray
) -> Optional[np.ndarray]:
    """
    Minimize the sign-fixed quadratic model on {c_K = 0, x_J = 0}.

    With the signs of c and x frozen the objective is ||M z - h||^2 in the
    free components z, and the zero residuals are linear constraints, so
    the face minimizer is an equality-constrained least-squares solution.
    """
    n = A.shape[1]
    x = np.zeros(n)
    k = int(np.count_nonzero(free))
    if k == 0:
        return x
    A_free = A[:, free]
    W = D[:, free] * s_x[free]
    M = np.where(on_kink[:, None], W, s_c[:, None] * A_free + W)
    h = np.where(on_kink, 0.0, s_c * b)
    if lam > 0:
        M = np.vstack([M, lam * np.eye(k)])
        h = np.concatenate([h, np.zeros(k)])

    C = A_free[on_kink]
    if C.shape[0] >= k:
        return None
    if C.shape[0]:
        z0 = la.lstsq(C, b[on_kink])[0]
        N = la.null_space(C)
        if N.shape[1] == 0:
            return None
        z = z0 + N @ la.lstsq(M @ N, h - M @ z0)[0]
    else:
        z = la.lstsq(M, h)[0]
    x[free] = z
    return x


def refine_on_face(
    p: ProblemInstance,
    u: UncertaintySet,
    lam: float,
    x: object
) -> Tuple[np.ndarray, float]:
    """
    Polish an approximate minimizer of f(x) + lam^2 ||x||^2 on its kink face.

    Residuals and components that are small relative to their largest
    entry are taken as exactly zero (one candidate face per tolerance in
    FACE_TOLERANCES), the remaining signs are frozen and the resulting
    least-squares problem is solved directly. A candidate replaces x only
    when the true objective strictly decreases, so the result is never
    worse than the input.

    Returns:
        Tuple (x, value)
    """
    if lam < 0:
        raise InputError(f"lambda must be non-negative, got {lam}")
    oracle = regularized_oracle(p, u, lam)
    A, b = p.A, p.b
    # the face solve forms the bound explicitly
    D = np.broadcast_to(np.asarray(_bound_for(p, u), dtype=float), A.shape)

    best_x = np.array(p.check_x(x))
    best_f = oracle(best_x)[0]
    for _ in range(FACE_ROUNDS):
        c = A @ best_x - b
        c_scale = float(np.max(np.abs(c))) or 1.0
        x_scale = float(np.max(np.abs(best_x))) or 1.0
        s_c, s_x = _sign(c), _sign(best_x)
        seen = set()
        improved = False
        for tau in FACE_TOLERANCES:
            on_kink = np.abs(c) <= tau * c_scale
            free = np.abs(best_x) > tau * x_scale
            key = (on_kink.tobytes(), free.tobytes())
            if key in seen:
                continue
            seen.add(key)
            candidate = _face_minimizer(A, b, D, lam, s_c, s_x, on_kink, free)
            if candidate is None:
                continue
            value = oracle(candidate)[0]
            if value < best_f:
                best_x, best_f = candidate, value
                improved = True
        if not improved:
            break

    logger.debug(f"Face refinement finished at f={best_f!r}")
    return best_x, best_f
