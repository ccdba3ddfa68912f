"""Dense linear algebra substrate shared by every other module."""
import logging
from typing import Annotated

import numpy as np
import scipy.linalg as la
from pydantic import BaseModel, BeforeValidator, ConfigDict

from app.core.exceptions import (
    ConvergenceFailureError,
    NonFiniteInputError,
    NotPositiveDefiniteError,
    ShapeMismatchError,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12


def as_matrix(value: object, what: str = "matrix") -> np.ndarray:
    """
    Copy ``value`` into a read-only, finite, two-dimensional float array.

    Args:
        value: Anything ``numpy.array`` accepts
        what: Argument name used in error messages

    Returns:
        A fresh float64 array with the write flag cleared

    Raises:
        ShapeMismatchError: If the array is not 2-D or has an empty dimension
        NonFiniteInputError: If any entry is NaN or infinite
    """
    arr = np.array(value, dtype=float)
    if arr.ndim != 2 or 0 in arr.shape:
        raise ShapeMismatchError(what, "(m, n) with m, n >= 1", arr.shape)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(what)
    arr.setflags(write=False)
    return arr


def as_vector(value: object, what: str = "vector") -> np.ndarray:
    """Copy ``value`` into a read-only, finite, non-empty 1-D float array."""
    arr = np.array(value, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ShapeMismatchError(what, "(k,) with k >= 1", arr.shape)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(what)
    arr.setflags(write=False)
    return arr


def _matrix_field(value: object) -> np.ndarray:
    return as_matrix(value)


def _vector_field(value: object) -> np.ndarray:
    return as_vector(value)


DenseMatrix = Annotated[np.ndarray, BeforeValidator(_matrix_field)]
DenseVector = Annotated[np.ndarray, BeforeValidator(_vector_field)]


class SvdResult(BaseModel):
    """
    Thin singular value decomposition ``A = U diag(s) V^T``.

    Singular values are non-increasing. Column signs are fixed so the
    largest-magnitude entry of every column of U is positive, which makes
    the factorization deterministic.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    U: DenseMatrix
    singular_values: DenseVector
    V: DenseMatrix

    def reconstruct(self) -> np.ndarray:
        """Multiply the factors back together."""
        return (self.U * self.singular_values) @ self.V.T


def _fix_signs(U: np.ndarray, Vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, Vt * signs[:, None]


def svd(A: object) -> SvdResult:
    """
    Compute the thin SVD of a finite matrix.

    The divide-and-conquer driver is tried first; if LAPACK reports a
    convergence failure the QR-iteration driver is tried before giving up.

    Raises:
        ConvergenceFailureError: If neither LAPACK driver converges
    """
    A = as_matrix(A, "A")
    last_error: Exception | None = None
    for driver in ("gesdd", "gesvd"):
        try:
            U, s, Vt = la.svd(A, full_matrices=False, lapack_driver=driver, check_finite=False)
            break
        except la.LinAlgError as e:
            logger.warning(f"SVD driver {driver} failed on a {A.shape} matrix: {e}")
            last_error = e
    else:
        raise ConvergenceFailureError("svd", str(last_error)) from last_error

    U, Vt = _fix_signs(U, Vt)
    return SvdResult(U=U, singular_values=s, V=Vt.T)


def solve_spd(M: object, y: object) -> np.ndarray:
    """
    Solve ``M z = y`` for symmetric positive definite ``M``.

    Uses a Cholesky factorization followed by one step of iterative
    refinement, never an explicit inverse.

    Args:
        M: Symmetric positive definite matrix (k x k)
        y: Right-hand side of length k

    Returns:
        The solution vector z

    Raises:
        ShapeMismatchError: If M is not square or y has the wrong length
        NotPositiveDefiniteError: If M is not symmetric or a pivot is <= 0
    """
    M = as_matrix(M, "M")
    y = as_vector(y, "y")
    k = M.shape[0]
    if M.shape[1] != k:
        raise ShapeMismatchError("M", "square", M.shape)
    if y.shape[0] != k:
        raise ShapeMismatchError("y", (k,), y.shape)

    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > SYMMETRY_TOL * scale:
        raise NotPositiveDefiniteError("matrix is not symmetric")

    try:
        factor = la.cho_factor(M, lower=False, check_finite=False)
    except la.LinAlgError as e:
        raise NotPositiveDefiniteError(f"Cholesky factorization failed: {e}") from e

    z = la.cho_solve(factor, y, check_finite=False)
    z = z + la.cho_solve(factor, y - M @ z, check_finite=False)
    return z


def condition_number(A: object) -> float:
    """Return sigma_max / sigma_min, or +inf when A is singular."""
    s = svd(A).singular_values
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])
