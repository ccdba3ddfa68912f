"""Conversions between uncertainty descriptions."""
import numpy as np

from app.core.exceptions import ShapeMismatchError
from app.core.linalg import as_matrix
from app.problems.models import Box, FixedPoint, Proportional, QuantizationSpec, UncertaintySet


def delta_from_round_digit(spec: QuantizationSpec) -> FixedPoint:
    """
    Fixed-point uncertainty implied by rounding to ``spec.round_digit``.

    Example:
        >>> delta_from_round_digit(QuantizationSpec(round_digit=2)).delta
        0.005
    """
    return FixedPoint(delta=spec.delta)


def materialize_box(u: UncertaintySet, A: object) -> np.ndarray:
    """
    Build the bound matrix D with |Delta| <= D for a given data matrix.

    Args:
        u: Uncertainty description
        A: Observed data matrix; its shape (and magnitudes for the
           proportional flavour) determine D

    Returns:
        Non-negative matrix with the shape of A

    Raises:
        ShapeMismatchError: If a Box bound does not match A
    """
    A = as_matrix(A, "A")
    if isinstance(u, FixedPoint):
        return np.full(A.shape, u.delta)
    if isinstance(u, Proportional):
        return u.p * np.abs(A)
    if isinstance(u, Box):
        if u.D.shape != A.shape:
            raise ShapeMismatchError("D", A.shape, u.D.shape)
        return np.array(u.D)
    raise TypeError(f"unsupported uncertainty set: {type(u).__name__}")
