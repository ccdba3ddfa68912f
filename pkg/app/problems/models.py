"""Problem instances, quantization settings and uncertainty sets."""
from functools import cached_property
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.core.exceptions import RankDeficientError, ShapeMismatchError
from app.core.linalg import DenseMatrix, DenseVector, SvdResult, as_vector, svd


class ProblemInstance(BaseModel):
    """
    Observed data matrix A (m x n) and observation vector b (length m).

    Shapes and finiteness are validated on construction. The overdetermined
    and full-column-rank requirements of the closed-form estimators are
    checked lazily by ``require_overdetermined`` and ``require_full_rank``.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: DenseMatrix = Field(..., description="Observed data matrix (m x n)")
    b: DenseVector = Field(..., description="Observation vector (length m)")

    @model_validator(mode="after")
    def check_shapes(self) -> "ProblemInstance":
        """Ensure b has one entry per row of A."""
        if self.b.shape[0] != self.A.shape[0]:
            raise ShapeMismatchError("b", (self.A.shape[0],), self.b.shape)
        return self

    @property
    def m(self) -> int:
        return int(self.A.shape[0])

    @property
    def n(self) -> int:
        return int(self.A.shape[1])

    @cached_property
    def svd(self) -> SvdResult:
        """Thin SVD of A, computed once per instance."""
        return svd(self.A)

    def check_x(self, x: object) -> np.ndarray:
        """Validate a candidate solution vector against the instance."""
        x = as_vector(x, "x")
        if x.shape[0] != self.n:
            raise ShapeMismatchError("x", (self.n,), x.shape)
        return x

    def residual(self, x: object) -> np.ndarray:
        """Return c = Ax - b."""
        return self.A @ self.check_x(x) - self.b

    def require_overdetermined(self) -> None:
        """Raise ShapeMismatchError unless m > n."""
        if self.m <= self.n:
            raise ShapeMismatchError("A", "m > n (overdetermined)", self.A.shape)

    def require_full_rank(self, tol: Optional[float] = None) -> None:
        """
        Raise RankDeficientError unless sigma_min > tol * sigma_max.

        Args:
            tol: Relative threshold, defaults to settings.RANK_TOL
        """
        tol = settings.RANK_TOL if tol is None else tol
        s = self.svd.singular_values
        if self.m < self.n or s[-1] <= tol * s[0]:
            raise RankDeficientError(float(s[-1]), float(s[0]))


class FixedPoint(BaseModel):
    """Uniform box |Delta_ij| <= delta, the model of decimal rounding."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["fixed_point"] = "fixed_point"
    delta: float = Field(..., ge=0, description="Entry-wise perturbation bound")

    def describe(self) -> str:
        return f"fixed-point delta={self.delta!r}"


class Box(BaseModel):
    """General element-wise box |Delta| <= D."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: Literal["box"] = "box"
    D: DenseMatrix = Field(..., description="Non-negative bound matrix, same shape as A")

    @field_validator("D")
    @classmethod
    def validate_non_negative(cls, v: np.ndarray) -> np.ndarray:
        """Bounds must be non-negative."""
        if np.any(v < 0):
            raise ValueError("box bounds D must be element-wise non-negative")
        return v

    def describe(self) -> str:
        return f"box max(D)={float(np.max(self.D))!r}"


class Proportional(BaseModel):
    """Floating-point style box |Delta_ij| <= p |A_ij|."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["proportional"] = "proportional"
    p: float = Field(..., ge=0, description="Proportionality constant, 0.01 for +/-1%")

    def describe(self) -> str:
        return f"proportional p={self.p!r}"


UncertaintySet = Annotated[Union[FixedPoint, Box, Proportional], Field(discriminator="kind")]


class QuantizationSpec(BaseModel):
    """Decimal rounding position: digit d means rounding to 10^-d."""

    model_config = ConfigDict(frozen=True)

    round_digit: int = Field(..., ge=-6, le=12, description="Decimal place index")

    @property
    def step(self) -> float:
        """Grid spacing 10^-d."""
        return 10.0 ** (-self.round_digit)

    @property
    def delta(self) -> float:
        """Half the grid spacing, the largest rounding error."""
        return 0.5 * self.step
