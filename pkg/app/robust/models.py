"""Results of evaluating the worst-case objective."""
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.linalg import DenseMatrix, DenseVector


class RobustEvaluation(BaseModel):
    """Worst-case objective value, a subgradient and optionally the maximizing perturbation."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: float = Field(..., ge=0, description="f(x) = max over the box of ||(A+Delta)x - b||^2")
    subgrad: DenseVector = Field(..., description="Element of the subdifferential of f at x")
    worst_delta: Optional[DenseMatrix] = Field(default=None, description="Maximizing Delta_x, on request")


class CornerMaximum(BaseModel):
    """Result of brute-force maximization over every corner of the box."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: float = Field(..., ge=0, description="Largest ||(A+Delta)x - b||^2 over corner matrices")
    delta: DenseMatrix = Field(..., description="A maximizing corner matrix")
    corners: int = Field(..., ge=1, description="Number of corners enumerated")

    def relative_gap(self, closed_form: float) -> float:
        """|closed_form - value| relative to max(1, value)."""
        return abs(closed_form - self.value) / max(1.0, abs(self.value))

    @property
    def delta_list(self) -> list:
        return np.asarray(self.delta).tolist()
