"""Result model and method names for the estimators."""
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.linalg import DenseVector


class Method(str, Enum):
    """Estimator families."""

    OLS = "OLS"
    TLS = "TLS"
    RR = "RR"
    RO = "RO"
    RRO = "RRO"


class EstimatorResult(BaseModel):
    """
    Solution vector plus the diagnostics of the estimator that produced it.

    ``lam`` is present exactly for the regularized methods (RR, RRO) and
    ``sigma_np1`` exactly for TLS.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, populate_by_name=True)

    x_hat: DenseVector = Field(..., description="Estimated solution (length n)")
    method: Method = Field(..., description="Estimator that produced x_hat")
    lam: Optional[float] = Field(default=None, ge=0, alias="lambda", description="Regularization parameter")
    sigma_np1: Optional[float] = Field(default=None, ge=0, description="Smallest singular value of [A b]")
    objective_value: float = Field(..., description="Objective minimized by the method at x_hat")
    iterations: Optional[int] = Field(default=None, ge=0, description="Solver iterations for RO/RRO")
    delta: Optional[float] = Field(default=None, ge=0, description="Fixed-point uncertainty bound for RO/RRO")
    converged: Optional[bool] = Field(default=None, description="Solver convergence flag for RO/RRO")

    @model_validator(mode="after")
    def check_method_fields(self) -> "EstimatorResult":
        """Tie the optional diagnostics to the method."""
        regularized = self.method in (Method.RR, Method.RRO)
        if (self.lam is not None) != regularized:
            raise ValueError(f"lambda must be set exactly for RR and RRO, method is {self.method.value}")
        if (self.sigma_np1 is not None) != (self.method is Method.TLS):
            raise ValueError(f"sigma_np1 must be set exactly for TLS, method is {self.method.value}")
        return self

    def to_json_dict(self) -> Dict[str, Any]:
        """Documented JSON layout used by the CLI."""
        return {
            "method": self.method.value,
            "x_hat": [float(v) for v in np.asarray(self.x_hat)],
            "objective_value": self.objective_value,
            "lambda": self.lam,
            "sigma_np1": self.sigma_np1,
            "iterations": self.iterations,
            "delta": self.delta,
            "converged": self.converged,
        }
