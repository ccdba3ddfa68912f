"""Oracle signature and solver reports."""
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.linalg import DenseVector

# x -> (value, subgradient) of a convex function
OracleFn = Callable[[np.ndarray], Tuple[float, np.ndarray]]


class SolveReport(BaseModel):
    """
    Outcome of a nonsmooth minimization.

    ``x_best``/``f_best`` are the best iterate seen, which for subgradient
    descent is generally not the last one.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x_best: DenseVector = Field(..., description="Best iterate found")
    f_best: float = Field(..., description="Objective value at x_best")
    iterations: int = Field(..., ge=0, description="Iterations performed")
    evaluations: int = Field(..., ge=1, description="Oracle calls made")
    converged: bool = Field(..., description="Stationarity (or nonsmooth stall) reached")
    stalled: bool = Field(default=False, description="Line search could not make progress")
    message: str = Field(default="", description="Termination reason")
    history: Optional[List[Tuple[int, float]]] = Field(
        default=None,
        description="(iteration, value) pairs when history recording is requested"
    )
