"""Discrepancy targets and GCV selections."""
import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.regparam.distributions import chi2_quantile

MdpRule = Literal["quantile", "approximate"]


class MdpTarget(BaseModel):
    """
    Target squared-residual level rho for the discrepancy principle.

    With the ``quantile`` rule rho = noise_var * chi2_quantile(quantile, m),
    so the true noise energy stays below rho with probability ``quantile``.
    The ``approximate`` rule uses the closed form 2 ||b_bar||^2 / (3 SNR),
    which in terms of the per-component variance is (2/3) m noise_var.
    """

    model_config = ConfigDict(frozen=True)

    rho: float = Field(..., gt=0, description="Target value of ||A x_RR - b||^2")
    quantile: float = Field(..., gt=0, lt=1, description="Chi-squared quantile level")
    noise_var: float = Field(..., gt=0, description="Per-component noise variance sigma^2")
    m: int = Field(..., ge=1, description="Number of observations")
    rule: MdpRule = Field(default="quantile", description="How rho was derived")

    @model_validator(mode="after")
    def check_rho(self) -> "MdpTarget":
        """rho must follow from the other fields under the quantile rule."""
        if self.rule == "quantile":
            expected = self.noise_var * chi2_quantile(self.quantile, self.m)
            if not math.isclose(self.rho, expected, rel_tol=1e-9):
                raise ValueError(f"rho={self.rho} does not match noise_var * chi2_quantile = {expected}")
        return self

    @classmethod
    def from_noise(
        cls,
        noise_var: float,
        m: int,
        quantile: float = 0.95,
        rule: MdpRule = "quantile"
    ) -> "MdpTarget":
        """Build the target from the noise variance."""
        if rule == "quantile":
            rho = noise_var * chi2_quantile(quantile, m)
        else:
            rho = 2.0 * m * noise_var / 3.0
        return cls(rho=rho, quantile=quantile, noise_var=noise_var, m=m, rule=rule)


class GcvSelection(BaseModel):
    """Lambda chosen by generalized cross validation."""

    model_config = ConfigDict(frozen=True)

    lam: float = Field(..., gt=0, description="Selected regularization parameter")
    value: float = Field(..., description="GCV functional at lam")
    at_boundary: bool = Field(..., description="Minimum found at an end of the search range")
