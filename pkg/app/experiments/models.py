"""Experiment configuration, per-trial records, summaries and density curves."""
from enum import Enum
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator
from scipy import integrate

from app.core.linalg import DenseVector
from app.regparam.models import MdpRule
from app.simulate.models import Cauchy, SolutionDistribution, Spike


class ExperimentMethod(str, Enum):
    """Estimators compared by the Monte-Carlo studies."""

    OLS = "OLS"
    TLS = "TLS"
    RR_GCV = "RR_GCV"
    RR_MDP = "RR_MDP"
    RO = "RO"
    RRO_GCV = "RRO_GCV"
    RRO_MDP = "RRO_MDP"

    @property
    def selection(self) -> Optional[str]:
        """Lambda selection rule for the regularized methods."""
        if self.value.endswith("_GCV"):
            return "gcv"
        if self.value.endswith("_MDP"):
            return "mdp"
        return None


def _split_list(v: object) -> object:
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    return v


class ExperimentConfig(BaseModel):
    """
    One Monte-Carlo study.

    Loaded from a flat ``key=value`` file where list values are comma
    separated (``round_digits=1,2,3``). Unknown keys are rejected.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    m: int = Field(..., ge=3, description="Rows of the data matrix")
    n: int = Field(..., ge=2, description="Columns of the data matrix")
    cond: float = Field(..., ge=1, description="Condition number of A_bar")
    snr: float = Field(..., gt=0, description="Signal-to-noise ratio")
    trials: int = Field(..., ge=1, description="Number of Monte-Carlo trials")
    round_digits: List[int] = Field(..., min_length=1, description="Rounding digits to sweep")
    distribution: Literal["cauchy", "spike"] = Field(..., description="True solution distribution")
    methods: List[ExperimentMethod] = Field(..., min_length=1, description="Estimators to compare")
    base_seed: int = Field(..., ge=0, description="Seed from which per-trial streams derive")

    quantile: float = Field(default=0.95, gt=0, lt=1, description="Chi-squared quantile for MDP")
    mdp_rule: MdpRule = Field(default="quantile", description="How the MDP target is derived")
    init: Literal["zero", "random"] = Field(default="zero", description="Robust solver starting point")
    kde_digit: Optional[int] = Field(default=None, description="Digit whose errors feed the density curves")
    kde_grid_points: int = Field(default=512, ge=2, description="Points per density curve")
    cauchy_median: float = 0.0
    cauchy_scale: float = Field(default=1.0, gt=0)
    spike_magnitude: float = 100.0
    spike_rest_std: float = Field(default=1.0, gt=0)

    @field_validator("round_digits", mode="before")
    @classmethod
    def split_digits(cls, v: object) -> object:
        """Accept a comma separated string."""
        return _split_list(v)

    @field_validator("methods", mode="before")
    @classmethod
    def split_methods(cls, v: object) -> object:
        """Accept a comma separated string; names are case-insensitive."""
        v = _split_list(v)
        if isinstance(v, list):
            return [item.upper() if isinstance(item, str) else item for item in v]
        return v

    @field_validator("n")
    @classmethod
    def check_overdetermined(cls, v: int, info: ValidationInfo) -> int:
        """Experiments need m > n."""
        m = info.data.get("m")
        if m is not None and v >= m:
            raise ValueError(f"n must be smaller than m={m}, got {v}")
        return v

    @field_validator("round_digits")
    @classmethod
    def check_digits(cls, v: List[int]) -> List[int]:
        """Digits within the supported range, each listed once."""
        for digit in v:
            if not -6 <= digit <= 12:
                raise ValueError(f"round digit {digit} outside [-6, 12]")
        if len(set(v)) != len(v):
            raise ValueError("round digits must be distinct")
        return v

    @field_validator("methods")
    @classmethod
    def check_methods(cls, v: List[ExperimentMethod]) -> List[ExperimentMethod]:
        """Each method once."""
        if len(set(v)) != len(v):
            raise ValueError("methods must be distinct")
        return v

    @field_validator("kde_digit")
    @classmethod
    def check_kde_digit(cls, v: Optional[int], info: ValidationInfo) -> Optional[int]:
        """The density digit must be one of the swept digits."""
        digits = info.data.get("round_digits")
        if v is not None and digits is not None and v not in digits:
            raise ValueError(f"kde_digit {v} is not among round_digits {digits}")
        return v

    @model_validator(mode="after")
    def check_spike(self) -> "ExperimentConfig":
        """A zero spike has no sign to adjust by."""
        if self.distribution == "spike" and self.spike_magnitude == 0:
            raise ValueError("spike_magnitude must be nonzero")
        return self

    @property
    def dist(self) -> SolutionDistribution:
        """Solution distribution built from the flat parameters."""
        if self.distribution == "spike":
            return Spike(magnitude=self.spike_magnitude, n_rest_std=self.spike_rest_std)
        return Cauchy(median=self.cauchy_median, scale=self.cauchy_scale)

    @property
    def density_digit(self) -> int:
        """kde_digit, else 2 when swept, else the first digit."""
        if self.kde_digit is not None:
            return self.kde_digit
        return 2 if 2 in self.round_digits else self.round_digits[0]


class MethodOutcome(BaseModel):
    """Result of one method on one trial; ``failure`` names the error class when it failed."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    relative_error: Optional[float] = Field(default=None, ge=0, description="||x_hat - x_bar|| / ||x_bar||")
    component_errors: Optional[DenseVector] = Field(default=None, description="x_hat - x_bar, sign adjusted for spikes")
    lam: Optional[float] = Field(default=None, ge=0, description="Selected regularization parameter")
    objective_value: Optional[float] = None
    iterations: Optional[int] = None
    failure: Optional[str] = Field(default=None, description="Exception class name on failure")

    @model_validator(mode="after")
    def check_failure(self) -> "MethodOutcome":
        """Either a failure tag or an error measurement."""
        if (self.failure is None) == (self.relative_error is None):
            raise ValueError("an outcome carries exactly one of relative_error and failure")
        return self

    @property
    def ok(self) -> bool:
        return self.failure is None


class TrialRecord(BaseModel):
    """All methods' outcomes for one (trial, digit) pair, keyed in config order."""

    model_config = ConfigDict(frozen=True)

    trial_index: int = Field(..., ge=0)
    round_digit: int
    outcomes: Dict[ExperimentMethod, MethodOutcome]


class SummaryRow(BaseModel):
    """Aggregated error statistics for one (digit, method) pair."""

    model_config = ConfigDict(frozen=True)

    round_digit: int
    method: ExperimentMethod
    mean_rel_error: float = Field(..., description="Mean over successful trials, NaN if none")
    sem: float = Field(..., description="Standard error of the mean, NaN below two successes")
    failures: int = Field(..., ge=0)
    trials: int = Field(..., ge=1)


class ExperimentResult(BaseModel):
    """Per-trial records sorted by (digit position, trial) and the summary table."""

    model_config = ConfigDict(frozen=True)

    records: List[TrialRecord]
    summary: List[SummaryRow]

    def row(self, round_digit: int, method: ExperimentMethod) -> SummaryRow:
        """Summary row for one (digit, method) pair."""
        for row in self.summary:
            if row.round_digit == round_digit and row.method == method:
                return row
        raise KeyError((round_digit, method))


class KdeCurve(BaseModel):
    """Gaussian kernel density estimate sampled on an even grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: DenseVector = Field(..., description="Ascending evaluation points")
    density: DenseVector = Field(..., description="Density values on the grid")
    bandwidth: float = Field(..., gt=0, description="Kernel standard deviation")

    @model_validator(mode="after")
    def check_curve(self) -> "KdeCurve":
        if self.grid.shape != self.density.shape:
            raise ValueError(f"grid has {self.grid.size} points but density has {self.density.size}")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly ascending")
        if np.any(self.density < 0):
            raise ValueError("density must be non-negative")
        return self

    def integral(self) -> float:
        """Trapezoid integral of the density over the grid."""
        return float(integrate.trapezoid(self.density, self.grid))

    @property
    def mode(self) -> float:
        """Grid point with the highest density."""
        return float(self.grid[int(np.argmax(self.density))])


class DensityCurve(BaseModel):
    """KDE of one method's component errors for one component class."""

    model_config = ConfigDict(frozen=True)

    method: ExperimentMethod
    component_class: Literal["large", "rest", "all"]
    curve: KdeCurve
