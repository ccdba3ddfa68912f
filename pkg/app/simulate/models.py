"""Solution distributions and simulated trial data."""
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.linalg import DenseMatrix, DenseVector


class Cauchy(BaseModel):
    """Heavy-tailed solution components, i.i.d. Cauchy(median, scale)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["cauchy"] = "cauchy"
    median: float = Field(default=0.0, description="Location parameter")
    scale: float = Field(default=1.0, gt=0, description="Scale parameter")


class Spike(BaseModel):
    """One large component +/-magnitude, the rest i.i.d. N(0, n_rest_std^2)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["spike"] = "spike"
    magnitude: float = Field(default=100.0, description="Size of the first component")
    n_rest_std: float = Field(default=1.0, gt=0, description="Standard deviation of the other components")

    @field_validator("magnitude")
    @classmethod
    def validate_magnitude(cls, v: float) -> float:
        """A zero spike would make the sign adjustment meaningless."""
        if v == 0:
            raise ValueError("spike magnitude must be nonzero")
        return v


SolutionDistribution = Annotated[Union[Cauchy, Spike], Field(discriminator="kind")]


class Observation(BaseModel):
    """Noiseless and noisy right-hand sides with the noise variance used."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    b_bar: DenseVector = Field(..., description="A_bar x_bar")
    b: DenseVector = Field(..., description="b_bar plus Gaussian noise")
    noise_var: float = Field(..., ge=0, description="||b_bar||^2 / (m SNR)")


class TrialData(BaseModel):
    """Everything one Monte-Carlo trial draws before quantization."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A_bar: DenseMatrix = Field(..., description="True data matrix")
    x_bar: DenseVector = Field(..., description="True solution")
    observation: Observation = Field(..., description="Right-hand sides and noise level")
    x0: DenseVector = Field(..., description="Random starting point for the robust solvers")
