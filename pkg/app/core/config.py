"""Application configuration module using Pydantic Settings."""
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Library and CLI settings loaded from environment variables.

    Every numerical default used by the solvers, the regularization
    parameter selectors and the experiment harness lives here so it can be
    overridden with a ``QLS_``-prefixed variable or a ``.env`` file.
    """

    model_config = SettingsConfigDict(
        env_prefix="QLS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Application settings
    APP_NAME: str = Field(default="Quantized Robust Least Squares", description="Application name")
    APP_VERSION: str = Field(default="1.0.0", description="Application version")
    LOG_LEVEL: str = Field(default="INFO", description="Root log level for the CLI")
    LOG_FORMAT: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="Log record format"
    )

    # Nonsmooth solvers
    QN_MAX_ITERS: int = Field(default=500, ge=1, description="Quasi-Newton iteration budget")
    QN_MEMORY: int = Field(default=10, ge=1, description="Number of stored curvature pairs")
    QN_TOL: float = Field(default=1e-9, gt=0, description="Relative subgradient-norm tolerance")
    LINE_SEARCH_MIN_STEP: float = Field(
        default=1e-14,
        gt=0,
        description="Backtracking step below which the line search is considered stalled"
    )
    SGD_MAX_ITERS: int = Field(default=5000, ge=1, description="Subgradient descent iteration count")
    FACE_REFINEMENT: bool = Field(
        default=True,
        description="Re-solve robust quasi-Newton solutions exactly on the kink face they identify"
    )

    # Problem checks
    RANK_TOL: float = Field(
        default=1e-12,
        gt=0,
        description="Relative singular value threshold for full column rank"
    )

    # Regularization parameter selection
    GCV_LAMBDA_MIN: float = Field(default=1e-6, gt=0, description="Lower end of the GCV search range")
    GCV_LAMBDA_MAX: float = Field(default=1e2, gt=0, description="Upper end of the GCV search range")
    GCV_GRID_POINTS: int = Field(default=60, ge=50, description="Coarse GCV grid size")
    MDP_QUANTILE: float = Field(default=0.95, gt=0, lt=1, description="Chi-squared quantile for the MDP target")
    MDP_REL_TOL: float = Field(default=1e-8, gt=0, description="Relative tolerance of the discrepancy equation")
    MDP_MAX_BISECTIONS: int = Field(default=200, ge=1, description="Bisection iteration cap")
    MDP_LAMBDA_CAP: float = Field(default=1e8, gt=0, description="Largest lambda tried while bracketing")

    # Validation oracle
    ORACLE_MAX_ENTRIES: int = Field(
        default=20,
        ge=1,
        description="Largest m*n accepted by the corner enumeration oracle"
    )

    # Experiments
    KDE_GRID_POINTS: int = Field(default=512, ge=2, description="Density grid size")
    DEFAULT_THREADS: int = Field(default=1, ge=1, description="Experiment worker pool size")


# Global settings instance
settings = Settings()
