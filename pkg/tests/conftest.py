from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from app.experiments.models import ExperimentConfig
from app.problems.models import ProblemInstance
from app.problems.repository import write_matrix, write_vector
from app.simulate.service import make_rng


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator, fresh for each test"""
    return make_rng(12345)


@pytest.fixture
def one_d() -> ProblemInstance:
    """Three-point regression with a nearly vertical cloud"""
    return ProblemInstance(A=[[-0.10], [0.00], [0.11]], b=[1.00, -1.00, 1.00])


@pytest.fixture
def scalar() -> ProblemInstance:
    """The m = n = 1 instance A = b = 1"""
    return ProblemInstance(A=[[1.0]], b=[1.0])


@pytest.fixture
def make_instance() -> Callable[..., ProblemInstance]:
    """Factory for seeded Gaussian instances"""
    def factory(m: int = 30, n: int = 15, seed: int = 0) -> ProblemInstance:
        gen = make_rng(seed)
        return ProblemInstance(A=gen.standard_normal((m, n)), b=gen.standard_normal(m))
    return factory


@pytest.fixture
def make_planted() -> Callable[..., tuple]:
    """
    Factory for instances b = A x_bar + small noise with every component of
    x_bar bounded away from zero, so the robust objectives are smooth near
    their minimizers.
    """
    def factory(m: int = 30, n: int = 15, seed: int = 0, noise: float = 0.1) -> tuple:
        gen = make_rng(seed)
        A = gen.standard_normal((m, n))
        x_bar = (1.0 + gen.random(n)) * np.where(gen.random(n) < 0.5, -1.0, 1.0)
        b = A @ x_bar + noise * gen.standard_normal(m)
        return ProblemInstance(A=A, b=b), x_bar
    return factory


@pytest.fixture
def make_config() -> Callable[..., ExperimentConfig]:
    """Factory for small experiment configurations"""
    def factory(**overrides) -> ExperimentConfig:
        values = {
            "m": 12,
            "n": 4,
            "cond": 10.0,
            "snr": 50.0,
            "trials": 3,
            "round_digits": [1, 2],
            "distribution": "cauchy",
            "methods": ["OLS", "TLS", "RR_GCV", "RR_MDP", "RO", "RRO_GCV", "RRO_MDP"],
            "base_seed": 7,
        }
        values.update(overrides)
        return ExperimentConfig.model_validate(values)
    return factory


@pytest.fixture
def write_problem(tmp_path: Path) -> Callable[..., tuple]:
    """Write A and b as CSV files and return their paths"""
    def factory(A: object, b: object, name: str = "problem") -> tuple:
        matrix_path = tmp_path / f"{name}_A.csv"
        rhs_path = tmp_path / f"{name}_b.csv"
        write_matrix(matrix_path, A)
        write_vector(rhs_path, b)
        return matrix_path, rhs_path
    return factory
