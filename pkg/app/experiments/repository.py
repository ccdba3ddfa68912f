"""Experiment configuration loading and CSV result sinks."""
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import pandas as pd
from dotenv import dotenv_values
from pydantic import ValidationError

from app.core.exceptions import ConfigError, InputError
from app.experiments.models import DensityCurve, ExperimentConfig, SummaryRow, TrialRecord

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

RESULTS_COLUMNS = ["round_digit", "method", "mean_rel_error", "sem", "failures", "trials"]
DENSITY_COLUMNS = ["method", "component_class", "grid", "density"]
TRIALS_COLUMNS = [
    "trial_index",
    "round_digit",
    "method",
    "relative_error",
    "lambda",
    "objective_value",
    "iterations",
    "failure",
    "component_errors",
]


def load_experiment_config(path: Path, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Read a flat ``key=value`` experiment file and validate it.

    Comments (``#``) and blank lines are ignored. ``overrides`` replace file
    values before validation (the CLI's ``--trials`` and ``--seed``).

    Raises:
        InputError: If the file does not exist
        ConfigError: If keys are missing, unknown, empty or invalid
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")

    raw = dotenv_values(path)
    empty = [key for key, value in raw.items() if value is None or not value.strip()]
    if empty:
        raise ConfigError(empty, [f"{key}: no value given" for key in empty])

    values: Dict[str, Any] = dict(raw)
    values.update(overrides or {})
    try:
        cfg = ExperimentConfig.model_validate(values)
    except ValidationError as e:
        keys: List[str] = []
        details: List[str] = []
        for error in e.errors():
            key = str(error["loc"][0]) if error["loc"] else "config"
            if key not in keys:
                keys.append(key)
            details.append(f"{key}: {error['msg']}")
        raise ConfigError(keys, details) from e

    logger.debug(f"Loaded experiment config from {path}: {cfg.model_dump()}")
    return cfg


def _join(values: Optional[object]) -> str:
    if values is None:
        return ""
    return ";".join(FLOAT_FORMAT % v for v in values)


class IExperimentRepository(ABC):
    """Interface for experiment output sinks."""

    @abstractmethod
    def save_summary(self, rows: List[SummaryRow]) -> Path:
        """Persist the aggregated table."""
        pass

    @abstractmethod
    def save_densities(self, curves: List[DensityCurve]) -> Path:
        """Persist the density curves."""
        pass

    @abstractmethod
    def save_trials(self, records: List[TrialRecord]) -> Path:
        """Persist one row per (trial, method)."""
        pass


class ExperimentRepository(IExperimentRepository):
    """
    Writes experiment outputs as CSV files under one directory.

    Files are UTF-8 with LF line endings and 17 significant digits, so two
    runs of the same configuration produce identical bytes.
    """

    RESULTS_FILE = "results.csv"
    DENSITY_FILE = "density.csv"
    TRIALS_FILE = "trials.csv"

    def __init__(self, out_dir: Path) -> None:
        """
        Initialize repository, creating the directory if needed.

        Args:
            out_dir: Output directory
        """
        self._out_dir = Path(out_dir)
        try:
            self._out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise InputError(f"cannot create output directory {self._out_dir}: {e}") from e

    @property
    def out_dir(self) -> Path:
        return self._out_dir

    def _write(self, frame: pd.DataFrame, name: str) -> Path:
        path = self._out_dir / name
        try:
            frame.to_csv(
                path,
                index=False,
                float_format=FLOAT_FORMAT,
                lineterminator="\n",
                encoding="utf-8",
                na_rep="NaN"
            )
        except OSError as e:
            raise InputError(f"cannot write {path}: {e}") from e
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def save_summary(self, rows: List[SummaryRow]) -> Path:
        frame = pd.DataFrame(
            [
                {
                    "round_digit": row.round_digit,
                    "method": row.method.value,
                    "mean_rel_error": row.mean_rel_error,
                    "sem": row.sem,
                    "failures": row.failures,
                    "trials": row.trials,
                }
                for row in rows
            ],
            columns=RESULTS_COLUMNS
        )
        return self._write(frame, self.RESULTS_FILE)

    def save_densities(self, curves: List[DensityCurve]) -> Path:
        frames = [
            pd.DataFrame({
                "method": c.method.value,
                "component_class": c.component_class,
                "grid": c.curve.grid,
                "density": c.curve.density,
            })
            for c in curves
        ]
        frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=DENSITY_COLUMNS)
        return self._write(frame[DENSITY_COLUMNS], self.DENSITY_FILE)

    def save_trials(self, records: List[TrialRecord]) -> Path:
        rows = [
            {
                "trial_index": record.trial_index,
                "round_digit": record.round_digit,
                "method": method.value,
                "relative_error": outcome.relative_error,
                "lambda": outcome.lam,
                "objective_value": outcome.objective_value,
                "iterations": outcome.iterations,
                "failure": outcome.failure or "",
                "component_errors": _join(outcome.component_errors),
            }
            for record in records
            for method, outcome in record.outcomes.items()
        ]
        frame = pd.DataFrame(rows, columns=TRIALS_COLUMNS)
        # nullable integers keep the column integral when some entries are missing
        frame["iterations"] = frame["iterations"].astype("Int64")
        return self._write(frame, self.TRIALS_FILE)
