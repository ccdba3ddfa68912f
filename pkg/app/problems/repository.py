"""Plain CSV storage for matrices and vectors."""
import logging
from pathlib import Path
from typing import List

import numpy as np

from app.core.exceptions import InputError, ShapeMismatchError
from app.core.linalg import as_matrix, as_vector

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _read_rows(path: Path) -> List[List[float]]:
    """
    Parse a headerless comma-separated file into rows of floats.

    Blank lines are ignored. Ragged rows are rejected.

    Raises:
        InputError: If the file cannot be read or a field is not a number
        ShapeMismatchError: If rows have different lengths
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e

    rows: List[List[float]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = [float(field) for field in line.split(",")]
        except ValueError as e:
            raise InputError(f"{path}:{line_no}: {e}") from e
        if rows and len(row) != len(rows[0]):
            raise ShapeMismatchError(f"{path}:{line_no}", f"{len(rows[0])} columns", f"{len(row)} columns")
        rows.append(row)

    if not rows:
        raise InputError(f"{path} holds no data")
    return rows


def read_matrix(path: Path) -> np.ndarray:
    """Read an m x n matrix, one row per line."""
    matrix = as_matrix(_read_rows(path), str(path))
    logger.debug(f"Read {matrix.shape} matrix from {path}")
    return matrix


def read_vector(path: Path) -> np.ndarray:
    """
    Read a vector stored either as one value per line or as a single row.

    Raises:
        ShapeMismatchError: If the file holds a genuine matrix
    """
    rows = np.array(_read_rows(path))
    if rows.shape[0] != 1 and rows.shape[1] != 1:
        raise ShapeMismatchError(str(path), "a single row or column", rows.shape)
    return as_vector(rows.ravel(), str(path))


def write_matrix(path: Path, matrix: object) -> None:
    """Write a matrix with full double precision."""
    np.savetxt(path, as_matrix(matrix), delimiter=",", fmt=FLOAT_FORMAT, newline="\n")


def write_vector(path: Path, vector: object) -> None:
    """Write a vector, one component per line."""
    np.savetxt(path, as_vector(vector), fmt=FLOAT_FORMAT, newline="\n")
