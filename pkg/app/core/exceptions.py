"""Custom exception classes for the application."""
from typing import Iterable, Sequence


class QuantLSError(Exception):
    """
    Base exception for every error raised by the library.

    The CLI maps subclasses of InputError to exit code 1 and subclasses of
    NumericalError to exit code 2.
    """
    pass


class InputError(QuantLSError, ValueError):
    """Raised when the caller supplied malformed data or options."""
    pass


class NumericalError(QuantLSError):
    """Raised when a well-formed problem cannot be solved numerically."""
    pass


class ShapeMismatchError(InputError):
    """
    Raised when array shapes are incompatible.

    Attributes:
        expected: Human-readable description of the expected shape
        actual: The shape that was received
    """

    def __init__(self, what: str, expected: object, actual: object) -> None:
        """
        Initialize the exception.

        Args:
            what: Name of the offending argument
            expected: Expected shape or length
            actual: Received shape or length
        """
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected shape {expected}, got {actual}")


class NonFiniteInputError(InputError):
    """Raised when an input array holds NaN or infinite entries."""

    def __init__(self, what: str) -> None:
        super().__init__(f"{what} contains NaN or infinite entries")


class SizeLimitError(InputError):
    """
    Raised when the corner enumeration oracle is asked for too many entries.

    Attributes:
        entries: m*n of the rejected instance
        limit: Largest accepted m*n
    """

    def __init__(self, entries: int, limit: int) -> None:
        self.entries = entries
        self.limit = limit
        super().__init__(
            f"corner enumeration needs 2^{entries} evaluations; "
            f"m*n must be at most {limit}"
        )


class ConfigError(InputError):
    """
    Raised when an experiment configuration cannot be validated.

    Attributes:
        keys: Offending configuration keys, in file order when known
    """

    def __init__(self, keys: Sequence[str], details: Iterable[str] = ()) -> None:
        self.keys = list(keys)
        message = f"invalid experiment configuration; offending keys: {', '.join(self.keys)}"
        details = list(details)
        if details:
            message += "\n" + "\n".join(f"  - {line}" for line in details)
        super().__init__(message)


class UsageError(InputError):
    """Raised for command-line usage mistakes."""
    pass


class ConvergenceFailureError(NumericalError):
    """Raised when an underlying LAPACK iteration does not converge."""

    def __init__(self, routine: str, reason: str) -> None:
        super().__init__(f"{routine} did not converge: {reason}")


class NotPositiveDefiniteError(NumericalError):
    """Raised when a Cholesky factorization meets a non-positive pivot."""

    def __init__(self, reason: str = "matrix is not positive definite") -> None:
        super().__init__(reason)


class RankDeficientError(NumericalError):
    """
    Raised when A does not have full column rank.

    Attributes:
        sigma_min: Smallest singular value of A
        sigma_max: Largest singular value of A
    """

    def __init__(self, sigma_min: float, sigma_max: float) -> None:
        self.sigma_min = sigma_min
        self.sigma_max = sigma_max
        super().__init__(
            f"matrix is rank deficient (sigma_min={sigma_min:.3e}, sigma_max={sigma_max:.3e})"
        )


class NonGenericTLSError(NumericalError):
    """
    Raised when the TLS problem has no well-defined closed form solution.

    Happens when the smallest singular value of [A b] is not strictly below
    the smallest singular value of A, so A^T A - sigma^2 I is not positive
    definite.
    """

    def __init__(self, sigma_np1: float, sigma_n: float) -> None:
        self.sigma_np1 = sigma_np1
        self.sigma_n = sigma_n
        super().__init__(
            f"non-generic TLS instance: sigma_n+1([A b])={sigma_np1:.17g} "
            f"is not below sigma_n(A)={sigma_n:.17g}"
        )


class InfeasibleTargetError(NumericalError):
    """Raised when the discrepancy target lies below the least-squares residual."""

    def __init__(self, rho: float, floor: float) -> None:
        self.rho = rho
        self.floor = floor
        super().__init__(
            f"discrepancy target rho={rho:.6g} is below the least-squares residual {floor:.6g}"
        )


class BracketExhaustedError(NumericalError):
    """Raised when lambda doubling passes the cap without bracketing the target."""

    def __init__(self, rho: float, cap: float) -> None:
        super().__init__(f"could not bracket rho={rho:.6g} with lambda <= {cap:.3g}")


class DegenerateSignalError(NumericalError):
    """Raised when the noiseless observation is identically zero."""

    def __init__(self) -> None:
        super().__init__("b_bar = A_bar x_bar is zero; SNR-calibrated noise is undefined")


class DegenerateSampleError(NumericalError):
    """Raised when a density estimate is requested for a sample without spread."""

    def __init__(self, size: int) -> None:
        super().__init__(f"cannot estimate a density from {size} samples with zero spread")
