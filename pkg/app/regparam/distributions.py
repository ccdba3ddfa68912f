"""Chi-squared distribution function and its numeric inverse."""
from scipy import optimize, special

from app.core.exceptions import InputError


def chi2_cdf(q: float, dof: int) -> float:
    """P(X <= q) for X ~ chi^2(dof), the regularized lower incomplete gamma P(dof/2, q/2)."""
    if q <= 0:
        return 0.0
    return float(special.gammainc(dof / 2.0, q / 2.0))


def chi2_quantile(p: float, dof: int) -> float:
    """
    Inverse chi-squared CDF by bracketed root finding.

    The upper bracket starts at dof (the mean) and doubles until the CDF
    passes p; Brent's method then solves chi2_cdf(q) = p.

    Raises:
        InputError: If p is outside (0, 1) or dof < 1
    """
    if not 0.0 < p < 1.0:
        raise InputError(f"quantile level must lie in (0, 1), got {p}")
    if int(dof) != dof or dof < 1:
        raise InputError(f"degrees of freedom must be a positive integer, got {dof}")

    def excess(q: float) -> float:
        return chi2_cdf(q, dof) - p

    lo, hi = 0.0, float(dof)
    while excess(hi) < 0:
        lo, hi = hi, 2.0 * hi
    return float(optimize.brentq(excess, lo, hi, xtol=1e-12, maxiter=500))
