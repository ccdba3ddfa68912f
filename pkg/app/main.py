"""Command-line entry point: ``python -m app.main <subcommand>``."""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, NoReturn, Optional

from pydantic import ValidationError

from app.cli.commands import cmd_experiment, cmd_oracle, cmd_solve
from app.core.config import settings
from app.core.exceptions import InputError, NumericalError, UsageError
from app.solvers.service import METHODS as SOLVERS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class ArgumentParser(argparse.ArgumentParser):
    """Parser that reports usage mistakes as UsageError instead of exiting with 2."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> ArgumentParser:
    """Build the argument parser with its three subcommands."""
    parser = ArgumentParser(
        prog="qls",
        description="Least squares with quantized data matrices: OLS, TLS, ridge and robust estimators."
    )
    parser.add_argument("--version", action="version", version=f"{settings.APP_NAME} {settings.APP_VERSION}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Log warnings and errors only")
    sub = parser.add_subparsers(dest="command", metavar="{solve,experiment,oracle}")
    sub.required = True

    solve = sub.add_parser("solve", help="Solve one problem from CSV files")
    solve.add_argument("--matrix", type=Path, required=True, help="CSV file holding A")
    solve.add_argument("--rhs", type=Path, required=True, help="CSV file holding b")
    solve.add_argument("--method", choices=["ols", "tls", "rr", "ro", "rro"], required=True)
    bound = solve.add_mutually_exclusive_group()
    bound.add_argument("--delta", type=float, help="Fixed-point bound |Delta_ij| <= delta")
    bound.add_argument("--digit", type=int, help="Rounding digit d, i.e. delta = 0.5 * 10^-d")
    bound.add_argument("--box", type=Path, help="CSV file holding the bound matrix D")
    bound.add_argument("--proportional", type=float, help="Bound D = p |A|")
    reg = solve.add_mutually_exclusive_group()
    reg.add_argument("--lambda", dest="lam", type=float, help="Regularization parameter")
    reg.add_argument("--select", choices=["gcv", "mdp"], help="Choose lambda automatically")
    solve.add_argument("--noise-var", type=float, help="Noise variance for --select mdp")
    solve.add_argument("--quantile", type=float, help="Chi-squared quantile for --select mdp")
    solve.add_argument("--solver", choices=list(SOLVERS), default="quasi_newton")
    solve.add_argument("--max-iters", type=int, help="Solver iteration budget")
    solve.add_argument("--init", choices=["zero", "random"], default="zero", help="Robust solver start")
    solve.add_argument("--seed", type=int, default=0, help="Seed for --init random")
    solve.add_argument("--json", action="store_true", help="Print one JSON object")
    solve.set_defaults(handler=cmd_solve)

    experiment = sub.add_parser("experiment", help="Run a Monte-Carlo study")
    experiment.add_argument("--config", type=Path, required=True, help="key=value experiment file")
    experiment.add_argument("--out-dir", type=Path, required=True, help="Directory for the CSV outputs")
    experiment.add_argument("--trials", type=int, help="Override the number of trials")
    experiment.add_argument("--seed", type=int, help="Override base_seed")
    experiment.add_argument("--threads", type=int, default=None, help="Worker threads")
    experiment.add_argument("--dump-trials", action="store_true", help="Also write trials.csv")
    experiment.set_defaults(handler=cmd_experiment)

    oracle = sub.add_parser("oracle", help="Check the closed-form objective by corner enumeration")
    oracle.add_argument("--matrix", type=Path, required=True, help="CSV file holding A")
    oracle.add_argument("--rhs", type=Path, required=True, help="CSV file holding b")
    oracle.add_argument("--box", type=Path, required=True, help="CSV file holding D")
    oracle.add_argument("--x", type=Path, required=True, help="CSV file holding x")
    oracle.add_argument("--json", action="store_true", help="Print one JSON object")
    oracle.set_defaults(handler=cmd_oracle)

    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Send log records to standard error; standard output carries results only."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else settings.LOG_LEVEL
    logging.basicConfig(level=level, format=settings.LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the CLI.

    Returns:
        0 on success, 1 for usage or input errors, 2 for numerical failures
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_INPUT

    configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except (InputError, ValidationError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_INPUT
    except NumericalError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
