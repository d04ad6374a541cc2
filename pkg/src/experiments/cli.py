# src/experiments/cli.py
import logging
import sys
from typing import Optional, Sequence

from ..config import configure_logging, load_settings
from ..linalg.sparse import SolverError
from .runner import default_output_path, run
from .spec import SpecError, parse_args, spec_from_args

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID_SPEC = 1
EXIT_SOLVER_FAILURE = 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse flags, run the sweep and write the reports; returns the process exit code"""
    try:
        args = parse_args(argv)
        settings = load_settings(args.settings)
        configure_logging(settings)
        spec = spec_from_args(args)
    except SpecError as e:
        print(str(e), file=sys.stderr)
        return EXIT_INVALID_SPEC
    except ValueError as e:
        print(f"invalid settings: {e}", file=sys.stderr)
        return EXIT_INVALID_SPEC

    try:
        run(spec, settings)
    except (SolverError, FloatingPointError) as e:
        logger.error(f"Solver failure: {e}")
        return EXIT_SOLVER_FAILURE
    except ValueError as e:
        logger.error(f"Invalid input: {e}")
        return EXIT_INVALID_SPEC
    logger.info(f"Done: {default_output_path(spec, settings)}")
    return EXIT_OK
