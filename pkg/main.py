"""Command-line entry point: python main.py <subcommand> ..."""
import sys
import os

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from typing import List, Optional

import structlog

from commands.routes import build_parser
from core.errors import BadmmError, SolverError, exit_code_for
from core.logging import configure_logging

logger = structlog.get_logger(__name__)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level, args.log_format)
    try:
        return args.func(args)
    except SolverError as e:
        iterations = len(e.trace) if e.trace is not None else None
        logger.error("command_failed", command=args.command, error=str(e), completed_iterations=iterations)
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
    except (BadmmError, ValueError, OSError, ArithmeticError) as e:
        logger.error("command_failed", command=args.command, error=str(e), error_type=type(e).__name__)
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
