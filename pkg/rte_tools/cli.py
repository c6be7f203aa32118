import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from rte_tools.commands import cmd_convergence, cmd_run, cmd_sweep, cmd_verify
from rte_tools.exceptions import (
    ConfigurationError,
    FactorizationFormatError,
    NumericalError,
    VerificationFailure,
)


logger = logging.getLogger()

EXIT_OK = 0
EXIT_CONFIGURATION = 1
EXIT_NUMERICAL = 2
EXIT_VERIFICATION = 3
EXIT_CACHE = 4


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rte",
        description="Multiscale time-dependent radiative transport solver",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker threads for the offline phase, 0 for all cores",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "time series for one run config"),
        ("convergence", "manufactured-solution convergence study"),
        ("sweep", "threshold sweep on a multiscale benchmark"),
    ):
        command = commands.add_parser(name, help=text)
        command.add_argument("config", type=Path)
    verify = commands.add_parser(
        "verify", help="oracle, nested-basis and eigen verification suites"
    )
    verify.add_argument("--max-I", dest="max_I", type=int, default=16)
    verify.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(message)s",
    )
    try:
        if args.command == "run":
            written = cmd_run(args.config, args.threads)
        elif args.command == "convergence":
            written = cmd_convergence(args.config, args.threads)
        elif args.command == "sweep":
            written = cmd_sweep(args.config, args.threads)
        else:
            for result in cmd_verify(args.max_I, args.seed, args.threads):
                print(result)
            return EXIT_OK
        for path in written.values():
            print(path)
        return EXIT_OK
    except ConfigurationError as e:
        print(str(e), file=sys.stderr)
        for error in e.errors:
            print(f"  {error}", file=sys.stderr)
        return EXIT_CONFIGURATION
    except NumericalError as e:
        print(f"Numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VerificationFailure as e:
        print(str(e), file=sys.stderr)
        for error in e.errors:
            print(f"  {error}", file=sys.stderr)
        return EXIT_VERIFICATION
    except FactorizationFormatError as e:
        print(f"Unusable cached factorization: {e}", file=sys.stderr)
        print("  clear the directory in RTE_CACHE_DIR", file=sys.stderr)
        return EXIT_CACHE


if __name__ == "__main__":
    sys.exit(main())
