"""
Main entry point for the volcano-potential simulation toolkit.

Usage:
    python main.py <command> [flags]

Commands: potential, simulate, sweep, compare, classify. Exit status is 0 on
success, 1 on a usage error and 2 on a numerical failure.
"""

import argparse
import sys
from typing import List, Optional
from rich.console import Console
from tools.command_tools import run_command
from tools.csv_tools import render_csv, write_csv
from utils.config import VERSION, logger
from utils.exceptions import UsageError
from utils.helpers import load_config_file, parse_finite

BOOLEAN_FLAGS = {"literal_dots", "driven"}
TRUE_VALUES = {"1", "true", "yes", "on"}


class CliParser(argparse.ArgumentParser):
    """Argument parser that raises UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message)


def finite(text: str) -> float:
    try:
        return parse_finite("value", text)
    except UsageError as e:
        raise argparse.ArgumentTypeError(str(e))


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> CliParser:
    """Command-line parser with one subcommand per experiment family."""
    common = CliParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--output", help="write results here instead of stdout")
    common.add_argument("--omega2", type=finite, help="squared natural frequency (default 1)")
    common.add_argument("--lambda", dest="lam", type=finite, help="quartic coefficient (default 0.1)")
    common.add_argument("--ratio", type=finite, help="drive ratio eps^2 omega^2 / Omega^2")
    common.add_argument("--epsilon", type=finite, help="drive amplitude")
    common.add_argument("--omega-drive", type=finite, help="drive frequency Omega")
    common.add_argument("--literal-dots", action="store_true", default=None,
                        help="read the dotted squares as squared rates")

    orbit = CliParser(add_help=False)
    orbit.add_argument("--mode", choices=["uncoupled", "partial", "full", "skewed"],
                       help="coupling mode (default full)")
    orbit.add_argument("--gamma", type=finite, help="skewness slope for --mode skewed")
    orbit.add_argument("--w0", type=finite, help="initial width (default 0.1)")
    orbit.add_argument("--w0-accel", type=finite, help="initial width acceleration (default 0.01)")
    orbit.add_argument("--horizon", type=finite, help="observation time")

    stepping = CliParser(add_help=False)
    stepping.add_argument("--method", choices=["rk4", "rk45"])
    stepping.add_argument("--h", type=finite, help="RK4 step size")
    stepping.add_argument("--rel-tol", type=finite)
    stepping.add_argument("--abs-tol", type=finite)
    stepping.add_argument("--stride", type=positive_int, help="keep every n-th step")
    stepping.add_argument("--escape-threshold", type=finite)

    parser = CliParser(prog="volcano", description="Driven double well and volcano-potential escape")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)

    potential = commands.add_parser("potential", parents=[common], help="tabulate a potential")
    potential.add_argument("--xmin", type=finite)
    potential.add_argument("--xmax", type=finite)
    potential.add_argument("--samples", type=positive_int)
    potential.add_argument("--kind", choices=["slow", "bare"])

    simulate = commands.add_parser("simulate", parents=[common, orbit, stepping], help="integrate one orbit")
    simulate.add_argument("--x0", type=finite)
    simulate.add_argument("--v0", type=finite)
    simulate.add_argument("--w0-rate", type=finite)
    simulate.add_argument("--driven", action="store_true", default=None,
                          help="integrate the driven moment system instead")

    sweep = commands.add_parser("sweep", parents=[common, orbit], help="escape boundary over initial widths")
    sweep.add_argument("--w0-min", type=finite)
    sweep.add_argument("--w0-max", type=finite)
    sweep.add_argument("--w0-steps", type=positive_int)
    sweep.add_argument("--bisect-tol", type=finite)
    sweep.add_argument("--jobs", type=positive_int, help="worker processes (default VOLCANO_JOBS)")

    compare = commands.add_parser("compare", parents=[common], help="driven vs averaged dynamics")
    compare.add_argument("--system", choices=["classical", "quantum"])
    compare.add_argument("--x0", type=finite)
    compare.add_argument("--w0", type=finite)
    compare.add_argument("--w0-accel", type=finite)
    compare.add_argument("--horizon", type=finite)

    classify = commands.add_parser("classify", parents=[common, orbit], help="bounded or escaped")
    classify.add_argument("--x0", type=finite)
    classify.add_argument("--escape-threshold", type=finite)
    classify.add_argument("--rel-tol", type=finite)
    classify.add_argument("--abs-tol", type=finite)

    return parser


def config_tokens(file_path: str) -> List[str]:
    """Turn a configuration file into flag tokens placed ahead of the real flags."""
    tokens = []
    for key, value in load_config_file(file_path).items():
        if key == "config":
            continue
        flag = f"--{key.replace('_', '-')}"
        if key in BOOLEAN_FLAGS:
            if value.lower() in TRUE_VALUES:
                tokens.append(flag)
        else:
            tokens.extend([flag, value])
    return tokens


def merge_config(argv: List[str]) -> List[str]:
    """Splice config-file values in after the command so later flags win."""
    pre = CliParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config is None or not argv:
        return argv
    return argv[:1] + config_tokens(known.config) + argv[1:]


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse a command line, run the command and emit its output.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Exit status
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    console = Console(stderr=True)

    try:
        args = build_parser().parse_args(merge_config(argv))
    except SystemExit as e:
        return int(e.code or 0)
    except UsageError as e:
        console.print(f"error: {e}", style="red", markup=False, soft_wrap=True)
        return 1

    settings = {key: value for key, value in vars(args).items() if value is not None}
    command = settings.pop("command")
    output = settings.get("output")
    result = run_command(command, settings)

    if "frame" in result or "text" in result:
        try:
            if "frame" in result:
                if output:
                    write_csv(result["frame"], output, result["meta"])
                else:
                    sys.stdout.write(render_csv(result["frame"], result["meta"]))
            elif output:
                with open(output, "w", encoding="utf-8", newline="") as handle:
                    handle.write(result["text"] + "\n")
            else:
                sys.stdout.write(result["text"] + "\n")
        except OSError as e:
            logger.error(f"Could not write output: {e}")
            console.print(f"error: could not write output: {e}", style="red", markup=False, soft_wrap=True)
            return 1

    if result.get("summary"):
        console.print(result["summary"], markup=False, soft_wrap=True)
    if not result["success"]:
        console.print(f"error: {result['error']}", style="red", markup=False, soft_wrap=True)
    return result["exit_code"]


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
