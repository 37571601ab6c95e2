import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from experiments.fig3 import run_fig3
from experiments.measure import run_measure
from experiments.output import emit, sidecar_path
from experiments.saturation import COLUMNS as SATURATION_COLUMNS, run_saturation
from experiments.transversal import COLUMNS as TRANSVERSAL_COLUMNS, run_transversal
from experiments.verify import run_verify
from system.colored_logger import setup_colored_logging, get_colored_logger
from system.config_validator import load_configuration
from system.console_utils import (
    Colors, MessageType, print_bound, print_header, print_message, print_status, print_table
)
from system.core import get_seed
from system.error_handling import EXIT_OK, exit_code_for, handle_exceptions, setup_error_handling
from system.errors import BoundViolationError, CertificationError
from system.status_monitor import StatusMonitor

COMMANDS = ["measure", "fig3", "scaling", "saturation", "transversal", "verify"]
DEFAULT_FORMATS = {"measure": "json", "verify": "json", "fig3": "csv", "saturation": "csv", "transversal": "csv"}


def setup_logging(level: str, log_file: Optional[str]) -> logging.Logger:
    """Colored console logging on stderr plus an optional plain log file"""
    setup_colored_logging(getattr(logging, level))
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
        logging.getLogger().addHandler(file_handler)
    return get_colored_logger("main")


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments"""
    parser = argparse.ArgumentParser(
        prog="covqec",
        description="Covariant quantum error correction: trade-off measures and bounds",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
{Colors.CYAN}Example commands:{Colors.RESET}
  covqec measure --config config/thermo_erasure.conf --out thermo.json
  covqec fig3 --config config/fig3.conf --out fig3.csv --jobs 4
  covqec saturation --config config/saturation.conf --format json
  covqec transversal --config config/transversal.conf
  covqec verify --quick

The environment variable COVQEC_SEED overrides the default seed 0.
"""
    )
    parser.add_argument("command", choices=COMMANDS, help="Experiment to run; scaling is an alias of fig3")
    parser.add_argument("--config", default=None, help="Flat key = value configuration file")
    parser.add_argument("--out", default=None, help="Output file, stdout by default")
    parser.add_argument("--format", choices=["csv", "json"], default=None,
                        help="Output format; json for measure and verify, csv otherwise")
    parser.add_argument("--jobs", type=int, default=1, help="Worker processes for grid experiments")
    parser.add_argument("--quick", action="store_true", help="verify: smaller random samples and grids")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        help="Overrides system.log_level")
    parser.add_argument("--log-file", default=None, help="Also write the log to this file")
    return parser.parse_args(argv)


def _summarize(out: Optional[str], title: str, rows: List[List[Any]], headers: List[str]) -> None:
    """Console table, only when the result goes to a file"""
    if out is None:
        return
    print_header(title)
    print_table(rows, headers)


def cmd_measure(config: Dict[str, Any], args: argparse.Namespace) -> None:
    monitor = StatusMonitor()
    report = run_measure(config, monitor)
    fmt = args.format or DEFAULT_FORMATS["measure"]
    if fmt == "csv":
        emit([bound.to_dict() for bound in report.bounds], fmt, args.out)
        if args.out is not None:
            emit(report.to_dict(), "json", sidecar_path(args.out, "report"))
    else:
        emit(report.to_dict(), fmt, args.out)
    if args.out is not None:
        print_header(f"{report.code['name']} under {report.noise['name']}")
        for bound in report.bounds:
            if not bound.skipped:
                print_bound(bound.name, not bound.violated, bound.slack)
        monitor.display_status()
    if report.violations:
        raise BoundViolationError(f"{len(report.violations)} bounds violated: "
                                  f"{', '.join(b.name for b in report.violations)}")
    if report.checks:
        raise CertificationError(f"{len(report.checks)} consistency checks failed: {report.checks[0]}")


def cmd_fig3(config: Dict[str, Any], args: argparse.Namespace) -> None:
    result = run_fig3(config, args.jobs)
    fmt = args.format or DEFAULT_FORMATS["fig3"]
    if fmt == "csv":
        emit(result["rows"], fmt, args.out)
        if args.out is not None:
            emit(result["slopes"], "json", sidecar_path(args.out, "slopes"))
    else:
        emit(result, fmt, args.out)
    _summarize(args.out, "Log-log slopes",
               [[s["q"], s["measure"], s["slope"], s["expected"], s["within"]] for s in result["slopes"]],
               ["q", "measure", "slope", "expected", "within"])


def cmd_saturation(config: Dict[str, Any], args: argparse.Namespace) -> None:
    result = run_saturation(config, args.jobs)
    fmt = args.format or DEFAULT_FORMATS["saturation"]
    if fmt == "csv":
        emit(result["rows"], fmt, args.out, SATURATION_COLUMNS)
        if args.out is not None:
            emit(result["asymptotes"], "json", sidecar_path(args.out, "asymptotes"))
    else:
        emit(result, fmt, args.out)
    _summarize(args.out, "Saturation asymptotes",
               [[a["q"], a["ratio"], a["at_largest_n"], a["limit"], a["target"]] for a in result["asymptotes"]],
               ["q", "ratio", "largest n", "limit", "target"])


def cmd_transversal(config: Dict[str, Any], args: argparse.Namespace) -> None:
    result = run_transversal(config)
    fmt = args.format or DEFAULT_FORMATS["transversal"]
    if fmt == "csv":
        emit(result["rows"], fmt, args.out, TRANSVERSAL_COLUMNS)
    else:
        emit(result, fmt, args.out)
    _summarize(args.out, "Transversal precision caps",
               [[r["n"], r["cap"], r["power_of_two_cap"], r["level_cap"], r["rm_denominator"]] for r in result["rows"]],
               ["n", "cap", "2^level", "level", "RM D"])


def cmd_verify(config: Dict[str, Any], args: argparse.Namespace) -> None:
    monitor = StatusMonitor()
    report = run_verify(quick=args.quick, jobs=args.jobs, monitor=monitor)
    fmt = args.format or DEFAULT_FORMATS["verify"]
    if fmt == "csv":
        emit([check.to_dict() for check in report.checks], fmt, args.out)
    else:
        emit(report.to_dict(), fmt, args.out)
    if args.out is not None:
        for criterion, counts in report.summary().items():
            status = "PASS" if counts["passed"] == counts["total"] else "FAIL"
            print_status(status, f"{criterion}: {counts['passed']}/{counts['total']}")
        for check in report.failures:
            print_message(f"{check.criterion} / {check.name}: {check.value} not in {check.expected} {check.detail}",
                          MessageType.ERROR)
    if not report.passed:
        raise CertificationError(f"{len(report.failures)} acceptance checks failed")


HANDLERS = {
    "measure": cmd_measure,
    "fig3": cmd_fig3,
    "scaling": cmd_fig3,
    "saturation": cmd_saturation,
    "transversal": cmd_transversal,
    "verify": cmd_verify,
}


@handle_exceptions
def run_command(args: argparse.Namespace) -> None:
    logging.getLogger("main").info(f"covqec {args.command} (seed {get_seed()})")
    config = load_configuration(args.config)
    if args.log_level is None:
        logging.getLogger().setLevel(getattr(logging, config["system"]["log_level"]))
    HANDLERS[args.command](config, args)


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point for the covqec command"""
    args = parse_arguments(argv)
    logger = setup_logging(args.log_level or "INFO", args.log_file)
    setup_error_handling()
    try:
        run_command(args)
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 130
    except Exception as e:
        return exit_code_for(e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
