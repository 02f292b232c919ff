"""
Bessel Exit-Time Command Line
Evaluates exit-time densities, manages zero tables, runs simulations and the validation suites

    python bessel_exit.py density --mu 0.5 --boundary one --t 0.5 --x 0.3
    python bessel_exit.py zeros --mu 0 --n 5
    python bessel_exit.py simulate --mu -0.5 --zero-boundary kill --x0 0.5 --seed 7 --compare
    python bessel_exit.py validate --suite exitlaw --quick
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

# Add current directory to path
sys.path.append(str(Path(__file__).parent))

import config
from src.engine import ROW_FIELDS, DensityEngine
from src.errors import BesselExitError, ValidationFailure
from src.exitlaw import Boundary
from src.mc import (
    SAMPLE_FIELDS,
    SimConfig,
    check_anomalies,
    check_timeouts,
    empirical_vs_analytic,
    run_simulation,
    summarize,
)
from src.methods import METHOD_NAMES
from src.reporting import RunManifest, current_settings, render, write_output
from src.special import Index, SeriesConfig, ZeroBoundary
from src.validation import SUITES, compare_constants, run_suite
from src.zero_store import configure_zero_store, get_zero_store, status

EXIT_OK = 0
EXIT_USAGE = 2
ZERO_FIELDS = ("k", "zero")


# ============================================================================
# ARGUMENT PARSING HELPERS
# ============================================================================
def parse_values(text: str) -> List[float]:
    """Comma-separated list of numbers"""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers separated by commas, got '{text}'") from None


def parse_grid(text: str) -> List[float]:
    """
    Grid specification lo:hi:n[:log]

    Args:
        text: e.g. "0.01:1:50:log"

    Returns:
        n points from lo to hi inclusive, geometrically spaced with ':log'
    """
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("log", "lin")):
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:n[:log], got '{text}'")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:n[:log], got '{text}'") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"grid needs at least one point, got n={n}")
    if len(parts) == 4 and parts[3] == "log":
        if lo <= 0 or hi <= 0:
            raise argparse.ArgumentTypeError("log grids need positive end points")
        return [float(v) for v in np.geomspace(lo, hi, n)]
    return [float(v) for v in np.linspace(lo, hi, n)]


def resolve_boundary(mu: float, boundary: str) -> Tuple[Index, Boundary]:
    """
    Map the --boundary flag to an index convention and an exit boundary

    reflecting: exit through 1 with the origin reflecting (mu > -1)
    one: exit through 1; killing at the origin when mu < 0
    zero: exit through 0 under the killing convention (mu < 0)
    """
    if boundary == "reflecting":
        return Index(mu=mu, zero_boundary=ZeroBoundary.REFLECTING), Boundary.ONE
    if boundary == "one":
        convention = ZeroBoundary.KILLING if mu < 0 else ZeroBoundary.NOT_APPLICABLE
        return Index(mu=mu, zero_boundary=convention), Boundary.ONE
    return Index(mu=mu, zero_boundary=ZeroBoundary.KILLING), Boundary.ZERO


def simulation_index(mu: float, zero_boundary: str) -> Index:
    if zero_boundary == "kill":
        return Index(mu=mu, zero_boundary=ZeroBoundary.KILLING)
    return Index(mu=mu, zero_boundary=ZeroBoundary.REFLECTING if mu < 0 else ZeroBoundary.NOT_APPLICABLE)


def _manifest(args: argparse.Namespace, seed: Optional[int] = None, simulation: Optional[SimConfig] = None) -> RunManifest:
    arguments = {
        key: (str(value) if isinstance(value, Path) else value)
        for key, value in vars(args).items()
        if key != "handler"
    }
    return RunManifest(
        command=args.command,
        arguments=arguments,
        settings=current_settings(),
        seed=seed,
        simulation=simulation.model_dump() if simulation is not None else None,
    )


def _series_config(tol: Optional[float]) -> Optional[SeriesConfig]:
    return SeriesConfig(abs_tol=tol, rel_tol=tol) if tol is not None else None


# ============================================================================
# SUB-COMMANDS
# ============================================================================
def cmd_density(args: argparse.Namespace) -> int:
    """Evaluate an exit density on a t-by-x grid"""
    index, boundary = resolve_boundary(args.mu, args.boundary)
    engine = DensityEngine(method=args.method, cfg=_series_config(args.tol), workers=args.workers)
    rows = engine.evaluate_grid(index, boundary, args.t or args.t_grid, args.x or args.x_grid)
    write_output(render(rows, ROW_FIELDS, args.format), args.out, _manifest(args))
    return EXIT_OK


def cmd_zeros(args: argparse.Namespace) -> int:
    """Print (and cache) the first n positive zeros of J_mu"""
    store = get_zero_store()
    table = store.get(args.mu, args.n)
    rows = [{"k": k, "zero": zero} for k, zero in enumerate(table.zeros[:args.n], start=1)]
    write_output(render(rows, ZERO_FIELDS, args.format), args.out, _manifest(args))
    stats = store.get_stats()
    status(f"📊 Zero store: {stats['hits']} hit(s), {stats['misses']} miss(es)")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    """Simulate exit times, write the samples CSV and the summary JSON"""
    index = simulation_index(args.mu, args.zero_boundary)
    cfg = SimConfig(
        step=args.step or config.SIM_STEP,
        max_time=args.max_time or config.SIM_MAX_TIME,
        n_paths=args.paths,
        seed=args.seed,
        bridge_correction=not args.no_bridge,
    )
    batch = run_simulation(index, args.x0, cfg, workers=args.workers)

    summary = {"mu": args.mu, "zero_boundary": index.zero_boundary.value, "x0": args.x0, **summarize(batch)}
    comparison = None
    if args.compare:
        comparison = empirical_vs_analytic(batch, index, args.x0)
        summary.update({key: value for key, value in comparison.items() if key != "summary"})

    manifest = _manifest(args, seed=args.seed, simulation=cfg)
    prefix = args.out_prefix
    write_output(render(batch.rows(), SAMPLE_FIELDS, "csv"), Path(f"{prefix}_samples.csv"), manifest)
    write_output(json.dumps(summary, indent=2) + "\n", Path(f"{prefix}_summary.json"), manifest)
    status(f"✓ Wrote {prefix}_samples.csv and {prefix}_summary.json")

    check_timeouts(batch, index, args.x0, cfg.max_time)
    if comparison is not None:
        check_anomalies(comparison)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    """Run the invariant suites and print a JSON report"""
    suites = SUITES if args.suite == "all" else (args.suite,)
    reports = [run_suite(name, quick=args.quick) for name in suites]
    report = {
        "passed": all(r.passed for r in reports),
        "suites": [r.model_dump() | {"passed": r.passed} for r in reports],
    }

    if args.archive is not None:
        constants = {r.suite: r.constants for r in reports if r.constants}
        if args.archive.is_file():
            archived = json.loads(args.archive.read_text())
            drift = compare_constants(constants, archived.get("constants", {}))
            report["archive"] = drift.model_dump()
            report["passed"] = report["passed"] and drift.passed
        args.archive.parent.mkdir(parents=True, exist_ok=True)
        args.archive.write_text(json.dumps({"constants": constants}, indent=2) + "\n")
        status(f"✓ Archived sandwich constants to {args.archive}")

    write_output(json.dumps(report, indent=2) + "\n", args.out, _manifest(args))
    if not report["passed"]:
        failed = [c.name for r in reports for c in r.checks if not c.passed]
        if "archive" in report and not report["archive"]["passed"]:
            failed.append("archived_constants")
        raise ValidationFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    return EXIT_OK


# ============================================================================
# COMMAND LINE INTERFACE
# ============================================================================
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bessel_exit",
        description="Exit-time densities of the Bessel process from the unit interval",
    )
    # Shared by every sub-command
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cache-dir", type=Path, default=None,
                        help="Zero-table cache directory (default: $BESSEL_EXIT_CACHE or data/zeros)")
    common.add_argument("--workers", type=int, default=None,
                        help=f"Worker processes (default: {config.WORKERS})")
    commands = parser.add_subparsers(dest="command", required=True)

    density = commands.add_parser("density", parents=[common], help="Evaluate exit-time densities")
    density.add_argument("--mu", type=float, required=True, help="Bessel index")
    density.add_argument("--boundary", choices=("one", "zero", "reflecting"), default="one",
                         help="Exit boundary and convention at the origin (default: one)")
    times = density.add_mutually_exclusive_group(required=True)
    times.add_argument("--t", type=parse_values, help="Time(s), comma separated")
    times.add_argument("--t-grid", type=parse_grid, help="Time grid lo:hi:n[:log]")
    starts = density.add_mutually_exclusive_group(required=True)
    starts.add_argument("--x", type=parse_values, help="Starting point(s), comma separated")
    starts.add_argument("--x-grid", type=parse_grid, help="Starting-point grid lo:hi:n[:log]")
    density.add_argument("--method", choices=METHOD_NAMES, default="auto", help="Evaluator (default: auto)")
    density.add_argument("--tol", type=float, default=None, help="Series tolerance, absolute and relative")
    density.add_argument("--format", choices=("csv", "json"), default="csv")
    density.add_argument("--out", type=Path, default=None, help="Output file (default: stdout)")
    density.set_defaults(handler=cmd_density)

    zeros = commands.add_parser("zeros", parents=[common], help="Print or extend a zero table")
    zeros.add_argument("--mu", type=float, required=True, help="Bessel index, mu > -1")
    zeros.add_argument("--n", type=int, required=True, help="Number of zeros")
    zeros.add_argument("--format", choices=("csv", "json"), default="csv")
    zeros.add_argument("--out", type=Path, default=None, help="Output file (default: stdout)")
    zeros.set_defaults(handler=cmd_zeros)

    simulate = commands.add_parser("simulate", parents=[common], help="Monte Carlo exit times")
    simulate.add_argument("--mu", type=float, required=True, help="Bessel index")
    simulate.add_argument("--zero-boundary", choices=("reflect", "kill"), default="reflect")
    simulate.add_argument("--x0", type=float, required=True, help="Start in (0, 1)")
    simulate.add_argument("--paths", type=int, default=10_000, help="Number of paths (default: 10000)")
    simulate.add_argument("--step", type=float, default=None, help=f"Time step (default: {config.SIM_STEP:g})")
    simulate.add_argument("--max-time", type=float, default=None,
                          help=f"Paths still inside at this time are reported as timeouts (default: {config.SIM_MAX_TIME:g})")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--no-bridge", action="store_true", help="Disable the Brownian-bridge correction")
    simulate.add_argument("--compare", action="store_true", help="Add KS distances against the analytic laws")
    simulate.add_argument("--out-prefix", default="simulation",
                          help="Writes <prefix>_samples.csv and <prefix>_summary.json (default: simulation)")
    simulate.set_defaults(handler=cmd_simulate)

    validate = commands.add_parser("validate", parents=[common], help="Run the invariant suites")
    validate.add_argument("--suite", choices=SUITES + ("all",), default="all")
    size = validate.add_mutually_exclusive_group()
    size.add_argument("--quick", dest="quick", action="store_true", default=True, help="Small grids (default)")
    size.add_argument("--full", dest="quick", action="store_false", help="Refined grids and sample counts")
    validate.add_argument("--archive", type=Path, default=None,
                          help="JSON file of sandwich constants to compare with and update")
    validate.add_argument("--out", type=Path, default=None, help="Report file (default: stdout)")
    validate.set_defaults(handler=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Command line entry point

    Returns:
        Exit code: 0 ok, 1 validation failure, 2 usage, 3 domain, 4 truncation, 5 simulation anomaly
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        config.validate_config()
        configure_zero_store(args.cache_dir or config.ZERO_CACHE_DIR or config.DEFAULT_ZERO_CACHE_DIR)
        return args.handler(args)
    except BesselExitError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except (ValidationError, ValueError) as e:
        message = str(e).splitlines()[0] if str(e) else type(e).__name__
        print(f"❌ Invalid arguments: {message}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
