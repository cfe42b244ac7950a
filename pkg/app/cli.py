"""
Command-line front end

    fdmimo single-user --config configs/single_user.toml --trials 5000 --out su.csv --plot
    fdmimo optimize --covariance u1.csv u2.csv --m 8 --n 2 --out w.csv
    fdmimo validate --seeds 20
    fdmimo serve
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app.config import settings
from app.models.antenna import ArrayGeometry
from app.models.experiment import ExperimentConfig, ScenarioType
from app.models.optimization import SdbOptions
from app.core.errors import SimulatorError
from app.core.channel import ChannelSnapshot
from app.core.experiment_engine import ChannelSink, run_experiment
from app.core.results import ResultTable, export_csv, write_gnuplot_script
from app.core.sdb import weights_sdb
from app.core.validation import run_validation
from app.utils.logging import setup_logging
from app.utils.matrix_io import matrix_to_frame, read_covariance_csv, write_matrix_csv

logger = logging.getLogger(__name__)

SCENARIO_COMMANDS = {
    "pattern": ScenarioType.PATTERN_COMPARE,
    "corr": ScenarioType.CORR_COMPARE,
    "single-user": ScenarioType.SINGLE_USER,
    "multi-user": ScenarioType.MULTI_USER,
    "multi-cell": ScenarioType.MULTI_CELL,
}

# metric drawn by --plot
PLOT_METRIC = {
    ScenarioType.PATTERN_COMPARE: "gain_dbi",
    ScenarioType.CORR_COMPARE: "abs_rho_lag1",
    ScenarioType.SINGLE_USER: "rate",
    ScenarioType.MULTI_USER: "min_rate",
    ScenarioType.MULTI_CELL: "min_sir_db",
}

MONTE_CARLO_SCENARIOS = {ScenarioType.SINGLE_USER, ScenarioType.MULTI_USER, ScenarioType.MULTI_CELL}

EXIT_ERROR = 1
EXIT_VALIDATION_FAILED = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdmimo", description=settings.DESCRIPTION)
    parser.add_argument("--verbose", "-v", action="store_true", help="Log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, scenario in SCENARIO_COMMANDS.items():
        sub = commands.add_parser(name, help=f"Run the {scenario.value} study")
        sub.add_argument("--config", type=Path, help="TOML or JSON experiment file")
        sub.add_argument("--seed", type=int, help="Master seed")
        sub.add_argument("--trials", type=int, help="Channel realizations per sweep point")
        sub.add_argument("--threads", type=int, help="Worker threads over user drops")
        sub.add_argument("--out", help="CSV output path ('-' for stdout)")
        sub.add_argument("--plot", action="store_true", help="Write a gnuplot script next to the CSV")
        if scenario in MONTE_CARLO_SCENARIOS:
            sub.add_argument("--dump-channels", type=Path, metavar="DIR",
                             help="Write the first channel of every drop and strategy as matrix CSV")

    optimize = commands.add_parser("optimize", help="SDB weights for externally supplied covariances")
    optimize.add_argument("--covariance", type=Path, nargs="+", required=True,
                          help="Element covariance CSV per user (row, col, re, im)")
    optimize.add_argument("--m", type=int, required=True, help="Elements per port")
    optimize.add_argument("--n", type=int, required=True, help="Ports per row")
    optimize.add_argument("--gains", type=float, nargs="+", help="Large-scale power gain per user")
    optimize.add_argument("--seed", type=int, default=0, help="Randomization seed")
    optimize.add_argument("--out", help="Weight CSV path ('-' for stdout)")

    validate = commands.add_parser("validate", help="Run the invariant suite")
    validate.add_argument("--seeds", type=int, default=5, help="Number of seeds for seeded checks")
    validate.add_argument("--seed", type=int, default=0, help="First seed")
    validate.add_argument("--skip-optimizer", action="store_true", help="Skip the SDP-based checks")
    validate.add_argument("--out", help="CSV report path")

    serve = commands.add_parser("serve", help="Start the REST service")
    serve.add_argument("--host", default=settings.HOST)
    serve.add_argument("--port", type=int, default=settings.PORT)
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Experiment file (or defaults) with the command-line overrides applied"""
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    scenario = SCENARIO_COMMANDS[args.command]
    if config.general.scenario != scenario and args.config:
        logger.warning(f"{args.config} declares {config.general.scenario.value}; running {scenario.value}")
    return config.with_overrides(
        scenario=scenario,
        seed=args.seed,
        trials=args.trials,
        threads=args.threads,
        output=args.out,
    )


def write_table(table: ResultTable, config: ExperimentConfig, plot: bool) -> None:
    output = config.general.output
    if output is None or output == "-":
        table.to_frame().to_csv(sys.stdout, index=False, lineterminator="\n")
        if plot:
            logger.warning("--plot needs a CSV file path; no script written")
        return
    path = export_csv(table, output)
    if plot:
        write_gnuplot_script(table, path, PLOT_METRIC[config.general.scenario])


def channel_dumper(directory: Path) -> ChannelSink:
    """Sink writing each snapshot to DIR/<sweep>_<strategy>_drop<d>.csv"""
    directory.mkdir(parents=True, exist_ok=True)

    def dump(label: str, drop: int, strategy: str, snapshot: ChannelSnapshot) -> None:
        stem = "_".join(part for part in (label.replace("=", "-"), strategy, f"drop{drop}") if part)
        write_matrix_csv(snapshot, directory / f"{stem}.csv")

    return dump


def run_scenario(args: argparse.Namespace) -> int:
    config = load_config(args)
    dump_dir = getattr(args, "dump_channels", None)
    table = run_experiment(config, channel_sink=channel_dumper(dump_dir) if dump_dir else None)
    write_table(table, config, args.plot)
    return 0


def run_optimize(args: argparse.Namespace) -> int:
    covariances = [read_covariance_csv(path) for path in args.covariance]
    geometry = ArrayGeometry(m_per_port=args.m, n_ports=args.n)
    result = weights_sdb(covariances, geometry, SdbOptions(seed=args.seed), gains=args.gains)

    weights = result.weights.weights[:, None]
    if args.out is None or args.out == "-":
        matrix_to_frame(weights).to_csv(sys.stdout, index=False, float_format="%.17g", lineterminator="\n")
    else:
        write_matrix_csv(weights, args.out)
    label = "radiated power" if len(covariances) == 1 else "min SIR"
    print(f"{label} {result.objective:.6g} after {result.iterations} iteration(s)", file=sys.stderr)
    return 0


def run_validate(args: argparse.Namespace) -> int:
    seeds = range(args.seed, args.seed + args.seeds)
    report = run_validation(seeds, include_optimizer=not args.skip_optimizer)
    if args.out:
        report.to_frame().to_csv(args.out, index=False, lineterminator="\n")
    for failure in report.failures:
        seed = f" [seed {failure.seed}]" if failure.seed is not None else ""
        print(f"FAIL {failure.name}{seed}: {failure.detail}", file=sys.stderr)
    print(f"{len(report.results) - len(report.failures)}/{len(report.results)} checks passed", file=sys.stderr)
    return 0 if report.passed else EXIT_VALIDATION_FAILED


def run_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host=args.host,
        port=args.port,
        reload=settings.DEBUG and settings.ENVIRONMENT == "development",
        log_level=settings.LOG_LEVEL.lower(),
        access_log=True,
        loop="asyncio",
    )
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging("DEBUG" if args.verbose else None)

    try:
        if args.command == "validate":
            return run_validate(args)
        if args.command == "serve":
            return run_serve(args)
        if args.command == "optimize":
            return run_optimize(args)
        return run_scenario(args)
    except (SimulatorError, ValidationError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}".splitlines()[0], file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
