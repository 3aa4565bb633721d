# cli/main.py
"""
Command-line front end.

    singletsim run [CONFIG] --scenario fig3 --n 3
    singletsim sweep [CONFIG] --scenario fig5 --n 3 --axis kappa --values 0,0.05,0.1
    singletsim validate [CONFIG]
    singletsim list

Exit codes: 0 success, 1 bad configuration or arguments, 2 solver or model
failure, 3 reference-target miss under --strict.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from loguru import logger
from pydantic import ValidationError

from logs.config import LogConfig, reset_configured_paths, setup_logger
from scenarios import SCENARIOS, ScenarioResult, SweepSpec, get_scenario, run_sweep
from simulator import __version__
from simulator.errors import ConfigError, InvalidArgumentError, ModelConsistencyError, SolverError, ZeroVectorError

from .chart_utils import create_series_chart, create_table_chart
from .config import RunConfig, load_config
from .outputs import write_meta, write_series, write_table

setup_logger(logger, LogConfig.get_cli_log(), LogConfig.CLI_FORMAT)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_TARGET = 3

COMPONENT_SINKS = (
    (LogConfig.get_model_log, LogConfig.SIMULATOR_FORMAT),
    (LogConfig.get_dynamics_log, LogConfig.SIMULATOR_FORMAT),
    (LogConfig.get_scenario_log, LogConfig.SCENARIO_FORMAT),
    (LogConfig.get_sweep_log, LogConfig.SCENARIO_FORMAT),
    (LogConfig.get_cli_log, LogConfig.CLI_FORMAT),
)


def configure_logging(verbosity: str) -> None:
    """Replace the console sink level and re-attach the component file sinks."""
    logger.remove()
    reset_configured_paths()
    logger.add(sys.stderr, level=verbosity, format="<level>{level: <8}</level> | {message}")
    for path, format_string in COMPONENT_SINKS:
        setup_logger(logger, path(), format_string)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="singletsim", description="Adiabatic passage to N-party singlet states in a cavity.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("config", nargs="?", type=Path, help="KEY=value config file or an emitted *_meta.json")
    shared.add_argument("--scenario", help="scenario identifier (see 'list')")
    shared.add_argument("--n", type=int, help="number of parties N")
    shared.add_argument("--out", type=Path, help="output directory")
    shared.add_argument("--seed", type=int, help="random seed for trajectory runs")
    shared.add_argument("--t-final", type=float, dest="t_final", help="run length in units of 1/Omega0")
    shared.add_argument("--format", dest="formats", help="comma-separated subset of csv,json,svg")
    shared.add_argument("--strict", action="store_true", default=None, help="exit 3 when a reference target is missed")
    shared.add_argument("--verbosity", help="console log level (DEBUG, INFO, WARNING, ...)")

    commands.add_parser("run", parents=[shared], help="run one scenario")
    sweep = commands.add_parser("sweep", parents=[shared], help="sweep one parameter of a scenario's base configuration")
    sweep.add_argument("--axis", help="real-valued parameter to sweep")
    sweep.add_argument("--values", help="comma-separated values")
    commands.add_parser("validate", parents=[shared], help="check a configuration without running it")
    commands.add_parser("list", help="list scenario identifiers")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file (or defaults) with command-line flags applied on top."""
    config = load_config(args.config)
    params: dict[str, Any] = {}
    if args.t_final is not None:
        params["t_final"] = args.t_final
    return config.with_updates(
        scenario=args.scenario,
        n=args.n,
        out=args.out,
        seed=args.seed,
        formats=args.formats,
        strict=args.strict,
        verbosity=args.verbosity,
        axis=getattr(args, "axis", None),
        values=getattr(args, "values", None),
        params=params,
    )


def _meta(config: RunConfig, result: Optional[ScenarioResult] = None, **extra: Any) -> dict[str, Any]:
    payload: dict[str, Any] = {"run_config": config.model_dump(mode="json"), "version": __version__, "seed": config.effective_seed()}
    if result is not None:
        payload.update(
            name=result.name,
            summary=result.summary,
            targets=[target.as_dict() for target in result.targets],
            all_targets_met=result.all_targets_met,
            metadata=result.metadata,
        )
    payload.update(extra)
    return payload


def _table_y(table) -> str:
    if "f_final" in table.columns:
        return "f_final"
    numeric = [c for c in table.select_dtypes("number").columns[1:]]
    return numeric[0]


def cmd_run(config: RunConfig) -> int:
    spec = get_scenario(config.scenario)
    result = spec.run(config.n, **config.overrides())
    out = config.out
    if "csv" in config.formats:
        if result.series is not None:
            write_series(result.series, out / f"{result.name}_timeseries.csv")
        if result.table is not None:
            write_table(result.table.drop(columns=["runtime"], errors="ignore"), out / f"{result.name}_table.csv")
    if "json" in config.formats:
        write_meta(_meta(config, result), out / f"{result.name}_meta.json")
    if "svg" in config.formats:
        if result.series is not None:
            create_series_chart(result.series, out / f"{result.name}.svg", result.name)
        elif result.table is not None and len(result.table):
            x = result.table.columns[0]
            create_table_chart(result.table, x, out / f"{result.name}.svg", result.name, y=_table_y(result.table))

    for key, value in result.summary.items():
        print(f"{result.name} {key} = {value:.6f}")
    if config.strict and not result.all_targets_met:
        missed = [target.name for target in result.targets if not target.passed]
        logger.error(f"Reference targets missed: {', '.join(missed)}")
        return EXIT_TARGET
    logger.success(f"✅ Scenario {result.name} finished")
    return EXIT_OK


def cmd_sweep(config: RunConfig) -> int:
    if not config.axis:
        raise ConfigError("sweep needs an axis (--axis)")
    if not config.values:
        raise ConfigError("sweep needs at least one value (--values)")
    spec = get_scenario(config.scenario)
    base = spec.base_params(config.n, **config.overrides())
    try:
        sweep = SweepSpec(base=base, axis=config.axis, values=config.values)
    except ValidationError as exc:
        raise ConfigError(str(exc.errors()[0]["msg"])) from exc
    table = run_sweep(sweep)
    name = f"{config.scenario}_n{base.n_parties}_{config.axis}_sweep"
    if "csv" in config.formats:
        write_table(table, config.out / f"{name}.csv")
    if "json" in config.formats:
        write_meta(_meta(config, name=name, base_params=base.model_dump(mode="json")), config.out / f"{name}_meta.json")
    if "svg" in config.formats:
        create_table_chart(table, config.axis, config.out / f"{name}.svg", name)

    for _, row in table.iterrows():
        print(f"{config.axis}={row[config.axis]:g} F={row['f_final']:.6f} {row['status']}")
    if (table["status"] == "failed").any():
        return EXIT_SOLVER
    return EXIT_OK


def cmd_validate(config: RunConfig) -> int:
    spec = get_scenario(config.scenario)
    base = spec.base_params(config.n, **config.overrides())
    if config.axis:
        try:
            SweepSpec(base=base, axis=config.axis, values=config.values)
        except ValidationError as exc:
            raise ConfigError(str(exc.errors()[0]["msg"])) from exc
    config.out.mkdir(parents=True, exist_ok=True)
    print(f"config OK: scenario={spec.name} N={base.n_parties} model={base.model} method={base.method}")
    return EXIT_OK


def cmd_list() -> int:
    for name, spec in SCENARIOS.items():
        print(f"{name:<14}{spec.description}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        return cmd_list()
    try:
        config = resolve_config(args)
        configure_logging(config.verbosity)
        if args.command == "run":
            return cmd_run(config)
        if args.command == "sweep":
            return cmd_sweep(config)
        return cmd_validate(config)
    except (ConfigError, ValidationError, InvalidArgumentError) as exc:
        logger.error(f"Configuration error: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ModelConsistencyError, ZeroVectorError) as exc:
        logger.error(f"Run failed: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
