"""Command-line front end: bounds, simulation, verification and sweeps to CSV."""

from __future__ import annotations

import argparse
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from rich.console import Console
from rich.table import Table

from src.bounds.awgn import BoundMode
from src.core.errors import ComputationError, ConfigError, DomainError
from src.core.settings import get_settings
from src.interfaces.config_format import KEYS, coerce, cross_check, load_config, parse_config, parse_value
from src.interfaces.schemas import (
    AWGN_COLUMNS,
    DEFAULT_N_MAX,
    DEFAULT_N_MIN,
    DEFAULT_POINTS,
    DMC_COLUMNS,
    SIMULATE_COLUMNS,
    SWEEP_PREFIX,
    VERIFY_COLUMNS,
    RunConfig,
)
from src.pipelines.bound_sweeps import awgn_rows, dmc_rows, n_grid, sweep
from src.pipelines.verification import run_suite
from src.simulation.mcsim import SimConfig, simulate_events
from src.utils.csv_output import build_frame, write_csv_atomic
from src.utils.logger import configure_logging, get_logger

logger = get_logger(__name__)
console = Console()

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2

DEFAULT_SIMULATION_N = 1000
SUMMARY_COLUMNS = {
    "bounds-awgn": ("n", "ach_log2M", "conv_log2M", "ach_rate", "conv_rate", "valid_ach", "valid_conv"),
    "bounds-dmc": ("n", "ach_log2M", "conv_log2M", "V_star", "valid_ach", "valid_conv"),
    "simulate": ("event", "empirical", "ci_low", "ci_high", "analytic_bound"),
}

Rows = List[Dict[str, Any]]


def _lambda(cfg: RunConfig) -> Optional[float]:
    value = cfg.get("lambda", "auto")
    return None if value == "auto" else float(value)


def _grid(cfg: RunConfig) -> List[int]:
    return n_grid(cfg.get("n_min", DEFAULT_N_MIN), cfg.get("n_max", DEFAULT_N_MAX), cfg.get("points", DEFAULT_POINTS))


def _bounds_awgn(cfg: RunConfig) -> Tuple[Rows, Sequence[str]]:
    mode = BoundMode(cfg.get("mode", get_settings().bounds.default_mode))
    rows = awgn_rows(
        cfg.energy_process(),
        cfg.awgn_spec(),
        float(cfg.get("epsilon")),
        _grid(cfg),
        mode=mode,
        lam=_lambda(cfg),
        berry_esseen_constant=cfg.get("berry_esseen_constant"),
        delta_n=cfg.get("delta_n"),
        u_n=cfg.get("u_n"),
    )
    return rows, AWGN_COLUMNS


def _bounds_dmc(cfg: RunConfig) -> Tuple[Rows, Sequence[str]]:
    rows = dmc_rows(
        cfg.dmc_spec(),
        cfg.energy_process(),
        float(cfg.get("epsilon")),
        _grid(cfg),
        eta=cfg.get("eta"),
        lam=_lambda(cfg),
    )
    return rows, DMC_COLUMNS


def simulation_config(cfg: RunConfig) -> SimConfig:
    defaults = get_settings().simulation
    lam = _lambda(cfg)
    kwargs: Dict[str, Any] = {
        "seed": cfg.get("seed", defaults.default_seed),
        "trials": cfg.get("trials", defaults.default_trials),
        "n": cfg.get("n", DEFAULT_SIMULATION_N),
        "epsilon": cfg.get("epsilon"),
        "lam": 0.5 if lam is None else lam,
        "proc": cfg.energy_process(),
        "ch": cfg.dmc_spec() if cfg.is_dmc else cfg.awgn_spec(),
    }
    if cfg.get("berry_esseen_constant") is not None:
        kwargs["berry_esseen_constant"] = cfg.get("berry_esseen_constant")
    return SimConfig(**kwargs)


def _simulate(cfg: RunConfig) -> Tuple[Rows, Sequence[str]]:
    events = simulate_events(simulation_config(cfg), cfg.get("log2M"))
    return [event.as_row() for event in events], SIMULATE_COLUMNS


def _sweep(cfg: RunConfig) -> Tuple[Rows, Sequence[str]]:
    param = cfg.options["sweep_param"]
    base = "bounds-dmc" if cfg.is_dmc else "bounds-awgn"
    compute, columns = COMMAND_TABLE[base]

    def rows_for(value: Any) -> Rows:
        variant = cfg.with_parameters(**{param: value})
        problems = cross_check(base, variant.parameters)
        if problems:
            raise ConfigError([(None, f"{param} = {value}: {message}") for message in problems])
        return compute(variant)[0]

    return sweep(param, cfg.options["sweep_values"], rows_for), SWEEP_PREFIX + tuple(columns)


COMMAND_TABLE: Dict[str, Tuple[Callable[[RunConfig], Tuple[Rows, Sequence[str]]], Sequence[str]]] = {
    "bounds-awgn": (_bounds_awgn, AWGN_COLUMNS),
    "bounds-dmc": (_bounds_dmc, DMC_COLUMNS),
    "simulate": (_simulate, SIMULATE_COLUMNS),
    "sweep": (_sweep, ()),
}


def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6g}"
    return str(value)


def print_summary(title: str, rows: Rows, columns: Sequence[str]) -> None:
    table = Table(title=title, show_lines=False)
    for column in columns:
        table.add_column(column, justify="right")
    for row in rows:
        table.add_row(*(_format_cell(row.get(column)) for column in columns))
    console.print(table)


def output_path(cfg: RunConfig) -> Path:
    if cfg.output_path is not None:
        return cfg.output_path
    return Path(get_settings().output.artifacts_dir) / f"{cfg.command}.csv"


def _emit(cfg: RunConfig, rows: Rows, columns: Sequence[str]) -> Path:
    digits = get_settings().output.significant_digits
    return write_csv_atomic(output_path(cfg), build_frame(rows, columns), digits)


def run(cfg: RunConfig) -> int:
    """Execute ``cfg``; 0 on success, 1 on invalid input, 2 on computation failure or violations."""
    logger.info("cli.run.start", command=cfg.command)
    try:
        if cfg.command == "verify":
            report = run_suite(fast=bool(cfg.options.get("fast", False)))
            path = _emit(cfg, report.rows(), VERIFY_COLUMNS)
            console.print(report.render())
            status = EXIT_OK if report.passed else EXIT_FAILED
            logger.info("cli.run.done", command=cfg.command, path=str(path), passed=report.passed)
            return status
        compute, _ = COMMAND_TABLE[cfg.command]
        rows, columns = compute(cfg)
        path = _emit(cfg, rows, columns)
    except (ConfigError, DomainError) as exc:
        logger.warning("cli.run.invalid", command=cfg.command, error=str(exc))
        console.print(f"[red]invalid input:[/red] {exc}")
        return EXIT_INVALID
    except ComputationError as exc:
        logger.error("cli.run.failed", command=cfg.command, error=str(exc), diagnostics=exc.diagnostics)
        console.print(f"[red]computation failed:[/red] {exc}")
        return EXIT_FAILED

    summary = SUMMARY_COLUMNS.get(cfg.command, SWEEP_PREFIX + ("n", "ach_log2M", "conv_log2M"))
    print_summary(f"{cfg.command} -> {path}", rows, summary)
    logger.info("cli.run.done", command=cfg.command, path=str(path), rows=len(rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehfbl", description="Finite-blocklength bounds for energy-harvesting channels"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def grid_flags(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", type=Path, help="Run configuration (key = value lines)")
        sub.add_argument("--n-min", type=int, dest="n_min")
        sub.add_argument("--n-max", type=int, dest="n_max")
        sub.add_argument("--points", type=int)
        sub.add_argument("--out", type=Path)

    grid_flags(subparsers.add_parser("bounds-awgn", help="Achievability/converse over an n-grid"))
    dmc = subparsers.add_parser("bounds-dmc", help="EH-DMC bounds over an n-grid")
    grid_flags(dmc)
    dmc.add_argument("--eta", type=float)

    simulate = subparsers.add_parser("simulate", help="Monte Carlo error-event estimates")
    simulate.add_argument("--config", type=Path)
    simulate.add_argument("--trials", type=int)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--out", type=Path)

    verify = subparsers.add_parser("verify", help="Run the oracle suite")
    verify.add_argument("--fast", action="store_true", help="Reduced grids")
    verify.add_argument("--out", type=Path)

    sweep_parser = subparsers.add_parser("sweep", help="Repeat the bounds over values of one key")
    grid_flags(sweep_parser)
    sweep_parser.add_argument("--param", required=True)
    sweep_parser.add_argument("--values", required=True, help="Comma-separated values")
    return parser


FLAG_KEYS = ("n_min", "n_max", "points", "eta", "trials", "seed")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge the config file (if any) with flag overrides and validate the result."""
    config_path = getattr(args, "config", None)
    if config_path is not None:
        cfg = load_config(config_path, args.command)
    elif args.command == "verify":
        cfg = parse_config("", args.command)
    else:
        raise ConfigError([(None, f"{args.command} needs --config")])

    problems: List[Tuple[Optional[int], str]] = []
    overrides: Dict[str, Any] = {}
    for key in FLAG_KEYS:
        value = getattr(args, key, None)
        if value is None:
            continue
        try:
            overrides[key] = coerce(key, value)
        except ValueError as exc:
            problems.append((None, str(exc)))

    options: Dict[str, Any] = {}
    if args.command == "verify":
        options["fast"] = bool(args.fast)
    if args.command == "sweep":
        param = args.param
        if param not in KEYS or param in ("command", "output"):
            problems.append((None, f"cannot sweep over {param!r}"))
        else:
            values = []
            for raw in (part.strip() for part in args.values.split(",")):
                try:
                    values.append(coerce(param, parse_value(raw)))
                except ValueError as exc:
                    problems.append((None, f"--values {raw!r}: {exc}"))
            options.update({"sweep_param": param, "sweep_values": tuple(values)})
    if problems:
        raise ConfigError(problems)

    merged = cfg.with_parameters(**overrides)
    if args.command != "verify":
        messages = cross_check(args.command, merged.parameters)
        if messages:
            raise ConfigError([(None, message) for message in messages])
    out = getattr(args, "out", None)
    return merged.model_copy(update={"options": options, "output_path": out or merged.output_path})


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    configure_logging(settings.app.log_level, settings.app.log_format)
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, DomainError) as exc:
        logger.warning("cli.config.rejected", command=args.command, error=str(exc))
        problems = exc.problems if isinstance(exc, ConfigError) else [(None, str(exc))]
        for line, message in problems:
            console.print(f"[red]config error[/red]{f' (line {line})' if line else ''}: {message}")
        return EXIT_INVALID
    except OSError as exc:
        console.print(f"[red]cannot read config:[/red] {exc}")
        return EXIT_INVALID
    return run(cfg)


__all__ = ["build_parser", "config_from_args", "main", "print_summary", "run", "simulation_config"]
