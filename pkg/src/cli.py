"""
Command-line entry point.

Results go to stdout (or --out), logs go to stderr. Exit codes: 0 success,
2 invalid input, 3 solver failure, 4 dataset or output I/O failure.
"""

import json
import logging
import sys
from pathlib import Path
from typing import NoReturn

import click
from pydantic import ValidationError

from src import config
from src.errors import MertonError
from src.models.report_schemas import CommandName, CommandReport, RunConfig
from src.services.reports import build_report
from src.utils import render_report

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_IO = 4

# option name -> RunConfig field
RENAMED = {"paths": "n_paths", "format": "output_format"}


def _float_list(ctx: click.Context, param: click.Parameter, value: str | None) -> list[float] | None:
    if value is None:
        return None
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}") from e


COMMON_OPTIONS = [
    click.option("--mu", type=float, default=None, help="Annualized drift (default 0.4027)."),
    click.option("--sigma", type=float, default=None, help="Annualized volatility (default 0.5905)."),
    click.option("--r", type=float, default=None, help="Risk-free rate (default 0.0501)."),
    click.option("--lambda", "lam", type=float, default=None, help="Default intensity (default 0.024)."),
    click.option("--gamma", type=float, default=None, help="Relative risk aversion (default 1)."),
    click.option("--T", "T", type=float, default=None, help="Maturity in years (default 1)."),
    click.option("--steps", type=int, default=None, help="Grid steps; default max(1000, ceil(1000 T))."),
    click.option("--paths", type=int, default=None, help="Monte Carlo paths (default 100000)."),
    click.option("--seed", type=int, default=None, help="Monte Carlo seed (default 42)."),
    click.option("--format", type=click.Choice(["json", "csv"]), default=None, help="Output format (default json)."),
    click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write output to a file."),
    click.option("--data", type=str, default=None, help="Price CSV path, or - for stdin."),
    click.option("--precision", type=int, default=None, help=f"Significant digits (default {config.DEFAULT_PRECISION})."),
]


def common_options(func):
    for option in reversed(COMMON_OPTIONS):
        func = option(func)
    return func


def _fail(ctx: click.Context, message: str, code: int) -> NoReturn:
    click.echo(f"error: {message}", err=True)
    ctx.exit(code)


def _execute(ctx: click.Context, command: CommandName, options: dict) -> None:
    settings = {RENAMED.get(key, key): value for key, value in options.items() if value is not None}
    try:
        cfg = RunConfig(command=command, **settings)
        report = build_report(cfg)
        text = render_report(report, cfg.output_format, cfg.precision)
    except ValidationError as e:
        logger.error(f"Invalid input for {command.value}: {e}")
        _fail(ctx, str(e), EXIT_VALIDATION)
    except MertonError as e:
        logger.error(f"{command.value} failed: {e}")
        _fail(ctx, str(e), e.exit_code)

    if cfg.out:
        try:
            Path(cfg.out).write_text(text, encoding="utf-8")
        except OSError as e:
            _fail(ctx, f"cannot write {cfg.out}: {e}", EXIT_IO)
        logger.info(f"wrote {cfg.command.value} report to {cfg.out}")
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("--log-level", default=config.LOG_LEVEL, show_default=True, help="Logging level for stderr.")
def main(log_level: str) -> None:
    """Optimal stock/cash allocation when the stock can default."""
    logging.basicConfig(
        level=log_level.upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command()
@common_options
@click.option("--lambda-max", type=float, default=None, help="Largest intensity in the sweep (default 1).")
@click.option("--sweep-points", type=int, default=None, help="Number of sweep points (default 101).")
@click.pass_context
def ratio(ctx: click.Context, **options) -> None:
    """Classical and pre-default ratios plus the ratio-vs-intensity series."""
    _execute(ctx, CommandName.RATIO, options)


@main.command()
@common_options
@click.option("--gammas", callback=_float_list, default=None, help="Comma-separated risk aversions.")
@click.option("--horizons", callback=_float_list, default=None, help="Comma-separated maturities (default --T).")
@click.pass_context
def path(ctx: click.Context, **options) -> None:
    """Non-myopic weight paths with linearization, f(t) and accuracy diagnostics."""
    _execute(ctx, CommandName.PATH, options)


@main.command()
@common_options
@click.option("--wealth", type=float, default=None, help="Current wealth (default 1).")
@click.pass_context
def value(ctx: click.Context, **options) -> None:
    """Pre-default, post-default and total value functions over time."""
    _execute(ctx, CommandName.VALUE, options)


@main.command()
@common_options
@click.option("--grid", callback=_float_list, default=None, help="Comma-separated constant weights to compare.")
@click.option("--dt", type=float, default=None, help="Simulation step in years (default 1/252).")
@click.pass_context
def simulate(ctx: click.Context, **options) -> None:
    """Monte Carlo checks of optimality, the default-free reduction and the closed-form value."""
    _execute(ctx, CommandName.SIMULATE, options)


@main.command()
@common_options
@click.option("--gammas", callback=_float_list, default=None, help="Comma-separated risk aversions.")
@click.pass_context
def estimate(ctx: click.Context, **options) -> None:
    """Estimate drift and volatility from daily closes and derive allocations."""
    _execute(ctx, CommandName.ESTIMATE, options)


@main.command()
@common_options
@click.option("--gammas", callback=_float_list, default=None, help="Extra risk aversions to tabulate.")
@click.pass_context
def reproduce(ctx: click.Context, **options) -> None:
    """Recompute the published allocation tables with pass/fail per cell."""
    _execute(ctx, CommandName.REPRODUCE, options)


@main.command()
def schema() -> None:
    """Print the JSON schema every JSON report validates against."""
    click.echo(json.dumps(CommandReport.model_json_schema(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
