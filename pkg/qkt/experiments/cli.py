"""Command-line interface for running and validating experiments."""

import json
import logging
import pathlib

import click
import numpy as np
import pandas as pd

from qkt.errors import ConfigError, NumericalError
from qkt.experiments.config import DEFAULTS, FORMATS, resolve_config
from qkt.experiments.core import EXPERIMENTS, run_experiment
from qkt.experiments.io import load_summary, write_result
from qkt.experiments.validation import REPORT_FILE, ResultValidator

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

NUMERIC_ERRORS = (NumericalError, np.linalg.LinAlgError, FloatingPointError)


@click.command()
@click.argument("experiment")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=pathlib.Path),
    default=None,
    help="TOML file with RunConfig keys.",
)
@click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="KEY=VALUE",
    help="Override one config key (value parsed as a TOML literal). Repeatable.",
)
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=pathlib.Path),
    default=None,
    help="Output directory (default: output/<experiment>).",
)
@click.option(
    "--format",
    "output_format",
    type=click.Choice(FORMATS),
    default=None,
    help="Table format; overrides the config.",
)
@click.pass_context
def run(ctx, experiment, config_path, overrides, out, output_format):
    """Run EXPERIMENT and write its tables and summary."""
    overrides = list(overrides)
    if output_format is not None:
        overrides.append(f'format="{output_format}"')
    try:
        cfg = resolve_config(experiment, config_path, overrides)
    except ConfigError as exc:
        click.echo(f"Configuration error: {exc}", err=True)
        ctx.exit(EXIT_CONFIG)

    out_dir = out or pathlib.Path(cfg.out or pathlib.Path("output") / experiment)
    try:
        result = run_experiment(cfg)
    except ConfigError as exc:
        click.echo(f"Configuration error: {exc}", err=True)
        ctx.exit(EXIT_CONFIG)
    except NUMERIC_ERRORS as exc:
        click.echo(f"Numerical failure: {exc}", err=True)
        ctx.exit(EXIT_NUMERIC)

    for path in write_result(result, cfg, out_dir):
        click.echo(str(path))
    logger.info("Results of %s written to %s", experiment, out_dir)


@click.command(name="list")
def list_experiments():
    """List the available experiments."""
    frame = pd.DataFrame(
        [
            {
                "experiment": e.name,
                "description": e.description,
                "default kappas": json.dumps(DEFAULTS[e.name].get("kappas", [])),
            }
            for e in EXPERIMENTS.values()
        ]
    )
    click.echo(frame.to_markdown(index=False))


@click.command()
@click.option(
    "--out",
    type=click.Path(exists=True, file_okay=False, path_type=pathlib.Path),
    required=True,
    help="Run directory containing summary.json.",
)
@click.pass_context
def validate(ctx, out):
    """Check a run against reference values and write a Markdown report."""
    try:
        document = load_summary(out)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"Cannot read run summary: {exc}", err=True)
        ctx.exit(EXIT_CONFIG)

    validator = ResultValidator(document)
    passed = validator.run_all_checks()
    report_path = out / REPORT_FILE
    with open(report_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(validator.generate_markdown_report())
    click.echo(str(report_path))
    logger.info("Validation report written to %s", report_path)
    if not passed:
        ctx.exit(EXIT_NUMERIC)
