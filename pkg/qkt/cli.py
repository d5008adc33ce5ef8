"""Main qkt-oe CLI entry point combining all subcommands."""

import logging

import click

from qkt.experiments.cli import list_experiments, run, validate

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
)


@click.group()
@click.option("--debug", is_flag=True, help="Enable debug logging.")
def cli(debug):
    """Observational entropy and OTOCs of the quantum kicked top."""
    if debug:
        logging.getLogger().setLevel(logging.DEBUG)


cli.add_command(run, name="run")
cli.add_command(list_experiments, name="list")
cli.add_command(validate, name="validate")


if __name__ == "__main__":
    cli()
