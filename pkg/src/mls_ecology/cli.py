"""Main CLI entry point for mls-ecology."""

import logging

import rich_click as click
from rich.console import Console
from rich.logging import RichHandler

from .ablate import ablate
from .analyze import analyze
from .infer import infer
from .train import train

click.rich_click.TEXT_MARKUP = "rich"


@click.group()
@click.version_option(package_name="mls-ecology")
@click.option("-v", "--verbose", count=True, help="Log progress (-v) or debug detail (-vv).")
def cli(verbose: int) -> None:
    """Multi-level selection boid ecology: train, infer, ablate and analyze."""
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


cli.add_command(train)
cli.add_command(infer)
cli.add_command(ablate)
cli.add_command(analyze)
