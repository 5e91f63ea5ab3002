"""
Command line interface: one subcommand per experiment plus `reproduce`.
"""
import json
import logging
import sys
from typing import Any, Callable, Dict, Optional

import click

from billiard_lab import __version__, create_lab
from billiard_lab.runner import reproduce as reproduce_run
from billiard_lab.runner import run
from billiard_lab.utils.config import ExperimentConfig
from billiard_lab.utils.enums import ExperimentKind, MapKind
from billiard_lab.utils.errors import LabError
from billiard_lab.utils.streams import set_progress

logger = logging.getLogger(__name__)


class CountType(click.ParamType):
    """
    Positive integer that may be written in scientific notation (1e6).
    """
    name = "count"

    def convert(self, value, param, ctx):
        if isinstance(value, int):
            return value
        try:
            number = float(value)
        except (TypeError, ValueError):
            self.fail(f"{value} is not a number", param, ctx)
        if number != int(number) or number <= 0:
            self.fail(f"{value} is not a positive integer", param, ctx)
        return int(number)


COUNT = CountType()


def common_options(func: Callable) -> Callable:
    options = [
        click.option("--table", "-t", help="table shorthand (stadium:l=2,r=1) or JSON definition file"),
        click.option("--seed", "-s", type=int, help="64 bit master seed"),
        click.option("--samples", type=COUNT, help="sample or collision budget"),
        click.option("--nmax", "n_max", type=COUNT, help="largest lag"),
        click.option("--rmax", "r_max", type=COUNT, help="cap on the return time"),
        click.option("--workers", "-w", type=int, envvar="BILLIARD_LAB_THREADS", default=1, show_default=True,
                     help="worker processes (default from BILLIARD_LAB_THREADS)"),
        click.option("--out", "-o", type=click.Path(file_okay=False), help="output directory"),
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                     help="JSON experiment config; command line options override it"),
        click.option("--timeout", type=float, help="abort after this many seconds"),
        click.option("--plot/--no-plot", default=True, show_default=True, help="write gnuplot scripts"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _execute(experiment: ExperimentKind, config_file: Optional[str], **options: Any):
    overrides: Dict[str, Any] = {k: v for k, v in options.items() if v is not None}
    overrides["experiment"] = experiment.value
    try:
        if config_file:
            config = ExperimentConfig.from_file(config_file, **overrides)
        else:
            overrides.setdefault("out", f"results/{experiment.value}")
            config = ExperimentConfig.from_dict(overrides)
    except LabError as e:
        click.echo(json.dumps(e.to_dict()), err=True)
        sys.exit(e.exit_code)
    status = run(config)
    if status != 0:
        click.echo(f"{experiment.value} failed, see {config.out}/error.json", err=True)
    sys.exit(status)


@click.group()
@click.version_option(__version__, prog_name="billiard-lab")
@click.option("--verbose", "-v", is_flag=True, help="debug logging")
@click.option("--quiet", "-q", is_flag=True, help="warnings only, no progress bars")
@click.option("--instance", type=click.Path(exists=True, file_okay=False), envvar="BILLIARD_LAB_INSTANCE",
              help="directory holding config_base.json")
def cli(verbose: bool, quiet: bool, instance: Optional[str]):
    """
    Numerical laboratory for the mixing rates of chaotic billiards.
    """
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")
    set_progress(not quiet)
    try:
        create_lab(instance)
    except LabError as e:
        click.echo(json.dumps(e.to_dict()), err=True)
        sys.exit(e.exit_code)


@cli.command()
@common_options
def validate(**options):
    """
    Check a table against the hypotheses of its family.
    """
    _execute(ExperimentKind.validate, **options)


@cli.command()
@common_options
@click.option("--start", help="start point r,phi; a mu-sample when omitted")
@click.option("--n", "--collisions", "collisions", type=COUNT, help="number of collisions")
def orbit(**options):
    """
    Iterate the collision map and dump the orbit.
    """
    _execute(ExperimentKind.orbit, **options)


@cli.command()
@common_options
@click.option("--f", "f", help="observable at the later time (free-path, cos-phi, sin-phi, position-x, "
                               "constant, component-indicator:<k>)")
@click.option("--g", "g", help="observable at the earlier time, defaults to f")
@click.option("--map", "map_kind", type=click.Choice([m.value for m in MapKind]), help="full or induced map")
@click.option("--rule", help="subset rule of the induced map")
@click.option("--chains", type=COUNT, help="independent orbits")
def correlation(**options):
    """
    Estimate the correlation function C_n(f, g).
    """
    _execute(ExperimentKind.correlation, **options)


@cli.command()
@common_options
@click.option("--rule", help="subset rule defining M")
def tail(**options):
    """
    Estimate the return-time tail and fit its exponent.
    """
    _execute(ExperimentKind.tail, **options)


@cli.command()
@common_options
@click.option("--rule", help="subset rule defining M")
def cells(**options):
    """
    Estimate the measure of the cells against their index.
    """
    _execute(ExperimentKind.cells, **options)


@cli.command()
@common_options
@click.option("--rule", help="subset rule defining M")
@click.option("--curves", type=COUNT, help="number of seeded unstable curves")
@click.option("--resolution", type=COUNT, help="sample points per curve")
def diagnostics(**options):
    """
    Expansion sums, expansion trends and cell ranges on short unstable curves.
    """
    _execute(ExperimentKind.diagnostics, **options)


@cli.command()
@common_options
def mfp(**options):
    """
    Compare the mean free path with pi * area / perimeter.
    """
    _execute(ExperimentKind.mean_free_path, **options)


@cli.command()
@common_options
def invariance(**options):
    """
    Test the invariance of mu under one collision.
    """
    _execute(ExperimentKind.invariance, **options)


@cli.command()
@click.argument("summary", type=click.Path(exists=True, dir_okay=False))
@click.option("--workers", "-w", type=int, envvar="BILLIARD_LAB_THREADS", help="worker processes for the re-run")
def reproduce(summary: str, workers: Optional[int]):
    """
    Re-run the experiment of SUMMARY and compare the CSV outputs byte by byte.
    """
    try:
        status = reproduce_run(summary, workers)
    except LabError as e:
        click.echo(json.dumps(e.to_dict()), err=True)
        sys.exit(e.exit_code)
    click.echo("reproduced")
    sys.exit(status)
