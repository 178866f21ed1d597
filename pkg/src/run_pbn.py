"""CLI for the probability-bracket engine."""

import logging
import sys

import click

from src import __version__
from src.api.commands import (
    format_number,
    run_eval,
    run_evolve,
    run_stationary,
    stationary_csv,
)
from src.api.model import CompiledModel, compile_model, load_model, schema_json
from src.checks.identities import CheckStatus, run_checks
from src.core.config import DEFAULT_CONFIG, GRAMMAR_VERSION, MODEL_SCHEMA_VERSION
from src.core.errors import LexError, ParseError, PBNError

LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s %(message)s"

EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


def caret_diagnostic(query: str, error: LexError | ParseError) -> str:
    """The query, a caret under the failing byte, and the message."""
    prefix = query.encode("utf-8")[: error.position].decode("utf-8", errors="ignore")
    return f"{query}\n{' ' * len(prefix)}^\nerror: {error.message} at offset {error.position}"


def fail(error: PBNError, query: str | None = None) -> None:
    if query is not None and isinstance(error, (LexError, ParseError)):
        click.echo(caret_diagnostic(query, error), err=True)
    else:
        click.echo(f"error: {error}", err=True)
    sys.exit(EXIT_ERROR)


def load_compiled(ctx: click.Context, model_path: str) -> CompiledModel:
    config = ctx.obj["config"]
    return compile_model(load_model(model_path, tolerance=config.tolerance), config)


@click.group()
@click.option("--tol", type=float, default=None, help="Override the residual tolerances")
@click.option("--quiet", is_flag=True, help="Only print results and errors")
@click.option("--verbose", is_flag=True, help="Log numerical details to stderr")
@click.version_option(
    __version__,
    message=f"%(prog)s %(version)s (grammar {GRAMMAR_VERSION}, {MODEL_SCHEMA_VERSION})",
)
@click.pass_context
def cli(ctx: click.Context, tol: float | None, quiet: bool, verbose: bool) -> None:
    """Probability-bracket engine CLI."""
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level, format=LOG_FORMAT, force=True)
    logging.getLogger("src").setLevel(level)

    config = DEFAULT_CONFIG
    if tol is not None:
        if tol <= 0:
            raise click.BadParameter("must be positive", param_hint="--tol")
        config = config.with_tolerance(tol)
    ctx.obj = {"config": config, "quiet": quiet}


@cli.command("eval")
@click.argument("model_path", type=click.Path())
@click.argument("query")
@click.pass_context
def eval_cmd(ctx: click.Context, model_path: str, query: str) -> None:
    """Evaluate a pbn-1 query such as 'P({2}|{1,2,3})'."""
    try:
        model = load_compiled(ctx, model_path)
        value = run_eval(model, query)
    except PBNError as e:
        fail(e, query)
    click.echo(format_number(value))


@cli.command("evolve")
@click.argument("model_path", type=click.Path())
@click.option("--t-max", type=float, required=True, help="Last time point")
@click.option("--step", type=float, required=True, help="Grid spacing")
@click.option("--observable", default=None, help="Add an E:<NAME> expectation column")
@click.pass_context
def evolve_cmd(
    ctx: click.Context, model_path: str, t_max: float, step: float, observable: str | None
) -> None:
    """Print the evolved distribution on a time grid as CSV."""
    try:
        model = load_compiled(ctx, model_path)
        record = run_evolve(model, t_max, step, observable)
    except PBNError as e:
        fail(e)
    click.echo(record.to_csv(), nl=False)


@cli.command("stationary")
@click.argument("model_path", type=click.Path())
@click.pass_context
def stationary_cmd(ctx: click.Context, model_path: str) -> None:
    """Print the stationary distribution as CSV."""
    try:
        model = load_compiled(ctx, model_path)
        pi = run_stationary(model)
    except PBNError as e:
        fail(e)
    click.echo(stationary_csv(pi), nl=False)


@cli.command("check")
@click.argument("model_path", type=click.Path())
@click.pass_context
def check_cmd(ctx: click.Context, model_path: str) -> None:
    """Run the identity suite; exit 1 if any identity fails."""
    config = ctx.obj["config"]
    try:
        raw = load_model(model_path, strict=False, tolerance=config.tolerance)
        model = compile_model(raw, config, strict=False)
        report = run_checks(model, config)
    except PBNError as e:
        fail(e)
    click.echo(report.render(), nl=False)

    if not ctx.obj["quiet"]:
        counts = {status: 0 for status in CheckStatus}
        for line in report.lines:
            counts[line.status] += 1
        click.echo(
            f"{report.model}: {counts[CheckStatus.PASS]} passed, "
            f"{counts[CheckStatus.FAIL]} failed, {counts[CheckStatus.SKIP]} skipped",
            err=True,
        )
    if not report.passed:
        sys.exit(EXIT_CHECK_FAILED)


@cli.command("schema")
def schema_cmd() -> None:
    """Print the model file JSON schema."""
    click.echo(schema_json())


if __name__ == "__main__":
    cli()
