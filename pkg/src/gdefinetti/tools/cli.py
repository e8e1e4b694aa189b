"""
Command-line interface for gdefinetti, built on Click and Rich.

Reports go to stdout (or ``--output``) as json, csv or text; logs and errors
go to stderr. Exit codes: 0 success, 1 usage or input error, 2 infeasible
parameters, 3 failed verification.
"""

import sys
from pathlib import Path
from typing import Any, Dict, Optional

import click
from rich.console import Console

from .. import __version__
from ..core.config import config
from ..core.container import get_container
from ..core.energytest import METHODS, MODELS, TestParams, failure_event_estimate, lemma36_probability
from ..core.exceptions import (
    DefinettiInapplicableError,
    GdfError,
    UnachievableTargetError,
)
from ..core.params import ProtocolInput, compose_security
from ..enhancements.logging import clear_context, set_context, setup_logging
from .reporting import FORMATS, to_plain
from .suites import (
    run_definetti_suite,
    run_gram_suite,
    run_invariance_suite,
    run_lgrc_suite,
    run_tails_suite,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_FAILED = 3

error_console = Console(stderr=True)


class Count(click.ParamType):
    """A non-negative integer that may be written in float notation, e.g. ``1e6``."""

    name = "count"

    def __init__(self, minimum: int = 1):
        self.minimum = minimum

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> int:
        if isinstance(value, int):
            number = value
        else:
            try:
                parsed = float(value)
            except (TypeError, ValueError):
                self.fail(f"{value!r} is not a number", param, ctx)
            if not parsed.is_integer():
                self.fail(f"{value!r} is not a whole number", param, ctx)
            number = int(parsed)
        if number < self.minimum:
            self.fail(f"{value!r} is below the minimum {self.minimum}", param, ctx)
        return number


class GdfGroup(click.Group):
    """Click group applying the exit-code contract to usage errors and library errors."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            code = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            error_console.print("[yellow]Aborted.[/yellow]")
            sys.exit(EXIT_USAGE)
        except (DefinettiInapplicableError, UnachievableTargetError) as e:
            error_console.print(f"[bold red]❌ Infeasible:[/bold red] {e}")
            sys.exit(EXIT_INFEASIBLE)
        except GdfError as e:
            error_console.print(f"[bold red]❌ Error:[/bold red] {e}")
            sys.exit(EXIT_USAGE)
        finally:
            clear_context()
        if not standalone_mode:
            return code
        sys.exit(code or EXIT_OK)


def format_option(command):
    command = click.option(
        "--output", "-o",
        type=click.Path(dir_okay=False, path_type=Path),
        help="Write the report to this file instead of stdout",
    )(command)
    return click.option(
        "--format", "report_format",
        type=click.Choice(FORMATS),
        default="json",
        show_default=True,
        help="Report format",
    )(command)


def seed_option(command):
    return click.option(
        "--seed",
        type=click.IntRange(0),
        envvar="GDF_SEED",
        default=None,
        help="Master seed (default: GDF_SEED or the configured seed)",
    )(command)


def parallel_options(command):
    command = click.option("--threads", type=Count(1), default=None, help="Worker threads")(command)
    return click.option("--batches", type=Count(2), default=None, help="Independent Monte-Carlo batches")(command)


def emit(report: Dict[str, Any], report_format: str, output: Optional[Path]) -> None:
    """Validate, render and write one report."""
    container = get_container()
    report = to_plain(report)
    container.get("report_validator").validate(report["kind"], report)
    rendered = container.get("report_renderer").render(report, report_format)
    if output is None:
        click.echo(rendered, nl=False)
    else:
        output.write_text(rendered, encoding="utf-8")
        error_console.print(f"[green]✅ Report written to[/green] {output}")


def finish(ctx: click.Context, report: Dict[str, Any], report_format: str, output: Optional[Path],
           failure_code: int = EXIT_FAILED) -> None:
    emit(report, report_format, output)
    if not report["passed"]:
        ctx.exit(failure_code)


def resolve_seed(seed: Optional[int]) -> int:
    resolved = config.get_seed() if seed is None else seed
    set_context(seed=resolved)
    return resolved


@click.group(cls=GdfGroup)
@click.version_option(version=__version__, prog_name="gdefinetti")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Log level for stderr diagnostics",
)
def cli(log_level: Optional[str]):
    """
    gdefinetti: finite-energy Gaussian de Finetti reduction for CV-QKD.

    Compute security parameters, run numerical verification suites and
    simulate the energy test.
    """
    if log_level:
        config.set("log_level", log_level.upper())
        get_container().override(
            "logger", setup_logging(level=log_level, format_type=config.get("log_format"))
        )


@cli.command()
@click.option("--n", "n", type=Count(1), required=True, help="Key modes")
@click.option("--k", "k", type=Count(1), required=True, help="Test modes")
@click.option("--da", "d_A", type=float, required=True, help="Alice's per-mode energy threshold")
@click.option("--db", "d_B", type=float, required=True, help="Bob's per-mode energy threshold")
@click.option("--eps-coll", type=float, required=True, help="Security parameter against collective attacks")
@click.option("--eps-test", type=float, required=True, help="Energy-test failure budget")
@click.option("--strict", is_flag=True, help="Fail when the de Finetti reduction does not apply")
@format_option
@click.pass_context
def params(ctx, n, k, d_A, d_B, eps_coll, eps_test, strict, report_format, output):
    """📐 Derive the security parameters of one protocol configuration"""
    set_context(operation="params")
    protocol = ProtocolInput(n=n, k=k, d_A=d_A, d_B=d_B, eps_coll=eps_coll, eps_test=eps_test)
    derived = compose_security(protocol, strict=strict)
    report = {
        "kind": "params",
        "input": {
            "n": protocol.n,
            "k": protocol.k,
            "d_A": protocol.d_A,
            "d_B": protocol.d_B,
            "eps_coll": protocol.eps_coll,
            "eps_test": protocol.eps_test,
        },
        **derived.to_dict(),
    }
    emit(report, report_format, output)
    if not derived.feasible:
        ctx.exit(EXIT_INFEASIBLE)


@cli.group()
def verify():
    """🔬 Run a numerical verification suite"""


@verify.command("definetti")
@click.option("--n", "n", type=Count(6), default=8, show_default=True, help="Modes (n >= 6)")
@click.option("--K", "K", type=Count(0), default=2, show_default=True, help="Pair-photon cutoff")
@click.option("--eta", type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True),
              default=0.9, show_default=True, help="Radius of the truncated Lambda region")
@click.option("--samples", type=Count(1), default="1e5", show_default=True, help="Monte-Carlo samples")
@click.option("--weighting", type=click.Choice(["vacuum", "flat"]), default="vacuum", show_default=True,
              help="Radial proposal density")
@click.option("--strict/--no-strict", default=True, show_default=True,
              help="Refuse radii where the theorem's precondition fails")
@click.option("--export", type=click.Path(dir_okay=False, path_type=Path),
              help="Save the Gram and operator matrices to an .npz file")
@seed_option
@parallel_options
@format_option
@click.pass_context
def verify_definetti(ctx, n, K, eta, samples, weighting, strict, export, seed, threads, batches,
                     report_format, output):
    """Certify lambda_min of P_eta on V<=K against the de Finetti error"""
    seed = resolve_seed(seed)
    set_context(suite="definetti", operation="verify")
    report, result = run_definetti_suite(n, K, eta, samples, seed, batches, threads, weighting, strict)
    if export is not None:
        saved = result.pair.save(export)
        error_console.print(f"[green]✅ Matrices exported to[/green] {saved}")
    finish(ctx, report, report_format, output)


@verify.command("gram")
@click.option("--n", "n_values", type=Count(1), multiple=True, default=(1, 2, 4), show_default=True,
              help="Modes (repeatable)")
@click.option("--K", "K", type=Count(0), default=2, show_default=True, help="Pair-photon cutoff")
@format_option
@click.pass_context
def verify_gram(ctx, n_values, K, report_format, output):
    """Compare the closed-form Gram matrix with explicit Fock vectors"""
    set_context(suite="gram", operation="verify")
    finish(ctx, run_gram_suite(n_values, K), report_format, output)


@verify.command("tails")
@click.option("--k-max", type=Count(1), default=50, show_default=True)
@click.option("--n-max", type=Count(1), default=500, show_default=True)
@click.option("--n-step", type=Count(1), default=1, show_default=True)
@click.option("--eta-points", type=Count(1), default=9, show_default=True)
@click.option("--pinsker-points", type=Count(1), default=100, show_default=True)
@format_option
@click.pass_context
def verify_tails(ctx, k_max, n_max, n_step, eta_points, pinsker_points, report_format, output):
    """Check that every tail bound dominates its exact value"""
    set_context(suite="tails", operation="verify")
    report = run_tails_suite(k_max, n_max, eta_points, n_step, pinsker_points)
    finish(ctx, report, report_format, output)


@verify.command("lgrc")
@click.option("--n-max", type=Count(1), default=50, show_default=True)
@click.option("--d-max", type=click.FloatRange(0.0, min_open=True), default=20.0, show_default=True)
@click.option("--d-step", type=click.FloatRange(0.0, min_open=True), default=0.5, show_default=True)
@click.option("--extra", type=Count(0), default=500, show_default=True, help="Photons checked beyond nd")
@format_option
@click.pass_context
def verify_lgrc(ctx, n_max, d_max, d_step, extra, report_format, output):
    """Check U <= 2T on the Fock eigenvalues of the energy operators"""
    set_context(suite="lgrc", operation="verify")
    finish(ctx, run_lgrc_suite(n_max, d_max, d_step, extra), report_format, output)


@verify.command("invariance")
@click.option("--n", "n", type=Count(1), default=2, show_default=True, help="Modes")
@click.option("--K", "K", type=Count(0), default=2, show_default=True, help="Largest monomial degree")
@click.option("--trials", type=Count(1), default=5, show_default=True, help="Random unitaries per monomial")
@seed_option
@format_option
@click.pass_context
def verify_invariance(ctx, n, K, trials, seed, report_format, output):
    """Check that monomial vectors are invariant under the U(n) action"""
    seed = resolve_seed(seed)
    set_context(suite="invariance", operation="verify")
    finish(ctx, run_invariance_suite(n, K, trials, seed), report_format, output)


@cli.command()
@click.option("--n", "n", type=Count(1), required=True, help="Key modes")
@click.option("--k", "k", type=Count(1), required=True, help="Test modes")
@click.option("--da", "d_A", type=float, required=True, help="Alice's per-mode energy threshold")
@click.option("--db", "d_B", type=float, required=True, help="Bob's per-mode energy threshold")
@click.option("--mean-photons", type=click.FloatRange(0.0), required=True,
              help="Mean photon number per mode of the simulated input")
@click.option("--mean-photons-b", type=click.FloatRange(0.0), default=None,
              help="Bob's mean photon number, if different from Alice's")
@click.option("--eps-test", type=float, required=True, help="Energy-test failure budget")
@click.option("--trials", type=Count(1), default="1e5", show_default=True)
@click.option("--model", type=click.Choice(MODELS), default="thermal", show_default=True)
@click.option("--method", type=click.Choice(METHODS), default="auto", show_default=True)
@click.option("--lemma-d", type=click.FloatRange(0.0, min_open=True), default=None,
              help="Threshold of the chi-square event (default: --da)")
@click.option("--lemma-eps", type=float, default=None,
              help="Budget of the chi-square event (default: eps-test/4)")
@seed_option
@parallel_options
@format_option
@click.pass_context
def simulate(ctx, n, k, d_A, d_B, mean_photons, mean_photons_b, eps_test, trials, model, method,
             lemma_d, lemma_eps, seed, threads, batches, report_format, output):
    """🎲 Simulate the energy test and its chi-square failure event"""
    seed = resolve_seed(seed)
    set_context(operation="simulate")
    test = TestParams(n=n, k=k, d_A=d_A, d_B=d_B)
    means = mean_photons if mean_photons_b is None else (mean_photons, mean_photons_b)
    failure_seed, lemma_seed = seed, seed + 1
    failure = failure_event_estimate(test, means, eps_test, trials, failure_seed, model, method, batches, threads)
    lemma36 = lemma36_probability(
        n,
        k,
        d_A if lemma_d is None else lemma_d,
        eps_test / 4 if lemma_eps is None else lemma_eps,
        trials,
        lemma_seed,
        batches,
        threads,
    )
    report = {
        "kind": "simulate",
        "seed": seed,
        "parameters": {
            "n": n,
            "k": k,
            "d_A": d_A,
            "d_B": d_B,
            "mean_photons": mean_photons,
            "mean_photons_b": mean_photons_b,
            "eps_test": eps_test,
            "trials": trials,
            "model": model,
            "method": method,
        },
        "failure": failure.to_dict(),
        "lemma36": lemma36.to_dict(),
        "passed": failure.passed and lemma36.passed,
    }
    finish(ctx, report, report_format, output)


def main():
    """
    Main CLI entry point for gdefinetti.
    """
    try:
        cli()
    except KeyboardInterrupt:
        error_console.print("\n[yellow]Interrupted.[/yellow]")
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
