"""Command-line front end: ``weakclosure verify | props | analyze``.

Exit codes: 0 verified, 1 a claim failed, 2 a budget was exceeded, 64 usage error.
Every flag can also be set through a ``WEAKCLOSURE_*`` environment variable;
an explicit flag wins.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from . import faults, toolkit as tk
from .verify import Config, analyze, parse_group_file, props, verify_main

EXIT_OK, EXIT_FAIL, EXIT_BUDGET, EXIT_USAGE = 0, 1, 2, 64

FAULT_ENV = "WEAKCLOSURE_FAULT"


class UsageProblem(click.UsageError):
    exit_code = EXIT_USAGE


def _common(fn):
    opts = [
        click.option("--seed", type=int, default=0, show_default=True, envvar="WEAKCLOSURE_SEED",
                     help="Seed for every sampled check."),
        click.option("--omega-size", type=click.Choice(["2", "4", "9"]), default=None,
                     envvar="WEAKCLOSURE_OMEGA_SIZE", help="Size of Omega (verify: 9, props: 2 or 4)."),
        click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
                     envvar="WEAKCLOSURE_JOBS", help="Worker threads; the report does not depend on it."),
        click.option("--out", type=click.Path(dir_okay=False), default=None, envvar="WEAKCLOSURE_OUT",
                     help="Write the JSON report here ('-' for stdout)."),
        click.option("--max-rank", type=click.IntRange(min=1), default=4, show_default=True,
                     envvar="WEAKCLOSURE_MAX_RANK", help="Largest elementary abelian rank enumerated."),
        click.option("--max-subgroups", type=click.IntRange(min=1), default=10 ** 6, show_default=True,
                     envvar="WEAKCLOSURE_MAX_SUBGROUPS", help="Cap on enumerated subgroups."),
        click.option("--cycle-bound", type=click.IntRange(min=1), default=81, show_default=True,
                     envvar="WEAKCLOSURE_CYCLE_BOUND", help="Largest coupled block orbit on V0."),
        click.option("--timings/--no-timings", default=False, envvar="WEAKCLOSURE_TIMINGS",
                     help="Include wall times in the JSON report (breaks byte-for-byte reproducibility)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _config(default_omega: int, **kw) -> Config:
    omega = int(kw["omega_size"]) if kw["omega_size"] else default_omega
    return Config(seed=kw["seed"], omega_size=omega, jobs=kw["jobs"], max_rank=kw["max_rank"],
                  max_subgroups=kw["max_subgroups"], cycle_bound=kw["cycle_bound"], timings=kw["timings"])


def _check_out(out: str | None) -> None:
    if out and out != "-":
        parent = Path(out).expanduser().resolve().parent
        if not parent.is_dir():
            raise UsageProblem(f"output directory does not exist: {parent}")


def _emit(report, out: str | None) -> int:
    for line in report.summary_lines():
        click.echo(line, err=out == "-")
    if out == "-":
        sys.stdout.write(report.to_json())
    elif out:
        Path(out).expanduser().write_text(report.to_json())
    return report.exit_code()


def _faults_from_env() -> tuple[str, ...]:
    raw = os.environ.get(FAULT_ENV, "")
    names = tuple(x.strip() for x in raw.split(",") if x.strip())
    unknown = set(names) - faults.KNOWN
    if unknown:
        raise UsageProblem(f"unknown fault hook(s): {', '.join(sorted(unknown))}")
    return names


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Verify the weak-closure counterexample and run the brute-force lemma suites."""


@main.command()
@_common
def verify(**kw):
    """Build G and V0 and check every claim about them."""
    cfg = _config(9, **kw)
    if cfg.omega_size != 9:
        raise UsageProblem("verify needs --omega-size 9")
    _check_out(kw["out"])
    with faults.injected(*_faults_from_env()):
        report = verify_main(cfg)
    return _emit(report, kw["out"])


@main.command("props")
@_common
def props_cmd(**kw):
    """Brute-force oracles and lemma property suites on small instances."""
    cfg = _config(4, **kw)
    if cfg.omega_size not in (2, 4):
        raise UsageProblem("props needs --omega-size 2 or 4")
    _check_out(kw["out"])
    with faults.injected(*_faults_from_env()):
        report = props(cfg)
    return _emit(report, kw["out"])


@main.command("analyze")
@click.argument("group_file", type=click.Path(exists=True, dir_okay=False))
@_common
def analyze_cmd(group_file, **kw):
    """Offender, quadratic and weak-closure analysis of a matrix group read from a file."""
    cfg = _config(9, **kw)
    _check_out(kw["out"])
    try:
        dim, gens = parse_group_file(Path(group_file).read_text())
    except ValueError as exc:
        raise UsageProblem(f"{group_file}: {exc}") from exc
    report = analyze(cfg, dim, gens)
    return _emit(report, kw["out"])


def run(argv=None) -> int:
    """Entry point returning the exit code instead of raising SystemExit."""
    try:
        rv = main.main(args=argv, prog_name="weakclosure", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return EXIT_USAGE
    except tk.BudgetExceeded as exc:
        click.echo(f"budget exceeded: {exc}", err=True)
        return EXIT_BUDGET
    return rv if isinstance(rv, int) else EXIT_OK


def entry() -> None:
    sys.exit(run())


if __name__ == "__main__":
    entry()
