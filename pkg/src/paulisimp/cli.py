"""Command-line front end.

Subcommands:

- ``verify-counts --kind <k> --n <n>``: one CSV row comparing a closed-form
  coefficient count against the orbit oracle; exits non-zero on mismatch.
- ``converge``: the channel-averaging study with flag-level overrides,
  streaming its CSV to stdout.
- one subcommand per experiment (``counts``, ``converge``,
  ``readout-mitigation``, ``noise-estimation``, ``time-series``) accepting
  ``--config <path.json> [--seed N] [--out DIR]`` and writing CSV + JSON +
  PNG reports; the exit status reflects the experiment's built-in assertion.

The only environment knob is PAULISIMP_THREADS (trial-level worker count).
"""

from __future__ import annotations

import json
import sys

import click

from .experiments import (
    EXPERIMENT_DEFAULTS,
    EXPERIMENTS,
    emit_report,
    report_csv,
    run_experiment,
)
from .symmetry import FORMULA_KINDS, verify_count


@click.group()
@click.version_option(package_name="paulisimp")
def main():
    """Pauli channel symmetrisation and randomisation toolkit."""


@main.command("verify-counts")
@click.option("--kind", required=True, type=click.Choice(FORMULA_KINDS))
@click.option("--n", "n", required=True, type=int)
def verify_counts_command(kind: str, n: int):
    """Check one closed-form count against the brute-force oracle."""
    try:
        record = verify_count(kind, n)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    click.echo("kind,n,closed_form,oracle,match")
    click.echo(
        f"{record['kind']},{record['n']},{record['closed_form']},"
        f"{record['oracle']},{'true' if record['match'] else 'false'}"
    )
    sys.exit(0 if record["match"] else 1)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise click.UsageError(f"config {path} must hold a JSON object")
    return config


def _finish(report, out: str | None, echo_csv: bool):
    if echo_csv:
        click.echo(report_csv(report), nl=False)
    if out is not None:
        paths = emit_report(report, out)
        for kind in ("csv", "json", "png"):
            click.echo(f"wrote {paths[kind]}", err=True)
    for failure in report.failures:
        click.echo(f"FAIL: {failure}", err=True)
    click.echo(
        f"{report.experiment}: {'PASS' if report.passed else 'FAIL'}", err=True
    )
    sys.exit(0 if report.passed else 1)


@main.command("converge")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--model", type=click.Choice(["r1", "r2"]), default=None)
@click.option("--n", "n", type=int, default=None)
@click.option("--eta", type=float, default=None)
@click.option("--spread", type=float, default=None)
@click.option("--epsilon", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
def converge_command(config_path, model, n, eta, spread, epsilon, delta, trials, seed, out):
    """Average sampled channels and track concentration; CSV on stdout."""
    config = _load_config(config_path)
    flags = {
        "model": model,
        "n": n,
        "eta": eta,
        "spread": spread,
        "epsilon": epsilon,
        "delta": delta,
        "trials": trials,
        "seed": seed,
    }
    config.update({k: v for k, v in flags.items() if v is not None})
    try:
        report = run_experiment("converge", config)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    _finish(report, out, echo_csv=True)


def _make_experiment_command(name: str):
    @click.option("--config", "config_path", type=click.Path(exists=True), default=None)
    @click.option("--seed", type=int, default=None)
    @click.option("--out", type=click.Path(), default="reports")
    def command(config_path, seed, out):
        config = _load_config(config_path)
        if seed is not None:
            config["seed"] = seed
        try:
            report = run_experiment(name, config)
        except ValueError as exc:
            raise click.UsageError(str(exc))
        _finish(report, out, echo_csv=False)

    command.__name__ = name.replace("-", "_")
    command.__doc__ = f"Run the {name} experiment and write its reports."
    return command


for _name in EXPERIMENTS:
    if _name != "converge":
        main.command(_name)(_make_experiment_command(_name))


@main.command("defaults")
@click.argument("experiment", type=click.Choice(EXPERIMENTS))
def defaults_command(experiment: str):
    """Print an experiment's default config as JSON (a config template)."""
    click.echo(json.dumps(EXPERIMENT_DEFAULTS[experiment], indent=2, default=list))


if __name__ == "__main__":
    main()
