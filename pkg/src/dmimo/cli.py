"""Command-line experiment harness."""

from __future__ import annotations

import os
from dataclasses import replace

import click

from . import engine, harness, report
from .config import ExperimentConfig, load_config


def _load(config_path, trials, seed, fmt):
    cfg = load_config(config_path) if config_path else ExperimentConfig()
    if trials is not None:
        cfg = replace(cfg, trials=trials)
    if seed is not None:
        cfg = replace(cfg, scenario=replace(cfg.scenario, seed=seed))
    if fmt is not None:
        cfg = replace(cfg, emit_format=fmt)
    problems = cfg.validate()
    if problems:
        raise click.ClickException("invalid config: " + "; ".join(problems))
    return cfg


def _emit(records, cfg, out, plot, renderer):
    harness.emit_results(records, cfg.emit_format, out, harness.make_manifest(cfg))
    click.echo("wrote %s (%d records)" % (out, len(records)))
    if plot:
        png = os.path.splitext(out)[0] + ".png"
        renderer(records, png)
        click.echo("wrote %s" % png)


common = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None),
    click.option("--trials", type=int, default=None, help="override trial count"),
    click.option("--seed", type=int, default=None, help="override root seed"),
    click.option("--out", required=True, type=click.Path(), help="output file"),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None),
    click.option("--workers", type=int, default=1, help="trial-level thread pool size"),
    click.option("--plot", is_flag=True, help="also render a PNG next to the output"),
]


def with_common(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Mobile distributed-MIMO Monte-Carlo experiments."""


@main.command()
@with_common
def downlink(config_path, trials, seed, out, fmt, workers, plot):
    """Coherent-downlink capacity vs UE distance (distance_m sweep)."""
    cfg = _load(config_path, trials, seed, fmt)
    records = harness.run_downlink_case_study(cfg, workers=workers)
    _emit(records, cfg, out, plot, report.render_downlink)


@main.command()
@with_common
def uplink(config_path, trials, seed, out, fmt, workers, plot):
    """Non-coherent uplink throughput vs relay-unit count (num_rus sweep)."""
    cfg = _load(config_path, trials, seed, fmt)
    records = harness.run_uplink_case_study(cfg, workers=workers)
    _emit(records, cfg, out, plot, report.render_uplink)


@main.command()
@with_common
@click.option(
    "--csi",
    type=click.Choice([s.value for s in engine.CsiSource]),
    default="predicted",
    help="CSI source for the downlink precoder",
)
def mobility(config_path, trials, seed, out, fmt, workers, plot, csi):
    """Downlink bitrate across mobility profiles (mobility sweep)."""
    cfg = _load(config_path, trials, seed, fmt)
    records = harness.run_mobility_sweep(
        cfg, workers=workers, csi_source=engine.CsiSource(csi)
    )
    _emit(records, cfg, out, plot, report.render_mobility)


@main.command("rc-bench")
@click.option("--trials", type=int, default=20, help="number of fading realizations")
@click.option("--seed", type=int, default=1, help="first realization seed")
@click.option("--out", required=True, type=click.Path())
@click.option("--plot", is_flag=True)
def rc_bench(trials, seed, out, plot):
    """One-step channel-prediction NMSE of the ESN vs persistence."""
    rows = harness.run_rc_benchmark(range(seed, seed + trials))
    harness.emit_rc_benchmark(rows, out)
    click.echo("wrote %s (%d rows)" % (out, len(rows)))
    if plot:
        png = os.path.splitext(out)[0] + ".png"
        report.render_rc_benchmark(rows, png)
        click.echo("wrote %s" % png)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def validate(config_path):
    """Check a config file and report every violation."""
    cfg = load_config(config_path)
    problems = cfg.validate()
    from .config import build_scenario
    from .scenario import validate as validate_scenario

    try:
        problems += validate_scenario(build_scenario(cfg.scenario))
    except ValueError as exc:
        problems.append(str(exc))
    if problems:
        for p in problems:
            click.echo("ERROR: %s" % p)
        raise SystemExit(1)
    click.echo("ok")


if __name__ == "__main__":
    main()
