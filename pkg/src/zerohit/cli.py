"""Command-line interface for the verification experiments."""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import analytic, harness
from .core import ExperimentConfig


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="flat key=value config file")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="override the config seed")(fn)
    fn = click.option("--workers", type=int, default=1, show_default=True)(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), default="out",
                      show_default=True, help="output directory")(fn)
    fn = click.option("--alpha", type=float, default=None,
                      help="override the significance level")(fn)
    return fn


def _load_config(config_path, seed, alpha) -> ExperimentConfig:
    cfg = (ExperimentConfig.from_file(config_path) if config_path
           else ExperimentConfig())
    if seed is not None:
        cfg = cfg.with_seed(seed)
    if alpha is not None:
        from dataclasses import replace
        cfg = replace(cfg, alpha=alpha)
    return cfg


def _report_and_exit(result):
    for r in result.reports:
        status = "PASS" if r.passed else "FAIL"
        click.echo(f"[{status}] {r.claim}: {r.kind} stat={r.statistic:.5g} "
                   f"p={r.p_value:.4g} n={r.n}")
    click.echo(f"{result.experiment}: "
               f"{'all claims pass' if result.all_passed else 'FAILURES'} "
               f"({result.wall_time:.1f}s)")
    sys.exit(0 if result.all_passed else 1)


@click.group()
def main():
    """Monte Carlo verification of the pre-hitting Brownian path laws."""


@main.command("verify-densities")
@_common
def verify_densities(config_path, seed, workers, out_dir, alpha):
    cfg = _load_config(config_path, seed, alpha)
    result = harness.run_verify_densities(cfg, workers=workers,
                                          out_dir=Path(out_dir))
    _report_and_exit(result)


@main.command("verify-theorem1")
@_common
def verify_theorem1(config_path, seed, workers, out_dir, alpha):
    cfg = _load_config(config_path, seed, alpha)
    result = harness.run_verify_theorem1(cfg, workers=workers,
                                         out_dir=Path(out_dir))
    _report_and_exit(result)


@main.command("verify-conditionals")
@_common
@click.option("--y", type=float, default=10.0, show_default=True,
              help="running-max threshold for the conditional law")
def verify_conditionals(config_path, seed, workers, out_dir, alpha, y):
    cfg = _load_config(config_path, seed, alpha)
    result = harness.run_verify_conditionals(cfg, y=y, workers=workers,
                                             out_dir=Path(out_dir))
    _report_and_exit(result)


@main.command("verify-meander")
@_common
def verify_meander(config_path, seed, workers, out_dir, alpha):
    cfg = _load_config(config_path, seed, alpha)
    result = harness.run_verify_meander(cfg, workers=workers,
                                        out_dir=Path(out_dir))
    _report_and_exit(result)


@main.command("convergence")
@_common
@click.option("--steps", default="1e-2,1e-3,1e-4", show_default=True,
              help="comma-separated step sizes, descending")
def convergence(config_path, seed, workers, out_dir, alpha, steps):
    cfg = _load_config(config_path, seed, alpha)
    step_list = tuple(float(s) for s in steps.split(","))
    result = harness.run_convergence_study(cfg, steps=step_list,
                                           workers=workers,
                                           out_dir=Path(out_dir))
    _report_and_exit(result)


@main.command("tabulate")
@click.option("--law", required=True,
              type=click.Choice(["tau_density", "v_density",
                                 "v_tail_asymptote", "max_tail",
                                 "sqrt_tau_density", "q_asymptote"]))
@click.option("--x", type=float, default=1.0, show_default=True)
@click.option("--u", type=float, default=None)
@click.option("--grid", default="0.1:5:50", show_default=True,
              help="start:stop:num linear grid of arguments")
@click.option("--out", "out_path", type=click.Path(), default="law.csv",
              show_default=True)
def tabulate(law, x, u, grid, out_path):
    start, stop, num = grid.split(":")
    pts = np.linspace(float(start), float(stop), int(num))
    spec = analytic.DensitySpec(law=law, x=x, u=u)
    path = harness.run_tabulate(spec, pts, out_path)
    click.echo(f"wrote {path}")


@main.command("sample")
@_common
@click.option("--sampler", required=True,
              type=click.Choice(["tau", "v", "theorem1_rhs",
                                 "meander_rayleigh", "meander_last_zero"]))
@click.option("--n", type=int, default=1000, show_default=True)
def sample(config_path, seed, workers, out_dir, alpha, sampler, n):
    cfg = _load_config(config_path, seed, alpha)
    out_path = Path(out_dir) / f"{sampler}_dump.csv"
    path = harness.run_sample_dump(sampler, cfg, n, out_path,
                                   workers=workers)
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
