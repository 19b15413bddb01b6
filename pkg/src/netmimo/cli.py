"""Command-line entry points: simulate, sweep, oracle, validate."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import click
import numpy as np

from . import oracle as oracle_mod
from .config import SCHEMES, SimConfig
from .harness import (
    output_root,
    run_episode,
    run_sweep,
    write_metrics_csv,
    write_summary_json,
    write_trace_csv,
)
from .topology import ConfigurationError


def _fail(message: str, code: int = 2) -> None:
    # machine-readable error report on stderr
    click.echo(json.dumps({"error": message}), err=True)
    sys.exit(code)


def _load_config(path: str, seed: int | None, scheme: str | None) -> SimConfig:
    try:
        cfg = SimConfig.from_json(Path(path).read_text())
    except FileNotFoundError:
        _fail(f"config file not found: {path}")
    except ConfigurationError as exc:
        _fail(str(exc))
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if scheme is not None:
        overrides["scheme"] = scheme
    if overrides:
        try:
            cfg = cfg.replace(**overrides)
        except ConfigurationError as exc:
            _fail(str(exc))
    return cfg


@click.group()
def main() -> None:
    """Multicell network-MIMO clustering and power-control simulator."""


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option(
    "--scheme", type=click.Choice(SCHEMES), default=None, help="Override the scheme."
)
@click.option("--output-dir", "output_dir", type=click.Path(), default=None)
def simulate(config_path, seed, scheme, output_dir) -> None:
    """Run one episode and write metrics.csv, trace.csv and summary.json."""
    cfg = _load_config(config_path, seed, scheme)
    root = output_root(output_dir)
    try:
        metrics, trace = run_episode(cfg)
    except (ConfigurationError, RuntimeError) as exc:
        _fail(str(exc), code=1)
    write_metrics_csv([metrics], root / "metrics.csv")
    write_trace_csv(trace, root / "trace.csv")
    write_summary_json(cfg, metrics, root / "summary.json")
    click.echo(f"wrote metrics.csv, trace.csv, summary.json to {root}")


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--axis", required=True, help="Config field to sweep.")
@click.option("--values", required=True, help="Comma-separated numeric values.")
@click.option("--seeds", default="0", help="Comma-separated seeds.")
@click.option(
    "--schemes",
    default=None,
    help="Comma-separated schemes, or 'all'; defaults to the config scheme.",
)
@click.option("--output-dir", "output_dir", type=click.Path(), default=None)
def sweep(config_path, axis, values, seeds, schemes, output_dir) -> None:
    """Sweep one config field across values x seeds x schemes."""
    cfg = _load_config(config_path, None, None)
    root = output_root(output_dir)
    try:
        value_list = [float(v) for v in values.split(",")]
        seed_list = [int(s) for s in seeds.split(",")]
    except ValueError as exc:
        _fail(f"bad --values/--seeds: {exc}")
    scheme_list = None
    if schemes is not None:
        scheme_list = SCHEMES if schemes == "all" else tuple(schemes.split(","))
        unknown = set(scheme_list) - set(SCHEMES)
        if unknown:
            _fail(f"unknown schemes: {sorted(unknown)}")
    try:
        results = run_sweep(cfg, axis, value_list, seed_list, scheme_list)
    except (ConfigurationError, RuntimeError) as exc:
        _fail(str(exc), code=1)
    path = root / f"sweep_{axis}.csv"
    write_metrics_csv(results, path)
    click.echo(f"wrote {path}")


@main.command()
@click.argument("instance_path", type=click.Path())
@click.option("--output-dir", "output_dir", type=click.Path(), default=None)
def oracle(instance_path, output_dir) -> None:
    """Exact per-user dynamic-programming solution of a tiny instance."""
    try:
        inst = oracle_mod.TinyInstance.from_json(Path(instance_path).read_text())
    except FileNotFoundError:
        _fail(f"instance file not found: {instance_path}")
    except (KeyError, ValueError) as exc:
        _fail(f"malformed instance: {exc}")
    root = output_root(output_dir)
    try:
        ens = oracle_mod.build_csi_ensemble(inst)
        doc = {"users": [], "max_residual": 0.0}
        for u in range(inst.num_users):
            sol = oracle_mod.per_user_rvi(inst, u, ens)
            doc["users"].append(
                {
                    "user": u,
                    "values": sol.values.tolist(),
                    "theta": sol.theta,
                    "mu_tau": sol.mu_tau.tolist(),
                    "residual": float(np.max(sol.residual)),
                    "sweeps": sol.sweeps,
                }
            )
            doc["max_residual"] = max(doc["max_residual"], float(np.max(sol.residual)))
    except oracle_mod.OracleDivergence as exc:
        _fail(str(exc), code=1)
    root.mkdir(parents=True, exist_ok=True)
    path = root / "oracle.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    click.echo(f"wrote {path} (max residual {doc['max_residual']:.3e})")


@main.command()
def validate() -> None:
    """Run the acceptance suite; exit 0 iff every criterion passes."""
    candidates = [
        Path.cwd() / "tests" / "test_acceptance.py",
        Path(__file__).resolve().parents[2] / "tests" / "test_acceptance.py",
    ]
    target = next((c for c in candidates if c.exists()), None)
    if target is None:
        _fail("acceptance suite not found; run from the repository root")
    result = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-s", str(target)], check=False
    )
    sys.exit(result.returncode)


if __name__ == "__main__":
    main()
