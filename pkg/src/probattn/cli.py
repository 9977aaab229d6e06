"""Command-line entry points: verify, bench, gen-synth, serve.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O
error. Every command is deterministic under a fixed --seed.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click

from .playground.bench import (
    evaluate_curve,
    load_manifest,
    write_curve_csv,
    write_curve_json,
)
from .playground.session import PlaygroundConfig
from .playground.synth import generate_dataset
from .verify import Sizes, run_all


@click.group()
def main():
    """Mixture-model attention playground tools."""


@main.command("verify")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--sizes", default="16,8,4", show_default=True,
              help="max_n,max_d,max_m instance caps")
@click.option("--perturb", default=0.0, show_default=True, type=float,
              help="inject this error into the implementation side (negative control)")
@click.option("--report", default="text", show_default=True,
              type=click.Choice(["text", "json"]))
def cmd_verify(seed, sizes, perturb, report):
    """Run every oracle-backed verification suite."""
    try:
        size_caps = Sizes.parse(sizes)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    results = run_all(seed=seed, sizes=size_caps, perturb=perturb)
    ok = all(r.passed for r in results)
    if report == "json":
        click.echo(json.dumps(
            {"passed": ok, "seed": seed, "suites": [r.to_json_dict() for r in results]},
            indent=2,
        ))
    else:
        for r in results:
            status = "PASS" if r.passed else "FAIL"
            click.echo(
                f"{status} {r.name:34s} max_error={r.max_error:.3e} "
                f"tol={r.tolerance:.0e} cases={r.cases} ({r.seconds:.2f}s)"
            )
        click.echo("\ncovered invariants:")
        for r in results:
            for item in r.covers:
                click.echo(f"  - {item} [{r.name}]")
        click.echo(f"\n{'all suites passed' if ok else 'SUITE FAILURES PRESENT'}")
    sys.exit(0 if ok else 1)


def _load_config(path):
    if path is None:
        return PlaygroundConfig()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        click.echo(f"cannot read config: {exc}", err=True)
        sys.exit(3)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"config is not valid JSON: {exc}")
    base = PlaygroundConfig().to_json_dict()
    for key in ("feature", "adaptation"):
        if key in data and isinstance(data[key], dict):
            merged = dict(base[key])
            merged.update(data[key])
            data[key] = merged
    base.update(data)
    try:
        return PlaygroundConfig.from_json_dict(base)
    except (ValueError, TypeError) as exc:
        raise click.UsageError(f"invalid config: {exc}")


def _override_adaptation(cfg, **kwargs):
    import dataclasses

    changes = {k: v for k, v in kwargs.items() if v is not None}
    if not changes:
        return cfg
    adaptation = dataclasses.replace(cfg.adaptation, **changes)
    return dataclasses.replace(cfg, adaptation=adaptation)


@main.command("bench")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(), help="dataset manifest JSON")
@click.option("--config", "config_path", default=None, type=click.Path(),
              help="playground config JSON (flags override)")
@click.option("--max-clicks", default=10, show_default=True, type=int)
@click.option("--trials", default=5, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--jobs", default=1, show_default=True, type=int)
@click.option("--value-iters", default=None, type=int)
@click.option("--key-iters", default=None, type=int)
@click.option("--theta-mu", default=None, type=float)
@click.option("--theta-xi", default=None, type=float)
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="output CSV path (JSON twin and run manifest written next to it)")
def cmd_bench(manifest_path, config_path, max_clicks, trials, seed, jobs,
              value_iters, key_iters, theta_mu, theta_xi, out_path):
    """IoU-versus-clicks benchmark with the simulated annotator."""
    cfg = _load_config(config_path)
    cfg = _override_adaptation(
        cfg, value_iters=value_iters, key_iters=key_iters,
        theta_mu=theta_mu, theta_xi=theta_xi,
    )
    try:
        items = load_manifest(manifest_path)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        click.echo(f"cannot load manifest: {exc}", err=True)
        sys.exit(3)
    t0 = time.perf_counter()
    result = evaluate_curve(
        items, cfg, max_clicks=max_clicks, trials=trials, seed=seed, jobs=jobs
    )
    wall = time.perf_counter() - t0
    out = Path(out_path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        write_curve_csv(out, result)
        write_curve_json(out.with_suffix(".json"), result)
        run_manifest = {
            "config": cfg.to_json_dict(),
            "seed": seed,
            "trials": trials,
            "max_clicks": max_clicks,
            "jobs": jobs,
            "dataset_manifest": str(Path(manifest_path).resolve()),
            "csv": str(out.resolve()),
            "json": str(out.with_suffix(".json").resolve()),
            "failed_items": result.failed_items,
            "wall_clock_seconds": round(wall, 3),
        }
        with open(out.with_name(out.stem + "_run.json"), "w", encoding="utf-8") as fh:
            json.dump(run_manifest, fh, indent=2)
    except OSError as exc:
        click.echo(f"cannot write outputs: {exc}", err=True)
        sys.exit(3)
    click.echo(f"wrote {out} ({wall:.1f}s)")


@main.command("gen-synth")
@click.option("--count", default=20, show_default=True, type=int)
@click.option("--size", default=64, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out-dir", required=True, type=click.Path())
def cmd_gen_synth(count, size, seed, out_dir):
    """Generate a synthetic shapes dataset with masks, bboxes, manifest."""
    if size < 32:
        raise click.UsageError("size must be at least 32")
    try:
        path = generate_dataset(count, size, seed, out_dir)
    except OSError as exc:
        click.echo(f"cannot write dataset: {exc}", err=True)
        sys.exit(3)
    click.echo(str(path))


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--static", "static_dir", default=None, type=click.Path(),
              help="directory with the built UI (served at /)")
@click.option("--capacity", default=64, show_default=True, type=int,
              help="max live sessions before LRU eviction")
def cmd_serve(host, port, config_path, static_dir, capacity):
    """Serve the session API (and the UI when --static is given)."""
    import uvicorn

    from .service.app import create_app

    default_config = None
    if config_path is not None:
        default_config = _load_config(config_path)
    if static_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if candidate.is_dir():
            static_dir = str(candidate)
    app = create_app(
        default_config=default_config, capacity=capacity, static_dir=static_dir
    )
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    except SystemExit:
        raise
    except OSError as exc:
        click.echo(f"cannot bind {host}:{port}: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
