"""``seqfusion`` command line: generate, run, sweep, inspect."""

from __future__ import annotations

import csv
import io
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from .config import ExperimentConfig, build_config, parse_grid, parse_kv, parse_synthetic
from .datasets import atomic_write_text, describe, load_dataset_with_split, save_dataset
from .exceptions import ConfigError, DatasetLoadError, SeqFusionError
from .pipeline import evaluate_all, format_table, read_reports_csv, reports_to_csv
from .synthgen import cells_from_axes, gen_four_block_dataset, sweep

log = logging.getLogger("seqfusion")

EXIT_OK, EXIT_MODEL_ERROR, EXIT_CONFIG = 0, 1, 2


def _write_error(out: str | None, kind: str, message: str, **extra) -> None:
    record = {"error": kind, "message": message, **extra}
    click.echo(json.dumps(record), err=True)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        atomic_write_text(Path(out) / "error.json", json.dumps(record, indent=2) + "\n")


def _load_config(hp_file, default_preset=None, **flags) -> ExperimentConfig:
    file_values = {}
    if hp_file is not None:
        path = Path(hp_file)
        if not path.exists():
            raise ConfigError(f"config file {hp_file} does not exist")
        file_values = parse_kv(path.read_text())
    if default_preset and flags.get("preset") is None and "preset" not in file_values:
        flags["preset"] = default_preset
    return build_config(file_values, **flags)


def _source(cfg: ExperimentConfig):
    if cfg.synthetic is not None:
        params = parse_synthetic(cfg.synthetic)
        return gen_four_block_dataset(seed=cfg.seed, **params), None
    return load_dataset_with_split(cfg.data)


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for debug output.")
def main(verbose):
    """Classifiers for data with static and dynamic (time-series) features."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--synthetic", default="default", show_default=True,
              help="'default' or e.g. 'n_samples=400,n_s=10,n_d=5,l_d=50'.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--layout", type=click.Choice(["long", "wide"]), default="long", show_default=True)
def generate(synthetic, seed, out, layout):
    """Write a four-block synthetic dataset to disk."""
    try:
        params = parse_synthetic(synthetic)
    except ConfigError as exc:
        _write_error(None, "ConfigError", str(exc))
        sys.exit(EXIT_CONFIG)
    data = gen_four_block_dataset(seed=seed, **params)
    manifest = save_dataset(data, out, layout=layout)
    click.echo(str(manifest))


@main.command()
@click.option("--data", type=click.Path(), help="Dataset manifest or UCR-style file.")
@click.option("--synthetic", help="Synthetic spec, 'default' or key=value list.")
@click.option("--models", help="'all', '1,2,10' or '1-4'.")
@click.option("--protocol", help="'train-test' or 'cv:k'.")
@click.option("--seed", type=int, help="Global seed.")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory.")
@click.option("--hp-file", type=click.Path(), help="key = value config file; flags override it.")
@click.option("--preset", help="Hyperparameter preset (FordA, FordB, ECoG, Phalanges, Yoga, synthetic).")
@click.option("--test-fraction", type=float, help="Held-out fraction when no split is given.")
@click.option("--timing/--no-timing", default=None,
              help="Fill wall_time_s in reports.csv (off by default so reruns are byte-identical).")
def run(data, synthetic, models, protocol, seed, out, hp_file, preset, test_fraction, timing):
    """Train and evaluate models; writes reports.csv, per-model JSON and summary.txt."""
    try:
        cfg = _load_config(hp_file, data=data, synthetic=synthetic, models=models, protocol=protocol,
                           seed=seed, out=out, preset=preset, test_fraction=test_fraction, timing=timing)
        if cfg.data is None and cfg.synthetic is None:
            raise ConfigError("give --data or --synthetic")
        cfg.validate()
    except ConfigError as exc:
        _write_error(out, "ConfigError", str(exc))
        sys.exit(EXIT_CONFIG)
    out_dir = Path(cfg.out)
    try:
        dataset, plan = _source(cfg)
    except (DatasetLoadError, SeqFusionError, ValueError) as exc:
        _write_error(str(out_dir), type(exc).__name__, str(exc))
        sys.exit(EXIT_CONFIG)
    test = None
    if plan is not None and cfg.protocol == "train-test":
        dataset, test = dataset.subset(plan.part(0)), dataset.subset(plan.part(1))
    reports = evaluate_all(dataset, cfg.models, cfg.hp, cfg.protocol, test=test, test_fraction=cfg.test_fraction)

    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "reports.csv", reports_to_csv(reports, timing=cfg.timing))
    models_dir = out_dir / "models"
    models_dir.mkdir(exist_ok=True)
    for rep in reports:
        atomic_write_text(models_dir / f"{rep.model_id:02d}_{rep.name}.json",
                          json.dumps(rep.metadata(), indent=2, default=_json_default) + "\n")
    atomic_write_text(out_dir / "config.json", json.dumps(cfg.as_dict(), indent=2, default=_json_default) + "\n")
    atomic_write_text(out_dir / "summary.txt", format_table(reports) + "\n")
    click.echo(format_table(reports))

    failed = [r for r in reports if r.error]
    if failed:
        _write_error(str(out_dir), "ModelError", f"{len(failed)} of {len(reports)} models failed",
                     models=[{"id": r.model_id, "name": r.name, "error": r.error} for r in failed])
        sys.exit(EXIT_MODEL_ERROR)
    errfile = out_dir / "error.json"
    if errfile.exists():
        errfile.unlink()


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    return str(value)


SWEEP_COLUMNS = ("size", "l_d", "n_s", "n_d", "dynamic_ratio", "model_id", "accuracy", "error")


@main.command("sweep")
@click.option("--grid", help="'sizes=...;lengths=...;ratios=...;total=...' or a key = value file.")
@click.option("--models", help="'all', '1,10' or '1-4'.")
@click.option("--seed", type=int)
@click.option("--out", type=click.Path(file_okay=False))
@click.option("--hp-file", type=click.Path())
@click.option("--preset")
@click.option("--test-fraction", type=float)
def sweep_cmd(grid, models, seed, out, hp_file, preset, test_fraction):
    """Evaluate models over a grid of synthetic datasets; writes sweep.csv."""
    try:
        cfg = _load_config(hp_file, models=models, seed=seed, out=out, grid=grid,
                           preset=preset, default_preset="synthetic", test_fraction=test_fraction)
        cfg.validate(need_source=False)
        axes = parse_grid(cfg.grid)
    except ConfigError as exc:
        _write_error(out, "ConfigError", str(exc))
        sys.exit(EXIT_CONFIG)
    cells = cells_from_axes(axes["sizes"], axes["lengths"], axes["ratios"], axes["total"])
    result = sweep(cells, cfg.models, cfg.hp, cfg.seed, cfg.test_fraction)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in result.to_rows():
        row = dict(row)
        row["accuracy"] = "nan" if np.isnan(row["accuracy"]) else f"{row['accuracy']:.6f}"
        row["dynamic_ratio"] = f"{row['dynamic_ratio']:.6f}"
        writer.writerow(row)
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "sweep.csv", buf.getvalue())
    click.echo(buf.getvalue(), nl=False)
    failed = [r for r in result.rows if r.get("error")]
    if failed:
        _write_error(str(out_dir), "ModelError", f"{len(failed)} of {len(result.rows)} cell/model runs failed")
        sys.exit(EXIT_MODEL_ERROR)


@main.command()
@click.argument("path", type=click.Path())
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def inspect(path, as_json):
    """Summarize a dataset (manifest or UCR file) or a reports.csv."""
    p = Path(path)
    try:
        if p.suffix.lower() == ".csv" and p.read_text().startswith("id,"):
            rows = read_reports_csv(p.read_text())
            if as_json:
                click.echo(json.dumps(rows, indent=2))
            else:
                for r in rows:
                    click.echo(f"{r['id']:>3}  {r['name']:<10} {r['accuracy']:.6f}  folds={r['n_folds']}  seed={r['seed']}")
            return
        data, plan = load_dataset_with_split(p)
    except (DatasetLoadError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        _write_error(None, type(exc).__name__, str(exc))
        sys.exit(EXIT_CONFIG)
    summary = describe(data)
    if plan is not None:
        summary["split_sizes"] = plan.sizes()
    if as_json:
        click.echo(json.dumps(summary, indent=2))
        return
    click.echo(f"{summary['name']}: {summary['n_samples']} samples, n_s={summary['n_s']}, "
               f"n_d={summary['n_d']}, l_d={summary['l_d']}")
    click.echo("classes: " + ", ".join(f"{k}={v}" for k, v in summary["class_counts"].items()))
    if plan is not None:
        click.echo(f"train/test: {summary['split_sizes'][0]}/{summary['split_sizes'][1]}")
    for kind in ("static", "dynamic"):
        for s in summary[kind][:20]:
            click.echo(f"  {kind}[{s['feature']}] mean={s['mean']:.4g} std={s['std']:.4g} "
                       f"min={s['min']:.4g} max={s['max']:.4g}")
        if len(summary[kind]) > 20:
            click.echo(f"  ... {len(summary[kind]) - 20} more {kind} features")


if __name__ == "__main__":
    main()
