"""Command line interface.

Config files are YAML key/value documents; the recognized keys per command
are documented in the README. The eval command writes the delimited report
(CSV) plus rendered matplotlib figures side by side.
"""
from __future__ import annotations

from pathlib import Path

import click
import yaml


def _load_config(path) -> dict:
    if path is None:
        return {}
    data = yaml.safe_load(Path(path).read_text())
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise click.ClickException(f"config {path} must be a mapping of keys to values")
    return data


@click.group()
def main():
    """Amodal reasoning segmentation toolkit."""


# ---- synth ----

@main.group()
def synth():
    """Synthetic occluded-scene datasets."""


@synth.command("build")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML scene config (keys of SceneConfig).")
@click.option("--train", "n_train", type=int, required=True)
@click.option("--val", "n_val", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def synth_build(config_path, n_train, n_val, seed, out_dir):
    """Generate train/val splits with exact ground truth and conversations."""
    from .synth.scenes import SceneConfig, build_dataset

    config = SceneConfig.from_dict(_load_config(config_path)) if config_path else SceneConfig()
    train_dir, val_dir = build_dataset(config, n_train, n_val, seed, out_dir)
    click.echo(f"wrote {n_train} train samples to {train_dir}")
    click.echo(f"wrote {n_val} val samples to {val_dir}")


# ---- train ----

@main.command("train")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML train config (keys of TrainConfig; model.* for ModelConfig).")
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--eval-data", "eval_dir", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--resume", "resume_from", type=click.Path(exists=True), default=None)
def train_cmd(config_path, data_dir, eval_dir, out_dir, resume_from):
    """Train the model; writes metrics.jsonl and checkpoint.pt under --out."""
    from .data.io import load_dataset
    from .model.config import ModelConfig
    from .training.loop import TrainConfig, train

    raw = _load_config(config_path)
    model_raw = raw.pop("model", {})
    model_cfg = ModelConfig.from_dict({"image_size": [64, 64], **model_raw})
    config = TrainConfig(model=model_cfg, out_dir=out_dir, **raw)
    dataset = load_dataset(data_dir)
    eval_dataset = load_dataset(eval_dir) if eval_dir else None
    result = train(config, dataset, eval_dataset=eval_dataset, resume_from=resume_from)
    click.echo(f"finished at step {result.final_step}; checkpoint: {result.checkpoint_path}")


# ---- eval ----

@main.command("eval")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True)
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Output CSV path; table text and figures land next to it.")
@click.option("--name", default="model", show_default=True)
@click.option("--threshold", type=float, default=0.5, show_default=True)
def eval_cmd(checkpoint_path, data_dir, out_path, name, threshold):
    """Evaluate a checkpoint; writes report.csv, report.txt, and figures."""
    from .data.io import load_dataset
    from .evaluation.report import render_report, write_report_bundle
    from .evaluation.runner import collect_qualitative, evaluate_model
    from .training.loop import load_model_from_checkpoint

    model, _ = load_model_from_checkpoint(checkpoint_path)
    dataset = load_dataset(data_dir)
    report = evaluate_model(model, dataset, threshold=threshold)
    examples = collect_qualitative(model, dataset, limit=4, threshold=threshold)
    out_path = Path(out_path)
    named = [(name, report)]
    paths = write_report_bundle(named, out_path.parent if out_path.suffix else out_path,
                                examples=examples)
    if out_path.suffix == ".csv" and paths["csv"] != out_path:
        paths["csv"].replace(out_path)
        paths["csv"] = out_path
    click.echo(render_report(named))
    for kind, p in paths.items():
        click.echo(f"{kind}: {p}")


# ---- genpipe ----

@main.group()
def genpipe():
    """Question/answer generation pipeline."""


@genpipe.command("run")
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--endpoint", default=None, help="Generation service URL; omit with --mock.")
@click.option("--mock", is_flag=True, help="Use the deterministic offline client.")
@click.option("--out", "store_dir", type=click.Path(), required=True)
@click.option("--max-workers", type=int, default=4, show_default=True)
def genpipe_run(data_dir, endpoint, mock, store_dir, max_workers):
    """Generate QA pairs for every sample and enqueue them for review."""
    from .data.io import load_dataset
    from .genpipe.client import HttpVlmClient, MockVlmClient
    from .genpipe.pipeline import run_pipeline
    from .review.store import ReviewStore

    if not mock and not endpoint:
        raise click.ClickException("either --endpoint or --mock is required")
    client = MockVlmClient() if mock else HttpVlmClient(endpoint)
    samples = load_dataset(data_dir)
    image_refs = {s.sample_id: str(Path(data_dir) / "images" / f"{s.sample_id}.png") for s in samples}
    store = ReviewStore(store_dir)
    report = run_pipeline(
        samples, client, store, source={"dataset": str(data_dir)},
        image_refs=image_refs, max_workers=max_workers,
    )
    click.echo(
        f"enqueued {len(report.enqueued)}, skipped {len(report.skipped)}, "
        f"failed {len(report.failures)}"
    )
    for sid, reason in report.failures:
        click.echo(f"  failure {sid}: {reason}")


# ---- review ----

@main.group()
def review():
    """Human review workflow service."""


@review.command("serve")
@click.option("--store", "store_dir", type=click.Path(), required=True)
@click.option("--data", "data_dir", type=click.Path(exists=True), default=None,
              help="Dataset directory backing images and mask overlays.")
@click.option("--ui", "ui_dir", type=click.Path(), default=None,
              help="Built review UI directory to serve under /ui.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8100, show_default=True)
def review_serve(store_dir, data_dir, ui_dir, host, port):
    """Serve the review HTTP API (and the UI when built)."""
    import uvicorn

    from .review.service import create_app
    from .review.store import ReviewStore

    app = create_app(ReviewStore(store_dir), dataset_dir=data_dir, static_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


@review.command("export")
@click.option("--store", "store_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def review_export(store_dir, out_dir):
    """Export finalized records as a dataset directory."""
    from .review.store import ReviewStore

    store = ReviewStore(store_dir)
    path = store.export_finalized(out_dir)
    count = len(store.list_records(state="finalized"))
    click.echo(f"exported {count} finalized sample(s) to {path}")


if __name__ == "__main__":
    main()
