"""Report rendering: aligned text table, CSV, and matplotlib figures.

Table layout (documented): header row, then one row per run. The run name is
left-padded to a fixed column, followed by two spaces and the four IoU cells
as percentages with two decimals, separated by single spaces::

    run       amodal_giou amodal_ciou visible_giou visible_ciou
    full      47.76 47.32 51.31 55.38
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .runner import EvalReport, QualitativeExample

CSV_COLUMNS = (
    "name",
    "amodal_giou",
    "amodal_ciou",
    "visible_giou",
    "visible_ciou",
    "rate_mae",
    "spatial_accuracy",
    "sample_count",
    "conversation_count",
    "unmatched_targets",
    "surplus_predictions",
)

IOU_FIELDS = ("amodal_giou", "amodal_ciou", "visible_giou", "visible_ciou")


def _named(reports) -> list[tuple[str, EvalReport]]:
    out = []
    for i, (name, report) in enumerate(reports):
        out.append((name if name else f"run-{i}", report))
    return out


def format_metric_cells(report: EvalReport) -> str:
    return " ".join(f"{getattr(report, f) * 100:.2f}" for f in IOU_FIELDS)


def render_report(reports) -> str:
    """Aligned text table over (name, EvalReport) pairs; empty names become run-<i>."""
    named = _named(reports)
    width = max(len("run"), *(len(n) for n, _ in named)) + 2
    lines = [f"{'run':<{width}}  amodal_giou amodal_ciou visible_giou visible_ciou"]
    for name, report in named:
        lines.append(f"{name:<{width}}  {format_metric_cells(report)}")
    return "\n".join(lines) + "\n"


def write_csv(reports, path) -> Path:
    """One row per run; schema is CSV_COLUMNS, empty cells for absent diagnostics."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for name, report in _named(reports):
            row = report.to_dict()
            writer.writerow(
                [name] + ["" if row[c] is None else row[c] for c in CSV_COLUMNS[1:]]
            )
    return path


def render_metric_figure(reports, path) -> Path:
    """Grouped bar chart of the four IoU metrics per run."""
    named = _named(reports)
    labels = [n for n, _ in named]
    x = np.arange(len(IOU_FIELDS))
    bar_w = 0.8 / max(len(named), 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, (name, report) in enumerate(named):
        values = [getattr(report, f) * 100 for f in IOU_FIELDS]
        ax.bar(x + i * bar_w, values, width=bar_w, label=name)
    ax.set_xticks(x + bar_w * (len(named) - 1) / 2)
    ax.set_xticklabels([f.replace("_", " ") for f in IOU_FIELDS])
    ax.set_ylabel("percent")
    ax.set_ylim(0, 100)
    ax.legend()
    ax.set_title("segmentation metrics")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def _overlay(ax, image, masks, color, label):
    ax.imshow(image)
    for mask in masks:
        rgba = np.zeros(image.shape[:2] + (4,), dtype=float)
        rgba[mask] = (*color, 0.45)
        ax.imshow(rgba)
    ax.set_title(label, fontsize=8)
    ax.axis("off")


def render_qualitative_figure(examples: list[QualitativeExample], path) -> Path:
    """Per-conversation panels: GT visible/amodal vs predicted visible/amodal."""
    n = max(len(examples), 1)
    fig, axes = plt.subplots(n, 4, figsize=(9, 2.4 * n), squeeze=False)
    for row, ex in enumerate(examples):
        _overlay(axes[row][0], ex.image, ex.gt_visible, (0.1, 0.9, 0.1), "GT visible")
        _overlay(axes[row][1], ex.image, ex.gt_amodal, (0.9, 0.6, 0.1), "GT amodal")
        _overlay(axes[row][2], ex.image, ex.pred_visible, (0.1, 0.9, 0.1), "pred visible")
        _overlay(axes[row][3], ex.image, ex.pred_amodal, (0.9, 0.6, 0.1), "pred amodal")
        axes[row][0].set_ylabel(ex.sample_id, fontsize=7)
    if not examples:
        for ax in axes[0]:
            ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def write_report_bundle(reports, out_dir, examples=None) -> dict[str, Path]:
    """CSV + text table + figures under one directory; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": write_csv(reports, out / "report.csv"),
        "table": out / "report.txt",
        "metrics_figure": render_metric_figure(reports, out / "metrics.png"),
    }
    paths["table"].write_text(render_report(reports))
    if examples is not None:
        paths["qualitative_figure"] = render_qualitative_figure(examples, out / "qualitative.png")
    return paths
