"""Figures for aggregate benchmark tables (one PNG per metric)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

METRICS = {
    "build_ms": "BUILD [ms]",
    "memory_bytes": "MEMORY [bytes]",
    "latency_ms_mean": "LATENCY [ms]",
    "update_ms": "UPDATE [ms]",
}


def _series(rows):
    lines: dict[str, list] = {}
    for row in rows:
        label = row["algorithm"]
        if row["series"] != "":
            label = f"{label} {row['series']}"
        lines.setdefault(label, []).append(row)
    for label, points in lines.items():
        points.sort(key=lambda r: float(r["x"]))
    return lines


def plot_metric(rows, metric: str, ax=None):
    """Draw ``metric`` against the suite variable, one line per series."""
    if ax is None:
        _, ax = plt.subplots(figsize=(5, 3.5))
    for label, points in sorted(_series(rows).items()):
        xs = [float(r["x"]) for r in points]
        ys = [float(r[metric]) for r in points]
        ax.plot(xs, ys, marker="o", markersize=3, linewidth=1, label=label)
    ax.set_xlabel(rows[0]["x_variable"])
    ax.set_ylabel(METRICS.get(metric, metric))
    if rows[0]["log_scale"]:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    return ax


def render_aggregate(rows, out_dir, suite: str) -> dict[str, Path]:
    out_dir = Path(out_dir)
    written = {}
    many = len(_series(rows)) > 8
    for metric in METRICS:
        fig, ax = plt.subplots(figsize=(6, 4))
        plot_metric(rows, metric, ax)
        ax.set_title(suite)
        ax.legend(fontsize=5 if many else 7, ncol=2 if many else 1)
        fig.tight_layout()
        path = out_dir / f"{suite}_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written[metric] = path
    return written
