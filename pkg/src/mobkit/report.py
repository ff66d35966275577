"""Figure rendering for shapes, evaluation summaries, and threshold sweeps.

All figures are written to files with the Agg backend; PNG metadata is
stripped so outputs stay byte-reproducible.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from mobkit.bench.generate import Annotation  # noqa: E402

_PART_COLORS = ("tab:gray", "tab:orange", "tab:blue", "tab:green",
                "tab:red", "tab:purple", "tab:brown", "tab:pink")
_PNG_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata=_PNG_META if str(path).endswith(".png") else None)
    plt.close(fig)


def save_shape_figure(ann: Annotation, path: str, title: str | None = None):
    """3D scatter colored by part with motion axes drawn as arrows."""
    pts = ann.cloud.points
    diag = float(np.linalg.norm(pts.max(0) - pts.min(0))) or 1.0
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    for k, part in enumerate(ann.parts):
        p = pts[part.indices]
        ax.scatter(p[:, 0], p[:, 1], p[:, 2], s=2,
                   color=_PART_COLORS[k % len(_PART_COLORS)],
                   label=f"part {k} ({len(part.indices)} pts)")
        for motion_type, line in part.motions:
            a = line.point - 0.35 * diag * line.direction
            ax.quiver(a[0], a[1], a[2], *(0.7 * diag * line.direction),
                      color="black", linewidth=1.5, arrow_length_ratio=0.06)
            mid = line.point + 0.38 * diag * line.direction
            ax.text(mid[0], mid[1], mid[2], motion_type.code, fontsize=9)
    lo, hi = pts.min(), pts.max()
    ax.set_xlim(lo, hi)
    ax.set_ylim(lo, hi)
    ax.set_zlim(lo, hi)
    ax.set_title(title or ann.shape_id)
    ax.legend(loc="upper left", fontsize=7)
    _save(fig, path)


def save_metrics_figure(rows: list[dict], path: str):
    """Per-shape metric bars: IoU/TA on one axis, OE (deg) and MD on twins."""
    if not rows:
        raise ValueError("no rows to plot")
    labels = [r["shape_id"] for r in rows]
    x = np.arange(len(rows))
    fig, axes = plt.subplots(2, 1, figsize=(max(6, 0.45 * len(rows)), 7),
                             sharex=True)
    axes[0].bar(x - 0.2, [r["iou"] for r in rows], width=0.4, label="IoU")
    axes[0].bar(x + 0.2, [r["ta"] for r in rows], width=0.4, label="TA")
    axes[0].set_ylim(0, 1.05)
    axes[0].legend()
    axes[0].set_ylabel("fraction")
    axes[1].bar(x - 0.2, [r["oe"] for r in rows], width=0.4, label="OE (deg)")
    ax_md = axes[1].twinx()
    ax_md.bar(x + 0.2, [r["md"] for r in rows], width=0.4, color="tab:red",
              label="MD (diag)")
    axes[1].set_ylabel("OE (deg)")
    ax_md.set_ylabel("MD (fraction of diagonal)")
    axes[1].set_xticks(x)
    axes[1].set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    h1, l1 = axes[1].get_legend_handles_labels()
    h2, l2 = ax_md.get_legend_handles_labels()
    axes[1].legend(h1 + h2, l1 + l2)
    fig.tight_layout()
    _save(fig, path)


def save_sweep_figure(parameter: str, values, recalls, mean_ious, path: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(values, recalls, "o-", label="recall @ IoU 0.5")
    ax.plot(values, mean_ious, "s--", label="mean IoU")
    ax.set_xlabel(parameter)
    ax.set_ylabel("fraction")
    ax.set_ylim(0, 1.05)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
