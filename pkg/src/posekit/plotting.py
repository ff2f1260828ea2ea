"""Accuracy-curve figures written next to the textual report."""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

IOU_GRID = np.linspace(0.0, 1.0, 101)
ROT_GRID = np.linspace(0.0, 60.0, 61)
TRANS_GRID = np.linspace(0.0, 15.0, 61)


def accuracy_curves(report):
    """Percent of frames under each threshold of the IoU / rotation / translation grids.

    Returns {category: {"iou": array, "rotation": array, "translation": array}}
    including a "mean" entry averaged over categories.
    """
    curves = {}
    for cat in report.categories:
        sub = [f for f in report.frames if f.category == cat]
        iou = np.array([f.iou for f in sub])
        rot = np.array([f.rotation_deg for f in sub])
        trans = np.array([f.translation_cm for f in sub])
        curves[cat] = {
            "iou": 100.0 * (iou[None, :] >= IOU_GRID[:, None]).mean(axis=1),
            "rotation": 100.0 * (rot[None, :] <= ROT_GRID[:, None]).mean(axis=1),
            "translation": 100.0 * (trans[None, :] <= TRANS_GRID[:, None]).mean(axis=1),
        }
    if curves:
        curves["mean"] = {k: np.mean([c[k] for c in curves.values()], axis=0)
                          for k in ("iou", "rotation", "translation")}
    return curves


def write_curves_csv(path, curves):
    grids = {"iou": IOU_GRID, "rotation": ROT_GRID, "translation": TRANS_GRID}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["category", "axis", "threshold", "accuracy"])
        for cat, c in curves.items():
            for axis, grid in grids.items():
                for x, y in zip(grid, c[axis]):
                    w.writerow([cat, axis, repr(float(x)), repr(float(y))])


def plot_accuracy_curves(report, path):
    curves = accuracy_curves(report)
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    panels = (("iou", IOU_GRID, "3D IoU threshold", "IoU"),
              ("rotation", ROT_GRID, "rotation error (deg)", "Rotation"),
              ("translation", TRANS_GRID, "translation error (cm)", "Translation"))
    for ax, (key, grid, xlabel, title) in zip(axes, panels):
        for cat, c in curves.items():
            style = dict(color="k", lw=2.0, ls="--") if cat == "mean" else dict(lw=1.2)
            ax.plot(grid, c[key], label=cat, **style)
        ax.set_xlabel(xlabel)
        ax.set_title(title)
        ax.set_ylim(0, 100.5)
        ax.set_xlim(grid[0], grid[-1])
        ax.grid(alpha=0.3)
    axes[0].set_ylabel("accuracy (%)")
    axes[-1].legend(fontsize=7, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return curves


def plot_report_bars(report, path):
    cats = list(report.categories) + ["mean"]
    cols = list(report.columns)
    vals = np.array([[report.categories[c][k] if c != "mean" else report.mean[k] for k in cols]
                     for c in cats])
    fig, ax = plt.subplots(figsize=(max(6, 1.3 * len(cols)), 3.6))
    width = 0.8 / len(cats)
    x = np.arange(len(cols))
    for i, cat in enumerate(cats):
        ax.bar(x + (i - (len(cats) - 1) / 2) * width, vals[i], width, label=cat)
    ax.set_xticks(x)
    ax.set_xticklabels([c.replace("deg", "°") for c in cols])
    ax.set_ylabel("accuracy (%)")
    ax.set_ylim(0, 105)
    ax.legend(fontsize=7, ncol=min(len(cats), 4))
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_figures(report, out_dir, stem="report"):
    """Render both figures and the curve table; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}_curves.png", out / f"{stem}_bars.png", out / f"{stem}_curves.csv"]
    curves = plot_accuracy_curves(report, paths[0])
    plot_report_bars(report, paths[1])
    write_curves_csv(paths[2], curves)
    return paths
