"""SVG figures: MSE against sample size per graph family, and selection time against n."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import ParameterError  # noqa: E402

# fixed hash salt and no date stamp keep the SVG bytes reproducible
plt.rcParams["svg.hashsalt"] = "sss"
SVG_META = {"Date": None}


def _finite_mean(values):
    vals = [v for v in values if not math.isnan(v)]
    return sum(vals) / len(vals) if vals else float("nan")


def emit_plots(rows, out_dir) -> dict[str, Path]:
    """One log-y MSE plot per graph family; returns the written paths."""
    if not rows:
        raise ParameterError("no series to plot")
    out = Path(out_dir)
    by_family: dict[str, dict[str, dict[int, list[float]]]] = defaultdict(lambda: defaultdict(lambda: defaultdict(list)))
    for r in rows:
        by_family[r.graph][r.method][r.sample_size].append(r.mse)
    written = {}
    for family, methods in sorted(by_family.items()):
        fig, ax = plt.subplots(figsize=(6, 4))
        for method, sizes in methods.items():
            xs = sorted(sizes)
            ys = [_finite_mean(sizes[x]) for x in xs]
            ax.plot(xs, ys, marker="o", label=method)
        ax.set_yscale("log")
        ax.set_xlabel("number of samples")
        ax.set_ylabel("mean squared error")
        ax.set_title(family)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out / f"mse_{family}.svg"
        fig.savefig(path, format="svg", metadata=SVG_META)
        plt.close(fig)
        written[f"mse_{family}"] = path
    return written


def emit_timing_plot(rows, out_dir) -> Path:
    """Log-log plot of mean selection time against graph size."""
    series: dict[str, list[tuple[int, float]]] = defaultdict(list)
    for r in rows:
        if r.status == "ok" and not math.isnan(r.mean_seconds):
            series[r.method].append((r.n, r.mean_seconds))
    if not series:
        raise ParameterError("no series to plot")
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, pts in series.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("number of vertices")
    ax.set_ylabel("selection time [s]")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(out_dir) / "timing.svg"
    fig.savefig(path, format="svg", metadata=SVG_META)
    plt.close(fig)
    return path
