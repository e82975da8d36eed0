"""Log-log convergence charts written as standalone SVG files."""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

Series = Mapping[str, tuple[Sequence[float], Sequence[float]]]


def loglog_chart(
    path: str | Path,
    series: Series,
    xlabel: str,
    ylabel: str,
    title: str = "",
    reference_slopes: Sequence[float] = (),
) -> Path:
    """Plot every (x, y) series on log-log axes and save as SVG.

    Non-positive or non-finite points are dropped. ``reference_slopes`` adds
    dashed guide lines anchored at the first point of the first series.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    anchor: tuple[float, float] | None = None
    x_range: list[float] = []
    for label, (xs, ys) in series.items():
        x = np.asarray(xs, dtype=float)
        y = np.asarray(ys, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y) & (x > 0.0) & (y > 0.0)
        if not keep.any():
            logger.debug("Series %s has no plottable points", label)
            continue
        order = np.argsort(x[keep])
        x, y = x[keep][order], y[keep][order]
        ax.plot(x, y, marker="o", label=label)
        x_range.extend([x.min(), x.max()])
        if anchor is None:
            anchor = (float(x[-1]), float(y[-1]))

    if anchor is not None and len(x_range) >= 2:
        guide_x = np.array([min(x_range), max(x_range)])
        for slope in reference_slopes:
            guide_y = anchor[1] * (guide_x / anchor[0]) ** slope
            ax.plot(guide_x, guide_y, linestyle="--", color="gray", linewidth=0.8, label=f"slope {slope:g}")

    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", linewidth=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize="small")
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    logger.debug("Wrote chart %s (%d series)", path, len(series))
    return path


__all__ = ["loglog_chart"]
