"""Parameter sweeps over RunConfig grids with log-log rate fits.

Philosophy:
- Every grid cell is an independent, pure function of its RunConfig
- Cells may run concurrently; rows are always written in grid order
- A failing cell is recorded as a row with status "failed"; the sweep continues
- Rates come from ordinary least squares on log10 data, reported with R^2
- Repeated seeds give mean, sample stddev and a t-based 95% CI per cell

Public API:
    SweepRow: One grid cell (config plus report or error)
    SeriesFit: Slope of one metric along one series
    SeedStats: Seed statistics of one cell
    SweepReport: Everything a sweep produced
    run_sweep: Evaluate configs (optionally in parallel), in order
    fit_series: Group rows into series and fit rates
    seed_statistics: Aggregate repeated seeds
    sweep: Run, write sweep.csv / slopes.csv / charts, return a SweepReport
    print_sweep_report: Human-readable summary
    save_sweep_report / load_sweep_report: sweep_report.json round trip
    print_saved_sweep_report: Human-readable summary of a loaded sweep_report.json
"""

from __future__ import annotations

import json
import logging
import math
import threading
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from scipy import stats

from ..errors import InvalidArgumentError
from .config import RunConfig, expand_grid, grid_axes
from .metrics import fit_loglog
from .plots import loglog_chart
from .runner import CSV_COLUMNS, ReconstructionReport, read_report_json, reconstruct, require_keys, write_csv

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = [*CSV_COLUMNS, "status", "error"]
SLOPE_COLUMNS = ["series", "x", "metric", "slope", "intercept", "r2", "points"]
SEED_COLUMNS = ["cell", "metric", "seeds", "mean", "stddev", "ci_95_lower", "ci_95_upper", "margin_of_error"]
METRICS = ("error_half", "rerror")
NOISE_AXES = ("eps", "delta")

Runner = Callable[[RunConfig], ReconstructionReport]


@dataclass
class SweepRow:
    """One grid cell."""

    index: int
    config: RunConfig
    report: ReconstructionReport | None = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.report is not None

    def metric(self, name: str) -> float:
        if self.report is None:
            return math.nan
        return float(getattr(self.report, name))

    def csv_row(self) -> dict[str, Any]:
        if self.report is not None:
            row = self.report.csv_row()
        else:
            c = self.config
            row = {col: "nan" for col in CSV_COLUMNS}
            row.update(
                {
                    "example": c.example,
                    "n": c.n,
                    "data_n": c.data_n,
                    "k": c.k,
                    "k0": c.k0,
                    "eps": repr(float(c.eps)),
                    "delta": repr(float(c.delta)),
                    "seed": c.seed,
                    "penalty": repr(float(c.penalty)),
                    "solver_iters": 0,
                }
            )
        row["status"] = "ok" if self.ok else "failed"
        row["error"] = self.error
        return row


@dataclass(frozen=True)
class SeriesFit:
    """Rate of one metric along one series."""

    series: str
    x: str  # "eps+delta" or "h"
    metric: str
    slope: float
    intercept: float
    r2: float
    points: int

    def csv_row(self) -> dict[str, Any]:
        return {
            "series": self.series,
            "x": self.x,
            "metric": self.metric,
            "slope": f"{self.slope:.6f}",
            "intercept": f"{self.intercept:.6f}",
            "r2": f"{self.r2:.6f}",
            "points": self.points,
        }


@dataclass(frozen=True)
class SeedStats:
    """Statistics of one metric over the seeds of one cell."""

    cell: str
    metric: str
    seeds: int
    mean: float
    stddev: float
    ci_95_lower: float
    ci_95_upper: float
    margin_of_error: float

    def csv_row(self) -> dict[str, Any]:
        return {
            "cell": self.cell,
            "metric": self.metric,
            "seeds": self.seeds,
            "mean": repr(self.mean),
            "stddev": repr(self.stddev),
            "ci_95_lower": repr(self.ci_95_lower),
            "ci_95_upper": repr(self.ci_95_upper),
            "margin_of_error": repr(self.margin_of_error),
        }


@dataclass
class SweepReport:
    """Rows, fits and statistics of one sweep."""

    axes: list[str]
    rows: list[SweepRow]
    fits: list[SeriesFit]
    seed_stats: list[SeedStats]
    total_time_s: float
    workers: int
    files: list[Path] = field(default_factory=list)

    @property
    def failed(self) -> list[SweepRow]:
        return [r for r in self.rows if not r.ok]

    def to_dict(self) -> dict[str, Any]:
        return {
            "axes": self.axes,
            "cells": len(self.rows),
            "failed": len(self.failed),
            "workers": self.workers,
            "total_time_s": round(self.total_time_s, 2),
            "fits": [
                {
                    "series": f.series,
                    "x": f.x,
                    "metric": f.metric,
                    "slope": round(f.slope, 4),
                    "r2": round(f.r2, 4),
                    "points": f.points,
                }
                for f in self.fits
            ],
            "seed_stats": [s.csv_row() for s in self.seed_stats],
            "errors": {str(r.index): r.error for r in self.failed},
        }


# ── statistics ──────────────────────────────────────────────────


def _safe_stddev(values: list[float]) -> float:
    """Sample standard deviation, 0 for fewer than 2 values."""
    if len(values) < 2:
        return 0.0
    mean = sum(values) / len(values)
    return math.sqrt(sum((x - mean) ** 2 for x in values) / (len(values) - 1))


def _t_critical(n: int) -> float:
    """t* with P(-t* < T < t*) = 0.95 for df = n - 1; 0.0 for n < 2."""
    if n < 2:
        return 0.0
    return float(stats.t.ppf(0.975, df=n - 1))


def _ci_95(mean: float, stddev: float, n: int) -> tuple[float, float, float]:
    """(lower, upper, margin) of the 95% CI of a mean; errors are nonnegative so lower >= 0."""
    if n < 2:
        return (mean, mean, 0.0)
    moe = _t_critical(n) * stddev / math.sqrt(n)
    return (max(0.0, mean - moe), mean + moe, moe)


# ── execution ───────────────────────────────────────────────────


def _run_one(index: int, config: RunConfig, runner: Runner) -> SweepRow:
    try:
        return SweepRow(index=index, config=config, report=runner(config))
    except Exception as e:  # noqa: BLE001
        logger.warning("Sweep cell %d failed: %s", index, e)
        return SweepRow(index=index, config=config, error=str(e))


def run_sweep(configs: Sequence[RunConfig], workers: int = 1, runner: Runner = reconstruct) -> list[SweepRow]:
    """Evaluate every config; the returned rows follow the order of ``configs``."""
    if workers < 1:
        raise InvalidArgumentError(f"workers must be >= 1, got {workers}")
    total = len(configs)
    if workers == 1 or total <= 1:
        rows = []
        for i, config in enumerate(configs):
            logger.info("Sweep cell %d/%d", i + 1, total)
            rows.append(_run_one(i, config, runner))
        return rows

    slots: list[SweepRow | None] = [None] * total
    completed = [0]
    lock = threading.Lock()
    logger.info("Starting parallel sweep: %d cells, %d workers", total, workers)

    def _worker(idx: int, config: RunConfig) -> None:
        slots[idx] = _run_one(idx, config, runner)
        with lock:
            completed[0] += 1
            logger.info("Completed %d/%d cells (%.0f%%)", completed[0], total, completed[0] / total * 100)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(_worker, i, c): i for i, c in enumerate(configs)}
        for future in as_completed(futures):
            exc = future.exception()
            if exc is not None:
                idx = futures[future]
                slots[idx] = SweepRow(index=idx, config=configs[idx], error=str(exc))
    return [row for row in slots if row is not None]


# ── series and fits ─────────────────────────────────────────────


def _label(config: RunConfig, keys: Sequence[str]) -> str:
    return ",".join(f"{k}={getattr(config, k)}" for k in keys) or "all"


def _group(rows: Sequence[SweepRow], keys: Sequence[str]) -> dict[str, list[SweepRow]]:
    groups: dict[str, list[SweepRow]] = {}
    for row in rows:
        groups.setdefault(_label(row.config, keys), []).append(row)
    return groups


def _x_value(config: RunConfig, x: str) -> float:
    return config.eps + config.delta if x == "eps+delta" else config.h


def _series_points(rows: Sequence[SweepRow], x: str, metric: str) -> tuple[list[float], list[float]]:
    pts = sorted(
        (_x_value(r.config, x), r.metric(metric))
        for r in rows
        if r.ok and math.isfinite(r.metric(metric)) and r.metric(metric) > 0.0
    )
    return [p[0] for p in pts], [p[1] for p in pts]


def _swept(axes: Sequence[str]) -> list[tuple[str, list[str]]]:
    """(x name, grouping keys) for every rate the axes allow."""
    plans = []
    if any(a in NOISE_AXES for a in axes):
        plans.append(("eps+delta", [a for a in axes if a not in NOISE_AXES]))
    if "n" in axes:
        plans.append(("h", [a for a in axes if a != "n"]))
    return plans


def fit_series(rows: Sequence[SweepRow], axes: Sequence[str]) -> list[SeriesFit]:
    """Fit error_half and rerror against eps+delta and against h along every series.

    Series with fewer than 3 usable points are skipped.
    """
    fits = []
    for x, keys in _swept(axes):
        for label, members in _group(rows, keys).items():
            for metric in METRICS:
                xs, ys = _series_points(members, x, metric)
                if len(xs) < 3:
                    logger.debug("Series %s (%s vs %s): %d points, no fit", label, metric, x, len(xs))
                    continue
                fit = fit_loglog(xs, ys)
                fits.append(
                    SeriesFit(
                        series=label,
                        x=x,
                        metric=metric,
                        slope=fit.slope,
                        intercept=fit.intercept,
                        r2=fit.r2,
                        points=fit.points,
                    )
                )
    return fits


def seed_statistics(rows: Sequence[SweepRow], axes: Sequence[str]) -> list[SeedStats]:
    """Mean, stddev and 95% CI over seeds for every cell of the other axes."""
    if "seed" not in axes:
        return []
    keys = [a for a in axes if a != "seed"]
    stats = []
    for label, members in _group(rows, keys).items():
        for metric in METRICS:
            values = [r.metric(metric) for r in members if r.ok and math.isfinite(r.metric(metric))]
            if not values:
                continue
            mean = sum(values) / len(values)
            stddev = _safe_stddev(values)
            lower, upper, moe = _ci_95(mean, stddev, len(values))
            stats.append(
                SeedStats(
                    cell=label,
                    metric=metric,
                    seeds=len(values),
                    mean=mean,
                    stddev=stddev,
                    ci_95_lower=lower,
                    ci_95_upper=upper,
                    margin_of_error=moe,
                )
            )
    return stats


def _charts(rows: Sequence[SweepRow], axes: Sequence[str], out: Path) -> list[Path]:
    keys = [a for a in axes if a not in NOISE_AXES]
    groups = _group(rows, keys)
    written = []
    for metric, name, ylabel, slope in (
        ("error_half", "error_vs_eps.svg", "Error", 0.5),
        ("rerror", "rerror_vs_eps.svg", "RError", 1.0),
    ):
        series = {label: _series_points(members, "eps+delta", metric) for label, members in groups.items()}
        chart = loglog_chart(
            out / name,
            series,
            xlabel="eps + delta",
            ylabel=ylabel,
            title=f"{ylabel} vs eps + delta",
            reference_slopes=(slope,),
        )
        written.append(chart)
    if "n" in axes:
        series = {
            label: _series_points(members, "h", "rerror")
            for label, members in _group(rows, [a for a in axes if a != "n"]).items()
        }
        written.append(loglog_chart(out / "rerror_vs_h.svg", series, xlabel="h", ylabel="RError", title="RError vs h"))
    return written


def sweep(
    axes: dict[str, list[Any]],
    out_dir: str | Path,
    base: RunConfig | None = None,
    workers: int = 1,
    runner: Runner = reconstruct,
) -> SweepReport:
    """Run the grid spanned by ``axes`` and write its tables and charts into ``out_dir``.

    Raises:
        InvalidArgumentError: If any grid cell is an invalid configuration.
    """
    configs = expand_grid(axes, base)
    problems = [f"cell {i}: {'; '.join(c.validate())}" for i, c in enumerate(configs) if c.validate()]
    if problems:
        raise InvalidArgumentError("invalid sweep grid: " + " | ".join(problems[:5]))
    varied = grid_axes(axes)
    logger.info("Sweep over %s: %d cells", ", ".join(varied) or "a single cell", len(configs))

    start = time.time()
    rows = run_sweep(configs, workers=workers, runner=runner)
    elapsed = time.time() - start

    fits = fit_series(rows, varied)
    seed_stats = seed_statistics(rows, varied)

    out = Path(out_dir)
    files = [
        write_csv(out / "sweep.csv", [r.csv_row() for r in rows], SWEEP_COLUMNS),
        write_csv(out / "slopes.csv", [f.csv_row() for f in fits], SLOPE_COLUMNS),
    ]
    if seed_stats:
        files.append(write_csv(out / "seed_stats.csv", [s.csv_row() for s in seed_stats], SEED_COLUMNS))
    if any(r.ok for r in rows):
        files.extend(_charts(rows, varied, out))
    else:
        logger.warning("Every sweep cell failed; no charts written")

    report = SweepReport(
        axes=varied,
        rows=rows,
        fits=fits,
        seed_stats=seed_stats,
        total_time_s=elapsed,
        workers=workers,
        files=files,
    )
    logger.info(
        "Sweep complete: %d cells, %d failed, %d fits in %.1fs", len(rows), len(report.failed), len(fits), elapsed
    )
    return report


def print_sweep_report(report: SweepReport) -> None:
    """Print fits, seed statistics and failures."""
    print("\n" + "=" * 70)
    print("CONDUCTIVITY RECONSTRUCTION SWEEP")
    print("=" * 70)
    print(f"Axes: {', '.join(report.axes) or '(none)'} | Cells: {len(report.rows)} | Failed: {len(report.failed)}")
    print(f"Workers: {report.workers} | Total time: {report.total_time_s:.1f}s")

    if report.fits:
        print("\n" + "-" * 70)
        print(f"{'Series':<30} {'x':>10} {'Metric':>11} {'Slope':>8} {'R^2':>7} {'Pts':>4}")
        print("-" * 70)
        for f in report.fits:
            print(f"{f.series[:30]:<30} {f.x:>10} {f.metric:>11} {f.slope:>8.3f} {f.r2:>7.3f} {f.points:>4}")

    if report.seed_stats:
        print("\n" + "-" * 70)
        print(f"{'Cell':<30} {'Metric':>11} {'Mean':>11} {'Stddev':>10} {'95% CI':>22}")
        print("-" * 70)
        for s in report.seed_stats:
            ci = f"[{s.ci_95_lower:.2e}, {s.ci_95_upper:.2e}]"
            print(f"{s.cell[:30]:<30} {s.metric:>11} {s.mean:>11.3e} {s.stddev:>10.2e} {ci:>22}")

    for row in report.failed:
        cfg = ", ".join(f"{k}={getattr(row.config, k)}" for k in report.axes)
        print(f"FAILED cell {row.index} ({cfg}): {row.error}")
    print("=" * 70)



# ── saved reports ───────────────────────────────────────────────

SWEEP_REPORT_FILE = "sweep_report.json"
SWEEP_REPORT_KEYS = ("axes", "cells", "failed", "fits", "seed_stats", "errors")


def save_sweep_report(report: SweepReport, out_dir: str | Path) -> Path:
    """Write ``report.to_dict()`` to sweep_report.json in ``out_dir``."""
    path = Path(out_dir) / SWEEP_REPORT_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2)
    return path


def load_sweep_report(path: str | Path) -> dict[str, Any]:
    """Read a sweep_report.json.

    Raises:
        DataError: If the file cannot be read or lacks one of SWEEP_REPORT_KEYS.
    """
    return require_keys(read_report_json(path), SWEEP_REPORT_KEYS, path, "sweep report")


def print_saved_sweep_report(data: dict[str, Any]) -> None:
    """Print a report loaded with ``load_sweep_report``."""
    print("\n" + "=" * 70)
    print("SAVED SWEEP")
    print("=" * 70)
    print(f"Axes: {', '.join(data['axes']) or '(none)'} | Cells: {data['cells']} | Failed: {data['failed']}")
    if data["fits"]:
        print("\n" + "-" * 70)
        print(f"{'Series':<30} {'x':>10} {'Metric':>11} {'Slope':>8} {'R^2':>7} {'Pts':>4}")
        print("-" * 70)
        for f in data["fits"]:
            print(
                f"{f['series'][:30]:<30} {f['x']:>10} {f['metric']:>11} {f['slope']:>8.3f} {f['r2']:>7.3f} "
                f"{f['points']:>4}"
            )
    for s in data["seed_stats"]:
        print(f"{s['cell'][:30]:<30} {s['metric']:>11} mean {s['mean']} stddev {s['stddev']}")
    for index, error in data["errors"].items():
        print(f"FAILED cell {index}: {error}")
    print("=" * 70)


__all__ = [
    "SweepRow",
    "SeriesFit",
    "SeedStats",
    "SweepReport",
    "run_sweep",
    "fit_series",
    "seed_statistics",
    "sweep",
    "print_sweep_report",
    "save_sweep_report",
    "load_sweep_report",
    "print_saved_sweep_report",
    "SWEEP_REPORT_FILE",
    "SWEEP_COLUMNS",
    "SLOPE_COLUMNS",
]
