"""Figure rendering: real-time curves and per-level grouped bars.

Each FigureSpec yields one image. plot() also returns the plotted values so
tests can cross-check every aggregate against an independent recomputation
from the raw CSVs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .data import (  # noqa: E402
    METRICS,
    PlotDataError,
    bar_stats,
    load_sweep,
    timeseries_stats,
)

AXIS_LABELS = {
    "pdr": "packet delivery ratio",
    "qku": "key utilization",
    "routing_cost": "routing key bits per second",
    "owd": "one-way delay (s)",
}


@dataclass(frozen=True)
class FigureSpec:
    kind: str                      # "timeseries" | "bars"
    metric: str                    # pdr | qku | routing_cost | owd
    output: str                    # image file name (relative to out dir)
    protocols: tuple = ()          # empty -> every protocol in the data
    level: float | None = None     # required for timeseries
    levels: tuple = ()             # bars: empty -> every level in the data
    seeds: tuple = ()              # empty -> every seed in the data

    def __post_init__(self):
        if self.kind not in ("timeseries", "bars"):
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.kind == "timeseries" and self.level is None:
            raise ValueError("timeseries figures need a level filter")

    @classmethod
    def from_dict(cls, raw: dict) -> "FigureSpec":
        return cls(
            kind=raw["kind"],
            metric=raw["metric"],
            output=raw["output"],
            protocols=tuple(raw.get("protocols", ())),
            level=raw.get("level"),
            levels=tuple(raw.get("levels", ())),
            seeds=tuple(raw.get("seeds", ())),
        )


def _resolve_filters(spec: FigureSpec, rows):
    protocols = list(spec.protocols) or sorted({r.protocol for r in rows})
    seeds = list(spec.seeds) or sorted({r.seed for r in rows})
    levels = list(spec.levels) or sorted({r.level for r in rows})
    if spec.kind == "timeseries":
        levels = [spec.level]
    matching = [r for r in rows
                if r.protocol in protocols and r.level in levels
                and r.seed in seeds]
    if not matching:
        raise PlotDataError(
            f"figure {spec.output}: no runs match protocols={protocols} "
            f"levels={levels} seeds={seeds}")
    return protocols, levels, seeds


def plot(spec: FigureSpec, data_dir: str | Path, out_dir: str | Path) -> dict:
    """Render one figure; returns {'path': ..., 'values': plotted data}."""
    rows = load_sweep(data_dir)
    protocols, levels, seeds = _resolve_filters(spec, rows)
    out_path = Path(out_dir) / spec.output
    out_path.parent.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(7, 4.2))
    plotted: dict = {}
    if spec.kind == "timeseries":
        for protocol in protocols:
            times, mean, low, high = timeseries_stats(
                data_dir, protocol, spec.level, seeds, spec.metric)
            xs = [t for t, m in zip(times, mean) if m is not None]
            ys = [m for m in mean if m is not None]
            band_lo = [v for v in low if v is not None]
            band_hi = [v for v in high if v is not None]
            ax.plot(xs, ys, label=protocol)
            if len(seeds) > 1:
                ax.fill_between(xs, band_lo, band_hi, alpha=0.2)
            plotted[protocol] = {"times": xs, "mean": ys,
                                 "low": band_lo, "high": band_hi}
        ax.set_xlabel("time (s)")
        ax.set_title(f"{AXIS_LABELS[spec.metric]} at level {spec.level:g}")
    else:
        width = 0.8 / len(protocols)
        for i, protocol in enumerate(protocols):
            values = [bar_stats(rows, protocol, level, spec.metric)
                      for level in levels]
            xs = [j + i * width for j in range(len(levels))]
            ax.bar(xs, values, width=width, label=protocol)
            plotted[protocol] = {"levels": list(levels), "values": values}
        ax.set_xticks([j + 0.4 - width / 2 for j in range(len(levels))])
        ax.set_xticklabels([f"{lv:g}" for lv in levels])
        ax.set_xlabel("communication level")
        ax.set_title(f"{AXIS_LABELS[spec.metric]} by level")
    ax.set_ylabel(AXIS_LABELS[spec.metric])
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=140)
    plt.close(fig)
    return {"path": str(out_path), "values": plotted}


DEFAULT_FAMILIES = (
    {"kind": "timeseries", "metric": "pdr", "output": "pdr_timeseries.png"},
    {"kind": "bars", "metric": "qku", "output": "qku_bars.png"},
    {"kind": "timeseries", "metric": "routing_cost",
     "output": "routing_cost_timeseries.png"},
    {"kind": "bars", "metric": "routing_cost", "output": "routing_cost_bars.png"},
    {"kind": "timeseries", "metric": "owd", "output": "owd_timeseries.png"},
    {"kind": "bars", "metric": "owd", "output": "owd_bars.png"},
)


def default_specs(level: float) -> list[FigureSpec]:
    specs = []
    for raw in DEFAULT_FAMILIES:
        raw = dict(raw)
        if raw["kind"] == "timeseries":
            raw["level"] = level
        specs.append(FigureSpec.from_dict(raw))
    return specs
