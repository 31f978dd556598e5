"""Loading and aggregating of simulator CSV outputs.

Input layout (as written by the simulator's sweep command):

    <data>/sweep.csv
    <data>/runs/<protocol>_level<level:g>_seed<seed>/timeseries.csv

Schema violations raise SchemaError with a column diagnostic; filters that
match nothing raise PlotDataError instead of producing empty figures.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

SWEEP_COLUMNS = [
    "protocol", "level", "seed", "qku", "pdr_overall", "routing_cost_bits",
    "mean_owd_s", "drops_by_reason", "status",
]
TIMESERIES_COLUMNS = [
    "bucket_start_s", "packets_sent", "packets_delivered", "pdr",
    "keys_delivered_bits", "keys_total_bits", "routing_key_bits",
    "owd_mean_s", "owd_count",
]

#: metric name -> sweep.csv column holding the run-level aggregate
BAR_COLUMNS = {
    "pdr": "pdr_overall",
    "qku": "qku",
    "routing_cost": "routing_cost_bits",
    "owd": "mean_owd_s",
}

METRICS = tuple(BAR_COLUMNS)


class SchemaError(ValueError):
    """CSV columns do not match the simulator's documented schema."""


class PlotDataError(ValueError):
    """A figure's filters matched no data."""


def _check_columns(found: list[str] | None, expected: list[str], path: Path):
    if found != expected:
        raise SchemaError(
            f"{path}: expected columns {expected}, found {found}")


def _parse_float(text: str) -> float | None:
    return float(text) if text not in ("", None) else None


@dataclass(frozen=True)
class SweepRow:
    protocol: str
    level: float
    seed: int
    values: dict  # metric name -> float | None


def load_sweep(data_dir: str | Path) -> list[SweepRow]:
    path = Path(data_dir) / "sweep.csv"
    if not path.exists():
        raise PlotDataError(f"no sweep.csv under {data_dir}")
    with path.open() as fh:
        reader = csv.DictReader(fh)
        _check_columns(reader.fieldnames, SWEEP_COLUMNS, path)
        rows = []
        for raw in reader:
            if raw["status"] != "ok":
                continue
            rows.append(SweepRow(
                protocol=raw["protocol"],
                level=float(raw["level"]),
                seed=int(raw["seed"]),
                values={
                    metric: _parse_float(raw[column])
                    for metric, column in BAR_COLUMNS.items()
                },
            ))
    return rows


def run_dir(data_dir: str | Path, protocol: str, level: float, seed: int) -> Path:
    return Path(data_dir) / "runs" / f"{protocol}_level{level:g}_seed{seed}"


def load_timeseries(path: Path) -> list[dict]:
    with path.open() as fh:
        reader = csv.DictReader(fh)
        _check_columns(reader.fieldnames, TIMESERIES_COLUMNS, path)
        return [dict(row) for row in reader]


def bucket_metric(row: dict, metric: str) -> float | None:
    """Per-bucket value of a metric from one timeseries row."""
    if metric == "pdr":
        return _parse_float(row["pdr"])
    if metric == "qku":
        total = _parse_float(row["keys_total_bits"])
        delivered = _parse_float(row["keys_delivered_bits"])
        if not total:
            return None
        return delivered / total
    if metric == "routing_cost":
        return _parse_float(row["routing_key_bits"])
    if metric == "owd":
        return _parse_float(row["owd_mean_s"])
    raise ValueError(f"unknown metric {metric!r}")


def timeseries_stats(data_dir, protocol: str, level: float, seeds: list[int],
                     metric: str):
    """Per-bucket mean and min-max band of a metric across seed runs.

    Returns (times, mean, low, high); buckets where no seed has a value
    carry None in all three.
    """
    per_seed = []
    for seed in seeds:
        path = run_dir(data_dir, protocol, level, seed) / "timeseries.csv"
        if not path.exists():
            raise PlotDataError(f"missing run output {path}")
        per_seed.append([bucket_metric(r, metric) for r in load_timeseries(path)])
    n_buckets = min(len(s) for s in per_seed)
    times, mean, low, high = [], [], [], []
    for b in range(n_buckets):
        values = [s[b] for s in per_seed if s[b] is not None]
        times.append(float(b))
        if values:
            mean.append(sum(values) / len(values))
            low.append(min(values))
            high.append(max(values))
        else:
            mean.append(None)
            low.append(None)
            high.append(None)
    return times, mean, low, high


def bar_stats(rows: list[SweepRow], protocol: str, level: float,
              metric: str) -> float:
    """Across-seed mean of a run-level aggregate."""
    values = [
        r.values[metric] for r in rows
        if r.protocol == protocol and r.level == level
        and r.values[metric] is not None
    ]
    if not values:
        raise PlotDataError(
            f"no sweep rows for protocol={protocol} level={level}")
    return sum(values) / len(values)
