"""Command-line interface: single runs, protocol/level/seed sweeps, capacity.

Exit codes: 0 success, 1 sweep completed with failed member runs, 2
configuration error, 3 simulation integrity error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .keypool import SimulationIntegrityError
from .metrics import TIMESERIES_COLUMNS, DropReason, MetricsLog, RunSummary
from .scenario import ConfigError, Scenario
from .simulation import run_simulation
from .topology import bundled_data_path, load_topology
from .workload import its_capacity

CANONICAL_LEVELS = [0.01, 0.2, 0.4, 0.6, 0.8, 1.0]

SWEEP_COLUMNS = [
    "protocol", "level", "seed", "qku", "pdr_overall", "routing_cost_bits",
    "mean_owd_s", "drops_by_reason", "status",
]


def resolve_scenario_path(name: str) -> Path:
    """A scenario argument is a file path or the name of a bundled scenario."""
    path = Path(name)
    if path.exists():
        return path
    bundled = bundled_data_path(f"{name}.scenario")
    if bundled.exists():
        return bundled
    raise ConfigError(f"scenario not found: {name}")


def encode_drops(drops: dict[str, int]) -> str:
    return ";".join(f"{r.value}:{drops.get(r.value, 0)}" for r in DropReason)


def _fmt(value) -> str:
    return "" if value is None else repr(value) if isinstance(value, float) else str(value)


def write_run_outputs(summary: RunSummary, metrics: MetricsLog, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(
        json.dumps(summary.to_json_dict(), indent=2) + "\n")
    with (out_dir / "timeseries.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TIMESERIES_COLUMNS)
        for row in metrics.timeseries_rows():
            writer.writerow([_fmt(v) for v in row])


def cmd_run(args) -> int:
    scenario = Scenario.load(resolve_scenario_path(args.scenario))
    if args.seed is not None:
        scenario.seed = args.seed
    summary, metrics = run_simulation(scenario)
    write_run_outputs(summary, metrics, Path(args.out))
    print(f"run complete: protocol={summary.protocol} "
          f"sent={summary.packets_sent} delivered={summary.packets_delivered} "
          f"qku={summary.qku} trace={summary.trace_hash[:16]}")
    return 0


def _sweep_member(task) -> dict:
    scenario_text, out_dir = task
    scenario = Scenario.from_text(scenario_text)
    summary, metrics = run_simulation(scenario)
    write_run_outputs(summary, metrics, Path(out_dir))
    return {
        "protocol": summary.protocol,
        "level": summary.level,
        "seed": summary.seed,
        "qku": summary.qku,
        "pdr_overall": summary.pdr_overall,
        "routing_cost_bits": summary.routing_key_bits,
        "mean_owd_s": summary.mean_owd_s,
        "drops_by_reason": encode_drops(summary.drops_by_reason),
        "status": "ok",
    }


def sweep_tasks(args) -> list[tuple[str, str]]:
    topology_path = str(Path(args.topology).resolve())
    levels = CANONICAL_LEVELS if args.paper_sweep else [float(x) for x in args.levels]
    protocols = list(args.protocols)
    out_root = Path(args.out)
    tasks = []
    for protocol in protocols:
        for level in levels:
            for i in range(args.seeds):
                scenario = Scenario(
                    topology=topology_path,
                    protocol=protocol,
                    level=level,
                    duration_s=args.duration,
                    seed=args.base_seed + i,
                )
                run_dir = out_root / "runs" / (
                    f"{protocol}_level{level:g}_seed{scenario.seed}")
                tasks.append((scenario.to_text(), str(run_dir)))
    return tasks


def cmd_sweep(args) -> int:
    tasks = sweep_tasks(args)
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    failed = 0
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_sweep_member, t) for t in tasks]
            for task, fut in zip(tasks, futures):
                try:
                    rows.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - row marked failed
                    rows.append(_failed_row(task, exc))
                    failed += 1
    else:
        for task in tasks:
            try:
                rows.append(_sweep_member(task))
            except Exception as exc:  # noqa: BLE001 - row marked failed
                rows.append(_failed_row(task, exc))
                failed += 1
    rows.sort(key=lambda r: (r["protocol"], r["level"] or 0.0, r["seed"]))
    with (out_root / "sweep.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})
    print(f"sweep complete: {len(rows)} runs, {failed} failed -> "
          f"{out_root / 'sweep.csv'}")
    return 1 if failed else 0


def _failed_row(task, exc) -> dict:
    scenario = Scenario.from_text(task[0])
    sys.stderr.write(f"run failed ({scenario.protocol} level={scenario.level} "
                     f"seed={scenario.seed}): {exc}\n")
    return {
        "protocol": scenario.protocol,
        "level": scenario.level,
        "seed": scenario.seed,
        "qku": None,
        "pdr_overall": None,
        "routing_cost_bits": None,
        "mean_owd_s": None,
        "drops_by_reason": "",
        "status": "failed",
    }


def cmd_capacity(args) -> int:
    topology = load_topology(args.topology)
    capacity = its_capacity(topology, args.kappa_bits)
    print(f"{capacity!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkdsim",
        description="Discrete-event simulator for trusted-relay QKD network routing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--scenario", required=True,
                       help="scenario file or bundled scenario name")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="batch runs across protocols/levels/seeds")
    p_sweep.add_argument("--topology", required=True)
    p_sweep.add_argument("--protocols", nargs="*", default=[],
                         help="e.g. olsr qolsr multispf")
    p_sweep.add_argument("--levels", nargs="*", default=[],
                         help="communication levels in [0,1]")
    p_sweep.add_argument("--seeds", type=int, default=1,
                         help="number of seeds (base-seed + index)")
    p_sweep.add_argument("--base-seed", type=int, default=1)
    p_sweep.add_argument("--duration", type=float, default=100.0)
    p_sweep.add_argument("--paper-sweep", action="store_true",
                         help="use the canonical six communication levels")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=cmd_sweep)

    p_cap = sub.add_parser("capacity", help="print surrogate capacity in bits/s")
    p_cap.add_argument("--topology", required=True)
    p_cap.add_argument("--kappa-bits", type=int, default=4000)
    p_cap.set_defaults(func=cmd_capacity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2
    except SimulationIntegrityError as exc:
        sys.stderr.write(f"simulation integrity error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
