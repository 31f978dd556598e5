"""Traffic generation parameterized by communication level.

The level maps offered load onto a surrogate network capacity: the largest
uniform full-mesh demand for which no link's key consumption would exceed
its generation rate when every ordered pair uses its deterministic min-hop
path.
"""

from __future__ import annotations

from dataclasses import dataclass

from .routing import min_hop_paths
from .topology import Topology


def minhop_link_loads(topology: Topology) -> dict[tuple[int, int], int]:
    """Number of ordered node pairs whose min-hop path crosses each link."""
    edges = [l.key for l in topology.links]
    loads: dict[tuple[int, int], int] = {l.key: 0 for l in topology.links}
    for s in topology.nodes:
        paths = min_hop_paths(edges, s)
        for t, path in paths.items():
            for a, b in zip(path, path[1:]):
                loads[(a, b) if a < b else (b, a)] += 1
    return loads


def its_capacity(topology: Topology, kappa_bits: int) -> float:
    """Aggregate sustainable offered load in bits/s (both directions of a
    link share one key pool, so loads count ordered pairs)."""
    if kappa_bits <= 0:
        raise ValueError("packet size must be positive")
    loads = minhop_link_loads(topology)
    lambda_star = min(
        link.key_gen_rate_bps / (kappa_bits * loads[link.key])
        for link in topology.links
        if loads[link.key] > 0
    )
    n = len(topology.nodes)
    n_pairs = n * (n - 1)
    return lambda_star * n_pairs * kappa_bits


@dataclass(frozen=True)
class Flow:
    src: int
    dst: int
    rate_pkts_per_s: float
    start_s: float = 0.0


@dataclass(frozen=True)
class Workload:
    flows: tuple[Flow, ...]
    kappa_bits: int
    deterministic: bool = False

    @property
    def aggregate_bps(self) -> float:
        return sum(f.rate_pkts_per_s for f in self.flows) * self.kappa_bits


def make_workload(
    level: float,
    topology: Topology,
    kappa_bits: int,
    deterministic: bool = False,
    start_s: float = 0.0,
) -> Workload:
    """Full-mesh workload offering ``level`` times the surrogate capacity.

    ``start_s`` delays all flows, leaving the routing protocol a convergence
    warm-up before data arrives.
    """
    if not 0 <= level <= 1:
        raise ValueError(f"communication level must be in [0, 1], got {level}")
    n_pairs = len(topology.nodes) * (len(topology.nodes) - 1)
    aggregate_bps = level * its_capacity(topology, kappa_bits)
    per_pair = aggregate_bps / (n_pairs * kappa_bits)
    flows = tuple(
        Flow(s, t, per_pair, start_s)
        for s in topology.nodes
        for t in topology.nodes
        if s != t
    )
    return Workload(flows, kappa_bits, deterministic)


def flows_workload(
    flows_bps: list[tuple[int, int, float, float]], kappa_bits: int,
    deterministic: bool = False,
) -> Workload:
    """Explicit per-pair demands in bits/s with optional start times."""
    flows = tuple(
        Flow(s, t, rate_bps / kappa_bits, start_s)
        for s, t, rate_bps, start_s in flows_bps
    )
    return Workload(flows, kappa_bits, deterministic)
