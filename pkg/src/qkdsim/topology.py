"""Network topology: nodes, fiber links, and the key-rate-from-length model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path


class TopologyError(ValueError):
    """Raised for malformed or invalid topology definitions."""


@dataclass(frozen=True)
class RateModel:
    """Exponential fiber-attenuation surrogate for per-link key generation rates.

    rate(L) = r0_bps * 10 ** (-alpha_db_per_km * L / 10)
    """

    r0_bps: float = 10e6
    alpha_db_per_km: float = 0.2


def key_rate_from_length(length_km: float, model: RateModel) -> float:
    """Key generation rate in bits/s for a fiber of the given length."""
    if length_km < 0:
        raise ValueError(f"negative fiber length: {length_km}")
    return model.r0_bps * 10.0 ** (-model.alpha_db_per_km * length_km / 10.0)


@dataclass(frozen=True)
class Link:
    """Undirected fiber link. Endpoints are stored in ascending order."""

    u: int
    v: int
    length_km: float
    key_gen_rate_bps: float

    def __post_init__(self):
        if self.u == self.v:
            raise TopologyError(f"self-loop at node {self.u}")
        if self.u > self.v:
            lo, hi = self.v, self.u
            object.__setattr__(self, "u", lo)
            object.__setattr__(self, "v", hi)
        if self.length_km < 0:
            raise TopologyError(f"link {self.u}-{self.v}: negative length")
        if self.key_gen_rate_bps <= 0:
            raise TopologyError(f"link {self.u}-{self.v}: key rate must be positive")

    @property
    def key(self) -> tuple[int, int]:
        return (self.u, self.v)

    def other(self, node: int) -> int:
        if node == self.u:
            return self.v
        if node == self.v:
            return self.u
        raise ValueError(f"node {node} is not an endpoint of link {self.u}-{self.v}")


class Topology:
    """Immutable connected simple graph of QKD nodes and fiber links."""

    def __init__(self, nodes: list[int], links: list[Link]):
        self.nodes = sorted(nodes)
        self.links = sorted(links, key=lambda l: l.key)
        self._validate()
        self.link_by_key: dict[tuple[int, int], Link] = {l.key: l for l in self.links}
        self.adjacency: dict[int, list[Link]] = {n: [] for n in self.nodes}
        for link in self.links:
            self.adjacency[link.u].append(link)
            self.adjacency[link.v].append(link)

    def _validate(self) -> None:
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise TopologyError("duplicate node ids")
        if any(n < 0 for n in node_set):
            raise TopologyError("node ids must be non-negative integers")
        seen: set[tuple[int, int]] = set()
        for link in self.links:
            if link.u not in node_set or link.v not in node_set:
                raise TopologyError(f"link {link.u}-{link.v} references unknown node")
            if link.key in seen:
                raise TopologyError(f"duplicate link {link.u}-{link.v}")
            seen.add(link.key)
        if not self._connected():
            raise TopologyError("topology is not connected")

    def _connected(self) -> bool:
        if not self.nodes:
            return False
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for link in self.links:
            adj[link.u].append(link.v)
            adj[link.v].append(link.u)
        seen = {self.nodes[0]}
        stack = [self.nodes[0]]
        while stack:
            for m in adj[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return len(seen) == len(self.nodes)

    def neighbors(self, node: int) -> list[int]:
        return sorted(l.other(node) for l in self.adjacency[node])

    def link(self, u: int, v: int) -> Link:
        return self.link_by_key[(u, v) if u < v else (v, u)]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Topology)
            and self.nodes == other.nodes
            and self.links == other.links
        )


def parse_topology(text: str, rate_model: RateModel | None = None) -> Topology:
    """Parse the line-oriented topology format.

    Header line ``nodes <N>`` followed by one ``link <u> <v> <length_km>
    [rate_bps]`` line per link. Links without an explicit rate get one from
    the rate model. ``#`` starts a comment.
    """
    model = rate_model or RateModel()
    declared = None
    links: list[Link] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "nodes":
            if declared is not None:
                raise TopologyError(f"line {lineno}: duplicate nodes header")
            if len(parts) != 2:
                raise TopologyError(f"line {lineno}: expected 'nodes <N>'")
            declared = int(parts[1])
        elif parts[0] == "link":
            if declared is None:
                raise TopologyError(f"line {lineno}: link before nodes header")
            if len(parts) not in (4, 5):
                raise TopologyError(
                    f"line {lineno}: expected 'link <u> <v> <length_km> [rate_bps]'"
                )
            u, v = int(parts[1]), int(parts[2])
            length = float(parts[3])
            if len(parts) == 5:
                rate = float(parts[4])
            else:
                rate = key_rate_from_length(length, model)
            links.append(Link(u, v, length, rate))
        else:
            raise TopologyError(f"line {lineno}: unknown directive {parts[0]!r}")
    if declared is None:
        raise TopologyError("missing 'nodes <N>' header")
    node_ids = sorted({n for l in links for n in (l.u, l.v)})
    if len(node_ids) != declared:
        raise TopologyError(
            f"header declares {declared} nodes but links reference {len(node_ids)}"
        )
    return Topology(node_ids, links)


def load_topology(path: str | Path, rate_model: RateModel | None = None) -> Topology:
    return parse_topology(Path(path).read_text(), rate_model)


def propagation_delay_s(length_km: float, fiber_speed_km_per_s: float) -> float:
    return length_km / fiber_speed_km_per_s


def bundled_data_path(name: str) -> Path:
    """Path of a data file shipped with the package (e.g. 'secoqc.topo')."""
    return Path(__file__).parent / "data" / name
