"""Route computation: deterministic min-hop search and widest (bottleneck) search.

Both searches return full paths and share the same tie-breaking contract:
min-hop prefers the lexicographically smallest path among equal-length ones
(which implies the lowest next hop); widest search maximizes the bottleneck
edge weight, breaking ties by fewer hops, then lexicographically smaller
path.
"""

from __future__ import annotations

import heapq
from typing import Iterable, Mapping

Edge = tuple[int, int]


def _adjacency(edges: Iterable[Edge]) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for nbrs in adj.values():
        nbrs.sort()
    return adj


def min_hop_paths(edges: Iterable[Edge], source: int) -> dict[int, tuple[int, ...]]:
    """Lexicographically smallest shortest path from source to every
    reachable node, as a node sequence starting at source."""
    adj = _adjacency(edges)
    if source not in adj:
        return {}
    best: dict[int, tuple[int, tuple[int, ...]]] = {}
    heap: list[tuple[int, tuple[int, ...]]] = [(0, (source,))]
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if node in best:
            continue
        best[node] = (dist, path)
        for nbr in adj.get(node, ()):
            if nbr not in best:
                heapq.heappush(heap, (dist + 1, path + (nbr,)))
    return {node: path for node, (dist, path) in best.items() if node != source}


def widest_paths(
    weights: Mapping[Edge, float], source: int
) -> dict[int, tuple[float, tuple[int, ...]]]:
    """Maximum-bottleneck path from source to every reachable node.

    ``weights`` maps undirected edges (u < v) to their width. Returns
    {dest: (bottleneck, path)}. Ties on bottleneck prefer fewer hops, then
    the lexicographically smaller path. Uses Pareto label search so that a
    wide-but-long label cannot shadow a narrower label that would win a
    downstream tie on hops.
    """
    adj: dict[int, list[tuple[int, float]]] = {}
    for (u, v), w in weights.items():
        adj.setdefault(u, []).append((v, w))
        adj.setdefault(v, []).append((u, w))
    for nbrs in adj.values():
        nbrs.sort()
    if source not in adj:
        return {}

    best: dict[int, tuple[float, tuple[int, ...]]] = {}
    # Pareto frontier of settled (width, hops, path) per node. A settled
    # label kills a candidate only when it is at least as wide, no longer,
    # AND lexicographically no larger: a lex-smaller prefix must survive
    # even if narrower, because a downstream bottleneck can equalize widths
    # and leave the path order as the deciding tie-break.
    settled: dict[int, list[tuple[float, int, tuple[int, ...]]]] = {}

    def dominated(node: int, width: float, hops: int,
                  path: tuple[int, ...]) -> bool:
        return any(
            w >= width and h <= hops and p <= path
            for w, h, p in settled.get(node, ())
        )

    heap: list[tuple[float, int, tuple[int, ...]]] = [(float("-inf"), 0, (source,))]
    while heap:
        neg_width, hops, path = heapq.heappop(heap)
        width = -neg_width
        node = path[-1]
        if dominated(node, width, hops, path):
            continue
        settled.setdefault(node, []).append((width, hops, path))
        if node not in best:
            best[node] = (width, path)
        for nbr, w in adj.get(node, ()):
            if nbr in path:
                continue
            nw = min(width, w)
            npath = path + (nbr,)
            if dominated(nbr, nw, hops + 1, npath):
                continue
            heapq.heappush(heap, (-nw, hops + 1, npath))
    best.pop(source, None)
    return best
