"""Per-node protocol state: neighbor sensing, MPR flooding, route computation.

One Node class drives all three protocols. They share HELLO/TC mechanics and
differ in two places: the HELLO emission gate (the key-aware protocol stays
silent on links whose pool has dropped below WARN) and the routing metric
(min-hop for baseline OLSR, bottleneck key-recovery capability for the
key-aware protocol, bottleneck remaining-keys for the multi-SPF baseline).
"""

from __future__ import annotations

from .capability import LinkMetricInputs, recovery_capability
from .keypool import PoolState
from .messages import HelloMessage, KeyStateAd, LinkCode, TcMessage
from .routing import min_hop_paths, widest_paths

OLSR = "olsr"
QOLSR = "qolsr"
MULTISPF = "multispf"
PROTOCOLS = (OLSR, QOLSR, MULTISPF)


def hello_gate_qolsr(pool, now: float) -> bool:
    """Pre-sensing HELLO gate: emit only while the pool is READY.

    Data forwarding is not gated here; packets keep flowing down to the MIN
    floor while the suppressed link ages out of neighbor tables.
    """
    return pool.state(now) == PoolState.READY


class NeighborEntry:
    __slots__ = ("status", "expiry", "adv_degree")

    def __init__(self, status: LinkCode, expiry: float, adv_degree: int):
        self.status = status
        self.expiry = expiry
        self.adv_degree = adv_degree


class RouteEntry:
    __slots__ = ("next_hop", "hop_count", "path", "metric")

    def __init__(self, next_hop: int, hop_count: int, path: tuple, metric: float):
        self.next_hop = next_hop
        self.hop_count = hop_count
        self.path = path
        self.metric = metric


def select_mprs(
    sym_neighbors: set[int],
    two_hop_pairs: dict[tuple[int, int], float],
    adv_degree: dict[int, int],
    self_id: int,
    now: float,
) -> frozenset[int]:
    """Greedy multipoint-relay cover of the strict two-hop neighborhood.

    Sole-path neighbors are mandatory; the rest are chosen by most uncovered
    targets, breaking ties by higher advertised degree, then lower id.
    """
    coverage: dict[int, set[int]] = {}
    for (nbr, th), expiry in two_hop_pairs.items():
        if expiry <= now or nbr not in sym_neighbors:
            continue
        if th == self_id or th in sym_neighbors:
            continue
        coverage.setdefault(th, set()).add(nbr)

    mprs: set[int] = set()
    for target, covers in coverage.items():
        if len(covers) == 1:
            mprs.add(next(iter(covers)))
    uncovered = {t for t, covers in coverage.items() if not (covers & mprs)}
    while uncovered:
        best = None
        for nbr in sorted(sym_neighbors):
            gain = sum(1 for t in uncovered if nbr in coverage[t])
            if gain == 0:
                continue
            rank = (gain, adv_degree.get(nbr, 0), -nbr)
            if best is None or rank > best[0]:
                best = (rank, nbr)
        if best is None:
            break  # targets with no live cover left
        mprs.add(best[1])
        uncovered = {t for t in uncovered if best[1] not in coverage[t]}
    return frozenset(mprs)


class Node:
    __slots__ = (
        "id", "sim", "protocol", "neighbors", "two_hop", "selectors",
        "mpr_set", "ansn", "last_adv_selectors", "topo", "orig_ansn",
        "dup", "link_ads", "routes", "dirty", "malformed_count",
    )

    def __init__(self, nid: int, sim, protocol: str):
        self.id = nid
        self.sim = sim
        self.protocol = protocol
        self.neighbors: dict[int, NeighborEntry] = {}
        self.two_hop: dict[tuple[int, int], float] = {}
        self.selectors: dict[int, float] = {}
        self.mpr_set: frozenset[int] = frozenset()
        self.ansn = 0
        self.last_adv_selectors: frozenset[int] = frozenset()
        self.topo: dict[tuple[int, int], float] = {}  # (originator, dest) -> expiry
        self.orig_ansn: dict[int, int] = {}
        self.dup: dict[tuple[int, int], float] = {}
        self.link_ads: dict[tuple[int, int], KeyStateAd] = {}
        self.routes: dict[int, RouteEntry] = {}
        self.dirty = False
        self.malformed_count = 0

    # -- table maintenance -------------------------------------------------

    def live_sym_neighbors(self, now: float) -> set[int]:
        return {
            n for n, e in self.neighbors.items()
            if e.expiry > now and e.status != LinkCode.HEARD
        }

    def purge_expired(self, now: float) -> bool:
        """Drop expired entries from every table; True if anything changed
        that can affect routing."""
        changed = False
        for n in [n for n, e in self.neighbors.items() if e.expiry <= now]:
            del self.neighbors[n]
            changed = True
        for k in [k for k, exp in self.two_hop.items() if exp <= now]:
            del self.two_hop[k]
            changed = True
        for n in [n for n, exp in self.selectors.items() if exp <= now]:
            del self.selectors[n]
        for k in [k for k, exp in self.topo.items() if exp <= now]:
            del self.topo[k]
            changed = True
        for k in [k for k, exp in self.dup.items() if exp <= now]:
            del self.dup[k]
        ad_hold = self.sim.ad_hold_s
        for k in [k for k, ad in self.link_ads.items() if ad.stamp + ad_hold <= now]:
            del self.link_ads[k]
            if self.protocol != OLSR:
                changed = True
        return changed

    def refresh_mprs(self, now: float) -> None:
        sym = self.live_sym_neighbors(now)
        degrees = {n: self.neighbors[n].adv_degree for n in sym}
        self.mpr_set = select_mprs(sym, self.two_hop, degrees, self.id, now)

    # -- HELLO -------------------------------------------------------------

    def build_hello(self, link_state, now: float) -> HelloMessage:
        entries = []
        for nbr in sorted(self.neighbors):
            entry = self.neighbors[nbr]
            if entry.expiry <= now:
                continue
            if nbr in self.mpr_set:
                code = LinkCode.MPR
            else:
                code = entry.status
            entries.append((nbr, code))
        return HelloMessage(self.id, tuple(entries), link_state.build_ad(now))

    def hello_allowed(self, link_state, now: float) -> bool:
        """Emission gate: the key-aware protocol pre-senses WARN and goes
        silent; the baselines send whenever the pool can pay for the message."""
        if self.protocol == QOLSR:
            return hello_gate_qolsr(link_state.pool, now)
        return True

    def process_hello(self, msg: HelloMessage, link_state, now: float) -> None:
        sender = msg.originator
        if sender == self.id or sender != link_state.link.other(self.id):
            self.malformed_count += 1
            return
        hold = self.sim.config.neighbor_hold_s
        expiry = now + hold
        my_listing = next((c for n, c in msg.neighbors if n == self.id), None)
        status = LinkCode.HEARD if my_listing is None else LinkCode.SYM
        entry = self.neighbors.get(sender)
        changed = entry is None or entry.status != status
        if entry is None:
            self.neighbors[sender] = NeighborEntry(status, expiry, len(msg.neighbors))
        else:
            entry.status = status
            entry.expiry = expiry
            entry.adv_degree = len(msg.neighbors)
        if my_listing == LinkCode.MPR:
            self.selectors[sender] = expiry
        elif my_listing is not None and sender in self.selectors:
            del self.selectors[sender]
        for nbr, code in msg.neighbors:
            if nbr == self.id or code == LinkCode.HEARD:
                continue
            key = (sender, nbr)
            if key not in self.two_hop:
                changed = True
            self.two_hop[key] = expiry
        if self.store_ad(msg.ad):
            changed = True
        if changed:
            self.sim.mark_dirty(self)

    # -- TC ----------------------------------------------------------------

    def build_tc(self, now: float) -> TcMessage | None:
        for n in [n for n, exp in self.selectors.items() if exp <= now]:
            del self.selectors[n]
        if not self.selectors:
            return None
        sels = frozenset(self.selectors)
        if sels != self.last_adv_selectors:
            self.ansn += 1
            self.last_adv_selectors = sels
        ads = tuple(
            ls.build_ad(now) for ls in self.sim.incident_links(self.id)
        )
        return TcMessage(self.id, self.ansn, tuple(sorted(sels)), ads)

    def process_tc(self, msg: TcMessage, sender: int, now: float) -> bool:
        """Update topology state; returns True if this copy must be
        re-flooded (sender selected us as MPR, first sighting of the flood)."""
        orig = msg.originator
        if orig == self.id:
            return False
        changed = False
        hold = self.sim.topology_hold_s
        last = self.orig_ansn.get(orig)
        if last is None or msg.ansn >= last:
            if last is None or msg.ansn > last:
                self.orig_ansn[orig] = msg.ansn
                stale = [k for k in self.topo if k[0] == orig]
                advertised = {(orig, sel) for sel in msg.selectors}
                for k in stale:
                    if k not in advertised:
                        del self.topo[k]
                        changed = True
            for sel in msg.selectors:
                key = (orig, sel)
                if key not in self.topo:
                    changed = True
                self.topo[key] = now + hold
        for ad in msg.ads:
            if self.store_ad(ad):
                changed = True
        if changed:
            self.sim.mark_dirty(self)
        dup_key = (orig, msg.ansn)
        seen = self.dup.get(dup_key, 0.0) > now
        self.dup[dup_key] = now + self.sim.dup_hold_s
        sel_entry = self.selectors.get(sender)
        return not seen and sel_entry is not None and sel_entry > now

    def store_ad(self, ad: KeyStateAd) -> bool:
        """Keep the freshest advertisement per link; True when the update
        flips the link's pool-state category (a routing trigger)."""
        key = (ad.u, ad.v)
        old = self.link_ads.get(key)
        if old is not None and old.stamp >= ad.stamp:
            return False
        self.link_ads[key] = ad
        if self.protocol == OLSR:
            return False
        state_of = self.sim.state_of
        return old is None or state_of(old.cur_bits) != state_of(ad.cur_bits)

    # -- routing -----------------------------------------------------------

    def recompute_routes(self, now: float) -> dict[int, RouteEntry]:
        self.purge_expired(now)
        if self.protocol == OLSR:
            routes = self._min_hop_routes(now)
        else:
            routes = self._widest_routes(now)
        self.routes = routes
        return routes

    def _min_hop_routes(self, now: float) -> dict[int, RouteEntry]:
        edges = [
            (self.id, n) for n in self.live_sym_neighbors(now)
        ] + [
            k for k, exp in self.topo.items()
            if exp > now and self.id not in k
        ]
        paths = min_hop_paths(edges, self.id)
        return {
            dest: RouteEntry(path[1], len(path) - 1, path, float(len(path) - 1))
            for dest, path in paths.items()
        }

    def _widest_routes(self, now: float) -> dict[int, RouteEntry]:
        sim = self.sim
        sym = self.live_sym_neighbors(now)
        weights: dict[tuple[int, int], float] = {}
        # Metric inputs come from advertisements for every link, own links
        # included (each node also keeps its last-emitted ad), so distributed
        # widest-path decisions are made on near-identical data. Falling
        # back to the live pool covers the brief window before the first ad.
        for nbr in sym:
            ls = sim.link_state(self.id, nbr)
            ad = self.link_ads.get(ls.key)
            if ad is None:
                cur = ls.pool.peek(now)
                gen, cons, mx = (ls.link.key_gen_rate_bps,
                                 ls.consumption_bps(now), ls.pool.max_bits)
            else:
                cur = sim.extrapolate_ad_cur(ad, now)
                gen, cons, mx = ad.gen_rate_bps, ad.consumption_bps, ad.max_bits
            if sim.state_of(cur) == PoolState.UNAVAILABLE:
                continue
            if self.protocol == MULTISPF:
                weights[ls.key] = cur
            else:
                weights[ls.key] = recovery_capability(
                    LinkMetricInputs(gen, cons, cur, mx, sim.min_bits))
        candidates = {
            (min(k), max(k)) for k, exp in self.topo.items() if exp > now
        } | set(self.link_ads)
        for key in candidates:
            if self.id in key or key in weights:
                continue
            ad = self.link_ads.get(key)
            if ad is None:
                continue  # remote link without fresh key state is unusable
            cur = sim.extrapolate_ad_cur(ad, now)
            if sim.state_of(cur) == PoolState.UNAVAILABLE:
                continue
            if self.protocol == MULTISPF:
                weights[key] = cur
            else:
                weights[key] = recovery_capability(LinkMetricInputs(
                    ad.gen_rate_bps, ad.consumption_bps, cur, ad.max_bits,
                    sim.min_bits,
                ))
        found = widest_paths(weights, self.id)
        return {
            dest: RouteEntry(path[1], len(path) - 1, path, width)
            for dest, (width, path) in found.items()
        }
