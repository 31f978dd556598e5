"""The simulation instance: link runtime state, event dispatch, and metrics.

A Simulation owns one topology, one key pool per link, one protocol node per
network node, a workload, and the event queue. Runs are deterministic for a
fixed scenario: a single seeded generator feeds every stochastic draw in
event order, and the run's trace hash digests every protocol transmission
and packet outcome.
"""

from __future__ import annotations

import hashlib
import math
import random

from . import engine
from .engine import EventQueue, SimConfig
from .keypool import KeyPool, PoolState, SimulationIntegrityError
from .messages import DataPacket, HelloMessage, KeyStateAd, TcMessage
from .metrics import DropReason, MetricsLog, RunSummary
from .protocol import Node, RouteEntry
from .routing import min_hop_paths
from .scenario import ConfigError, Scenario
from .topology import RateModel, Topology, load_topology
from .workload import Workload, flows_workload, make_workload

#: Time constant of the per-link key-consumption estimator.
EMA_TAU_S = 1.0

#: Cap on per-run diagnostic log entries kept in the summary.
MAX_LOG_ENTRIES = 20000


class LinkState:
    """Runtime state of one fiber link: key pool, delivery latency, and the
    exponentially weighted consumption estimator."""

    __slots__ = ("link", "key", "u", "v", "pool", "delay_s",
                 "_ema_rate", "_ema_stamp", "last_category")

    def __init__(self, link, pool: KeyPool, delay_s: float):
        self.link = link
        self.key = link.key
        self.u, self.v = link.key
        self.pool = pool
        self.delay_s = delay_s
        self._ema_rate = 0.0
        self._ema_stamp = 0.0
        self.last_category = pool.state_of(pool.cur_bits)

    def consumption_bps(self, now: float) -> float:
        if now <= self._ema_stamp:
            return self._ema_rate
        return self._ema_rate * math.exp((self._ema_stamp - now) / EMA_TAU_S)

    def consume(self, bits: float, now: float, sim: "Simulation") -> bool:
        ok = self.pool.consume(bits, now)
        if ok:
            self._ema_rate = self.consumption_bps(now) + bits / EMA_TAU_S
            self._ema_stamp = now
        category = self.pool.state_of(self.pool.cur_bits)
        if category is not self.last_category:
            sim.log_pool_transition(self, self.last_category, category, now)
            self.last_category = category
        return ok

    def observe(self, now: float, sim: "Simulation") -> float:
        """Accrue and report fill, logging threshold crossings."""
        cur = self.pool.peek(now)
        category = self.pool.state_of(cur)
        if category is not self.last_category:
            sim.log_pool_transition(self, self.last_category, category, now)
            self.last_category = category
        return cur

    def build_ad(self, now: float) -> KeyStateAd:
        return KeyStateAd(
            self.u, self.v, self.pool.peek(now), self.pool.max_bits,
            self.link.key_gen_rate_bps, self.consumption_bps(now), now,
        )


class Simulation:
    def __init__(self, scenario: Scenario, topology: Topology | None = None):
        scenario.validate()
        self.scenario = scenario
        if topology is None:
            if not scenario.topology:
                raise ConfigError("scenario does not name a topology file")
            try:
                topology = load_topology(
                    scenario.topology,
                    RateModel(scenario.rate_r0_bps, scenario.rate_alpha_db_per_km),
                )
            except OSError as exc:
                raise ConfigError(f"cannot read topology: {exc}")
        self.topology = topology
        self.config = SimConfig(
            duration_s=scenario.duration_s,
            seed=scenario.seed,
            hello_interval_s=scenario.hello_interval_s,
            tc_interval_s=scenario.tc_interval_s,
            neighbor_hold_multiplier=scenario.neighbor_hold_multiplier,
            per_hop_processing_delay_s=scenario.per_hop_processing_delay_s,
            fiber_speed_km_per_s=scenario.fiber_speed_km_per_s,
        )
        self.min_bits = scenario.min_bits
        self.warn_bits = scenario.warn_bits
        self.max_bits = scenario.max_bits
        self.topology_hold_s = 3.0 * scenario.tc_interval_s
        self.ad_hold_s = 3.0 * scenario.tc_interval_s
        self.dup_hold_s = 0.5 * scenario.tc_interval_s
        self.ttl = len(topology.nodes)

        self.queue = EventQueue()
        self.rng = random.Random(scenario.seed)
        self.metrics = MetricsLog(scenario.duration_s)
        self._hash = hashlib.sha256()
        self._hash.update(scenario.to_text().encode())

        self._links: dict[tuple[int, int], LinkState] = {}
        for link in topology.links:
            fill = scenario.pool_init.get(link.key, scenario.initial_fill_bits)
            pool = KeyPool(
                min(fill, scenario.max_bits), scenario.min_bits,
                scenario.warn_bits, scenario.max_bits, link.key_gen_rate_bps,
            )
            delay = (link.length_km / scenario.fiber_speed_km_per_s
                     + scenario.per_hop_processing_delay_s)
            self._links[link.key] = LinkState(link, pool, delay)
        self._incident: dict[int, list[LinkState]] = {
            n: [self._links[l.key] for l in topology.adjacency[n]]
            for n in topology.nodes
        }
        self.nodes: dict[int, Node] = {
            n: Node(n, self, scenario.protocol) for n in topology.nodes
        }

        if scenario.level is not None:
            self.workload: Workload = make_workload(
                scenario.level, topology, scenario.kappa_bits,
                scenario.deterministic_arrivals, scenario.data_start_s,
            )
        else:
            self.workload = flows_workload(
                scenario.flows, scenario.kappa_bits,
                scenario.deterministic_arrivals,
            )
        for flow in self.workload.flows:
            if flow.src not in self.nodes or flow.dst not in self.nodes:
                raise ConfigError(f"flow references unknown node "
                                  f"{flow.src}>{flow.dst}")
        self._watched: dict[int, set[int]] = {}
        for flow in self.workload.flows:
            if flow.rate_pkts_per_s > 0:
                self._watched.setdefault(flow.src, set()).add(flow.dst)

        self._inflight: set[DataPacket] = set()
        self.route_changes: list[dict] = []
        self.route_change_count = 0
        self.warn_crossings: list[dict] = []
        self.hello_suppressions: list[dict] = []
        self.hello_suppressed_count = 0
        self._finished = False

        self._schedule_initial_events()

    # -- helpers used by nodes ----------------------------------------------

    def link_state(self, a: int, b: int) -> LinkState | None:
        return self._links.get((a, b) if a < b else (b, a))

    def incident_links(self, node: int) -> list[LinkState]:
        return self._incident[node]

    def state_of(self, cur_bits: float) -> PoolState:
        if cur_bits >= self.warn_bits:
            return PoolState.READY
        if cur_bits >= self.min_bits:
            return PoolState.WARNING
        return PoolState.UNAVAILABLE

    def extrapolate_ad_cur(self, ad: KeyStateAd, now: float) -> float:
        """Age a remote advertisement by its own net fill rate."""
        if not self.scenario.extrapolate_remote:
            return ad.cur_bits
        drift = (ad.gen_rate_bps - ad.consumption_bps) * (now - ad.stamp)
        return min(max(ad.cur_bits + drift, self.min_bits), ad.max_bits)

    def mark_dirty(self, node: Node) -> None:
        if not node.dirty and not self.scenario.static_routes:
            node.dirty = True
            self.queue.schedule(self.queue.now, engine.ROUTE_RECOMPUTE, node.id)

    def transmit(self, ls: LinkState, sender: int, message, now: float) -> None:
        """Schedule delivery after propagation plus processing delay.

        Key consumption is the caller's responsibility.
        """
        receiver = ls.link.other(sender)
        self.queue.schedule(now + ls.delay_s, engine.DELIVER,
                            (ls, sender, receiver, message))

    # -- diagnostics ----------------------------------------------------------

    def log_pool_transition(self, ls: LinkState, old: PoolState,
                            new: PoolState, now: float) -> None:
        self._hash.update(
            f"W|{now!r}|{ls.u}-{ls.v}|{old.value}>{new.value}".encode())
        if (old is PoolState.READY and new is PoolState.WARNING
                and len(self.warn_crossings) < MAX_LOG_ENTRIES):
            self.warn_crossings.append(
                {"time": now, "link": f"{ls.u}-{ls.v}"})

    def log_suppression(self, node: int, ls: LinkState, now: float) -> None:
        self.hello_suppressed_count += 1
        self._hash.update(f"S|{now!r}|{node}|{ls.u}-{ls.v}".encode())
        if len(self.hello_suppressions) < MAX_LOG_ENTRIES:
            self.hello_suppressions.append(
                {"time": now, "node": node, "link": f"{ls.u}-{ls.v}"})

    def _log_route_change(self, node: int, dst: int, old: RouteEntry | None,
                          new: RouteEntry | None, now: float) -> None:
        old_path = list(old.path) if old else None
        new_path = list(new.path) if new else None
        self.route_change_count += 1
        self._hash.update(
            f"R|{now!r}|{node}|{dst}|{old_path}|{new_path}".encode())
        if len(self.route_changes) < MAX_LOG_ENTRIES:
            self.route_changes.append({
                "time": now, "src": node, "dst": dst,
                "old_path": old_path, "new_path": new_path,
            })

    # -- event scheduling -----------------------------------------------------

    def _schedule_initial_events(self) -> None:
        cfg = self.config
        duration = cfg.duration_s
        if self.scenario.static_routes:
            self._install_static_routes()
        else:
            for nid in self.topology.nodes:
                self.queue.schedule(self.rng.random() * cfg.hello_interval_s,
                                    engine.EMIT_HELLO, nid)
                self.queue.schedule(self.rng.random() * cfg.tc_interval_s,
                                    engine.EMIT_TC, nid)
        for i in range(1, int(duration) + 1):
            self.queue.schedule(float(i), engine.METRICS_TICK, None)
        flows = self.workload.flows
        if self.workload.deterministic:
            n = len(flows)
            for i, flow in enumerate(flows):
                if flow.rate_pkts_per_s <= 0:
                    continue
                interval = 1.0 / flow.rate_pkts_per_s
                first = flow.start_s + interval * (i / n)
                if first <= duration:
                    self.queue.schedule(first, engine.PACKET_ARRIVAL, i)
        else:
            for i, flow in enumerate(flows):
                if flow.rate_pkts_per_s <= 0:
                    continue
                first = flow.start_s + self.rng.expovariate(flow.rate_pkts_per_s)
                if first <= duration:
                    self.queue.schedule(first, engine.PACKET_ARRIVAL, i)

    def _install_static_routes(self) -> None:
        edges = [l.key for l in self.topology.links]
        for nid, node in self.nodes.items():
            paths = min_hop_paths(edges, nid)
            node.routes = {
                dest: RouteEntry(p[1], len(p) - 1, p, float(len(p) - 1))
                for dest, p in paths.items()
            }

    # -- event handlers ---------------------------------------------------------

    def _emit_hello(self, nid: int, now: float) -> None:
        node = self.nodes[nid]
        node.refresh_mprs(now)
        for ls in self._incident[nid]:
            ls.observe(now, self)
            if not node.hello_allowed(ls, now):
                self.log_suppression(nid, ls, now)
                continue
            msg = node.build_hello(ls, now)
            if ls.consume(msg.size_bits, now, self):
                self.metrics.record_routing_bits(msg.size_bits, now)
                self._hash.update(f"M|{now!r}|{nid}|{msg.encode()}".encode())
                if node.store_ad(msg.ad):
                    self.mark_dirty(node)
                self.transmit(ls, nid, msg, now)
        cfg = self.config
        jitter = -self.rng.random() * 0.25 * cfg.hello_interval_s
        nxt = now + cfg.hello_interval_s + jitter
        if nxt <= cfg.duration_s:
            self.queue.schedule(nxt, engine.EMIT_HELLO, nid)

    def _emit_tc(self, nid: int, now: float) -> None:
        node = self.nodes[nid]
        msg = node.build_tc(now)
        if msg is not None:
            for ad in msg.ads:
                if node.store_ad(ad):
                    self.mark_dirty(node)
            self._flood_tc(nid, msg, now)
        cfg = self.config
        jitter = -self.rng.random() * 0.25 * cfg.tc_interval_s
        nxt = now + cfg.tc_interval_s + jitter
        if nxt <= cfg.duration_s:
            self.queue.schedule(nxt, engine.EMIT_TC, nid)

    def _flood_tc(self, nid: int, msg: TcMessage, now: float) -> None:
        for ls in self._incident[nid]:
            if ls.consume(msg.size_bits, now, self):
                self.metrics.record_routing_bits(msg.size_bits, now)
                self._hash.update(f"M|{now!r}|{nid}|{msg.encode()}".encode())
                self.transmit(ls, nid, msg, now)

    def _deliver(self, payload, now: float) -> None:
        ls, sender, receiver, msg = payload
        node = self.nodes[receiver]
        if type(msg) is DataPacket:
            self._inflight.discard(msg)
            self._forward_packet(msg, receiver, now, prev=sender)
        elif type(msg) is HelloMessage:
            node.process_hello(msg, ls, now)
        else:
            if node.process_tc(msg, sender, now):
                self._flood_tc(receiver, msg, now)

    def _arrival(self, flow_idx: int, now: float) -> None:
        flow = self.workload.flows[flow_idx]
        packet = DataPacket(flow.src, flow.dst, self.workload.kappa_bits, now)
        self.metrics.record_send(packet)
        self._forward_packet(packet, flow.src, now)
        if self.workload.deterministic:
            nxt = now + 1.0 / flow.rate_pkts_per_s
        else:
            nxt = now + self.rng.expovariate(flow.rate_pkts_per_s)
        if nxt <= self.config.duration_s:
            self.queue.schedule(nxt, engine.PACKET_ARRIVAL, flow_idx)

    def _forward_packet(self, packet: DataPacket, at: int, now: float,
                        prev: int | None = None) -> None:
        if at == packet.dst:
            self.metrics.record_delivered(packet, now)
            self._hash.update(f"P|{now!r}|{packet.encode()}|ok".encode())
            return
        if packet.hops >= self.ttl:
            self._drop(packet, DropReason.TTL_EXCEEDED, now)
            return
        route = self.nodes[at].routes.get(packet.dst)
        if route is None or route.next_hop == prev:
            # Split-horizon guard: a route pointing back where the packet
            # came from is a transient loop; shed it here instead of letting
            # it ping-pong until the TTL burns keys on every bounce.
            self._drop(packet, DropReason.NO_ROUTE, now)
            return
        ls = self.link_state(at, route.next_hop)
        if ls is None:
            self._drop(packet, DropReason.NO_ROUTE, now)
            return
        if ls.consume(packet.size_bits, now, self):
            packet.hops += 1
            packet.keys_consumed_bits += packet.size_bits
            self._inflight.add(packet)
            self.transmit(ls, at, packet, now)
        else:
            self._drop(packet, DropReason.KEY_INSUFFICIENT, now)

    def _drop(self, packet: DataPacket, reason: DropReason, now: float) -> None:
        self.metrics.record_dropped(packet, reason)
        self._hash.update(
            f"P|{now!r}|{packet.encode()}|{reason.value}".encode())

    def _recompute(self, nid: int, now: float) -> None:
        node = self.nodes[nid]
        node.dirty = False
        watched = self._watched.get(nid)
        old = node.routes
        new = node.recompute_routes(now)
        if watched:
            for dst in sorted(watched):
                o, n = old.get(dst), new.get(dst)
                if (o.path if o else None) != (n.path if n else None):
                    self._log_route_change(nid, dst, o, n, now)

    def _tick(self, now: float) -> None:
        self.metrics.record_tick()
        if not self.scenario.static_routes:
            for node in self.nodes.values():
                if node.purge_expired(now):
                    self.mark_dirty(node)

    # -- main loop ----------------------------------------------------------------

    def run(self) -> RunSummary:
        if self._finished:
            raise SimulationIntegrityError("simulation instance already ran")
        self._finished = True
        queue = self.queue
        duration = self.config.duration_s
        dispatch = {
            engine.EMIT_HELLO: self._emit_hello,
            engine.EMIT_TC: self._emit_tc,
            engine.ROUTE_RECOMPUTE: self._recompute,
            engine.PACKET_ARRIVAL: self._arrival,
        }
        while True:
            peek = queue.peek_time()
            if peek is None or peek > duration:
                break
            time, _seq, kind, payload = queue.pop()
            if kind == engine.DELIVER:
                self._deliver(payload, time)
            elif kind == engine.METRICS_TICK:
                self._tick(time)
            else:
                dispatch[kind](payload, time)
        return self._finalize(duration)

    def _finalize(self, end_time: float) -> RunSummary:
        for ls in self._links.values():
            ls.pool.accrue(end_time)
        inflight = sorted(
            self._inflight, key=lambda p: (p.send_time, p.src, p.dst))
        inflight_bits = self.metrics.exclude_inflight(inflight)
        self.metrics.check_conservation()

        m = self.metrics
        sent, delivered, dps, tps = m.totals()
        routing_bits = sum(m.routing_bits)
        total_consumed = sum(ls.pool.consumed_bits for ls in self._links.values())
        if int(total_consumed) != routing_bits + tps + inflight_bits:
            raise SimulationIntegrityError(
                f"key ledger audit failed: pools recorded {total_consumed} "
                f"consumed bits, accounted {routing_bits + tps + inflight_bits}"
            )
        owd_count = sum(m.owd_count)
        duration = self.config.duration_s
        return RunSummary(
            protocol=self.scenario.protocol,
            level=self.scenario.level,
            seed=self.scenario.seed,
            duration_s=duration,
            packets_sent=sent,
            packets_delivered=delivered,
            drops_by_reason=dict(m.drops),
            pdr_overall=(delivered / sent) if sent > 0 else None,
            qku=(dps / tps) if tps > 0 else None,
            dps_bits=dps,
            tps_bits=tps,
            routing_key_bits=routing_bits,
            mean_owd_s=(sum(m.owd_sum) / owd_count) if owd_count else None,
            wasted_generation_bits=sum(
                ls.pool.wasted_bits for ls in self._links.values()),
            band_key_bits=sum(
                ls.pool.band_bits for ls in self._links.values()),
            inflight_packets=len(inflight),
            inflight_key_bits=inflight_bits,
            tick_count=m.tick_count,
            trace_hash=self._hash.hexdigest(),
            total_generated_bits=sum(
                ls.link.key_gen_rate_bps * duration
                for ls in self._links.values()),
            total_consumed_bits=total_consumed,
            route_changes=self.route_changes,
            route_change_count=self.route_change_count,
            warn_crossings=self.warn_crossings,
            hello_suppressions=self.hello_suppressions,
            hello_suppressed_count=self.hello_suppressed_count,
        )

    @property
    def metrics_log(self) -> MetricsLog:
        return self.metrics


def run_simulation(scenario: Scenario,
                   topology: Topology | None = None) -> tuple[RunSummary, MetricsLog]:
    sim = Simulation(scenario, topology)
    summary = sim.run()
    return summary, sim.metrics
