"""Time-bucketed metrics: PDR, key utilization, routing cost, one-way delay.

Bucketing is by packet send time (1 s buckets). Packets still in flight when
the run ends count as neither delivered nor dropped: they are removed from
their send bucket and contribute to neither DPS nor TPS.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .keypool import SimulationIntegrityError
from .messages import DataPacket


class DropReason(enum.Enum):
    NO_ROUTE = "NoRoute"
    KEY_INSUFFICIENT = "KeyInsufficient"
    TTL_EXCEEDED = "TtlExceeded"


@dataclass
class RunSummary:
    protocol: str
    level: float | None
    seed: int
    duration_s: float
    packets_sent: int
    packets_delivered: int
    drops_by_reason: dict[str, int]
    pdr_overall: float | None
    qku: float | None
    dps_bits: int
    tps_bits: int
    routing_key_bits: int
    mean_owd_s: float | None
    wasted_generation_bits: float
    band_key_bits: float
    inflight_packets: int
    inflight_key_bits: int
    tick_count: int
    trace_hash: str
    total_generated_bits: float
    total_consumed_bits: float
    route_changes: list = field(default_factory=list)
    route_change_count: int = 0
    warn_crossings: list = field(default_factory=list)
    hello_suppressions: list = field(default_factory=list)
    hello_suppressed_count: int = 0

    def to_json_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "level": self.level,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "packets_sent": self.packets_sent,
            "packets_delivered": self.packets_delivered,
            "drops_by_reason": self.drops_by_reason,
            "pdr_overall": self.pdr_overall,
            "qku": self.qku,
            "dps_bits": self.dps_bits,
            "tps_bits": self.tps_bits,
            "routing_key_bits": self.routing_key_bits,
            "mean_owd_s": self.mean_owd_s,
            "wasted_generation_bits": self.wasted_generation_bits,
            "band_key_bits": self.band_key_bits,
            "inflight_packets": self.inflight_packets,
            "inflight_key_bits": self.inflight_key_bits,
            "tick_count": self.tick_count,
            "trace_hash": self.trace_hash,
            "total_generated_bits": self.total_generated_bits,
            "total_consumed_bits": self.total_consumed_bits,
            "route_changes": self.route_changes,
            "route_change_count": self.route_change_count,
            "warn_crossings": self.warn_crossings,
            "hello_suppressions": self.hello_suppressions,
            "hello_suppressed_count": self.hello_suppressed_count,
        }


TIMESERIES_COLUMNS = [
    "bucket_start_s",
    "packets_sent",
    "packets_delivered",
    "pdr",
    "keys_delivered_bits",
    "keys_total_bits",
    "routing_key_bits",
    "owd_mean_s",
    "owd_count",
]


class MetricsLog:
    """Append-only per-run metrics store."""

    def __init__(self, duration_s: float):
        self.duration_s = duration_s
        n = max(1, math.ceil(duration_s))
        self.n_buckets = n
        self.sent = [0] * n
        self.delivered = [0] * n
        self.dps = [0] * n
        self.tps = [0] * n
        self.routing_bits = [0] * n
        self.owd_sum = [0.0] * n
        self.owd_count = [0] * n
        self.drops: dict[str, int] = {r.value: 0 for r in DropReason}
        self.dropped_key_bits = 0
        self.tick_count = 0

    def _bucket(self, t: float) -> int:
        i = int(t)
        return i if i < self.n_buckets else self.n_buckets - 1

    def record_send(self, packet: DataPacket) -> None:
        self.sent[self._bucket(packet.send_time)] += 1

    def record_delivered(self, packet: DataPacket, delivery_time: float) -> None:
        self._finalize_packet(packet)
        b = self._bucket(packet.send_time)
        self.delivered[b] += 1
        self.dps[b] += packet.keys_consumed_bits
        self.tps[b] += packet.keys_consumed_bits
        self.owd_sum[b] += delivery_time - packet.send_time
        self.owd_count[b] += 1

    def record_dropped(self, packet: DataPacket, reason: DropReason) -> None:
        self._finalize_packet(packet)
        self.tps[self._bucket(packet.send_time)] += packet.keys_consumed_bits
        self.drops[reason.value] += 1
        self.dropped_key_bits += packet.keys_consumed_bits

    def _finalize_packet(self, packet: DataPacket) -> None:
        if packet.finalized:
            raise SimulationIntegrityError(
                f"packet {packet.src}->{packet.dst} finalized twice"
            )
        packet.finalized = True

    def record_routing_bits(self, bits: int, now: float) -> None:
        self.routing_bits[self._bucket(now)] += bits

    def record_tick(self) -> None:
        self.tick_count += 1

    def exclude_inflight(self, packets: list[DataPacket]) -> int:
        """Remove in-flight packets from their send buckets; returns their
        total consumed key bits (for the global ledger audit)."""
        bits = 0
        for p in packets:
            self.sent[self._bucket(p.send_time)] -= 1
            bits += p.keys_consumed_bits
        return bits

    def totals(self) -> tuple[int, int, int, int]:
        return (sum(self.sent), sum(self.delivered), sum(self.dps), sum(self.tps))

    def check_conservation(self) -> None:
        """TPS must equal DPS plus keys consumed by dropped packets, exactly."""
        tps, dps = sum(self.tps), sum(self.dps)
        if tps != dps + self.dropped_key_bits:
            raise SimulationIntegrityError(
                f"key ledger violation: TPS={tps} != DPS={dps} + "
                f"dropped={self.dropped_key_bits}"
            )

    def timeseries_rows(self) -> list[list]:
        rows = []
        for b in range(self.n_buckets):
            sent = self.sent[b]
            pdr = self.delivered[b] / sent if sent > 0 else None
            owd = self.owd_sum[b] / self.owd_count[b] if self.owd_count[b] else None
            rows.append([
                float(b),
                sent,
                self.delivered[b],
                pdr,
                self.dps[b],
                self.tps[b],
                self.routing_bits[b],
                owd,
                self.owd_count[b],
            ])
        return rows
