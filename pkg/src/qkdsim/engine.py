"""Deterministic event queue and simulation clock.

Events fire in (time, insertion sequence) order, so simultaneous events run
FIFO. Scheduling into the past is a fatal integrity error.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .keypool import SimulationIntegrityError

# Event kinds (ints for cheap dispatch in the run loop).
EMIT_HELLO = 0
EMIT_TC = 1
DELIVER = 2
PACKET_ARRIVAL = 3
ROUTE_RECOMPUTE = 4
METRICS_TICK = 5

KIND_NAMES = {
    EMIT_HELLO: "EmitHello",
    EMIT_TC: "EmitTc",
    DELIVER: "DeliverMessage",
    PACKET_ARRIVAL: "PacketArrival",
    ROUTE_RECOMPUTE: "RouteRecompute",
    METRICS_TICK: "MetricsTick",
}


@dataclass(frozen=True)
class SimConfig:
    duration_s: float = 100.0
    seed: int = 1
    hello_interval_s: float = 2.0
    tc_interval_s: float = 5.0
    neighbor_hold_multiplier: int = 3
    per_hop_processing_delay_s: float = 1e-3
    fiber_speed_km_per_s: float = 2e5

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.hello_interval_s <= 0 or self.tc_interval_s <= 0:
            raise ValueError("message intervals must be positive")
        if self.neighbor_hold_multiplier < 2:
            raise ValueError("neighbor_hold_multiplier must be at least 2")

    @property
    def neighbor_hold_s(self) -> float:
        return self.neighbor_hold_multiplier * self.hello_interval_s


class EventQueue:
    """Priority queue of (fire_time, sequence, kind, payload) entries."""

    __slots__ = ("_heap", "_seq", "now")

    def __init__(self):
        self._heap: list[tuple[float, int, int, object]] = []
        self._seq = 0
        self.now = 0.0

    def schedule(self, fire_time: float, kind: int, payload: object = None) -> None:
        if fire_time < self.now:
            raise SimulationIntegrityError(
                f"event {KIND_NAMES.get(kind, kind)} scheduled at {fire_time} "
                f"before current time {self.now}"
            )
        heapq.heappush(self._heap, (fire_time, self._seq, kind, payload))
        self._seq += 1

    def pop(self):
        """Next event, advancing the clock. Returns None when empty."""
        if not self._heap:
            return None
        event = heapq.heappop(self._heap)
        if event[0] < self.now:
            raise SimulationIntegrityError("clock regression in event queue")
        self.now = event[0]
        return event

    def peek_time(self):
        return self._heap[0][0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)
