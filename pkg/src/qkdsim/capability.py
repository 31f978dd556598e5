"""Key-recovery-capability link metric and related path quantities.

These are the pure routing-metric primitives of the key-aware protocol:
sustainable working time of a draining link, the recovery capability of a
link (how fast its pool closes the gap to full, per second), and the
bottleneck capability of a multi-link path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

#: Denominator clamp, in bits, for links whose pool is (nearly) full.
FULL_POOL_EPSILON_BITS = 1000.0


@dataclass(frozen=True)
class LinkMetricInputs:
    """Snapshot of one link's key economy used by metric evaluation."""

    gen_rate_bps: float
    traffic_bps: float
    cur_bits: float
    max_bits: float
    min_bits: float = 0.0

    def __post_init__(self):
        if min(self.gen_rate_bps, self.traffic_bps, self.cur_bits, self.max_bits) < 0:
            raise ValueError("link metric inputs must be non-negative")
        if self.cur_bits > self.max_bits:
            raise ValueError(
                f"cur_bits {self.cur_bits} exceeds max_bits {self.max_bits}"
            )


def sustainable_working_time(m: LinkMetricInputs) -> float:
    """Seconds until the pool's spendable keys run out, or +inf.

    Infinite when generation keeps up with consumption. The spendable stock
    is the fill above the MIN reserve, not the raw fill.
    """
    if m.traffic_bps <= m.gen_rate_bps:
        return math.inf
    spendable = max(m.cur_bits - m.min_bits, 0.0)
    return spendable / (m.traffic_bps - m.gen_rate_bps)


def recovery_capability(m: LinkMetricInputs) -> float:
    """Net key surplus rate divided by the pool's remaining headroom (1/s).

    Positive values mean the pool is closing the gap to full; the larger the
    value, the faster the link recovers. A full pool with non-negative
    surplus recovers instantly (+inf); otherwise the headroom is clamped to
    FULL_POOL_EPSILON_BITS so near-full pools keep a finite, correctly
    ordered metric.
    """
    surplus = m.gen_rate_bps - m.traffic_bps
    headroom = m.max_bits - m.cur_bits
    if headroom <= 0 and surplus >= 0:
        return math.inf
    return surplus / max(headroom, FULL_POOL_EPSILON_BITS)


def path_capability(links: list[LinkMetricInputs] | list[float]) -> float:
    """Bottleneck (minimum) capability over the links of a path."""
    if not links:
        raise ValueError("path must contain at least one link")
    values = [
        l if isinstance(l, (int, float)) else recovery_capability(l) for l in links
    ]
    return min(values)
