"""Per-link quantum key pools: thresholds, lazy accrual, and consumption."""

from __future__ import annotations

import enum


class SimulationIntegrityError(RuntimeError):
    """Fatal violation of simulation invariants (time regression, double
    finalization, scheduling into the past)."""


class PoolState(enum.Enum):
    READY = "ready"
    WARNING = "warning"
    UNAVAILABLE = "unavailable"


class KeyPool:
    """Mutable key inventory of one undirected link.

    Both link directions draw from the same pool. Key generation is
    continuous at ``gen_rate_bps`` and materialized lazily whenever the pool
    is observed; bits generated while the pool sits at ``max_bits`` are
    discarded and tallied in ``wasted_bits``. ``min_bits`` is an
    authentication reserve that no consumption may cross.
    """

    __slots__ = (
        "cur_bits",
        "min_bits",
        "warn_bits",
        "max_bits",
        "gen_rate_bps",
        "last_accrual_time",
        "wasted_bits",
        "consumed_bits",
        "band_bits",
    )

    def __init__(
        self,
        cur_bits: float,
        min_bits: float,
        warn_bits: float,
        max_bits: float,
        gen_rate_bps: float,
        now: float = 0.0,
    ):
        if not (0 <= min_bits < warn_bits < max_bits):
            raise ValueError(
                f"thresholds must satisfy 0 <= MIN < WARN < MAX, got "
                f"{min_bits}/{warn_bits}/{max_bits}"
            )
        if not (0 <= cur_bits <= max_bits):
            raise ValueError(f"initial fill {cur_bits} outside [0, {max_bits}]")
        if gen_rate_bps <= 0:
            raise ValueError("key generation rate must be positive")
        self.cur_bits = float(cur_bits)
        self.min_bits = float(min_bits)
        self.warn_bits = float(warn_bits)
        self.max_bits = float(max_bits)
        self.gen_rate_bps = float(gen_rate_bps)
        self.last_accrual_time = float(now)
        self.wasted_bits = 0.0  # generation discarded at the MAX cap
        self.consumed_bits = 0.0  # lifetime successful draws
        self.band_bits = 0.0  # draws that left the pool below WARN

    def accrue(self, now: float) -> None:
        """Materialize key generation up to ``now``, clamping at MAX."""
        if now < self.last_accrual_time:
            raise SimulationIntegrityError(
                f"accrual time regression: {now} < {self.last_accrual_time}"
            )
        generated = self.gen_rate_bps * (now - self.last_accrual_time)
        room = self.max_bits - self.cur_bits
        if generated > room:
            self.wasted_bits += generated - room
            self.cur_bits = self.max_bits
        else:
            self.cur_bits += generated
        self.last_accrual_time = now

    def consume(self, bits: float, now: float) -> bool:
        """Draw ``bits`` whole key bits, all-or-nothing above the MIN floor.

        Returns True (consumed) or False (insufficient, pool untouched).
        """
        if bits <= 0:
            raise ValueError(f"consumption must be positive, got {bits}")
        self.accrue(now)
        remaining = self.cur_bits - bits
        if remaining < self.min_bits:
            return False
        self.cur_bits = remaining
        self.consumed_bits += bits
        if remaining < self.warn_bits:
            self.band_bits += bits
        return True

    def state(self, now: float) -> PoolState:
        """Pool state after accrual. cur == WARN is READY, cur == MIN is WARNING."""
        self.accrue(now)
        return self.state_of(self.cur_bits)

    def state_of(self, cur: float) -> PoolState:
        if cur >= self.warn_bits:
            return PoolState.READY
        if cur >= self.min_bits:
            return PoolState.WARNING
        return PoolState.UNAVAILABLE

    def peek(self, now: float) -> float:
        """Current fill after accrual at ``now``."""
        self.accrue(now)
        return self.cur_bits
