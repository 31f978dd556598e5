"""Wire records exchanged by the protocols and their size accounting.

Sizes are definitional for key-consumption accounting: a fixed header per
message, a fixed cost per advertised neighbor or selector, and a fixed cost
per piggybacked key-state advertisement. ``encode()`` gives the canonical
text form fed into the run's event-trace hash.
"""

from __future__ import annotations

from enum import IntEnum

HELLO_HEADER_BITS = 128
TC_HEADER_BITS = 128
PER_NEIGHBOR_BITS = 32
PER_SELECTOR_BITS = 32
KEY_STATE_AD_BITS = 128


class LinkCode(IntEnum):
    HEARD = 0
    SYM = 1
    MPR = 2


class KeyStateAd:
    """Advertised key economy of one link at emission time."""

    __slots__ = ("u", "v", "cur_bits", "max_bits", "gen_rate_bps",
                 "consumption_bps", "stamp")

    def __init__(self, u, v, cur_bits, max_bits, gen_rate_bps,
                 consumption_bps, stamp):
        if consumption_bps < 0:
            raise ValueError("measured consumption must be non-negative")
        if cur_bits > max_bits:
            raise ValueError("advertised fill exceeds pool maximum")
        self.u = u
        self.v = v
        self.cur_bits = cur_bits
        self.max_bits = max_bits
        self.gen_rate_bps = gen_rate_bps
        self.consumption_bps = consumption_bps
        self.stamp = stamp

    def encode(self) -> str:
        return (f"ad:{self.u}-{self.v}:{self.cur_bits!r}:{self.max_bits!r}"
                f":{self.gen_rate_bps!r}:{self.consumption_bps!r}:{self.stamp!r}")


class HelloMessage:
    """Per-link neighbor advertisement with the emitting link's key state."""

    __slots__ = ("originator", "neighbors", "ad", "size_bits")

    def __init__(self, originator: int, neighbors: tuple, ad: KeyStateAd):
        self.originator = originator
        self.neighbors = neighbors  # tuple of (neighbor_id, LinkCode)
        self.ad = ad
        self.size_bits = (HELLO_HEADER_BITS
                          + PER_NEIGHBOR_BITS * len(neighbors)
                          + KEY_STATE_AD_BITS)

    def encode(self) -> str:
        nbrs = ",".join(f"{n}/{int(c)}" for n, c in self.neighbors)
        return f"hello:{self.originator}:[{nbrs}]:{self.ad.encode()}"


class TcMessage:
    """Topology-control flood: the originator's MPR selectors plus key-state
    advertisements for every link incident to the originator."""

    __slots__ = ("originator", "ansn", "selectors", "ads", "size_bits")

    def __init__(self, originator: int, ansn: int, selectors: tuple,
                 ads: tuple):
        self.originator = originator
        self.ansn = ansn
        self.selectors = selectors
        self.ads = ads
        self.size_bits = (TC_HEADER_BITS
                          + PER_SELECTOR_BITS * len(selectors)
                          + KEY_STATE_AD_BITS * len(ads))

    def encode(self) -> str:
        sels = ",".join(str(s) for s in self.selectors)
        ads = ";".join(a.encode() for a in self.ads)
        return f"tc:{self.originator}:{self.ansn}:[{sels}]:[{ads}]"


class DataPacket:
    """Simulated data unit with its per-hop key-consumption ledger."""

    __slots__ = ("src", "dst", "size_bits", "send_time", "hops",
                 "keys_consumed_bits", "finalized")

    def __init__(self, src: int, dst: int, size_bits: int, send_time: float):
        self.src = src
        self.dst = dst
        self.size_bits = size_bits
        self.send_time = send_time
        self.hops = 0
        self.keys_consumed_bits = 0
        self.finalized = False

    def encode(self) -> str:
        return (f"data:{self.src}>{self.dst}:{self.send_time!r}"
                f":{self.hops}:{self.keys_consumed_bits}")
