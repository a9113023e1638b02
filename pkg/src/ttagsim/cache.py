"""Set-associative tag array with LRU replacement and read-gap bookkeeping.

Only tags and per-way counters are stored. The data array is shadowed by a
per-block "reads since last write" counter so that tag and data read gaps can
be compared.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence


class GeometryError(ValueError):
    pass


def _is_pow2(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


@dataclass(frozen=True)
class CacheGeometry:
    """Cache shape. Defaults are a 1 MiB, 8-way, 64 B-block cache on 48-bit addresses."""

    address_bits: int = 48
    cache_bytes: int = 1 << 20
    associativity: int = 8
    block_bytes: int = 64

    def __post_init__(self) -> None:
        for name in ("cache_bytes", "associativity", "block_bytes"):
            if not _is_pow2(getattr(self, name)):
                raise GeometryError(f"{name} must be a power of two")
        if self.cache_bytes % (self.block_bytes * self.associativity):
            raise GeometryError("cache_bytes must be divisible by block_bytes * associativity")
        if self.tag_bits < 1:
            raise GeometryError("address too narrow for this cache: no tag bits left")

    @property
    def offset_bits(self) -> int:
        return self.block_bytes.bit_length() - 1

    @property
    def num_sets(self) -> int:
        return self.cache_bytes // (self.block_bytes * self.associativity)

    @property
    def index_bits(self) -> int:
        return self.num_sets.bit_length() - 1

    @property
    def tag_bits(self) -> int:
        return self.address_bits - self.index_bits - self.offset_bits


def decompose(address: int, geometry: CacheGeometry) -> tuple[int, int, int]:
    """Split an address into ``(tag, set_index, offset)``."""
    if not 0 <= address < (1 << geometry.address_bits):
        raise ValueError(
            f"address {address:#x} does not fit in {geometry.address_bits} bits"
        )
    offset = address & (geometry.block_bytes - 1)
    set_index = (address >> geometry.offset_bits) & (geometry.num_sets - 1)
    tag = address >> (geometry.offset_bits + geometry.index_bits)
    return tag, set_index, offset


def compose(tag: int, set_index: int, offset: int, geometry: CacheGeometry) -> int:
    return (
        (tag << (geometry.index_bits + geometry.offset_bits))
        | (set_index << geometry.offset_bits)
        | offset
    )


@dataclass(slots=True)
class TagWayState:
    """One tag way plus the shadow counter of its data block."""

    tag: int = 0
    valid: bool = False
    reads_low: int = 0
    reads_high: int = 0
    reads_full: int = 0
    data_reads: int = 0

    @property
    def read_events(self) -> int:
        """Reads seen by the most-read cell of the way since its last write."""
        # high-segment reads never outnumber low-segment ones
        return self.reads_low + self.reads_full

    def rewrite(self, tag: int) -> None:
        self.tag = tag
        self.valid = True
        self.reads_low = self.reads_high = self.reads_full = self.data_reads = 0


class LookupResult(NamedTuple):
    hit: bool
    way: Optional[int]
    ways_valid: int  # bitmask, bit i set when way i is valid


class Victim(NamedTuple):
    way: int
    evicted_tag: Optional[int]


@dataclass
class GapRecorder:
    """Exact sparse histograms of reads between consecutive writes.

    Gaps still open at the end of a run go to the ``censored_*`` maps.
    """

    tag: Counter = field(default_factory=Counter)
    data: Counter = field(default_factory=Counter)
    censored_tag: Counter = field(default_factory=Counter)
    censored_data: Counter = field(default_factory=Counter)


class CacheSet:
    __slots__ = ("ways", "order")

    def __init__(self, associativity: int) -> None:
        self.ways = [TagWayState() for _ in range(associativity)]
        # valid way indices, most recently used first
        self.order: list[int] = []

    def recency_rank(self, way: int) -> Optional[int]:
        try:
            return self.order.index(way)
        except ValueError:
            return None

    @property
    def mru_way(self) -> Optional[int]:
        return self.order[0] if self.order else None


class TagCache:
    """Tag array state machine for one cache level."""

    def __init__(self, geometry: CacheGeometry) -> None:
        self.geometry = geometry
        self.sets = [CacheSet(geometry.associativity) for _ in range(geometry.num_sets)]
        self.gaps = GapRecorder()
        self.read_events_issued = 0
        # MRU way predictor, one slot per set (None until the set sees a fill)
        self.predicted_way: list[Optional[int]] = [None] * geometry.num_sets

    def lookup(self, set_index: int, tag: int) -> LookupResult:
        cset = self.sets[set_index]
        mask = 0
        way = None
        for w in cset.order:
            mask |= 1 << w
            if cset.ways[w].tag == tag:
                way = w
        return LookupResult(way is not None, way, mask)

    def touch_and_fill(
        self, set_index: int, tag: int, is_hit: bool, way: Optional[int] = None
    ) -> Optional[Victim]:
        """Update recency on a hit, or install ``tag`` on a miss.

        Returns the victim on a miss. The victim is the first invalid way, or
        the LRU way when the set is full.
        """
        cset = self.sets[set_index]
        order = cset.order
        if is_hit:
            if order[0] != way:
                order.remove(way)
                order.insert(0, way)
            return None

        ways = cset.ways
        if len(order) < len(ways):
            # valid ways always occupy the lowest indices, so the next free
            # way is the lowest-index invalid one
            victim = len(order)
            evicted = None
        else:
            victim = order.pop()
            state = ways[victim]
            evicted = state.tag
            tag_gaps = self.gaps.tag
            data_gaps = self.gaps.data
            gap = state.reads_low + state.reads_full
            tag_gaps[gap] = tag_gaps.get(gap, 0) + 1
            data_gaps[state.data_reads] = data_gaps.get(state.data_reads, 0) + 1
        order.insert(0, victim)
        ways[victim].rewrite(tag)
        return Victim(victim, evicted)

    def record_reads(
        self,
        set_index: int,
        low: Sequence[int] = (),
        high: Sequence[int] = (),
        full: Sequence[int] = (),
    ) -> None:
        """Charge tag reads to ways.

        ``low`` lists ways whose low segment was read in this access and
        ``high`` those whose high segment was then read; a high segment is only
        ever read behind its own low segment, so ``high`` must be a subset of
        ``low``. ``full`` lists whole-way reads and may repeat a way.
        """
        cset = self.sets[set_index]
        ways = cset.ways
        nvalid = len(cset.order)
        if len(high) > len(low):
            raise AssertionError("high-segment reads without matching low-segment reads")
        # valid ways are exactly 0..nvalid-1
        if (low and max(low) >= nvalid) or (full and max(full) >= nvalid):
            raise AssertionError(f"read charged to an invalid way of set {set_index}")
        for w in low:
            ways[w].reads_low += 1
        for w in high:
            ways[w].reads_high += 1
        for w in full:
            ways[w].reads_full += 1
        self.read_events_issued += len(low) + len(full)

    def data_read(self, set_index: int, way: int) -> None:
        self.sets[set_index].ways[way].data_reads += 1

    def data_write(self, set_index: int, way: int) -> None:
        state = self.sets[set_index].ways[way]
        data_gaps = self.gaps.data
        data_gaps[state.data_reads] = data_gaps.get(state.data_reads, 0) + 1
        state.data_reads = 0

    def open_read_events(self) -> int:
        return sum(w.read_events for s in self.sets for w in s.ways if w.valid)

    def finalize(self) -> None:
        """Move every still-open gap of resident lines to the censored histograms."""
        for cset in self.sets:
            for w in cset.order:
                state = cset.ways[w]
                self.gaps.censored_tag[state.read_events] += 1
                self.gaps.censored_data[state.data_reads] += 1
                state.reads_low = state.reads_high = state.reads_full = 0
                state.data_reads = 0

    def check_invariants(self) -> None:
        for i, cset in enumerate(self.sets):
            order = cset.order
            if len(set(order)) != len(order):
                raise AssertionError(f"set {i}: duplicate recency entries")
            if sorted(order) != list(range(len(order))):
                raise AssertionError(f"set {i}: valid ways are not a prefix")
            tags = [cset.ways[w].tag for w in order]
            if len(set(tags)) != len(tags):
                raise AssertionError(f"set {i}: duplicate tag")
            for w, state in enumerate(cset.ways):
                if state.valid != (w in order):
                    raise AssertionError(f"set {i}: valid flag of way {w} out of sync")

    def contents(self) -> list[tuple[int, ...]]:
        """Per-set tuple of resident tags by way index (``-1`` for invalid)."""
        return [
            tuple(w.tag if w.valid else -1 for w in s.ways) for s in self.sets
        ]
