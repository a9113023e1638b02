"""Tag-access disciplines.

Each scheme maps one access onto the tag array to an ``AccessOutcome`` and
charges the tag cells it read to the cache's per-way counters. Schemes never
change lookup semantics: hit/miss and the matching way are the same for all
three, only the set of bits read differs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

from .cache import TagCache

BASELINE = "baseline"
THREE_RSET = "3rset"
WAY_PREDICTION = "waypred"
SCHEME_KINDS = (BASELINE, THREE_RSET, WAY_PREDICTION)

_ALIASES = {
    "baseline": BASELINE,
    "3rset": THREE_RSET,
    "three_rset": THREE_RSET,
    "waypred": WAY_PREDICTION,
    "way_prediction": WAY_PREDICTION,
}


class AccessOutcome(NamedTuple):
    hit: bool
    way: Optional[int]
    partial_match_count: int  # 3RSeT only; 0 for the other schemes
    predicted_correct: bool  # way prediction only
    bits_read_step1: int
    bits_read_step2: int
    bits_compared: int
    valid_ways: int

    @property
    def bits_read(self) -> int:
        return self.bits_read_step1 + self.bits_read_step2


@dataclass(frozen=True)
class SchemeConfig:
    kind: str = BASELINE
    split_bits: int = 4

    def __post_init__(self) -> None:
        kind = _ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown scheme {self.kind!r}; expected one of {SCHEME_KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == THREE_RSET and self.split_bits < 1:
            raise ValueError("split_bits must be >= 1")

    @property
    def label(self) -> str:
        if self.kind == THREE_RSET:
            return f"3rset({self.split_bits})"
        return self.kind


class BaselineScheme:
    """Read and compare every valid way in full."""

    kind = BASELINE

    def __init__(self, tag_bits: int) -> None:
        self.tag_bits = tag_bits

    def access(self, cache: TagCache, set_index: int, tag: int) -> AccessOutcome:
        cset = cache.sets[set_index]
        ways = cset.ways
        order = cset.order
        way = None
        for w in order:
            if ways[w].tag == tag:
                way = w
                break
        cache.record_reads(set_index, full=order)
        bits = len(order) * self.tag_bits
        return AccessOutcome(way is not None, way, 0, False, bits, 0, bits, len(order))

    def after_access(self, cache: TagCache, set_index: int, way: int) -> None:
        pass


class ThreeRSetScheme:
    """Two-step selective comparison.

    Step one reads the low ``split_bits`` of every valid way. Only ways whose
    low bits equal the incoming tag's stay enabled; step two reads their
    remaining high bits.
    """

    kind = THREE_RSET

    def __init__(self, tag_bits: int, split_bits: int = 4) -> None:
        if not 1 <= split_bits < tag_bits:
            raise ValueError(f"split_bits must be in [1, {tag_bits - 1}], got {split_bits}")
        self.tag_bits = tag_bits
        self.split_bits = split_bits
        self.low_mask = (1 << split_bits) - 1

    def access(self, cache: TagCache, set_index: int, tag: int) -> AccessOutcome:
        cset = cache.sets[set_index]
        ways = cset.ways
        order = cset.order
        mask = self.low_mask
        low = tag & mask
        matched = [w for w in order if ways[w].tag & mask == low]
        way = None
        for w in matched:
            if ways[w].tag == tag:
                way = w
                break
        cache.record_reads(set_index, low=order, high=matched)
        s = len(matched)
        v = len(order)
        step1 = v * self.split_bits
        step2 = s * (self.tag_bits - self.split_bits)
        return AccessOutcome(way is not None, way, s, False, step1, step2, step1 + step2, v)

    def after_access(self, cache: TagCache, set_index: int, way: int) -> None:
        pass


class WayPredictionScheme:
    """MRU way prediction.

    The predicted way is read first. On a mismatch (or a cold set with no
    prediction) every valid way is read again, the predicted one included.
    """

    kind = WAY_PREDICTION

    def __init__(self, tag_bits: int) -> None:
        self.tag_bits = tag_bits

    def access(self, cache: TagCache, set_index: int, tag: int) -> AccessOutcome:
        n = self.tag_bits
        cset = cache.sets[set_index]
        ways = cset.ways
        order = cset.order
        v = len(order)
        predicted = cache.predicted_way[set_index]
        if predicted is not None and ways[predicted].tag == tag:
            cache.record_reads(set_index, full=(predicted,))
            return AccessOutcome(True, predicted, 0, True, n, 0, n, v)

        way = None
        for w in order:
            if ways[w].tag == tag:
                way = w
                break
        if predicted is None:
            cache.record_reads(set_index, full=order)
            step1 = 0
        else:
            cache.record_reads(set_index, full=[predicted, *order])
            step1 = n
        step2 = v * n
        return AccessOutcome(way is not None, way, 0, False, step1, step2, step1 + step2, v)

    def after_access(self, cache: TagCache, set_index: int, way: int) -> None:
        cache.predicted_way[set_index] = way


def make_scheme(config: SchemeConfig, tag_bits: int):
    if config.kind == BASELINE:
        return BaselineScheme(tag_bits)
    if config.kind == THREE_RSET:
        return ThreeRSetScheme(tag_bits, config.split_bits)
    return WayPredictionScheme(tag_bits)
