"""Compiled replay loop over flat state arrays.

Mirrors ``TagCache`` plus the three schemes access for access; the object
engine in ``simulator.simulate`` stays the reference and the test suite
checks the two agree on every counter, histogram and final cache content.
"""
from __future__ import annotations

import numpy as np
from numba import njit

KIND_BASELINE = 0
KIND_THREE_RSET = 1
KIND_WAY_PREDICTION = 2

# slots of the ``counters`` output array
(
    C_TOTAL, C_HITS, C_MISSES, C_READS, C_WRITES,
    C_BITS, C_BITS1, C_BITS2, C_BITS_HIT, C_BITS_MISS, C_COMPARED,
    C_PM_HIT, C_PM_MISS, C_PRED_OK, C_VALID_SUM, C_EVENTS,
) = range(16)
NUM_COUNTERS = 16


class KernelState:
    """Flat tag-array state for ``num_sets`` sets of ``k`` ways."""

    def __init__(self, num_sets: int, k: int) -> None:
        self.tags = np.zeros((num_sets, k), dtype=np.int64)
        self.nvalid = np.zeros(num_sets, dtype=np.int64)
        self.order = np.zeros((num_sets, k), dtype=np.int64)
        self.reads_low = np.zeros((num_sets, k), dtype=np.int64)
        self.reads_high = np.zeros((num_sets, k), dtype=np.int64)
        self.reads_full = np.zeros((num_sets, k), dtype=np.int64)
        self.data_reads = np.zeros((num_sets, k), dtype=np.int64)
        self.predicted = np.full(num_sets, -1, dtype=np.int64)


@njit(cache=True)
def _replay(kind, tag_bits, split_bits, offset_bits, set_mask, tag_shift, k,
            addresses, is_write, warmup,
            tags, nvalid, order, reads_low, reads_high, reads_full, data_reads, predicted,
            counters, tag_gaps, data_gaps):
    n = tag_bits
    low_mask = (1 << split_bits) - 1
    n_tag_gaps = 0
    n_data_gaps = 0
    for i in range(addresses.shape[0]):
        address = addresses[i]
        tag = address >> tag_shift
        s_idx = (address >> offset_bits) & set_mask
        v = nvalid[s_idx]

        way = -1
        for p in range(v):
            w = order[s_idx, p]
            if tags[s_idx, w] == tag:
                way = w
                break

        s = 0
        correct = False
        step1 = 0
        step2 = 0
        if kind == KIND_BASELINE:
            for p in range(v):
                reads_full[s_idx, order[s_idx, p]] += 1
            counters[C_EVENTS] += v
            step1 = v * n
        elif kind == KIND_THREE_RSET:
            low = tag & low_mask
            for p in range(v):
                w = order[s_idx, p]
                reads_low[s_idx, w] += 1
                if tags[s_idx, w] & low_mask == low:
                    reads_high[s_idx, w] += 1
                    s += 1
            counters[C_EVENTS] += v
            step1 = v * split_bits
            step2 = s * (n - split_bits)
        else:
            pw = predicted[s_idx]
            if pw >= 0 and tags[s_idx, pw] == tag:
                reads_full[s_idx, pw] += 1
                counters[C_EVENTS] += 1
                correct = True
                step1 = n
            else:
                if pw >= 0:
                    reads_full[s_idx, pw] += 1
                    counters[C_EVENTS] += 1
                    step1 = n
                for p in range(v):
                    reads_full[s_idx, order[s_idx, p]] += 1
                counters[C_EVENTS] += v
                step2 = v * n

        # recency / replacement
        if way >= 0:
            pos = 0
            while order[s_idx, pos] != way:
                pos += 1
            for p in range(pos, 0, -1):
                order[s_idx, p] = order[s_idx, p - 1]
            order[s_idx, 0] = way
            if is_write[i]:
                data_gaps[n_data_gaps] = data_reads[s_idx, way]
                n_data_gaps += 1
                data_reads[s_idx, way] = 0
            else:
                data_reads[s_idx, way] += 1
            filled = way
        else:
            if v < k:
                victim = v
                last = v
                nvalid[s_idx] = v + 1
            else:
                victim = order[s_idx, k - 1]
                last = k - 1
                tag_gaps[n_tag_gaps] = reads_low[s_idx, victim] + reads_full[s_idx, victim]
                n_tag_gaps += 1
                data_gaps[n_data_gaps] = data_reads[s_idx, victim]
                n_data_gaps += 1
            for p in range(last, 0, -1):
                order[s_idx, p] = order[s_idx, p - 1]
            order[s_idx, 0] = victim
            tags[s_idx, victim] = tag
            reads_low[s_idx, victim] = 0
            reads_high[s_idx, victim] = 0
            reads_full[s_idx, victim] = 0
            data_reads[s_idx, victim] = 0
            filled = victim
        if kind == KIND_WAY_PREDICTION:
            predicted[s_idx] = filled

        if i < warmup:
            continue
        bits = step1 + step2
        counters[C_TOTAL] += 1
        if is_write[i]:
            counters[C_WRITES] += 1
        else:
            counters[C_READS] += 1
        counters[C_BITS] += bits
        counters[C_BITS1] += step1
        counters[C_BITS2] += step2
        counters[C_COMPARED] += bits
        counters[C_VALID_SUM] += v
        if way >= 0:
            counters[C_HITS] += 1
            counters[C_BITS_HIT] += bits
            counters[C_PM_HIT] += s
        else:
            counters[C_MISSES] += 1
            counters[C_BITS_MISS] += bits
            counters[C_PM_MISS] += s
        if correct:
            counters[C_PRED_OK] += 1
    return n_tag_gaps, n_data_gaps


def replay(kind: int, tag_bits: int, split_bits: int, offset_bits: int, num_sets: int,
           index_bits: int, k: int, addresses: np.ndarray, is_write: np.ndarray,
           warmup: int, state: KernelState):
    """Run the compiled loop; returns ``(counters, tag_gaps, data_gaps)``."""
    counters = np.zeros(NUM_COUNTERS, dtype=np.int64)
    tag_gaps = np.empty(len(addresses), dtype=np.int64)
    data_gaps = np.empty(len(addresses), dtype=np.int64)
    n_tag, n_data = _replay(
        kind, tag_bits, split_bits, offset_bits, num_sets - 1, offset_bits + index_bits, k,
        addresses, is_write, warmup,
        state.tags, state.nvalid, state.order, state.reads_low, state.reads_high,
        state.reads_full, state.data_reads, state.predicted,
        counters, tag_gaps, data_gaps,
    )
    return counters, tag_gaps[:n_tag], data_gaps[:n_data]
