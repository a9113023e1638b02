"""Independent reference models used as test oracles.

Deliberately written without any ttagsim internals.
"""
from collections import Counter, OrderedDict

import mpmath


class ReferenceLRU:
    """Set-associative LRU cache: per set an OrderedDict tag -> way, LRU first."""

    def __init__(self, num_sets, ways):
        self.ways = ways
        self.sets = [OrderedDict() for _ in range(num_sets)]

    def access(self, set_index, tag):
        """Returns (hit, way, evicted_tag)."""
        entries = self.sets[set_index]
        if tag in entries:
            entries.move_to_end(tag)
            return True, entries[tag], None
        evicted = None
        if len(entries) < self.ways:
            way = len(entries)
        else:
            evicted, way = entries.popitem(last=False)
        entries[tag] = way
        return False, way, evicted

    def valid_ways(self, set_index):
        return sorted(self.sets[set_index].values())

    def contents(self):
        out = []
        for entries in self.sets:
            row = [-1] * self.ways
            for tag, way in entries.items():
                row[way] = tag
            out.append(tuple(row))
        return out


def split(address, offset_bits, index_bits):
    return address >> (offset_bits + index_bits), (address >> offset_bits) & ((1 << index_bits) - 1)


def brute_force_gaps(trace, num_sets, ways, offset_bits, index_bits, reads_per_access):
    """Replay with full per-block event logs, then derive gap histograms.

    ``reads_per_access(valid_ways, hit_way, predicted_way)`` returns a dict
    way -> number of tag reads charged to that way by one access.
    Returns (tag_gaps, data_gaps, censored_tag, censored_data, total_tag_reads).
    """
    lru = ReferenceLRU(num_sets, ways)
    tag_log = {}
    data_log = {}
    predicted = {}
    total = 0
    for op, address in trace:
        tag, s = split(address, offset_bits, index_bits)
        valid = lru.valid_ways(s)
        hit_way = lru.sets[s].get(tag)
        for way, count in reads_per_access(valid, hit_way, predicted.get(s)).items():
            tag_log.setdefault((s, way), []).extend("r" * count)
            total += count
        hit, way, _ = lru.access(s, tag)
        if hit:
            data_log.setdefault((s, way), []).append("w" if op == "W" else "r")
        else:
            tag_log.setdefault((s, way), []).append("f")
            data_log.setdefault((s, way), []).append("f")
        predicted[s] = way

    def gaps(logs):
        closed, censored = Counter(), Counter()
        for events in logs.values():
            run = None
            for e in events:
                if e == "r":
                    run += 1
                else:
                    if run is not None:
                        closed[run] += 1
                    run = 0
            if run is not None:
                censored[run] += 1
        return closed, censored

    tag_closed, tag_censored = gaps(tag_log)
    data_closed, data_censored = gaps({k: [e for e in v] for k, v in data_log.items()})
    return tag_closed, data_closed, tag_censored, data_censored, total


def baseline_reads(valid, hit_way, predicted):
    return {w: 1 for w in valid}


def way_prediction_reads(valid, hit_way, predicted):
    if predicted is not None and predicted == hit_way:
        return {predicted: 1}
    reads = {w: 1 for w in valid}
    if predicted is not None:
        reads[predicted] += 1
    return reads


def expected_partial_matches(k, m):
    """Mean s on hit and miss for independent uniform tags."""
    return 1 + (k - 1) / 2 ** m, k / 2 ** m


def f_bits(m, k=8, n=31):
    """Expected bits read per access with k uniform-random resident tags."""
    return k * m + (k / 2 ** m) * (n - m)


# Extended-precision evaluations of the cell error models, written directly
# from the closed forms with mpmath (no shared code with the package).
_MP_DPS = 50


def mp_thermal_stability(e_b, temperature):
    with mpmath.workdps(_MP_DPS):
        return mpmath.mpf(e_b) / (mpmath.mpf("1.380649e-23") * mpmath.mpf(temperature))


def mp_read_disturbance(tau, t_read, delta, i_read, i_c0):
    m = mpmath.mpf
    with mpmath.workdps(_MP_DPS):
        mean_time = m(tau) * mpmath.exp(m(delta) * (1 - m(i_read) / m(i_c0)))
        return 1 - mpmath.exp(-m(t_read) / mean_time)


def mp_write_failure(t_write, i_write, i_c0, delta, polarization, moment):
    m = mpmath.mpf
    with mpmath.workdps(_MP_DPS):
        mu_b = m("9.2740100783e-24")
        charge = m("1.602176634e-19")
        p = m(polarization)
        num = 2 * mu_b * p * (m(i_write) - m(i_c0))
        den = (mpmath.euler + mpmath.log(mpmath.pi ** 2 * m(delta) / 4)) * charge * m(moment) * (1 + p ** 2)
        return mpmath.exp(-m(t_write) * num / den)


def mp_retention(idle_time, delta):
    m = mpmath.mpf
    with mpmath.workdps(_MP_DPS):
        return 1 - mpmath.exp(-m(idle_time) * mpmath.exp(-m(delta)))


def mp_n_reads(p, n):
    with mpmath.workdps(_MP_DPS):
        return 1 - (1 - mpmath.mpf(p)) ** n
