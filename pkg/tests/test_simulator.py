import pytest

from ttagsim.cache import CacheGeometry
from ttagsim.schemes import SchemeConfig
from ttagsim.simulator import (
    compare_schemes, load_arrays, parse_m_range, run_many, RunRequest, simulate, sweep_split,
)
from ttagsim.workload import SyntheticSpec, TraceRangeError, write_trace, generate

SPECS = [
    SyntheticSpec("uniform", 30_000, seed=1, footprint_blocks=1 << 16),
    SyntheticSpec("zipfian", 30_000, seed=2, footprint_blocks=50_000, zipf_alpha=0.9),
    SyntheticSpec("working_set", 30_000, seed=3, footprint_blocks=1 << 20,
                  working_set_blocks=20_000, churn_rate=0.01),
]
SCHEMES = [SchemeConfig("baseline"), SchemeConfig("3rset", 3), SchemeConfig("3rset", 7),
           SchemeConfig("waypred")]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.generator)
@pytest.mark.parametrize("scheme", SCHEMES, ids=lambda s: s.label)
def test_engines_agree(spec, scheme):
    arrays = load_arrays(spec)
    py = simulate(arrays.records(), scheme=scheme, warmup=5000, engine="python")
    nb = simulate(arrays, scheme=scheme, warmup=5000, engine="compiled")
    assert py.metrics == nb.metrics
    assert py.cache.contents() == nb.cache.contents()
    assert py.cache.read_events_issued == nb.cache.read_events_issued


def test_trace_file_source(tmp_path):
    spec = SPECS[0]
    path = tmp_path / "t.trace"
    with open(path, "w") as fh:
        write_trace(generate(spec), fh)
    a = run_many([RunRequest(path, CacheGeometry(), SchemeConfig("3rset", 4))])[0]
    b = run_many([RunRequest(spec, CacheGeometry(), SchemeConfig("3rset", 4), engine="python")])[0]
    assert a == b


def test_warmup_excluded_from_counters():
    spec = SPECS[0]
    full = simulate(load_arrays(spec)).metrics
    warm = simulate(load_arrays(spec), warmup=10_000).metrics
    assert warm.total_accesses == full.total_accesses - 10_000
    # gap histograms span the whole run
    assert warm.tag_gaps == full.tag_gaps


def test_compiled_rejects_streaming_and_wide_addresses():
    with pytest.raises(ValueError):
        simulate(load_arrays(SPECS[0]), engine="compiled", on_outcome=print)
    with pytest.raises(ValueError):
        simulate([], engine="turbo")
    small = CacheGeometry(address_bits=20, cache_bytes=4096, associativity=4, block_bytes=64)
    with pytest.raises(TraceRangeError):
        simulate(load_arrays(SPECS[0]), geometry=small, engine="compiled")


def test_sweep_single_point_and_order():
    single = sweep_split(SPECS[0], m_range=range(4, 5))
    assert [r.split_bits for r in single.rows] == [4]
    full = sweep_split(SPECS[0], m_range=parse_m_range("1..10"))
    assert [r.split_bits for r in full.rows] == list(range(1, 11))
    assert full.rows[3] == single.rows[0]
    for row in full.rows:
        assert row.normalized == pytest.approx(row.total_bits_read / full.baseline.bits_read_total)


def test_sweep_parallel_matches_serial():
    a = sweep_split(SPECS[1], m_range=range(2, 6), jobs=1)
    b = sweep_split(SPECS[1], m_range=range(2, 6), jobs=2)
    assert a.rows == b.rows


def test_sweep_errors():
    with pytest.raises(ValueError):
        sweep_split(SPECS[0], m_range=[])
    with pytest.raises(ValueError):
        sweep_split(SPECS[0], m_range=[31])
    with pytest.raises(ValueError):
        sweep_split(SyntheticSpec(num_accesses=0), m_range=[4])


def test_parse_m_range():
    assert parse_m_range("1..10") == range(1, 11)
    assert parse_m_range("4") == range(4, 5)


def test_compare_needs_baseline():
    with pytest.raises(ValueError):
        compare_schemes(SPECS[0], [SchemeConfig("3rset"), SchemeConfig("waypred")])
    with pytest.raises(ValueError):
        compare_schemes(SPECS[0], [SchemeConfig("baseline")])
    runs = compare_schemes(SPECS[0], SCHEMES)
    assert [r.scheme for r in runs] == ["baseline", "3rset", "3rset", "waypred"]
    hits = {r.hits for r in runs}
    assert len(hits) == 1
