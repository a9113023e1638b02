"""Memory access traces: text trace I/O and seeded synthetic generators.

Trace format, one record per line::

    R 0x7ffe12c0
    W 1f40        # hex, optional 0x prefix, either digit case

``#`` starts a comment, blank lines are skipped, LF and CRLF both work.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, NamedTuple

import numpy as np

READ = "R"
WRITE = "W"
GENERATORS = ("uniform", "strided", "zipfian", "working_set")
_CHUNK = 1 << 16
_HEX = re.compile(r"(?:0[xX])?([0-9a-fA-F]+)")


class TraceError(ValueError):
    """Malformed trace input."""


class TraceRangeError(TraceError):
    """Address wider than the configured address bus."""


class TraceRecord(NamedTuple):
    op: str  # READ or WRITE
    address: int


def parse_trace(stream: Iterable[str], address_bits: int = 48) -> Iterator[TraceRecord]:
    """Yield records from a text trace, one line at a time."""
    limit = 1 << address_bits
    for lineno, raw in enumerate(stream, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in (READ, WRITE):
            raise TraceError(f"line {lineno}: expected 'R <hex>' or 'W <hex>', got {raw.rstrip()!r}")
        match = _HEX.fullmatch(parts[1])
        if match is None:
            raise TraceError(f"line {lineno}: bad hex address {parts[1]!r}")
        address = int(match.group(1), 16)
        if address >= limit:
            raise TraceRangeError(
                f"line {lineno}: address {parts[1]} exceeds {address_bits} address bits"
            )
        yield TraceRecord(parts[0], address)


def format_record(record: TraceRecord) -> str:
    return f"{record.op} {record.address:#x}"


def write_trace(records: Iterable[TraceRecord], stream: IO[str], header: str | None = None) -> int:
    """Serialize records; returns the number written."""
    if header:
        for line in header.splitlines():
            stream.write(f"# {line}\n")
    count = 0
    for record in records:
        stream.write(f"{record.op} {record.address:#x}\n")
        count += 1
    return count


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a synthetic trace.

    ``footprint_blocks`` is the address range (uniform, strided) or the number
    of distinct blocks (zipfian) in cache blocks. Zipfian blocks are scattered
    over the whole address space so their tags are effectively random.
    ``repeat`` makes the strided walk touch each block that many times in a row.
    """

    generator: str = "uniform"
    num_accesses: int = 100_000
    read_fraction: float = 0.7
    seed: int = 0
    footprint_blocks: int = 1 << 21
    base_block: int = 0
    stride: int = 1
    repeat: int = 1
    zipf_alpha: float = 1.0
    working_set_blocks: int = 4096
    churn_rate: float = 0.001
    address_bits: int = 48
    block_bytes: int = 64

    def __post_init__(self) -> None:
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}; expected one of {GENERATORS}")
        if self.num_accesses < 0:
            raise ValueError("num_accesses must be non-negative")
        if not 0.0 <= self.read_fraction <= 1.0:
            raise ValueError("read_fraction must lie in [0, 1]")
        if self.footprint_blocks < 1 or self.stride < 1 or self.repeat < 1:
            raise ValueError("footprint_blocks, stride and repeat must be >= 1")
        if self.zipf_alpha < 0:
            raise ValueError("zipf_alpha must be non-negative")
        if self.working_set_blocks < 1 or not 0.0 <= self.churn_rate <= 1.0:
            raise ValueError("working_set_blocks must be >= 1 and churn_rate in [0, 1]")
        if self.block_bytes < 1 or self.block_bytes & (self.block_bytes - 1):
            raise ValueError("block_bytes must be a power of two")
        if self.generator in ("uniform", "strided", "working_set"):
            if self.base_block + self.footprint_blocks > self.address_blocks:
                raise ValueError("footprint exceeds the address space")
        elif self.footprint_blocks > self.address_blocks:
            raise ValueError("more zipfian blocks than the address space holds")

    @property
    def offset_bits(self) -> int:
        return self.block_bytes.bit_length() - 1

    @property
    def address_blocks(self) -> int:
        return 1 << (self.address_bits - self.offset_bits)


def zipf_cdf(num_blocks: int, alpha: float) -> np.ndarray:
    weights = np.arange(1, num_blocks + 1, dtype=float) ** -alpha
    cdf = np.cumsum(weights)
    return cdf / cdf[-1]


def _block_chunks(spec: SyntheticSpec, rng: np.random.Generator) -> Iterator[np.ndarray]:
    total = spec.num_accesses
    if spec.generator == "uniform":
        for start in range(0, total, _CHUNK):
            size = min(_CHUNK, total - start)
            yield spec.base_block + rng.integers(0, spec.footprint_blocks, size)
    elif spec.generator == "strided":
        for start in range(0, total, _CHUNK):
            idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64) // spec.repeat
            yield spec.base_block + (idx * spec.stride) % spec.footprint_blocks
    elif spec.generator == "zipfian":
        placement = rng.choice(spec.address_blocks, size=spec.footprint_blocks, replace=False)
        cdf = zipf_cdf(spec.footprint_blocks, spec.zipf_alpha)
        for start in range(0, total, _CHUNK):
            size = min(_CHUNK, total - start)
            ranks = np.searchsorted(cdf, rng.random(size), side="right")
            yield placement[np.minimum(ranks, spec.footprint_blocks - 1)]
    else:
        yield from _working_set_chunks(spec, rng)


def _working_set_chunks(spec: SyntheticSpec, rng: np.random.Generator) -> Iterator[np.ndarray]:
    size = min(spec.working_set_blocks, spec.footprint_blocks)
    members = (spec.base_block + rng.choice(spec.footprint_blocks, size=size, replace=False)).tolist()
    total = spec.num_accesses
    for start in range(0, total, _CHUNK):
        n = min(_CHUNK, total - start)
        churn = (rng.random(n) < spec.churn_rate).tolist()
        slots = rng.integers(0, size, n).tolist()
        fresh = (spec.base_block + rng.integers(0, spec.footprint_blocks, n)).tolist()
        picks = rng.integers(0, size, n).tolist()
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            if churn[i]:
                members[slots[i]] = fresh[i]
            out[i] = members[picks[i]]
        yield out


def generate_chunks(spec: SyntheticSpec) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(is_write, addresses)`` array pairs; concatenated they form the trace."""
    rng = np.random.default_rng(spec.seed)
    op_rng = np.random.default_rng([spec.seed, 1])
    shift = spec.offset_bits
    for blocks in _block_chunks(spec, rng):
        is_write = op_rng.random(len(blocks)) >= spec.read_fraction
        yield is_write, np.asarray(blocks, dtype=np.int64) << shift


def generate(spec: SyntheticSpec) -> Iterator[TraceRecord]:
    """Deterministic record stream for ``spec``; the seed fixes every draw."""
    for is_write, addresses in generate_chunks(spec):
        for write, address in zip(is_write.tolist(), addresses.tolist()):
            yield TraceRecord(WRITE if write else READ, address)


class TraceArrays(NamedTuple):
    """Columnar form of a trace."""

    is_write: np.ndarray  # bool
    addresses: np.ndarray  # int64

    def __len__(self) -> int:
        return len(self.addresses)

    def records(self) -> Iterator[TraceRecord]:
        for write, address in zip(self.is_write.tolist(), self.addresses.tolist()):
            yield TraceRecord(WRITE if write else READ, address)


def to_arrays(records: Iterable[TraceRecord]) -> TraceArrays:
    ops: list[bool] = []
    addresses: list[int] = []
    for op, address in records:
        ops.append(op == WRITE)
        addresses.append(address)
    return TraceArrays(np.array(ops, dtype=bool), np.array(addresses, dtype=np.int64))


def generate_arrays(spec: SyntheticSpec) -> TraceArrays:
    chunks = list(generate_chunks(spec))
    if not chunks:
        return TraceArrays(np.zeros(0, dtype=bool), np.zeros(0, dtype=np.int64))
    return TraceArrays(
        np.concatenate([c[0] for c in chunks]), np.concatenate([c[1] for c in chunks])
    )
