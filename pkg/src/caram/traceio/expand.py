from __future__ import annotations

from typing import Iterable, List

from caram import LINE_SIZE, LINES_PER_BLOCK
from caram.traceio.records import LineRequest, Op, TraceRecord

DEFAULT_CLOCK_MHZ = 400.0


def expand_to_lines(
    records: Iterable[TraceRecord],
    hash_cost_cycles_per_byte: float = 1.0,
    clock_mhz: float = DEFAULT_CLOCK_MHZ,
    hash_granularity: str = "line",
) -> List[LineRequest]:
    """Turn block records into 16 line requests each.

    Timestamps are rebased to the first record and converted from
    nanoseconds to controller cycles. Every write line is delayed by the
    time to fingerprint it: ``LINE_SIZE * cost`` cycles when hashing per
    line, ``BLOCK_SIZE * cost`` when the whole block must be hashed first.
    All lines of a block inherit the block hash as their fingerprint.
    """
    if hash_granularity not in ("line", "block"):
        raise ValueError(f"hash_granularity must be 'line' or 'block', not {hash_granularity!r}")
    hashed_bytes = LINE_SIZE if hash_granularity == "line" else LINE_SIZE * LINES_PER_BLOCK
    delay = int(round(hashed_bytes * hash_cost_cycles_per_byte))

    out = []
    t0 = None
    for rec in records:
        if t0 is None:
            t0 = rec.timestamp
        base = int((rec.timestamp - t0) * clock_mhz // 1000)
        arrival = base + delay if rec.op is Op.WRITE else base
        for blk in range(rec.block_count):
            first = (rec.block_lba + blk) * LINES_PER_BLOCK
            for i in range(LINES_PER_BLOCK):
                out.append(LineRequest(arrival, (first + i) & 0xFFFFFFFF, rec.op, rec.block_hash))
    # write delays can push a write past a later read; keep arrival order
    out.sort(key=lambda q: q.arrival_cycle)
    return out
