"""Block trace parsing, line expansion and synthetic trace generation."""

from __future__ import annotations

from caram.traceio import fiu, native
from caram.traceio.expand import expand_to_lines
from caram.traceio.hashing import compute_superfasthash, superfasthash
from caram.traceio.records import LineRequest, Op, TraceFormatError, TraceRecord
from caram.traceio.synthetic import SpecError, SyntheticTraceSpec, generate_synthetic


def parse_trace(source, format: str = "fiu"):
    """Parse a block trace; ``format`` is ``"fiu"`` or ``"native"``.

    FIU input is count-expanded to one record per block and sorted by
    timestamp. Native input is returned exactly as stored.
    """
    if format == "fiu":
        return fiu.read_fiu(source)
    if format == "native":
        return native.read_records(source)
    raise ValueError(f"unknown trace format {format!r}")


def trace_stats(records):
    """Per-op totals: block counts and distinct hashes."""
    stats = {"read_total": 0, "read_unique": 0, "write_total": 0, "write_unique": 0}
    seen = {Op.READ: set(), Op.WRITE: set()}
    for rec in records:
        key = "write" if rec.op is Op.WRITE else "read"
        stats[key + "_total"] += rec.block_count
        seen[rec.op].add(rec.block_hash)
    stats["read_unique"] = len(seen[Op.READ])
    stats["write_unique"] = len(seen[Op.WRITE])
    return stats


def line_stats(requests):
    stats = {"read_total": 0, "read_unique": 0, "write_total": 0, "write_unique": 0}
    seen = {Op.READ: set(), Op.WRITE: set()}
    for q in requests:
        key = "write" if q.op is Op.WRITE else "read"
        stats[key + "_total"] += 1
        seen[q.op].add(q.lfp)
    stats["read_unique"] = len(seen[Op.READ])
    stats["write_unique"] = len(seen[Op.WRITE])
    return stats


__all__ = [
    "LineRequest", "Op", "SpecError", "SyntheticTraceSpec", "TraceFormatError", "TraceRecord",
    "compute_superfasthash", "expand_to_lines", "generate_synthetic", "line_stats",
    "parse_trace", "superfasthash", "trace_stats",
]
