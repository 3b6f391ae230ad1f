"""Reader for the FIU deduplication traces published on SNIA IOTTA.

Each text line carries nine whitespace-separated columns::

    timestamp_ns  pid  process  lba  size  op  major  minor  md5

``lba`` and ``size`` are in 512-byte sectors, ``op`` is ``W`` or ``R`` and
``md5`` is the hex digest of the 4 KiB block. The block fingerprint kept in
:class:`TraceRecord` is the first four digest bytes read big-endian.
"""

from __future__ import annotations

import gzip
import io
import logging
from pathlib import Path
from typing import BinaryIO, Iterable, List, Union

from caram.traceio.records import Op, TraceFormatError, TraceRecord

log = logging.getLogger(__name__)

SECTOR = 512
SECTORS_PER_BLOCK = 8
MALFORMED_LIMIT = 0.01


def parse_fiu_line(line: str) -> TraceRecord:
    parts = line.split()
    if len(parts) != 9:
        raise ValueError(f"expected 9 columns, got {len(parts)}")
    ts, _pid, _proc, lba, size, op, major, minor, md5 = parts
    if len(md5) < 8:
        raise ValueError("md5 column too short")
    sectors = int(size)
    if sectors <= 0:
        raise ValueError("non-positive size")
    return TraceRecord(
        timestamp=int(ts),
        device_id=(int(major) << 20) | int(minor),
        block_lba=int(lba) // SECTORS_PER_BLOCK,
        block_count=-(-sectors // SECTORS_PER_BLOCK),
        op=Op.parse(op),
        block_hash=int(md5[:8], 16),
    )


def expand_counts(records: Iterable[TraceRecord]) -> List[TraceRecord]:
    """Split multi-block records into one record per block (same hash)."""
    out = []
    for rec in records:
        if rec.block_count == 1:
            out.append(rec)
            continue
        for k in range(rec.block_count):
            out.append(TraceRecord(rec.timestamp, rec.device_id, rec.block_lba + k, 1, rec.op, rec.block_hash))
    return out


def open_text(source: Union[str, Path, BinaryIO]) -> io.TextIOBase:
    if isinstance(source, (str, Path)):
        raw = open(source, "rb")
    else:
        raw = source
    head = raw.peek(2)[:2] if hasattr(raw, "peek") else b""
    if not head and raw.seekable():
        pos = raw.tell()
        head = raw.read(2)
        raw.seek(pos)
    if head == b"\x1f\x8b":
        raw = gzip.GzipFile(fileobj=raw)
    return io.TextIOWrapper(raw, encoding="utf-8", errors="replace")


class ParseResult(list):
    """List of records that also remembers how many lines were skipped."""

    skipped = 0
    first_bad_line = None


def read_fiu(source) -> ParseResult:
    stream = open_text(source)
    parsed = []
    skipped = 0
    first_bad = None
    total = 0
    for lineno, line in enumerate(stream, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        total += 1
        try:
            parsed.append(parse_fiu_line(line))
        except ValueError as exc:
            skipped += 1
            if first_bad is None:
                first_bad = lineno
                log.debug("malformed FIU line %d: %s", lineno, exc)
    if total and skipped / total > MALFORMED_LIMIT:
        raise TraceFormatError(
            f"{skipped} of {total} lines malformed (first at line {first_bad})", first_bad
        )
    # stable sort: FIU traces are near-sorted, ties keep file order
    parsed.sort(key=lambda r: r.timestamp)
    result = ParseResult(expand_counts(parsed))
    result.skipped = skipped
    result.first_bad_line = first_bad
    return result
