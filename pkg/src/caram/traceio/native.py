"""Native binary trace container (``.clt``).

Layout, all little-endian::

    header:  b"CLT1"  u16 version  u16 kind  u32 reserved(0)
    record:  u16 body_length  body

``kind`` 0 holds block records, body ``<qIQIBI`` =
(timestamp, device_id, block_lba, block_count, op, block_hash), 29 bytes.

``kind`` 1 holds line requests, body ``<QIBIH`` =
(arrival_cycle, lla, op, lfp, payload_length) followed by the payload bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, Iterable, List, Union

from caram.traceio.records import LineRequest, Op, TraceFormatError, TraceRecord

MAGIC = b"CLT1"
VERSION = 1
KIND_BLOCKS = 0
KIND_LINES = 1

_HEADER = struct.Struct("<4sHHI")
_LEN = struct.Struct("<H")
_BLOCK = struct.Struct("<qIQIBI")
_LINE = struct.Struct("<QIBIH")


def _write(dst, kind, bodies):
    own = isinstance(dst, (str, Path))
    f = open(dst, "wb") if own else dst
    try:
        f.write(_HEADER.pack(MAGIC, VERSION, kind, 0))
        for body in bodies:
            f.write(_LEN.pack(len(body)))
            f.write(body)
    finally:
        if own:
            f.close()


def write_records(dst: Union[str, Path, BinaryIO], records: Iterable[TraceRecord]) -> None:
    _write(dst, KIND_BLOCKS, (
        _BLOCK.pack(r.timestamp, r.device_id, r.block_lba, r.block_count, int(r.op), r.block_hash)
        for r in records
    ))


def write_lines(dst: Union[str, Path, BinaryIO], requests: Iterable[LineRequest]) -> None:
    def bodies():
        for q in requests:
            payload = q.payload or b""
            yield _LINE.pack(q.arrival_cycle, q.lla, int(q.op), q.lfp, len(payload)) + payload

    _write(dst, KIND_LINES, bodies())


def _read(src):
    if isinstance(src, (str, Path)):
        data = Path(src).read_bytes()
    elif isinstance(src, (bytes, bytearray)):
        data = bytes(src)
    else:
        data = src.read()
    if len(data) < _HEADER.size:
        raise TraceFormatError("truncated header")
    magic, version, kind, _ = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise TraceFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise TraceFormatError(f"unsupported version {version}")
    bodies = []
    pos = _HEADER.size
    while pos < len(data):
        if pos + 2 > len(data):
            raise TraceFormatError(f"truncated record at offset {pos}")
        (n,) = _LEN.unpack_from(data, pos)
        pos += 2
        if pos + n > len(data):
            raise TraceFormatError(f"truncated record at offset {pos}")
        bodies.append(data[pos:pos + n])
        pos += n
    return kind, bodies


def peek_kind(src: Union[str, Path]) -> int:
    with open(src, "rb") as f:
        head = f.read(_HEADER.size)
    if len(head) < _HEADER.size or head[:4] != MAGIC:
        raise TraceFormatError("not a native trace")
    return _HEADER.unpack(head)[2]


def read_records(src) -> List[TraceRecord]:
    kind, bodies = _read(src)
    if kind != KIND_BLOCKS:
        raise TraceFormatError("file holds line requests, not block records")
    out = []
    for i, body in enumerate(bodies):
        if len(body) != _BLOCK.size:
            raise TraceFormatError(f"record {i}: bad length {len(body)}", i)
        ts, dev, lba, count, op, h = _BLOCK.unpack(body)
        out.append(TraceRecord(ts, dev, lba, count, Op(op), h))
    return out


def read_lines(src) -> List[LineRequest]:
    kind, bodies = _read(src)
    if kind != KIND_LINES:
        raise TraceFormatError("file holds block records, not line requests")
    out = []
    for i, body in enumerate(bodies):
        arrival, lla, op, lfp, plen = _LINE.unpack_from(body, 0)
        if len(body) != _LINE.size + plen:
            raise TraceFormatError(f"record {i}: payload length mismatch", i)
        payload = body[_LINE.size:] if plen else None
        out.append(LineRequest(arrival, lla, Op(op), lfp, payload))
    return out
