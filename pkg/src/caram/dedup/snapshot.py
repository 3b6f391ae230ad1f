"""Binary snapshot of dedup metadata (``CLS1``), little-endian.

    header:  b"CLS1"  u16 version  u32 amt_count  u32 lfi_count
    amt:     amt_count  x (u32 lla, u32 pla), sorted by lla
    lfi:     lfi_count  x (u32 lfp, u32 pla, u16 ref_count), in chain order
"""

from __future__ import annotations

import struct

from caram.dedup.engine import DedupEngine, LfiEntry

MAGIC = b"CLS1"
VERSION = 1
_HEAD = struct.Struct("<4sHII")
_AMT = struct.Struct("<II")
_LFI = struct.Struct("<IIH")


def snapshot(engine: DedupEngine) -> bytes:
    entries = [e for lfp in sorted(engine.lfi) for e in engine.lfi[lfp]]
    parts = [_HEAD.pack(MAGIC, VERSION, len(engine.amt), len(entries))]
    parts.extend(_AMT.pack(lla, engine.amt[lla]) for lla in sorted(engine.amt))
    parts.extend(_LFI.pack(e.lfp, e.pla, e.ref_count) for e in entries)
    return b"".join(parts)


def restore(data: bytes, allocator=None, **kwargs) -> DedupEngine:
    """Rebuild an engine; ``allocator.reserve(pla)`` is called for each live line if present."""
    magic, version, n_amt, n_lfi = _HEAD.unpack_from(data, 0)
    if magic != MAGIC or version != VERSION:
        raise ValueError("not a dedup snapshot")
    engine = DedupEngine(allocator, **kwargs)
    pos = _HEAD.size
    for _ in range(n_amt):
        lla, pla = _AMT.unpack_from(data, pos)
        engine.amt[lla] = pla
        pos += _AMT.size
    reserve = getattr(engine.allocator, "reserve", None)
    for _ in range(n_lfi):
        lfp, pla, ref = _LFI.unpack_from(data, pos)
        e = LfiEntry(lfp, pla, ref)
        engine.lfi.setdefault(lfp, []).append(e)
        engine.by_pla[pla] = e
        if reserve is not None:
            reserve(pla)
        pos += _LFI.size
    if pos != len(data):
        raise ValueError("trailing bytes in snapshot")
    return engine
