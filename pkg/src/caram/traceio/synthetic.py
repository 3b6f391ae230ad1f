from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from caram import LINE_SIZE
from caram.traceio.hashing import superfasthash
from caram.traceio.records import LineRequest, Op


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticTraceSpec:
    total_lines: int
    unique_fraction: float = 1.0
    read_fraction: float = 0.0
    address_space_lines: int = 1 << 32
    rng_seed: int = 0
    with_payload: bool = False
    gap_cycles: int = 0

    @property
    def n_reads(self) -> int:
        return int(round(self.read_fraction * self.total_lines))

    @property
    def n_writes(self) -> int:
        return self.total_lines - self.n_reads

    @property
    def n_unique(self) -> int:
        # rounding guards ratios like 172125/245662 against float fuzz
        return max(1, math.ceil(round(self.unique_fraction * self.n_writes, 6))) if self.n_writes else 0

    def validate(self) -> None:
        if self.total_lines < 1:
            raise SpecError("total_lines must be >= 1")
        if not 0.0 < self.unique_fraction <= 1.0:
            raise SpecError("unique_fraction must be in (0, 1]")
        if not 0.0 <= self.read_fraction <= 1.0:
            raise SpecError("read_fraction must be in [0, 1]")
        if self.unique_fraction * self.total_lines < 1:
            raise SpecError("unique_fraction * total_lines < 1: no unique line can be produced")
        if not 1 <= self.address_space_lines <= 1 << 32:
            raise SpecError("address_space_lines must be in [1, 2**32]")
        if self.gap_cycles < 0:
            raise SpecError("gap_cycles must be >= 0")


def _distinct_fingerprints(rng, n):
    seen = set()
    out = []
    while len(out) < n:
        for v in rng.integers(0, 1 << 32, size=n - len(out) + 16, dtype=np.uint64).tolist():
            if v not in seen:
                seen.add(v)
                out.append(v)
                if len(out) == n:
                    break
    return out


def _distinct_payloads(rng, n):
    seen = set()
    lfps, payloads = [], []
    while len(lfps) < n:
        data = rng.bytes(LINE_SIZE)
        h = superfasthash(data)
        # distinct content must also mean distinct fingerprint here
        if h in seen:
            continue
        seen.add(h)
        lfps.append(h)
        payloads.append(data)
    return lfps, payloads


def generate_synthetic(spec: SyntheticTraceSpec) -> List[LineRequest]:
    """Build a deterministic line trace with an exact unique-write count.

    Writes are laid out so the first write always creates content and the
    remaining ``n_unique - 1`` new contents are scattered uniformly; every
    other write repeats a content drawn uniformly from those already
    created. Write addresses are uniform over the address space. Reads hit
    a uniformly chosen previously written address (and carry its current
    fingerprint) or, before any write, a random address.
    """
    spec.validate()
    rng = np.random.default_rng(spec.rng_seed)
    n_reads, n_writes, n_unique = spec.n_reads, spec.n_writes, spec.n_unique

    is_read = np.zeros(spec.total_lines, dtype=bool)
    if n_reads:
        is_read[rng.permutation(spec.total_lines)[:n_reads]] = True

    is_new = np.zeros(n_writes, dtype=bool)
    if n_writes:
        is_new[0] = True
        if n_unique > 1:
            is_new[1 + rng.permutation(n_writes - 1)[: n_unique - 1]] = True

    if spec.with_payload:
        lfps, payloads = _distinct_payloads(rng, n_unique)
    else:
        lfps, payloads = _distinct_fingerprints(rng, n_unique), None

    write_addr = rng.integers(0, spec.address_space_lines, size=n_writes, dtype=np.uint64).tolist()
    dup_pick = rng.random(n_writes).tolist()
    read_pick = rng.random(n_reads).tolist()
    read_fresh = rng.integers(0, spec.address_space_lines, size=n_reads, dtype=np.uint64).tolist()

    out = []
    created = 0
    w = r = 0
    written = []
    content_at = {}
    gap = spec.gap_cycles
    for i, rd in enumerate(is_read.tolist()):
        t = i * gap
        if rd:
            if written:
                lla = written[int(read_pick[r] * len(written))]
                cid = content_at[lla]
                out.append(LineRequest(t, lla, Op.READ, lfps[cid]))
            else:
                out.append(LineRequest(t, read_fresh[r], Op.READ, 0))
            r += 1
            continue
        if is_new[w]:
            cid = created
            created += 1
        else:
            cid = int(dup_pick[w] * created)
        lla = write_addr[w]
        if lla not in content_at:
            written.append(lla)
        content_at[lla] = cid
        out.append(LineRequest(t, lla, Op.WRITE, lfps[cid], payloads[cid] if payloads else None))
        w += 1
    return out
