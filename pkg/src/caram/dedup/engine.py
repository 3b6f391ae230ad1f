"""Line-level inline deduplication: address mapping table + fingerprint index."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

from caram.dedup.budget import AMT_ENTRY_BYTES, LFI_ENTRY_BYTES

REF_LIMIT = 0xFFFF


class CapacityError(RuntimeError):
    """No free physical line could be allocated."""


class ContractError(RuntimeError):
    """The caller broke a precondition of the dedup engine."""


class MemOp(enum.IntEnum):
    METADATA_READ = 0
    METADATA_WRITE = 1
    COMPARE_READ = 2
    LINE_READ = 3
    LINE_WRITE = 4
    LINE_FREE = 5


class Outcome(enum.Enum):
    DUPLICATE_REQUEST_DROPPED = "duplicate_request_dropped"
    SHARED_EXISTING_LINE = "shared_existing_line"
    NEW_LINE_WRITTEN = "new_line_written"
    LINE_UPDATED = "line_updated"


AMT = "amt"
LFI = "lfi"


@dataclass
class DedupOutcome:
    kind: Outcome
    pla: int
    memory_ops: list
    freed: list = field(default_factory=list)

    @property
    def line_writes(self) -> int:
        return sum(1 for op in self.memory_ops if op[0] is MemOp.LINE_WRITE)


@dataclass
class ReadResult:
    pla: Optional[int]
    memory_ops: list

    @property
    def hit(self) -> bool:
        return self.pla is not None


class LfiEntry:
    __slots__ = ("lfp", "pla", "ref_count")

    def __init__(self, lfp, pla, ref_count=1):
        self.lfp = lfp
        self.pla = pla
        self.ref_count = ref_count

    def __repr__(self):
        return f"LfiEntry(lfp={self.lfp:#x}, pla={self.pla}, ref_count={self.ref_count})"


@dataclass
class DedupStats:
    dropped: int = 0
    shared: int = 0
    updated: int = 0
    new: int = 0
    collisions: int = 0
    overflow_copies: int = 0
    line_writes: int = 0
    freed_lines: int = 0
    evicted_mappings: int = 0

    @property
    def write_requests(self) -> int:
        return self.dropped + self.shared + self.updated + self.new


class SimpleAllocator:
    """LIFO free list over ``[0, capacity)``; handy for tests and standalone use."""

    def __init__(self, capacity=1 << 32):
        self.capacity = capacity
        self.next = 0
        self.free_list = []
        self.live = 0

    def allocate(self):
        if self.free_list:
            pla = self.free_list.pop()
        elif self.next < self.capacity:
            pla = self.next
            self.next += 1
        else:
            raise CapacityError("allocator exhausted")
        self.live += 1
        return pla

    def free(self, pla):
        self.free_list.append(pla)
        self.live -= 1


class DedupEngine:
    """AMT/LFI pair with refcounted line sharing.

    ``allocator`` must provide ``allocate() -> pla`` (raising
    :class:`CapacityError` when nothing is free) and ``free(pla)``.
    The LFI maps a fingerprint to a chain of entries; a chain longer than
    one only appears after a fingerprint collision (payload mode) or a
    refcount overflow, so each (fingerprint, position) still names exactly
    one physical line.
    """

    def __init__(self, allocator=None, ref_limit=REF_LIMIT, check=False):
        self.allocator = allocator if allocator is not None else SimpleAllocator()
        self.ref_limit = ref_limit
        self.check = check
        self.amt: Dict[int, int] = {}
        self.lfi: Dict[int, List[LfiEntry]] = {}
        self.by_pla: Dict[int, LfiEntry] = {}
        self.contents: Dict[int, bytes] = {}
        self.stats = DedupStats()

    # -- queries ---------------------------------------------------------

    def __len__(self):
        return len(self.amt)

    @property
    def unique_lines(self) -> int:
        return len(self.by_pla)

    def metadata_bytes(self) -> int:
        return len(self.amt) * AMT_ENTRY_BYTES + len(self.by_pla) * LFI_ENTRY_BYTES

    def entry_for(self, lfp) -> Optional[LfiEntry]:
        chain = self.lfi.get(lfp)
        return chain[0] if chain else None

    def _same_content(self, entry, payload):
        if payload is None:
            return True
        stored = self.contents.get(entry.pla)
        return stored is None or stored == payload

    # -- mutation --------------------------------------------------------

    def _release(self, pla, ops, freed):
        e = self.by_pla[pla]
        e.ref_count -= 1
        ops.append((MemOp.METADATA_WRITE, LFI, e.lfp))
        if e.ref_count == 0:
            chain = self.lfi[e.lfp]
            chain.remove(e)
            if not chain:
                del self.lfi[e.lfp]
            del self.by_pla[pla]
            self.contents.pop(pla, None)
            self.allocator.free(pla)
            self.stats.freed_lines += 1
            ops.append((MemOp.LINE_FREE, None, pla))
            freed.append(pla)

    def process_write(self, lla: int, lfp: int, payload: Optional[bytes] = None) -> DedupOutcome:
        ops = [(MemOp.METADATA_READ, LFI, lfp)]
        freed = []
        stats = self.stats
        chain = self.lfi.get(lfp)
        cur = self.amt.get(lla)
        candidate = None
        saturated = mismatch = False

        if chain:
            if cur is not None:
                ce = self.by_pla[cur]
                if ce.lfp == lfp and self._same_content(ce, payload):
                    ops.append((MemOp.COMPARE_READ, None, cur))
                    ops.append((MemOp.METADATA_READ, AMT, lla))
                    stats.dropped += 1
                    return DedupOutcome(Outcome.DUPLICATE_REQUEST_DROPPED, cur, ops)
            for e in chain:
                ops.append((MemOp.COMPARE_READ, None, e.pla))
                if not self._same_content(e, payload):
                    mismatch = True
                elif e.ref_count < self.ref_limit:
                    candidate = e
                    break
                else:
                    saturated = True

        if candidate is not None:
            ops.append((MemOp.METADATA_READ, AMT, lla))
            if cur is not None:
                self._release(cur, ops, freed)
            candidate.ref_count += 1
            self.amt[lla] = candidate.pla
            ops.append((MemOp.METADATA_WRITE, AMT, lla))
            ops.append((MemOp.METADATA_WRITE, LFI, lfp))
            stats.shared += 1
            out = DedupOutcome(Outcome.SHARED_EXISTING_LINE, candidate.pla, ops, freed)
        else:
            pla = self.allocator.allocate()
            if saturated:
                stats.overflow_copies += 1
            elif mismatch:
                stats.collisions += 1
            ops.append((MemOp.LINE_WRITE, None, pla))
            entry = LfiEntry(lfp, pla)
            self.lfi.setdefault(lfp, []).append(entry)
            self.by_pla[pla] = entry
            if payload is not None:
                self.contents[pla] = payload
            stats.line_writes += 1
            ops.append((MemOp.METADATA_WRITE, LFI, lfp))
            ops.append((MemOp.METADATA_READ, AMT, lla))
            self.amt[lla] = pla
            ops.append((MemOp.METADATA_WRITE, AMT, lla))
            if cur is not None:
                self._release(cur, ops, freed)
                stats.updated += 1
                out = DedupOutcome(Outcome.LINE_UPDATED, pla, ops, freed)
            else:
                stats.new += 1
                out = DedupOutcome(Outcome.NEW_LINE_WRITTEN, pla, ops, freed)

        if self.check:
            self.assert_invariants()
        return out

    def process_read(self, lla: int) -> ReadResult:
        ops = [(MemOp.METADATA_READ, AMT, lla)]
        pla = self.amt.get(lla)
        if pla is not None:
            ops.append((MemOp.LINE_READ, None, pla))
        return ReadResult(pla, ops)

    def evict_lines(self, llas: Iterable[int]) -> List[int]:
        """Drop the mappings of ``llas``; return PLAs whose refcount hit zero."""
        llas = list(llas)
        missing = [a for a in llas if a not in self.amt]
        if missing:
            raise ContractError(f"evicting unmapped LLAs {missing[:8]}")
        freed = []
        ops = []
        for lla in llas:
            pla = self.amt.pop(lla)
            self._release(pla, ops, freed)
            self.stats.evicted_mappings += 1
        if self.check:
            self.assert_invariants()
        return freed

    # -- invariants ------------------------------------------------------

    def invariant_violations(self) -> List[str]:
        problems = []
        total_refs = 0
        seen_plas = set()
        for lfp, chain in self.lfi.items():
            if not chain:
                problems.append(f"empty chain for {lfp:#x}")
            for e in chain:
                total_refs += e.ref_count
                if e.ref_count < 1:
                    problems.append(f"non-positive refcount {e!r}")
                if e.pla in seen_plas:
                    problems.append(f"PLA {e.pla} indexed twice")
                seen_plas.add(e.pla)
                if self.by_pla.get(e.pla) is not e:
                    problems.append(f"reverse index out of sync for PLA {e.pla}")
        if total_refs != len(self.amt):
            problems.append(f"refcount sum {total_refs} != AMT size {len(self.amt)}")
        if len(seen_plas) != len(self.by_pla):
            problems.append("reverse index holds stale PLAs")
        for lla, pla in self.amt.items():
            if pla not in seen_plas:
                problems.append(f"AMT[{lla}] -> {pla} has no LFI entry")
                break
        return problems

    def assert_invariants(self):
        problems = self.invariant_violations()
        if problems:
            raise ContractError("; ".join(problems))
