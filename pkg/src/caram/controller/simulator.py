"""Memory controller simulation for the four architectures.

``pure_dram`` / ``pure_pcm``: one channel, lines written in place.
``hybrid``: DRAM split into a mapped region and a write buffer; every
write goes through the buffer and drains to its home line.
``caram``: hybrid plus a metadata region holding the AMT and LFI; each
write runs the dedup engine first and only new content reaches the buffer.

The loop is a discrete-event model: requests are admitted in trace order
when a queue slot frees (a min-heap of in-flight completion cycles), their
device accesses are chained, and the buffer drain advances between
requests in cycle order.
"""

from __future__ import annotations

import heapq
import logging
from typing import Iterable, List, Optional

from caram import LINE_SIZE, LINES_PER_BLOCK
from caram.controller.allocator import LineAllocator
from caram.controller.config import ArchitectureConfig
from caram.controller.pagecache import PageCache
from caram.controller.writebuffer import WriteBuffer
from caram.dedup.budget import AMT_ENTRY_BYTES, LFI_ENTRY_BYTES
from caram.dedup.engine import CapacityError, DedupEngine, MemOp
from caram.energy import DEFAULT_ENERGY, EnergyConstants, EnergyLedger, total_energy
from caram.memdev import TABLE1_DRAM, TABLE1_PCM, AccessKind, Channel, DeviceTiming
from caram.metrics import DedupSummary, SimReport, WearSummary, bandwidth, space_occupation_ratio
from caram.traceio.records import LineRequest, Op

log = logging.getLogger(__name__)

_MD_READ = MemOp.METADATA_READ
_MD_WRITE = MemOp.METADATA_WRITE
_CMP = MemOp.COMPARE_READ
_LWRITE = MemOp.LINE_WRITE
_LFREE = MemOp.LINE_FREE

_K_READ = AccessKind.LINE_READ
_K_WRITE = AccessKind.LINE_WRITE
_K_MDR = AccessKind.METADATA_READ
_K_MDW = AccessKind.METADATA_WRITE
_K_CMP = AccessKind.COMPARE_READ


class SimulationError(RuntimeError):
    """Internal invariant breach; carries the cycle it was detected at."""

    def __init__(self, message, cycle):
        super().__init__(f"cycle {cycle}: {message}")
        self.cycle = cycle


class Simulator:
    def __init__(self, arch: ArchitectureConfig, dram_timing: DeviceTiming = TABLE1_DRAM,
                 pcm_timing: DeviceTiming = TABLE1_PCM, energy: EnergyConstants = DEFAULT_ENERGY,
                 record: bool = False, check_every: int = 0, ref_limit: int = 0xFFFF):
        self.arch = arch.validate()
        self.energy_constants = energy
        self.check_every = check_every
        kind = arch.kind
        self.kind = kind

        dram_lines = arch.dram_bytes // LINE_SIZE
        pcm_lines = arch.pcm_bytes // LINE_SIZE
        buf_lines = arch.write_buffer_bytes // LINE_SIZE if arch.buffered else 0
        meta_lines = arch.metadata_region_bytes // LINE_SIZE if kind == "caram" else 0
        self.dram_mapped = dram_lines - buf_lines - meta_lines

        self.dram = Channel(dram_timing, dram_lines, 0, interleave=arch.dram_address_map, record=record) if dram_lines else None
        self.pcm = Channel(pcm_timing, pcm_lines, 1, track_wear=True, record=record) if pcm_lines else None
        self.channels = [c for c in (self.dram, self.pcm) if c is not None]

        self.meta = None
        if kind == "caram":
            if arch.metadata_port == "separate":
                self.meta = Channel(dram_timing, meta_lines, 2, interleave=arch.dram_address_map, record=record)
                self.meta_base = 0
                self.channels.append(self.meta)
            else:
                self.meta = self.dram
                self.meta_base = self.dram_mapped + buf_lines
            self.amt_lines = max(1, meta_lines * AMT_ENTRY_BYTES // (AMT_ENTRY_BYTES + LFI_ENTRY_BYTES))
            self.lfi_lines = max(1, meta_lines - self.amt_lines)

        pcm_geo = {}
        if self.pcm is not None:
            pcm_geo = dict(pcm_lines_per_row=self.pcm.lines_per_row, pcm_banks=self.pcm.n_banks,
                           pcm_rows_per_bank=pcm_timing.num_rows)
        self.allocator = LineAllocator(self.dram_mapped, pcm_lines, **pcm_geo)
        self.engine = DedupEngine(self.allocator, ref_limit=ref_limit) if kind == "caram" else None
        self.mapping = {}
        self.pages = PageCache(arch.eviction_policy)
        self.buffer = None
        if arch.buffered:
            self.buffer = WriteBuffer(buf_lines, self.dram_mapped, self.dram, self.translate,
                                      arch.drain_high_watermark, arch.drain_low_watermark)

        self.epoch = -1
        self.page_writes = {}
        self.reads = self.writes = 0
        self.read_hits = self.read_misses = 0
        self.line_writes = 0
        self.plain_new = self.plain_updated = 0
        self.evicted_pages = 0
        self.violations: List[str] = []

        if kind == "caram":
            self._write = self._write_caram
            self._read = self._read_caram
        elif arch.buffered:
            self._write = self._write_hybrid
            self._read = self._read_plain
        else:
            self._write = self._write_direct
            self._read = self._read_plain

    # -- addressing ------------------------------------------------------

    def translate(self, pla):
        if pla < self.dram_mapped:
            return self.dram, pla
        return self.pcm, pla - self.dram_mapped

    def _amt_addr(self, lla):
        return self.meta_base + (lla * AMT_ENTRY_BYTES // LINE_SIZE) % self.amt_lines

    def _lfi_addr(self, lfp):
        return self.meta_base + self.amt_lines + lfp % self.lfi_lines

    # -- allocation and eviction ----------------------------------------

    def _prefer_dram(self, page, now):
        if not self.arch.buffered:
            return False
        epoch = now // self.arch.hot_epoch_cycles
        if epoch != self.epoch:
            self.epoch = epoch
            self.page_writes = {}
        c = self.page_writes.get(page, 0) + 1
        self.page_writes[page] = c
        return c >= self.arch.hot_write_threshold

    def allocate_pla(self, preferred_device="pcm") -> int:
        """Allocate a line (``"dram_mapped"`` or ``"pcm"`` first), evicting pages when full."""
        if isinstance(preferred_device, bool):
            prefer_dram = preferred_device
        elif preferred_device in ("dram_mapped", "pcm"):
            prefer_dram = preferred_device == "dram_mapped"
        else:
            raise ValueError(f"preferred_device must be 'dram_mapped' or 'pcm', not {preferred_device!r}")
        while True:
            try:
                return self.allocator.allocate(prefer_dram)
            except CapacityError:
                self.evict_pages(LINES_PER_BLOCK)

    def evict_pages(self, needed_lines: int) -> List[int]:
        """Evict victim pages until ``needed_lines`` physical lines were freed."""
        evicted = []
        freed = 0
        while freed < needed_lines:
            page = self.pages.victim()
            if page is None:
                raise CapacityError("memory full and no resident page can be evicted")
            llas = self.pages.remove(page)
            if self.engine is not None:
                plas = self.engine.evict_lines(sorted(llas))
            else:
                plas = [self.mapping.pop(lla) for lla in sorted(llas)]
                for pla in plas:
                    self.allocator.free(pla)
            if self.buffer is not None:
                for pla in plas:
                    self.buffer.invalidate(pla)
            freed += len(plas)
            evicted.append(page)
        self.evicted_pages += len(evicted)
        return evicted

    # -- request planning -----------------------------------------------
    #
    # A handler runs the functional part of a request at admission (dedup
    # decision, mapping, allocation) and returns the device steps still to
    # be timed. A step is ``(fn, a, b)`` and is issued as ``fn(a, b, t)``,
    # returning its completion cycle.

    def _line_read(self, kind, pla, t):
        buf = self.buffer
        if buf is not None and pla in buf.by_pla:
            return self.dram.access(kind, buf.slot_addr(pla), t)
        if pla < self.dram_mapped:
            return self.dram.access(kind, pla, t)
        return self.pcm.access(kind, pla - self.dram_mapped, t)

    def _put(self, pla, _unused, t):
        return self.buffer.put(pla, t)

    @staticmethod
    def _delay(cycles, _unused, t):
        return t + cycles

    def _alloc_plain(self, prefer, steps):
        while True:
            try:
                return self.allocator.allocate(prefer)
            except CapacityError:
                pages = self.evict_pages(LINES_PER_BLOCK)
                steps.append((self._delay, len(pages) * self.arch.swap_out_cycles, 0))

    def _write_direct(self, req, t):
        lla = req.lla
        steps = []
        pla = self.mapping.get(lla)
        if pla is None:
            pla = self._alloc_plain(False, steps)
            self.mapping[lla] = pla
            self.pages.add_line(lla // LINES_PER_BLOCK, lla)
            self.plain_new += 1
        else:
            self.pages.touch(lla // LINES_PER_BLOCK)
            self.plain_updated += 1
        self.line_writes += 1
        dev, addr = self.translate(pla)
        steps.append((dev.access, _K_WRITE, addr))
        return steps

    def _write_hybrid(self, req, t):
        lla = req.lla
        page = lla // LINES_PER_BLOCK
        steps = []
        pla = self.mapping.get(lla)
        if pla is None:
            pla = self._alloc_plain(self._prefer_dram(page, t), steps)
            self.mapping[lla] = pla
            self.pages.add_line(page, lla)
            self.plain_new += 1
        else:
            self._prefer_dram(page, t)
            self.pages.touch(page)
            self.plain_updated += 1
        self.line_writes += 1
        steps.append((self._put, pla, 0))
        return steps

    def _write_caram(self, req, t):
        lla = req.lla
        page = lla // LINES_PER_BLOCK
        self.allocator.prefer_dram = self._prefer_dram(page, t)
        engine = self.engine
        steps = []
        while True:
            try:
                out = engine.process_write(lla, req.lfp, req.payload)
                break
            except CapacityError:
                pages = self.evict_pages(LINES_PER_BLOCK)
                steps.append((self._delay, len(pages) * self.arch.swap_out_cycles, 0))
        access = self.meta.access
        for kind, table, key in out.memory_ops:
            if kind is _MD_READ:
                addr = self._amt_addr(key) if table == "amt" else self._lfi_addr(key)
                steps.append((access, _K_MDR, addr))
            elif kind is _MD_WRITE:
                addr = self._amt_addr(key) if table == "amt" else self._lfi_addr(key)
                steps.append((access, _K_MDW, addr))
            elif kind is _CMP:
                steps.append((self._line_read, _K_CMP, key))
            elif kind is _LWRITE:
                self.line_writes += 1
                steps.append((self._put, key, 0))
            elif kind is _LFREE:
                self.buffer.invalidate(key)
        self.pages.add_line(page, lla)
        if self.check_every and self.writes % self.check_every == 0:
            self._check(t)
        return steps

    def _read_plain(self, req, t):
        pla = self.mapping.get(req.lla)
        if pla is None:
            self.read_misses += 1
            return [(self._delay, self.arch.miss_penalty_cycles, 0)]
        self.read_hits += 1
        self.pages.touch(req.lla // LINES_PER_BLOCK)
        return [(self._line_read, _K_READ, pla)]

    def _read_caram(self, req, t):
        lla = req.lla
        first = (self.meta.access, _K_MDR, self._amt_addr(lla))
        pla = self.engine.amt.get(lla)
        if pla is None:
            self.read_misses += 1
            return [first, (self._delay, self.arch.miss_penalty_cycles, 0)]
        self.read_hits += 1
        self.pages.touch(lla // LINES_PER_BLOCK)
        return [first, (self._line_read, _K_READ, pla)]

    def _issue(self, steps, t):
        for fn, a, b in steps:
            t = fn(a, b, t)
        return t

    def route_write(self, req: LineRequest, now: Optional[int] = None):
        """Service one write at ``now`` and return the device accesses it caused."""
        saved = [c.record for c in self.channels]
        marks = [len(c.log) for c in self.channels]
        for c in self.channels:
            c.record = True
        try:
            self.writes += 1
            t = req.arrival_cycle if now is None else now
            self._issue(self._write(req, t), t)
        finally:
            for c, s in zip(self.channels, saved):
                c.record = s
        ops = []
        for c, m in zip(self.channels, marks):
            ops.extend((c.channel_id, op) for op in c.log[m:])
        return ops

    # -- invariants -----------------------------------------------------

    def _check(self, cycle):
        problems = []
        if self.engine is not None:
            problems.extend(self.engine.invariant_violations())
            if len(self.engine.by_pla) != self.allocator.live:
                problems.append(
                    f"LFI holds {len(self.engine.by_pla)} lines, allocator {self.allocator.live}")
        elif len(self.mapping) != self.allocator.live:
            problems.append(f"map holds {len(self.mapping)} lines, allocator {self.allocator.live}")
        if self.allocator.live > self.allocator.capacity:
            problems.append("live lines exceed usable capacity")
        for p in problems:
            msg = f"cycle {cycle}: {p}"
            log.error(msg)
            self.violations.append(msg)

    # -- main loop ------------------------------------------------------

    def run(self, trace: Iterable[LineRequest], workload: str = "") -> SimReport:
        """Replay ``trace`` (sorted by arrival) and return the run report.

        Requests are admitted in trace order once one of ``queue_depth``
        slots is free. Their steps then go through one event heap, so the
        accesses of all in-flight requests and the buffer drain reach the
        devices in cycle order.
        """
        depth = self.arch.queue_depth
        heap = []
        push, pop = heapq.heappush, heapq.heappop
        buf = self.buffer
        write, read = self._write, self._read
        WRITE = Op.WRITE
        it = iter(trace)
        req = next(it, None)
        now = 0
        last_adm = 0
        end = 0
        inflight = 0
        seq = 0
        while True:
            if req is not None and inflight < depth:
                t = req.arrival_cycle
                if t < now:
                    t = now
                if not heap or t <= heap[0][0]:
                    if t > now:
                        now = t
                    last_adm = t
                    if req.op is WRITE:
                        self.writes += 1
                        steps = write(req, t)
                    else:
                        self.reads += 1
                        steps = read(req, t)
                    push(heap, (t, seq, steps, 0))
                    seq += 1
                    inflight += 1
                    req = next(it, None)
                    continue
            if not heap:
                break
            t, s, steps, i = pop(heap)
            now = t
            if i == len(steps):
                # request complete; its queue slot frees now
                inflight -= 1
                if t > end:
                    end = t
                continue
            if buf is not None and buf.draining:
                buf.advance(t)
            fn, a, b = steps[i]
            push(heap, (fn(a, b, t), s, steps, i + 1))

        if buf is not None:
            if self.arch.flush_at_end:
                buf.flush(last_adm)
            else:
                buf.finish_episode()
        total = max([end] + [c.last_complete for c in self.channels]
                    + ([buf.last_complete] if buf is not None else []))
        self._check(total)
        return self._report(total, workload)

    # -- reporting ------------------------------------------------------

    def _report(self, total_cycles, workload):
        arch = self.arch
        live = self.allocator.live
        live_bytes = live * LINE_SIZE
        meta_bytes = self.engine.metadata_bytes() if self.engine is not None else 0
        charged = meta_bytes if arch.charge_metadata else 0
        occupation = space_occupation_ratio(live_bytes, charged, arch.capacity_bytes)

        requests = self.reads + self.writes
        cycles = max(total_cycles, 1)
        classes = {}
        caps = {}
        if arch.dram_bytes:
            classes["dram"] = [c for c in (self.dram, self.meta) if c is not None]
            classes["dram"] = list(dict.fromkeys(classes["dram"]))
            caps["dram"] = arch.dram_bytes
        if arch.pcm_bytes:
            classes["pcm"] = [self.pcm]
            caps["pcm"] = arch.pcm_bytes
        self.ledger = EnergyLedger.from_channels(total_cycles, classes, caps)
        energy = total_energy(self.ledger, self.energy_constants)

        if self.engine is not None:
            s = self.engine.stats
            dedup = DedupSummary(s.dropped, s.shared, s.updated, s.new, s.collisions, s.overflow_copies)
        else:
            dedup = DedupSummary(new=self.plain_new, updated=self.plain_updated)

        counts = {}
        for name, ch in (("dram", self.dram), ("pcm", self.pcm), ("metadata_port", self.meta if self.meta is not self.dram else None)):
            if ch is None:
                continue
            counts[name] = {k.name.lower(): ch.counts[k] for k in AccessKind}
            counts[name]["activations"] = ch.activations
            counts[name]["precharges"] = ch.precharges
            counts[name]["busy_cycles"] = ch.busy_cycles

        report = SimReport(
            arch=arch.kind,
            workload=workload,
            total_cycles=total_cycles,
            read_requests=self.reads,
            write_requests=self.writes,
            read_hits=self.read_hits,
            read_misses=self.read_misses,
            line_writes=self.line_writes,
            dram_line_writes=self.dram.counts[_K_WRITE] if self.dram else 0,
            pcm_line_writes=self.pcm.counts[_K_WRITE] if self.pcm else 0,
            drain_writes=self.buffer.drain_writes if self.buffer is not None else 0,
            drain_episodes=self.buffer.episodes if self.buffer is not None else 0,
            evicted_pages=self.evicted_pages,
            unique_lines_live=live,
            live_bytes=live_bytes,
            metadata_bytes=meta_bytes,
            capacity_bytes=arch.capacity_bytes,
            charge_metadata=arch.charge_metadata,
            space_occupation_ratio=occupation,
            bandwidth_bytes_per_cycle=bandwidth(requests * LINE_SIZE, cycles),
            requests_per_kcycle=1000.0 * requests / cycles,
            energy_mj=energy,
            dedup=dedup,
            wear=WearSummary.of(self.pcm.wear_histogram() if self.pcm else []),
            device_counts=counts,
            invariant_violations=list(self.violations),
        )
        problem = report.check_partition()
        if problem:
            report.invariant_violations.append(problem)
        return report

    def wear_histogram(self) -> List[int]:
        return self.pcm.wear_histogram() if self.pcm else []


def run(trace: Iterable[LineRequest], arch: ArchitectureConfig, **kwargs) -> SimReport:
    workload = kwargs.pop("workload", "")
    return Simulator(arch, **kwargs).run(trace, workload=workload)
