from __future__ import annotations

import math
from collections import deque

from caram.memdev import AccessKind


class _Entry:
    __slots__ = ("pla", "slot", "valid")

    def __init__(self, pla, slot):
        self.pla = pla
        self.slot = slot
        self.valid = True


class WriteBuffer:
    """FIFO write buffer in DRAM with watermark draining.

    Lines wait in a ring of ``capacity`` DRAM slots starting at ``base``.
    Once occupancy reaches the high watermark a drain episode starts and
    keeps moving the oldest line to its home location until occupancy
    falls to the low watermark. The drain runs beside foreground traffic:
    :meth:`advance` issues every drain step due by a given cycle, pacing
    buffer reads so each lands just as the target device can take the
    write. Entries whose line is freed while buffered are invalidated and
    skipped without I/O.
    """

    def __init__(self, capacity, base, dram, translate, high=0.8, low=0.2):
        if capacity < 1:
            raise ValueError("write buffer needs at least one slot")
        self.capacity = capacity
        self.base = base
        self.dram = dram
        self.translate = translate
        self.high_mark = max(1, math.ceil(high * capacity - 1e-9))
        self.low_mark = math.floor(low * capacity + 1e-9)
        self.fifo = deque()
        self.by_pla = {}
        self.head_slot = 0
        self.draining = False
        self.next_time = 0
        self.episodes = 0
        self.drain_writes = 0
        self.skipped = 0
        self.last_complete = 0

    def __len__(self):
        return len(self.fifo)

    def __contains__(self, pla):
        return pla in self.by_pla

    def slot_addr(self, pla):
        return self.base + self.by_pla[pla].slot

    def invalidate(self, pla):
        e = self.by_pla.pop(pla, None)
        if e is not None:
            e.valid = False

    def _step(self, now):
        e = self.fifo.popleft()
        self.head_slot = (e.slot + 1) % self.capacity
        if not e.valid:
            self.skipped += 1
            return now
        del self.by_pla[e.pla]
        r = self.dram.access(AccessKind.LINE_READ, self.base + e.slot, now)
        dev, addr = self.translate(e.pla)
        w = dev.access(AccessKind.LINE_WRITE, addr, r)
        self.drain_writes += 1
        if w > self.last_complete:
            self.last_complete = w
        # issue the next buffer read early enough that it lands when the
        # target bus frees up, using this read's latency as the estimate
        t = dev.timing
        nxt = w - (r - now) - t.t_rp - t.t_rcd
        self.next_time = nxt if nxt > now else now
        return r

    def advance(self, now):
        while self.draining and self.next_time <= now:
            self._step(self.next_time)
            if len(self.fifo) <= self.low_mark:
                self.draining = False

    def finish_episode(self):
        while self.draining:
            self._step(self.next_time)
            if len(self.fifo) <= self.low_mark:
                self.draining = False

    def flush(self, now):
        if self.next_time < now:
            self.next_time = now
        while self.fifo:
            self._step(self.next_time)
        self.draining = False

    def put(self, pla, now):
        """Buffer a line write issued at ``now``; return its completion cycle."""
        e = self.by_pla.get(pla)
        if e is not None:
            # coalesce with the pending copy of the same line
            return self.dram.access(AccessKind.LINE_WRITE, self.base + e.slot, now)
        while len(self.fifo) >= self.capacity:
            if not self.draining:
                self._start(now)
            freed_at = self._step(max(self.next_time, now))
            if freed_at > now:
                now = freed_at
            if len(self.fifo) <= self.low_mark:
                self.draining = False
        slot = (self.head_slot + len(self.fifo)) % self.capacity
        e = _Entry(pla, slot)
        self.fifo.append(e)
        self.by_pla[pla] = e
        done = self.dram.access(AccessKind.LINE_WRITE, self.base + slot, now)
        if not self.draining and len(self.fifo) >= self.high_mark:
            self._start(done)
        return done

    def _start(self, now):
        self.draining = True
        self.episodes += 1
        if self.next_time < now:
            self.next_time = now
