from __future__ import annotations

from typing import List, Optional

from caram.dedup.engine import CapacityError


class _Pool:
    """Sequential pool with a LIFO free list (DRAM-mapped region)."""

    def __init__(self, base, size):
        self.base = base
        self.size = size
        self.next = 0
        self.free_list: List[int] = []
        self.live = 0

    def available(self):
        return self.size - self.live

    def take(self):
        if self.free_list:
            pla = self.free_list.pop()
        elif self.next < self.size:
            pla = self.base + self.next
            self.next += 1
        else:
            return None
        self.live += 1
        return pla

    def give(self, pla):
        self.free_list.append(pla)
        self.live -= 1

    def reserve(self, pla):
        # only used when restoring snapshots: make ``pla`` look allocated
        off = pla - self.base
        if off >= self.next:
            self.free_list.extend(self.base + k for k in range(self.next, off))
            self.next = off + 1
        else:
            self.free_list.remove(pla)
        self.live += 1


class _RowRobinPool:
    """PCM pool that hands out lines round-robin over rows to spread wear.

    Row ``k`` in allocation order holds addresses
    ``[row_base(k), row_base(k) + lines_per_row)`` of the PCM channel. When
    the channel spans its full geometry, consecutive allocation rows move
    across banks first so back-to-back writes land in different banks.
    """

    def __init__(self, base, size, lines_per_row, n_banks=1, rows_per_bank=None):
        self.base = base
        self.size = size
        self.L = lines_per_row
        self.n_rows = -(-size // lines_per_row)
        full = rows_per_bank is not None and self.n_rows == n_banks * rows_per_bank
        self.n_banks = n_banks if full else 1
        self.rows_per_bank = rows_per_bank if full else self.n_rows
        self.fresh = [0] * self.n_rows
        self.freed: dict = {}
        self.cursor = 0
        self.live = 0

    def available(self):
        return self.size - self.live

    def _row_of_order(self, k):
        if self.n_banks == 1:
            return k
        return (k % self.n_banks) * self.rows_per_bank + k // self.n_banks

    def _row_capacity(self, g):
        return min(self.L, self.size - g * self.L)

    def take(self):
        if self.live >= self.size:
            return None
        n = self.n_rows
        k = self.cursor
        for _ in range(n):
            g = self._row_of_order(k)
            k = k + 1 if k + 1 < n else 0
            lst = self.freed.get(g)
            if lst:
                off = lst.pop()
                if not lst:
                    del self.freed[g]
            elif self.fresh[g] < self._row_capacity(g):
                off = g * self.L + self.fresh[g]
                self.fresh[g] += 1
            else:
                continue
            self.cursor = k
            self.live += 1
            return self.base + off
        return None

    def give(self, pla):
        off = pla - self.base
        self.freed.setdefault(off // self.L, []).append(off)
        self.live -= 1

    def reserve(self, pla):
        off = pla - self.base
        g = off // self.L
        lst = self.freed.get(g)
        if lst and off in lst:
            lst.remove(off)
        else:
            while self.fresh[g] <= off % self.L:
                if self.fresh[g] < off % self.L:
                    self.freed.setdefault(g, []).append(g * self.L + self.fresh[g])
                self.fresh[g] += 1
        self.live += 1


class LineAllocator:
    """Physical line allocator over one address space: DRAM-mapped lines
    ``[0, dram_lines)`` followed by PCM lines.

    ``prefer_dram`` is set by the controller before each allocation; the
    other pool is used only when the preferred one is full.
    """

    def __init__(self, dram_lines: int, pcm_lines: int, pcm_lines_per_row: int = 1,
                 pcm_banks: int = 1, pcm_rows_per_bank: Optional[int] = None):
        self.dram_lines = dram_lines
        self.pcm_lines = pcm_lines
        self.dram = _Pool(0, dram_lines) if dram_lines else None
        self.pcm = _RowRobinPool(dram_lines, pcm_lines, pcm_lines_per_row, pcm_banks, pcm_rows_per_bank) if pcm_lines else None
        self.prefer_dram = False

    @property
    def capacity(self):
        return self.dram_lines + self.pcm_lines

    @property
    def live(self):
        return (self.dram.live if self.dram else 0) + (self.pcm.live if self.pcm else 0)

    def allocate(self, prefer_dram: Optional[bool] = None) -> int:
        pref = self.prefer_dram if prefer_dram is None else prefer_dram
        order = (self.dram, self.pcm) if pref else (self.pcm, self.dram)
        for pool in order:
            if pool is not None:
                pla = pool.take()
                if pla is not None:
                    return pla
        raise CapacityError("no free physical line")

    def free(self, pla: int) -> None:
        if pla < self.dram_lines:
            self.dram.give(pla)
        else:
            self.pcm.give(pla)

    def reserve(self, pla: int) -> None:
        (self.dram if pla < self.dram_lines else self.pcm).reserve(pla)
