"""Bank and row-buffer timing for one DRAM or PCM channel.

Open-page policy, FCFS per bank, one shared data bus per channel. A line
transfer occupies the bus for ``burst_cycles_per_line`` cycles (256 B over
a 64-bit bus at one beat per cycle); writes stretch that term by the
device's ``write_multiplier``. Column latency (tCL) and refresh stalls are
not modeled.
"""

from __future__ import annotations

import enum
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, replace
from typing import Dict, List, NamedTuple, Optional

NEVER = -(1 << 60)
# bus bookings older than this many cycles before the current issue are dropped
_BUS_HISTORY = 1 << 16


class AddressError(IndexError):
    pass


class AccessKind(enum.IntEnum):
    LINE_READ = 0
    LINE_WRITE = 1
    METADATA_READ = 2
    METADATA_WRITE = 3
    COMPARE_READ = 4


WRITE_KINDS = frozenset({AccessKind.LINE_WRITE, AccessKind.METADATA_WRITE})
METADATA_KINDS = frozenset({AccessKind.METADATA_READ, AccessKind.METADATA_WRITE})


@dataclass(frozen=True)
class DeviceTiming:
    name: str
    num_rows: int
    device_width_bits: int
    t_ras: int
    t_rcd: int
    t_rc: int
    t_rp: int
    write_multiplier: float = 1.0
    burst_cycles_per_line: int = 32
    metadata_burst_cycles: int = 8
    banks_per_rank: int = 8
    ranks: int = 1

    def __post_init__(self):
        for f in ("num_rows", "device_width_bits", "t_ras", "t_rcd", "t_rc", "t_rp",
                  "burst_cycles_per_line", "metadata_burst_cycles", "banks_per_rank", "ranks"):
            if getattr(self, f) < 1:
                raise ValueError(f"{self.name}: {f} must be >= 1")
        if self.write_multiplier < 1:
            raise ValueError(f"{self.name}: write_multiplier must be >= 1")

    def with_overrides(self, **kw) -> "DeviceTiming":
        return replace(self, **kw)


# Default ("table1") values: (NUM_ROWS, DEVICE_WIDTH, tRAS, tRCD, tRC, tRP)
TABLE1_PCM = DeviceTiming("table1-pcm", 32768, 8, 15, 5, 20, 5, write_multiplier=4.0)
TABLE1_DRAM = DeviceTiming("table1-dram", 8192, 16, 36, 22, 96, 60, write_multiplier=1.0)

# Conventional alternative, not the default: DDR3-1600-like DRAM and a slow-array PCM, for sensitivity runs.
REALISTIC_PCM = DeviceTiming("realistic-pcm", 32768, 8, 60, 55, 65, 5, write_multiplier=8.0)
REALISTIC_DRAM = DeviceTiming("realistic-dram", 8192, 16, 28, 11, 39, 11, write_multiplier=1.0)

TIMING_PRESETS: Dict[str, Dict[str, DeviceTiming]] = {
    "table1": {"dram": TABLE1_DRAM, "pcm": TABLE1_PCM},
    "realistic": {"dram": REALISTIC_DRAM, "pcm": REALISTIC_PCM},
}
DEVICE_PRESETS = {t.name: t for t in (TABLE1_PCM, TABLE1_DRAM, REALISTIC_PCM, REALISTIC_DRAM)}


class Location(NamedTuple):
    channel: int
    rank: int
    bank: int
    row: int
    column: int


class DeviceOp(NamedTuple):
    kind: AccessKind
    address: int
    issue_cycle: int
    complete_cycle: int
    activations: int
    precharges: int
    bus_cycles: int

    @property
    def latency(self) -> int:
        return self.complete_cycle - self.issue_cycle


class Channel:
    """One memory channel: banks, a shared data bus, counters and wear.

    ``interleave`` selects the address map: ``"row"`` keeps consecutive
    lines in one row (column fastest, then row, bank, rank); ``"bank"``
    spreads consecutive lines across banks (bank fastest, then column,
    row, rank).
    """

    def __init__(self, timing: DeviceTiming, capacity_lines: int, channel_id: int = 0,
                 interleave: str = "row", track_wear: bool = False, record: bool = False):
        if capacity_lines < 1:
            raise ValueError("capacity_lines must be >= 1")
        if interleave not in ("row", "bank"):
            raise ValueError(f"unknown interleave {interleave!r}")
        self.timing = timing
        self.capacity = capacity_lines
        self.channel_id = channel_id
        self.interleave = interleave
        self.n_banks = timing.banks_per_rank * timing.ranks
        self.n_rows_total = timing.num_rows * self.n_banks
        self.lines_per_row = max(1, -(-capacity_lines // self.n_rows_total))
        self.record = record
        self._burst = [self._burst_for(k) for k in AccessKind]
        self.log: List[DeviceOp] = []
        self.reset()
        self.track_wear = track_wear
        self.wear = [0] * self.n_rows_total if track_wear else None

    def _burst_for(self, kind: AccessKind) -> int:
        t = self.timing
        if kind in (AccessKind.METADATA_READ, AccessKind.METADATA_WRITE):
            burst = t.metadata_burst_cycles
        else:
            burst = t.burst_cycles_per_line
        if kind in (AccessKind.LINE_WRITE, AccessKind.METADATA_WRITE):
            burst = int(round(burst * t.write_multiplier))
        return burst

    def reset(self):
        n = self.n_banks
        self.open_row = [-1] * n
        self.ready = [0] * n
        self.last_act = [NEVER] * n
        # reserved data-bus intervals, sorted and disjoint
        self._bus_start = []
        self._bus_end = []
        self._prune_at = 64
        self.counts = [0] * len(AccessKind)
        self.activations = 0
        self.precharges = 0
        self.busy_cycles = 0
        self.last_complete = 0
        self.log = []

    # -- addressing ------------------------------------------------------

    def decode(self, addr: int) -> Location:
        if not 0 <= addr < self.capacity:
            raise AddressError(f"address {addr} outside channel of {self.capacity} lines")
        t = self.timing
        L, R, B = self.lines_per_row, t.num_rows, t.banks_per_rank
        if self.interleave == "row":
            col = addr % L
            g = addr // L
            row = g % R
            g //= R
            bank = g % B
        else:
            bank = addr % B
            g = addr // B
            col = g % L
            g //= L
            row = g % R
            g //= R
        return Location(self.channel_id, g // B if self.interleave == "row" else g, bank, row, col)

    def encode(self, loc: Location) -> int:
        t = self.timing
        L, R, B = self.lines_per_row, t.num_rows, t.banks_per_rank
        if self.interleave == "row":
            return ((loc.rank * B + loc.bank) * R + loc.row) * L + loc.column
        return ((loc.rank * R + loc.row) * L + loc.column) * B + loc.bank

    def global_row(self, addr: int) -> int:
        """Index of the (rank, bank, row) holding ``addr``; used for wear counts."""
        loc = self.decode(addr)
        return (loc.rank * self.timing.banks_per_rank + loc.bank) * self.timing.num_rows + loc.row

    def row_base(self, global_row: int) -> int:
        """First address of a global row (row-interleaved map only)."""
        return global_row * self.lines_per_row

    # -- timing ----------------------------------------------------------

    def access(self, kind: AccessKind, addr: int, now: int) -> int:
        """Service one access issued at ``now``; return its completion cycle."""
        if not 0 <= addr < self.capacity:
            raise AddressError(f"address {addr} outside channel of {self.capacity} lines")
        t = self.timing
        L = self.lines_per_row
        if self.interleave == "row":
            g = addr // L
            row = g % t.num_rows
            bi = (g // t.num_rows) % self.n_banks
        else:
            bi_local = addr % t.banks_per_rank
            g = addr // t.banks_per_rank // L
            row = g % t.num_rows
            bi = (g // t.num_rows) * t.banks_per_rank + bi_local
        start = self.ready[bi]
        if now > start:
            start = now
        acts = pres = 0
        if self.open_row[bi] == row:
            data_ready = start
        else:
            last = self.last_act[bi]
            if self.open_row[bi] >= 0:
                pre = last + t.t_ras
                if start > pre:
                    pre = start
                act = pre + t.t_rp
                pres = 1
                self.precharges += 1
            else:
                act = start
            if act < last + t.t_rc:
                act = last + t.t_rc
            self.last_act[bi] = act
            self.open_row[bi] = row
            self.activations += 1
            acts = 1
            data_ready = act + t.t_rcd

        burst = self._burst[kind]
        data_ready = self._reserve_bus(data_ready, burst, now)
        done = data_ready + burst
        self.ready[bi] = done
        self.busy_cycles += burst
        self.counts[kind] += 1
        if done > self.last_complete:
            self.last_complete = done
        if self.wear is not None and kind == AccessKind.LINE_WRITE:
            self.wear[bi * t.num_rows + row] += 1
        if self.record:
            self.log.append(DeviceOp(kind, addr, now, done, acts, pres, burst))
        return done

    def _reserve_bus(self, ready: int, burst: int, now: int) -> int:
        """Book the first free bus window of ``burst`` cycles at or after ``ready``.

        Banks keep FCFS order, but a transfer may use an idle gap left
        before a later-booked transfer of another bank.
        """
        bs, be = self._bus_start, self._bus_end
        n = len(bs)
        if n > self._prune_at:
            k = bisect_left(be, now - _BUS_HISTORY)
            if k:
                del bs[:k], be[:k]
                n -= k
            self._prune_at = 2 * n + 64
        i = bisect_right(be, ready)
        x = ready
        while i < n:
            if x + burst <= bs[i]:
                break
            if be[i] > x:
                x = be[i]
            i += 1
        end = x + burst
        if i > 0 and be[i - 1] == x:
            if i < n and bs[i] == end:
                be[i - 1] = be[i]
                del bs[i], be[i]
            else:
                be[i - 1] = end
        elif i < n and bs[i] == end:
            bs[i] = x
        else:
            bs.insert(i, x)
            be.insert(i, end)
        return x

    @property
    def bus_free(self) -> int:
        """Cycle after the last booked bus transfer."""
        return self._bus_end[-1] if self._bus_end else 0

    def service(self, kind: AccessKind, addr: int, now: int) -> DeviceOp:
        """Like :meth:`access` but returns the full :class:`DeviceOp` record."""
        before_act, before_pre, before_busy = self.activations, self.precharges, self.busy_cycles
        done = self.access(kind, addr, now)
        return DeviceOp(kind, addr, now, done, self.activations - before_act,
                        self.precharges - before_pre, self.busy_cycles - before_busy)

    def close_all(self, now: int) -> int:
        """Precharge every open bank; returns when the last precharge ends."""
        t = self.timing
        end = now
        for bi in range(self.n_banks):
            if self.open_row[bi] >= 0:
                pre = max(now, self.ready[bi], self.last_act[bi] + t.t_ras)
                self.open_row[bi] = -1
                self.precharges += 1
                self.ready[bi] = pre + t.t_rp
                end = max(end, self.ready[bi])
        return end

    def wear_histogram(self) -> List[int]:
        if self.wear is None:
            return []
        return list(self.wear)

    def count(self, kind: AccessKind) -> int:
        return self.counts[kind]
