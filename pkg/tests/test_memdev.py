import random

import pytest
from hypothesis import given, settings, strategies as st

from caram.memdev import (
    TABLE1_DRAM,
    TABLE1_PCM,
    AccessKind,
    AddressError,
    Channel,
    Location,
)

R, W = AccessKind.LINE_READ, AccessKind.LINE_WRITE

# Hand traces of the row-buffer state machine with the table1 timings and a
# 32-cycle line burst (PCM writes stretch it 4x to 128).
#   idle miss: t_rcd + burst
#   row hit:   burst
#   open miss: t_rp + t_rcd + burst (issued once t_ras and t_rc allow)
HAND_LATENCY = {
    ("dram", R, "idle-miss"): 22 + 32,
    ("dram", R, "hit"): 32,
    ("dram", R, "open-miss"): 60 + 22 + 32,
    ("pcm", R, "idle-miss"): 5 + 32,
    ("pcm", R, "hit"): 32,
    ("pcm", R, "open-miss"): 5 + 5 + 32,
    ("pcm", W, "idle-miss"): 5 + 128,
    ("pcm", W, "hit"): 128,
    ("pcm", W, "open-miss"): 5 + 5 + 128,
}


def channel(dev, **kw):
    return Channel(TABLE1_DRAM if dev == "dram" else TABLE1_PCM, 1 << 22, **kw)


def measure(dev, kind, case):
    ch = channel(dev)
    if case == "idle-miss":
        return ch.access(kind, 0, 0)
    # open row 0 of bank 0, wait until t_ras/t_rc are long satisfied
    ch.access(R, 0, 0)
    now = 10_000
    addr = 1 if case == "hit" else ch.lines_per_row  # same row / next row, same bank
    assert ch.decode(addr).bank == 0
    return ch.access(kind, addr, now) - now


@pytest.mark.parametrize("key", sorted(HAND_LATENCY, key=str))
def test_nine_latency_cases(key):
    assert measure(*key) == HAND_LATENCY[key]


def test_table1_defaults():
    p, d = TABLE1_PCM, TABLE1_DRAM
    assert (p.num_rows, p.device_width_bits, p.t_ras, p.t_rcd, p.t_rc, p.t_rp) == (32768, 8, 15, 5, 20, 5)
    assert (d.num_rows, d.device_width_bits, d.t_ras, d.t_rcd, d.t_rc, d.t_rp) == (8192, 16, 36, 22, 96, 60)
    assert p.burst_cycles_per_line == d.burst_cycles_per_line == 32
    assert p.write_multiplier == 4.0 and d.write_multiplier == 1.0
    assert p.banks_per_rank == 8 and p.ranks == 1


def test_immediate_same_row_read_is_a_hit():
    ch = channel("dram")
    t = ch.access(R, 0, 0)
    assert ch.access(R, 1, t) - t == 32


def test_back_to_back_row_conflict_waits_for_t_rc():
    ch = channel("dram")
    t = ch.access(R, 0, 0)  # activate at 0, done 54
    done = ch.access(R, ch.lines_per_row, t)
    # precharge at 54, activate at max(114, 0 + 96) = 114, data 136..168
    assert done == 168
    assert ch.activations == 2 and ch.precharges == 1


def test_different_banks_overlap():
    ch = channel("dram")
    a = ch.access(R, 0, 0)
    b = ch.access(R, ch.lines_per_row * TABLE1_DRAM.num_rows, 0)
    assert ch.decode(ch.lines_per_row * TABLE1_DRAM.num_rows).bank == 1
    # bank 1 activates in parallel; only the data bus serialises
    assert (a, b) == (54, 86)


def test_bus_gap_is_backfilled():
    ch = channel("dram")
    ch.access(R, 0, 0)  # bus 22..54
    ch.access(R, ch.lines_per_row, 0)  # row conflict, bus 136..168
    other_bank = ch.lines_per_row * TABLE1_DRAM.num_rows
    ch.access(R, other_bank, 0)  # bus 54..86 (idle bank fits in the gap)
    done = ch.access(R, other_bank + 1, 86)
    assert done == 118


def test_decode_origin():
    loc = channel("dram").decode(0)
    assert (loc.bank, loc.row, loc.column) == (0, 0, 0)


def test_row_interleave_row_formula():
    ch = channel("pcm")
    for pla in (0, 5, 100, 12345, ch.capacity - 1):
        assert ch.decode(pla).row == (pla // ch.lines_per_row) % TABLE1_PCM.num_rows


def test_bank_interleave_cycles_banks():
    ch = channel("dram", interleave="bank")
    assert [ch.decode(p).bank for p in range(20)] == [p % 8 for p in range(20)]


@pytest.mark.parametrize("scheme", ["row", "bank"])
def test_decode_encode_identity(scheme):
    ch = Channel(TABLE1_PCM, 3 << 20, interleave=scheme)
    rng = random.Random(0)
    for _ in range(10_000):
        pla = rng.randrange(ch.capacity)
        loc = ch.decode(pla)
        assert isinstance(loc, Location)
        assert ch.encode(loc) == pla


def test_out_of_range_address():
    ch = channel("dram")
    with pytest.raises(AddressError):
        ch.access(R, ch.capacity, 0)
    with pytest.raises(AddressError):
        ch.decode(-1)


def test_wear_histogram():
    ch = channel("pcm", track_wear=True)
    assert set(ch.wear_histogram()) == {0}
    rows = 1000
    for i in range(10 * rows):
        ch.access(W, (i % rows) * ch.lines_per_row, i * 200)
    hist = ch.wear_histogram()
    assert sum(hist) == 10 * rows
    used = hist[:rows]
    assert max(used) - min(used) <= 1


def test_service_reports_events():
    ch = channel("pcm")
    op = ch.service(W, 0, 0)
    assert (op.latency, op.activations, op.precharges, op.bus_cycles) == (133, 1, 0, 128)


def test_metadata_access_uses_short_burst():
    ch = channel("dram")
    assert ch.access(AccessKind.METADATA_READ, 0, 0) == 22 + 8


access_lists = st.lists(
    st.tuples(st.sampled_from(list(AccessKind)), st.integers(0, (1 << 16) - 1), st.integers(0, 400)),
    min_size=1, max_size=120,
)


@settings(max_examples=80, deadline=None)
@given(access_lists, st.sampled_from(["row", "bank"]))
def test_timing_properties(accesses, scheme):
    ch = Channel(TABLE1_DRAM, 1 << 16, interleave=scheme, record=True)
    now = 0
    last_by_bank = {}
    for kind, addr, gap in accesses:
        now += gap
        done = ch.access(kind, addr, now)
        bank = ch.decode(addr).bank
        assert done >= now + ch._burst[kind]
        assert done >= last_by_bank.get(bank, 0)
        last_by_bank[bank] = done
    # bus transfers never overlap
    spans = sorted((op.complete_cycle - op.bus_cycles, op.complete_cycle) for op in ch.log)
    assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))
    assert ch.precharges <= ch.activations
    # determinism
    again = Channel(TABLE1_DRAM, 1 << 16, interleave=scheme, record=True)
    now = 0
    for kind, addr, gap in accesses:
        now += gap
        again.access(kind, addr, now)
    assert again.log == ch.log
