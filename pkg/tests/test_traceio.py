import gzip
import io
import os
import shutil
import subprocess
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from caram.traceio import (
    LineRequest,
    Op,
    SpecError,
    SyntheticTraceSpec,
    TraceFormatError,
    TraceRecord,
    expand_to_lines,
    generate_synthetic,
    line_stats,
    native,
    parse_trace,
    superfasthash,
    trace_stats,
)
from caram.traceio.fiu import parse_fiu_line
from caram.workloads import WORKLOADS

ORACLE_SRC = Path(__file__).parent / "oracles" / "sfh_reference.c"

# Produced by compiling oracles/sfh_reference.c and hashing these inputs.
SFH_GOLDEN = [
    (b"", 0),
    (b"a", 291415938),
    (b"ab", 1366002500),
    (b"abc", 3535673738),
    (b"abcd", 3671636187),
    (b"hello world", 2794219650),
    (bytes([0x80]), 4077204420),
    (bytes([0xFF, 0xFE, 0xFD]), 1417302142),
    (bytes(range(256)), 3840866583),
    (bytes(256), 3158290672),
]


def fiu_line(ts, lba_sectors, sectors, op, md5="0123456789abcdef0123456789abcdef"):
    return f"{ts} 1234 proc {lba_sectors} {sectors} {op} 8 0 {md5}\n"


# -- SuperFastHash -----------------------------------------------------------

@pytest.mark.parametrize("data,expected", SFH_GOLDEN)
def test_superfasthash_golden(data, expected):
    assert superfasthash(data) == expected


@pytest.fixture(scope="module")
def sfh_binary(tmp_path_factory):
    cc = shutil.which("gcc") or shutil.which("cc")
    if cc is None:
        pytest.skip("no C compiler for the reference hash")
    out = tmp_path_factory.mktemp("sfh") / "sfh"
    subprocess.run([cc, "-O1", "-o", str(out), str(ORACLE_SRC)], check=True)
    return out


def test_superfasthash_matches_c_reference(sfh_binary):
    import random

    rng = random.Random(1)
    inputs = [bytes(rng.randrange(256) for _ in range(n)) for n in list(range(0, 40)) + [255, 256, 257, 1000]]
    inputs += [bytes([0x80 | rng.randrange(128) for _ in range(n)]) for n in range(1, 12)]
    proc = subprocess.run([str(sfh_binary)], input="".join(d.hex() + "\n" for d in inputs),
                          capture_output=True, text=True, check=True)
    expected = [int(x) for x in proc.stdout.split()]
    assert [superfasthash(d) for d in inputs] == expected


@given(st.binary(max_size=300))
def test_superfasthash_is_pure_and_32_bit(data):
    h = superfasthash(data)
    assert h == superfasthash(data)
    assert 0 <= h < 1 << 32


# -- FIU parsing -------------------------------------------------------------

def test_empty_stream():
    recs = parse_trace(io.BytesIO(b""), "fiu")
    assert list(recs) == [] and recs.skipped == 0


def test_count_expansion():
    recs = parse_trace(io.BytesIO(fiu_line(100, 56, 16, "W").encode()), "fiu")
    assert [r.block_lba for r in recs] == [7, 8]
    assert all(r.block_count == 1 and r.op is Op.WRITE for r in recs)
    assert recs[0].block_hash == recs[1].block_hash == 0x01234567


def test_column_mapping():
    rec = parse_fiu_line("89312345 4321 nfsd 800 8 R 8 16 ffeeddccbbaa99887766554433221100")
    assert rec.timestamp == 89312345
    assert rec.block_lba == 100 and rec.block_count == 1
    assert rec.op is Op.READ
    assert rec.device_id == (8 << 20) | 16
    assert rec.block_hash == 0xFFEEDDCC


def test_records_sorted_by_timestamp_stable():
    text = fiu_line(30, 0, 8, "W") + fiu_line(10, 8, 8, "W") + fiu_line(10, 16, 8, "R")
    recs = parse_trace(io.BytesIO(text.encode()), "fiu")
    assert [r.timestamp for r in recs] == [10, 10, 30]
    assert [r.block_lba for r in recs] == [1, 2, 0]


def test_gzip_is_transparent(tmp_path):
    text = "".join(fiu_line(i, 8 * i, 8, "W") for i in range(10))
    p = tmp_path / "t.gz"
    p.write_bytes(gzip.compress(text.encode()))
    assert len(parse_trace(p, "fiu")) == 10


def test_few_malformed_lines_are_skipped():
    good = "".join(fiu_line(i, 8 * i, 8, "W") for i in range(200))
    recs = parse_trace(io.BytesIO((good + "garbage line\n").encode()), "fiu")
    assert len(recs) == 200 and recs.skipped == 1 and recs.first_bad_line == 201


def test_many_malformed_lines_fail_with_line_number():
    text = fiu_line(0, 0, 8, "W") + "bad\n" + fiu_line(1, 8, 8, "W") * 10
    with pytest.raises(TraceFormatError) as err:
        parse_trace(io.BytesIO(text.encode()), "fiu")
    assert err.value.line_number == 2


def test_unreadable_source():
    with pytest.raises(OSError):
        parse_trace("/nonexistent/trace.txt", "fiu")


FIU_DIR = os.environ.get("CARAM_FIU_TRACES")


@pytest.mark.skipif(not FIU_DIR, reason="set CARAM_FIU_TRACES to a directory holding the FIU traces")
@pytest.mark.parametrize("name", sorted(WORKLOADS))
def test_fiu_trace_totals(name):
    matches = sorted(Path(FIU_DIR).glob(f"{name}*"))
    assert matches, f"no trace file for {name} in {FIU_DIR}"
    stats = trace_stats(parse_trace(matches[0], "fiu"))
    w = WORKLOADS[name]
    assert stats["read_total"] == w.read_total
    assert stats["write_total"] == w.write_total


# -- native format -----------------------------------------------------------

records_strategy = st.lists(
    st.builds(
        TraceRecord,
        timestamp=st.integers(-(1 << 62), 1 << 62),
        device_id=st.integers(0, (1 << 32) - 1),
        block_lba=st.integers(0, (1 << 64) - 1),
        block_count=st.integers(1, (1 << 32) - 1),
        op=st.sampled_from(Op),
        block_hash=st.integers(0, (1 << 32) - 1),
    ),
    max_size=50,
)


@given(records_strategy)
def test_native_block_round_trip(records):
    buf = io.BytesIO()
    native.write_records(buf, records)
    assert native.read_records(buf.getvalue()) == records


@settings(max_examples=50)
@given(st.lists(st.builds(
    LineRequest,
    arrival_cycle=st.integers(0, (1 << 64) - 1),
    lla=st.integers(0, (1 << 32) - 1),
    op=st.sampled_from(Op),
    lfp=st.integers(0, (1 << 32) - 1),
    payload=st.one_of(st.none(), st.binary(min_size=1, max_size=256)),
), max_size=30))
def test_native_line_round_trip(lines):
    buf = io.BytesIO()
    native.write_lines(buf, lines)
    assert native.read_lines(buf.getvalue()) == lines


def test_native_header_layout(tmp_path):
    p = tmp_path / "x.clt"
    native.write_records(p, [TraceRecord(1, 2, 3, 4, Op.WRITE, 5)])
    data = p.read_bytes()
    assert data[:4] == b"CLT1"
    assert data[4:6] == b"\x01\x00" and data[6:8] == b"\x00\x00"
    assert data[12:14] == (29).to_bytes(2, "little")
    assert len(data) == 12 + 2 + 29


def test_native_rejects_corruption():
    with pytest.raises(TraceFormatError):
        native.read_records(b"NOPE" + bytes(8))
    buf = io.BytesIO()
    native.write_records(buf, [TraceRecord(1, 2, 3, 4, Op.WRITE, 5)])
    with pytest.raises(TraceFormatError):
        native.read_records(buf.getvalue()[:-3])


def test_convert_preserves_stats(tmp_path):
    text = "".join(fiu_line(i, 8 * (i % 7), 8 * (1 + i % 3), "W" if i % 4 else "R",
                            f"{i % 5:08x}" + "0" * 24) for i in range(100))
    recs = parse_trace(io.BytesIO(text.encode()), "fiu")
    native.write_records(tmp_path / "t.clt", recs)
    again = parse_trace(tmp_path / "t.clt", "native")
    assert again == list(recs)
    assert trace_stats(again) == trace_stats(recs)


# -- line expansion ----------------------------------------------------------

def test_write_block_expands_with_hash_delay():
    lines = expand_to_lines([TraceRecord(0, 0, 3, 1, Op.WRITE, 0xAA)])
    assert len(lines) == 16
    assert all(q.arrival_cycle >= 256 for q in lines)
    assert [q.lla for q in lines] == list(range(48, 64))
    assert {q.lfp for q in lines} == {0xAA}


def test_read_block_has_no_delay():
    lines = expand_to_lines([TraceRecord(0, 0, 3, 1, Op.READ, 0xAA)])
    assert len(lines) == 16 and all(q.arrival_cycle == 0 for q in lines)


def test_equal_hash_blocks_share_fingerprint():
    lines = expand_to_lines([TraceRecord(0, 0, 1, 1, Op.WRITE, 9), TraceRecord(5, 0, 2, 1, Op.WRITE, 9)])
    assert len(lines) == 32 and {q.lfp for q in lines} == {9}


def test_block_granularity_hash_delay():
    lines = expand_to_lines([TraceRecord(0, 0, 0, 1, Op.WRITE, 1)], hash_granularity="block")
    assert lines[0].arrival_cycle == 4096


def test_timestamps_become_cycles():
    lines = expand_to_lines([TraceRecord(1000, 0, 0, 1, Op.READ, 1), TraceRecord(3500, 0, 1, 1, Op.READ, 1)])
    # 2500 ns at 400 MHz
    assert lines[16].arrival_cycle == 1000


@given(st.lists(st.tuples(st.integers(0, 10**6), st.just(0), st.sampled_from(Op), st.integers(0, 50)),
                max_size=20))
def test_expansion_multiplies_by_16(blocks):
    # block address = position, so every block is distinguishable
    recs = sorted((TraceRecord(t, 0, i, 1, op, h) for i, (t, _, op, h) in enumerate(blocks)),
                  key=lambda r: r.timestamp)
    lines = expand_to_lines(recs)
    assert len(lines) == 16 * len(recs)
    by_block = {}
    for q in lines:
        by_block.setdefault(q.lla // 16, []).append(q.lfp)
    assert {b: v for b, v in by_block.items()} == {r.block_lba: [r.block_hash] * 16 for r in recs}
    assert [q.arrival_cycle for q in lines] == sorted(q.arrival_cycle for q in lines)


# -- synthetic ---------------------------------------------------------------

def test_all_unique():
    lines = generate_synthetic(SyntheticTraceSpec(total_lines=1000, unique_fraction=1.0))
    assert len({q.lfp for q in lines}) == 1000


def test_web_users_write_calibration():
    spec = SyntheticTraceSpec(total_lines=245662, unique_fraction=172125 / 245662)
    stats = line_stats(generate_synthetic(spec))
    assert stats["write_total"] == 245662
    assert stats["write_unique"] == 172125


def test_same_seed_same_trace():
    spec = SyntheticTraceSpec(total_lines=2000, unique_fraction=0.4, read_fraction=0.3, rng_seed=42)
    a = io.BytesIO()
    b = io.BytesIO()
    native.write_lines(a, generate_synthetic(spec))
    native.write_lines(b, generate_synthetic(spec))
    assert a.getvalue() == b.getvalue()


def test_different_seed_differs():
    s = dict(total_lines=500, unique_fraction=0.5)
    assert generate_synthetic(SyntheticTraceSpec(**s, rng_seed=1)) != generate_synthetic(SyntheticTraceSpec(**s, rng_seed=2))


def test_payload_mode_hashes_payload():
    lines = generate_synthetic(SyntheticTraceSpec(total_lines=200, unique_fraction=0.5, with_payload=True, rng_seed=3))
    writes = [q for q in lines if q.op is Op.WRITE]
    assert all(len(q.payload) == 256 and q.lfp == superfasthash(q.payload) for q in writes)
    assert len({q.payload for q in writes}) == 100


def test_infeasible_spec_rejected():
    with pytest.raises(SpecError):
        generate_synthetic(SyntheticTraceSpec(total_lines=10, unique_fraction=0.01))
    with pytest.raises(SpecError):
        SyntheticTraceSpec(total_lines=0).validate()


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3000), st.floats(0.01, 1.0), st.floats(0.0, 0.9), st.integers(0, 2**32))
def test_unique_count_is_exact(total, uf, rf, seed):
    spec = SyntheticTraceSpec(total_lines=total, unique_fraction=uf, read_fraction=rf, rng_seed=seed)
    try:
        spec.validate()
    except SpecError:
        return
    lines = generate_synthetic(spec)
    assert len(lines) == total
    stats = line_stats(lines)
    assert stats["write_total"] == spec.n_writes
    assert stats["write_unique"] == spec.n_unique
    assert stats["read_total"] == spec.n_reads
