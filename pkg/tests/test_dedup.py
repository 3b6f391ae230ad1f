import pytest
from hypothesis import given, settings, strategies as st

from caram.dedup import (
    AMT,
    LFI,
    CapacityError,
    ContractError,
    DedupEngine,
    MemOp,
    Outcome,
    SimpleAllocator,
    metadata_budget,
    restore,
    snapshot,
)
from oracles.dedup_oracle import BruteForceDedup
from oracles.optraces import random_ops

MiB = 1 << 20
GiB = 1 << 30


def lfi_view(engine):
    return {lfp: [(e.pla, e.ref_count) for e in chain] for lfp, chain in engine.lfi.items()}


def replay(ops, ref_limit=0xFFFF):
    eng = DedupEngine(SimpleAllocator(), ref_limit=ref_limit)
    ref = BruteForceDedup(ref_limit=ref_limit)
    for op in ops:
        if op[0] == "w":
            out = eng.process_write(op[1], op[2], op[3])
            ref.write(op[1], op[2], op[3])
            assert out.kind.value == ref.outcomes[-1]
        elif op[0] == "r":
            assert eng.process_read(op[1]).pla == ref.read(op[1])
        else:
            eng.evict_lines(op[1])
            ref.evict(op[1])
    return eng, ref


def assert_same_state(eng, ref):
    assert eng.amt == ref.amt()
    assert lfi_view(eng) == ref.lfi()
    assert eng.stats.line_writes == ref.line_writes


# -- worked sequence ---------------------------------------------------------

def test_write_sequence_outcomes():
    eng = DedupEngine()
    out = eng.process_write(5, 0xAB)
    assert out.kind is Outcome.NEW_LINE_WRITTEN
    assert (len(eng.lfi), len(eng.amt), eng.entry_for(0xAB).ref_count) == (1, 1, 1)

    out = eng.process_write(5, 0xAB)
    assert out.kind is Outcome.DUPLICATE_REQUEST_DROPPED
    assert out.line_writes == 0

    out = eng.process_write(9, 0xAB)
    assert out.kind is Outcome.SHARED_EXISTING_LINE
    assert eng.entry_for(0xAB).ref_count == 2
    assert (len(eng.amt), len(eng.lfi)) == (2, 1)

    out = eng.process_write(5, 0xCD)
    assert out.kind is Outcome.LINE_UPDATED
    assert out.line_writes == 1
    assert eng.entry_for(0xAB).ref_count == 1
    assert 0xCD in eng.lfi

    shared = eng.entry_for(0xAB).pla
    assert eng.process_read(9).pla == shared
    assert not eng.process_read(77).hit


def test_dropped_write_still_compares():
    eng = DedupEngine()
    eng.process_write(1, 7)
    out = eng.process_write(1, 7)
    kinds = [op[0] for op in out.memory_ops]
    assert MemOp.COMPARE_READ in kinds
    assert MemOp.LINE_WRITE not in kinds


def test_unique_write_ops():
    out = DedupEngine().process_write(3, 0x11)
    ops = out.memory_ops
    assert sum(1 for k, t, _ in ops if k is MemOp.LINE_WRITE) == 1
    assert (MemOp.METADATA_WRITE, LFI, 0x11) in ops
    assert (MemOp.METADATA_WRITE, AMT, 3) in ops


def test_update_frees_last_reference():
    eng = DedupEngine()
    first = eng.process_write(1, 0xA).pla
    out = eng.process_write(1, 0xB)
    assert out.freed == [first]
    assert 0xA not in eng.lfi
    assert eng.allocator.live == 1


def test_release_before_share():
    eng = DedupEngine()
    eng.process_write(1, 0xA)
    eng.process_write(2, 0xB)
    old = eng.amt[1]
    out = eng.process_write(1, 0xB)
    assert out.kind is Outcome.SHARED_EXISTING_LINE
    assert out.freed == [old]
    assert eng.entry_for(0xB).ref_count == 2
    eng.assert_invariants()


def test_refcount_saturation_writes_private_copy():
    eng = DedupEngine(ref_limit=2)
    eng.process_write(1, 0xF)
    eng.process_write(2, 0xF)
    out = eng.process_write(3, 0xF)
    assert out.kind is Outcome.NEW_LINE_WRITTEN
    assert eng.stats.overflow_copies == 1
    assert [e.ref_count for e in eng.lfi[0xF]] == [2, 1]
    eng.assert_invariants()


def test_default_ref_limit_is_16_bit():
    assert DedupEngine().ref_limit == 0xFFFF


def test_collision_stores_second_line():
    eng = DedupEngine()
    eng.process_write(1, 0x5, b"one")
    out = eng.process_write(2, 0x5, b"two")
    assert out.kind is Outcome.NEW_LINE_WRITTEN
    assert eng.stats.collisions == 1
    assert len(eng.lfi[0x5]) == 2
    # a third writer with the second content shares the second line
    out = eng.process_write(3, 0x5, b"two")
    assert out.kind is Outcome.SHARED_EXISTING_LINE
    assert out.pla == eng.amt[2]


def test_capacity_error_leaves_state_untouched():
    eng = DedupEngine(SimpleAllocator(capacity=1))
    eng.process_write(1, 1)
    before = (dict(eng.amt), lfi_view(eng))
    with pytest.raises(CapacityError):
        eng.process_write(2, 2)
    assert (eng.amt, lfi_view(eng)) == before
    assert eng.stats.collisions == 0


def test_evict_sole_holder_and_sharer():
    eng = DedupEngine()
    eng.process_write(1, 0xA)
    eng.process_write(2, 0xA)
    eng.process_write(3, 0xB)
    assert eng.evict_lines([1]) == []
    assert eng.entry_for(0xA).ref_count == 1
    freed = eng.evict_lines([3])
    assert len(freed) == 1 and 0xB not in eng.lfi


def test_evict_unmapped_is_contract_error():
    with pytest.raises(ContractError):
        DedupEngine().evict_lines([42])


def test_rewrite_after_eviction_is_new():
    eng = DedupEngine()
    eng.process_write(1, 0xA)
    eng.evict_lines([1])
    assert eng.process_write(1, 0xA).kind is Outcome.NEW_LINE_WRITTEN


def test_evict_everything_empties_tables():
    ops = random_ops(3, 5000)
    eng, ref = replay(ops)
    unique = eng.unique_lines
    freed = eng.evict_lines(sorted(eng.amt))
    assert len(freed) == unique
    assert not eng.amt and not eng.lfi


# -- oracle equivalence -------------------------------------------------------

@pytest.mark.parametrize("seed", range(8))
def test_matches_brute_force_oracle(seed):
    eng, ref = replay(random_ops(seed, 10_000))
    assert_same_state(eng, ref)


@pytest.mark.parametrize("seed", range(4))
def test_matches_oracle_with_collisions_and_small_ref_limit(seed):
    eng, ref = replay(random_ops(100 + seed, 5000, n_fps=8, payload_collisions=True), ref_limit=3)
    assert_same_state(eng, ref)
    assert eng.stats.collisions > 0 and eng.stats.overflow_copies > 0


def test_reads_agree_with_oracle():
    eng, ref = replay(random_ops(11, 5000))
    for lla in range(1000):
        assert eng.process_read(lla).pla == ref.read(lla)


# -- properties ---------------------------------------------------------------

op_strategy = st.lists(
    st.one_of(
        st.tuples(st.just("w"), st.integers(0, 31), st.integers(0, 7), st.none()),
        st.tuples(st.just("r"), st.integers(0, 31)),
        st.tuples(st.just("e"), st.integers(0, 31)),
    ),
    max_size=300,
)


@settings(max_examples=150, deadline=None)
@given(op_strategy, st.integers(1, 4))
def test_invariants_hold_after_every_op(ops, ref_limit):
    eng = DedupEngine(SimpleAllocator(), ref_limit=ref_limit)
    writes = 0
    for op in ops:
        if op[0] == "w":
            out = eng.process_write(op[1], op[2])
            writes += 1
            if out.kind is Outcome.DUPLICATE_REQUEST_DROPPED:
                assert eng.amt[op[1]] in {e.pla for e in eng.lfi[op[2]]}
            # no lost update
            assert eng.by_pla[eng.amt[op[1]]].lfp == op[2]
        elif op[0] == "e":
            if op[1] in eng.amt:
                eng.evict_lines([op[1]])
        else:
            eng.process_read(op[1])
        assert eng.invariant_violations() == []
        assert sum(e.ref_count for c in eng.lfi.values() for e in c) == len(eng.amt)
        assert set(eng.by_pla) == set(range(eng.allocator.next)) - set(eng.allocator.free_list)
    s = eng.stats
    assert s.dropped + s.shared + s.updated + s.new == writes
    assert s.line_writes <= writes


# -- budget and snapshot ------------------------------------------------------

def test_metadata_budget_values():
    b = metadata_budget(16 * GiB)
    assert (b.amt_bytes, b.lfi_bytes) == (512 * MiB, 640 * MiB)
    b = metadata_budget(256)
    assert (b.amt_bytes, b.lfi_bytes) == (8, 10)
    b = metadata_budget(10 * GiB)
    assert (b.amt_bytes, b.lfi_bytes) == (320 * MiB, 400 * MiB)


@pytest.mark.parametrize("bad", [0, 100, 257, -256])
def test_metadata_budget_rejects_partial_lines(bad):
    with pytest.raises(ValueError):
        metadata_budget(bad)


def test_snapshot_round_trip():
    eng, _ = replay(random_ops(5, 3000, n_fps=8, payload_collisions=True), ref_limit=3)
    data = snapshot(eng)
    back = restore(data, SimpleAllocator())
    assert back.amt == eng.amt
    assert lfi_view(back) == lfi_view(eng)
    assert snapshot(back) == data
