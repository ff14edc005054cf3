from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from linlab.core import INF, VectorTimestamp
from linlab.experiments import random_workload
from linlab.impl_vector import VectorRegister, mw_read, mw_write, three_writer_script
from linlab.linearize import f_vector

from oracles import all_linearizations


def v(*xs):
    return VectorTimestamp(tuple(xs))


def test_solo_writes_increment_own_slot():
    reg = VectorRegister("R", 3, 0)
    assert mw_write(reg, 0, 5) == v(1, 0, 0)
    assert mw_write(reg, 0, 6) == v(2, 0, 0)
    assert mw_read(reg, 2) == (6, v(2, 0, 0))


def test_fresh_read():
    assert mw_read(VectorRegister("R", 3, 0), 1) == (0, v(0, 0, 0))


def test_second_writer_sees_first():
    reg = VectorRegister("R", 2, 0)
    mw_write(reg, 0, 1)
    assert mw_write(reg, 1, 2) == v(1, 1)
    assert mw_read(reg, 0) == (2, v(1, 1))


def test_new_ts_reset_between_writes():
    reg = VectorRegister("R", 3, 0)
    op = reg.invoke(1, "write", 9)
    reg.step(op)
    assert reg.new_ts[1] == [0, INF, INF]
    while not reg.is_done(op):
        reg.step(op)
    assert reg.new_ts[1] == [INF, INF, INF]


def test_write_takes_n_reads_a_write_and_a_reset():
    reg = VectorRegister("R", 3, 0)
    mw_write(reg, 2, 1)
    nested = [e for e in reg.trace.events if e.parent is not None and e.kind == "invoke"]
    assert [e.op_kind for e in nested] == ["read", "read", "read", "write"]
    assert nested[-1].register == "R.Val[3]"
    assert "pts" in nested[-1].meta


def test_three_overlapping_writers():
    h = three_writer_script()
    ops = h.operations("R")
    ts = {op.argument: op.meta["ts"] for op in ops.values() if op.is_write}
    assert ts == {1: v(1, 1, 1), 2: v(0, 1, 0), 3: v(0, 0, 1)}
    lin = f_vector(h, "R", 0)
    writes = [ops[i].argument for i in lin.writes()]
    assert writes == [3, 2, 1]
    # completion order would have been w2, w3, w1
    done = sorted((op for op in ops.values() if op.is_write), key=lambda o: o.respond_time)
    assert [o.argument for o in done] == [2, 3, 1]
    read = next(op for op in ops.values() if op.is_read)
    assert read.result == 1
    assert lin.op_ids in all_linearizations(h, "R", 0)


@given(st.integers(0, 10**6))
@settings(max_examples=80, deadline=None)
def test_read_ts_not_below_preceding_write(seed):
    h, _ = random_workload("alg2", seed)
    ops = list(h.operations("R").values())
    for w in ops:
        if not (w.is_write and w.complete):
            continue
        for r in ops:
            if r.is_read and r.complete and w.respond_time < r.invoke_time:
                assert r.meta["ts"] >= w.meta["ts"]
