from __future__ import annotations

import pickle

import pytest
from hypothesis import given
from hypothesis import strategies as st

from linlab.core import (
    INF,
    ConfigurationError,
    Event,
    History,
    LamportTimestamp,
    Ordering,
    OperationRecord,
    TraceError,
    VectorTimestamp,
    history_from_jsonl,
    history_prefix,
    history_to_jsonl,
    is_active,
    precedes,
    vts_compare,
)

from oracles import lex_reference


def rec(op_id, start, end):
    return OperationRecord(op_id, 0, "R", "read", invoke_time=start, respond_time=end)


def vts(*xs):
    return VectorTimestamp(tuple(INF if x == "inf" else x for x in xs))


class TestPrecedes:
    def test_disjoint(self):
        assert precedes(rec(0, 0, 5), rec(1, 6, 9))

    def test_overlap(self):
        assert not precedes(rec(0, 0, 5), rec(1, 3, 9))

    def test_pending_never_precedes(self):
        assert not precedes(rec(0, 0, None), rec(1, 100, 101))

    def test_active_includes_endpoints(self):
        op = rec(0, 3, 7)
        assert is_active(op, 3) and is_active(op, 7) and not is_active(op, 8) and not is_active(op, 2)
        assert is_active(rec(1, 3, None), 10**9)


class TestVectorTimestamp:
    def test_first_entry_decides(self):
        assert vts_compare(vts(0, 0, 0), vts(1, "inf", "inf")) is Ordering.LT

    def test_all_infinite_equal(self):
        assert vts_compare(vts("inf", "inf", "inf"), vts("inf", "inf", "inf")) is Ordering.EQ

    def test_infinity_beats_three(self):
        # frozen: the reference comparator says GT
        assert lex_reference(vts(0, "inf", "inf"), vts(0, 3, 1)) == 1
        assert vts_compare(vts(0, "inf", "inf"), vts(0, 3, 1)) is Ordering.GT

    def test_length_mismatch(self):
        with pytest.raises(ConfigurationError):
            vts_compare(vts(0, 0), vts(0, 0, 0))

    def test_rejects_negative(self):
        with pytest.raises(ConfigurationError):
            vts(-1, 0)

    def test_inf_is_singleton_and_picklable(self):
        assert pickle.loads(pickle.dumps(INF)) is INF
        assert INF > 10**30 and not INF < 5 and INF == INF and INF != 7

    def test_repr(self):
        assert repr(vts(1, "inf", 0)) == "[1,inf,0]"

    def test_finite(self):
        assert vts(1, 2).is_finite and not vts(1, "inf").is_finite


entry = st.one_of(st.integers(0, 3), st.just(INF))


@st.composite
def vectors(draw, n=None):
    n = n if n is not None else draw(st.integers(1, 4))
    return VectorTimestamp(tuple(draw(st.lists(entry, min_size=n, max_size=n))))


@st.composite
def triples(draw):
    n = draw(st.integers(1, 4))
    return draw(vectors(n)), draw(vectors(n)), draw(vectors(n))


@given(triples())
def test_vts_total_order(t):
    a, b, c = t
    sign = {Ordering.LT: -1, Ordering.EQ: 0, Ordering.GT: 1}
    assert sign[vts_compare(a, b)] == lex_reference(a, b)
    assert sign[vts_compare(a, b)] == -sign[vts_compare(b, a)]
    if a <= b and b <= c:
        assert a <= c
    assert (a < b) or (a == b) or (a > b)


@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 5)), min_size=1, max_size=8))
def test_precedes_is_strict_partial_order(spans):
    ops = [rec(i, s, s + d) for i, (s, d) in enumerate(spans)]
    for a in ops:
        assert not precedes(a, a)
        for b in ops:
            if precedes(a, b):
                assert not precedes(b, a)
            for c in ops:
                if precedes(a, b) and precedes(b, c):
                    assert precedes(a, c)


def test_lamport_order():
    assert LamportTimestamp(1, 2) > LamportTimestamp(1, 1)
    assert LamportTimestamp(2, 0) > LamportTimestamp(1, 9)
    assert repr(LamportTimestamp(3, 1)) == "<3,1>"


def small_history():
    return History((
        Event("invoke", 0, 0, "R", "write", 5, 1),
        Event("invoke", 1, 1, "R", "read", None, 2),
        Event("respond", 0, 0, "R", "write", None, 3),
        Event("respond", 1, 1, "R", "read", 5, 4, meta={"ts": vts(1, 0)}),
    ))


class TestHistory:
    def test_prefix_whole(self):
        h = small_history()
        assert history_prefix(h, 4) == h and history_prefix(h, 100) == h

    def test_prefix_empty(self):
        assert len(history_prefix(small_history(), 0)) == 0

    def test_prefix_mid_operation(self):
        ops = history_prefix(small_history(), 2).operations()
        assert ops[0].pending and ops[1].pending

    def test_operations(self):
        ops = small_history().operations()
        assert ops[0].is_write and ops[0].argument == 5 and ops[0].complete
        assert ops[1].result == 5 and ops[1].meta["ts"] == vts(1, 0)

    def test_validate_ok(self):
        small_history().validate()

    def test_validate_rejects_time_regression(self):
        h = History((Event("invoke", 0, 0, "R", "read", None, 2), Event("respond", 0, 0, "R", "read", 1, 2)))
        with pytest.raises(TraceError):
            h.validate()

    def test_validate_rejects_orphan_response(self):
        with pytest.raises(TraceError):
            History((Event("respond", 0, 0, "R", "read", 1, 1),)).validate()

    def test_validate_rejects_overlap(self):
        h = History((Event("invoke", 0, 0, "R", "read", None, 1), Event("invoke", 1, 0, "R", "read", None, 2)))
        with pytest.raises(TraceError):
            h.validate()

    def test_validate_swmr(self):
        h = History((
            Event("invoke", 0, 0, "V", "write", 1, 1), Event("respond", 0, 0, "V", "write", None, 2),
            Event("invoke", 1, 1, "V", "write", 2, 3), Event("respond", 1, 1, "V", "write", None, 4),
        ))
        h.validate()
        with pytest.raises(TraceError):
            h.validate(swmr={"V": 0})


values = st.recursive(
    st.one_of(st.none(), st.integers(-5, 50), st.just(INF)),
    lambda inner: st.one_of(st.tuples(inner, inner), vectors().map(lambda v: v),
                            st.builds(LamportTimestamp, st.integers(0, 9), st.integers(0, 4))),
    max_leaves=6,
)


@given(st.lists(values, min_size=1, max_size=6))
def test_jsonl_roundtrip(vals):
    events = tuple(
        Event("invoke", i, i % 3, "R", "write", v, i + 1, parent=None if i % 2 else 99,
              meta={"pts": ((i, vts(0, "inf")),)} if i % 3 == 0 else None)
        for i, v in enumerate(vals)
    )
    h = History(events)
    text = history_to_jsonl(h)
    assert history_from_jsonl(text) == h
    assert history_to_jsonl(history_from_jsonl(text)) == text


def test_jsonl_encodes_bottom_and_infinity():
    e = Event("invoke", 0, 0, "R1", "write", (None, vts("inf", 2)), 1)
    line = history_to_jsonl(History((e,))).strip()
    assert '"value":[null,{"vts":["inf",2]}]' in line
    assert line.startswith('{"kind":"invoke"')


def test_bad_jsonl_line():
    with pytest.raises(TraceError):
        history_from_jsonl('{"kind": "invoke"}\n')
