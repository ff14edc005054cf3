from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linlab.core import Event, History, Linearization, TraceError
from linlab.experiments import event_prefixes, random_swmr_history, random_workload
from linlab.impl_lamport import build_counterexample
from linlab.impl_vector import three_writer_script
from linlab.linearize import (
    OracleRefusal,
    analyze_vector,
    check_batch_invariants,
    check_linearizable,
    check_linearization,
    check_read_chain,
    check_wsl_prefixes,
    enumerate_linearizations,
    f_star,
    f_vector,
    has_linearization_with_write_prefix,
    refute_wsl,
)

from oracles import all_linearizations


def H(*rows):
    """Rows ``(kind, op_id, proc, op_kind, value)`` with times 1, 2, 3, ..."""
    kinds = {"i": "invoke", "r": "respond"}
    return History(tuple(Event(kinds[k], op, p, "R", ok, v, t + 1)
                         for t, (k, op, p, ok, v) in enumerate(rows)))


def seq_write_read(value_read):
    return H(("i", 0, 0, "write", 1), ("r", 0, 0, "write", None),
             ("i", 1, 1, "read", None), ("r", 1, 1, "read", value_read))


class TestCheckLinearization:
    def test_valid(self):
        assert check_linearization(seq_write_read(1), [0, 1], 0, "R") is None

    def test_precedence_violation(self):
        v = check_linearization(seq_write_read(0), [1, 0], 0, "R")
        assert v.clause == 2

    def test_read_value_violation(self):
        v = check_linearization(seq_write_read(0), [0, 1], 0, "R")
        assert v.clause == 3

    def test_missing_completed_op(self):
        assert check_linearization(seq_write_read(1), [0], 0, "R").clause == 1

    def test_pending_read_excluded(self):
        h = H(("i", 0, 0, "read", None))
        assert check_linearization(h, [], 0, "R") is None
        assert check_linearization(h, [0], 0, "R").clause == 1

    def test_pending_write_optional(self):
        h = H(("i", 0, 0, "write", 1), ("i", 1, 1, "read", None), ("r", 1, 1, "read", 1))
        assert check_linearization(h, [0, 1], 0, "R") is None
        assert check_linearization(h, [1], 0, "R").clause == 3


class TestOracle:
    def test_not_linearizable(self):
        assert check_linearizable(seq_write_read(0), 0, "R") is None

    def test_new_old_inversion(self):
        # W(1) overlaps two sequential reads that return 1 then 0.
        h = H(("i", 0, 0, "write", 1), ("i", 1, 1, "read", None), ("r", 1, 1, "read", 1),
              ("i", 2, 1, "read", None), ("r", 2, 1, "read", 0), ("r", 0, 0, "write", None))
        assert check_linearizable(h, 0, "R") is None
        assert list(enumerate_linearizations(h, 0, "R")) == []

    def test_concurrent_writes_both_orders(self):
        h = H(("i", 0, 0, "write", 1), ("i", 1, 1, "write", 2), ("r", 0, 0, "write", None),
              ("r", 1, 1, "write", None))
        assert set(enumerate_linearizations(h, 0, "R")) == {(0, 1), (1, 0)}

    def test_refuses_large_histories(self):
        rows = []
        for k in range(10):
            rows += [("i", k, 0, "write", k), ("r", k, 0, "write", None)]
        with pytest.raises(OracleRefusal):
            check_linearizable(H(*rows), 0, "R")
        assert check_linearizable(H(*rows), 0, "R", max_ops=10) is not None

    def test_write_prefix_search(self):
        h = H(("i", 0, 0, "write", 1), ("i", 1, 1, "write", 2), ("r", 0, 0, "write", None),
              ("r", 1, 1, "write", None), ("i", 2, 2, "read", None), ("r", 2, 2, "read", 1))
        assert has_linearization_with_write_prefix(h, [1], 0, "R")
        assert not has_linearization_with_write_prefix(h, [0], 0, "R")


@st.composite
def random_histories(draw):
    """Arbitrary well-formed histories of up to six ops, linearizable or not."""
    n = draw(st.integers(1, 3))
    total = draw(st.integers(0, 6))
    rows, open_op, next_id = [], {}, 0
    for _ in range(2 * total + 2):
        p = draw(st.integers(0, n - 1))
        if p in open_op:
            op, kind = open_op.pop(p)
            rows.append(("r", op, p, kind, draw(st.integers(0, 2)) if kind == "read" else None))
        elif next_id < total:
            kind = draw(st.sampled_from(["read", "write"]))
            rows.append(("i", next_id, p, kind, draw(st.integers(1, 2)) if kind == "write" else None))
            open_op[p] = (next_id, kind)
            next_id += 1
    return H(*rows)


@given(random_histories())
@settings(max_examples=300, deadline=None)
def test_oracle_matches_permutation_reference(h):
    expected = all_linearizations(h, "R", 0)
    got = set(enumerate_linearizations(h, 0, "R"))
    assert got == expected
    found = check_linearizable(h, 0, "R")
    assert (found is None) == (not expected)
    if found is not None:
        assert found.op_ids in expected
        assert check_linearization(h, found, 0, "R") is None
    for lin in expected:
        assert check_linearization(h, lin, 0, "R") is None


class TestFVector:
    def test_empty(self):
        assert f_vector(History(()), "R", 0).op_ids == ()

    def test_reads_of_initial_value_first(self):
        h, _ = random_workload("alg2", 0)
        lin = f_vector(h, "R", 0)
        assert check_linearization(h, lin, 0, "R") is None

    def test_three_writers_batches(self):
        a = analyze_vector(three_writer_script(), "R", 0)
        assert [b.members for b in a.batches] == [(2, 5), (0,)]
        assert check_batch_invariants(a) == []

    @given(st.integers(0, 10**6))
    @settings(max_examples=150, deadline=None)
    def test_prefix_stable_and_valid(self, seed):
        h, _ = random_workload("alg2", seed)
        pairs = []
        for g in event_prefixes(h):
            a = analyze_vector(g, "R", 0)
            assert check_batch_invariants(a) == []
            assert check_linearization(g, a.linearization, 0, "R") is None
            assert a.linearization.op_ids in all_linearizations(g, "R", 0)
            pairs.append((g, a.linearization))
        assert check_wsl_prefixes(pairs) is None
        assert check_read_chain(h, "R") == []


class TestFStar:
    def test_drops_trailing_pending_write(self):
        h = H(("i", 0, 0, "write", 1))
        assert f_star(h, [0], 0, "R").op_ids == ()

    def test_keeps_pending_write_that_was_read(self):
        h = H(("i", 0, 0, "write", 1), ("i", 1, 1, "read", None), ("r", 1, 1, "read", 1))
        assert f_star(h, [0, 1], 0, "R").op_ids == (0, 1)

    def test_rejects_invalid_base(self):
        with pytest.raises(TraceError):
            f_star(seq_write_read(1), [1, 0], 0, "R")

    @given(st.integers(0, 10**6))
    @settings(max_examples=150, deadline=None)
    def test_swmr_prefix_stable(self, seed):
        h = random_swmr_history(seed)
        pairs = []
        for g in event_prefixes(h):
            lin = f_star(g, check_linearizable(g, 0, "R"), 0, "R")
            assert check_linearization(g, lin, 0, "R") is None
            pairs.append((g, lin))
        assert check_wsl_prefixes(pairs) is None


def test_prefix_checker_catches_reorder():
    h = H(("i", 0, 0, "write", 1), ("i", 1, 1, "write", 2))
    g = H(("i", 0, 0, "write", 1))
    v = check_wsl_prefixes([(g, [0]), (h, [1, 0])])
    assert v is not None and v.prefix_writes == (0,) and v.full_writes == (1, 0)
    assert check_wsl_prefixes([(g, [0]), (h, [0, 1])]) is None


class TestRefuteWSL:
    def test_single_write_not_refuted(self):
        g = H(("i", 0, 0, "write", 1))
        h = H(("i", 0, 0, "write", 1), ("r", 0, 0, "write", None))
        assert refute_wsl(g, [h], 0, "R") is None

    def test_lamport_counterexample(self):
        hs = build_counterexample()
        w = refute_wsl(hs["G"], [hs["H_case1"], hs["H_case2"]], 0, "R")
        assert w == {(0, 3): 1, (3,): 0, (3, 0): 0}

    def test_swmr_never_refuted(self):
        for seed in range(20):
            h = random_swmr_history(seed)
            prefixes = event_prefixes(h)
            g = prefixes[len(prefixes) // 2]
            assert refute_wsl(g, [h], 0, "R") is None

    def test_extension_must_extend(self):
        with pytest.raises(TraceError):
            refute_wsl(seq_write_read(1), [H(("i", 0, 0, "read", None))], 0, "R")
