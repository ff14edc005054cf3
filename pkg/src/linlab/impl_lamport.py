"""Multi-writer register from single-writer cells using Lamport timestamps.

Linearizable, but its write order can be forced to change after the fact,
so no write strong-linearization exists.  :func:`build_counterexample`
produces the three histories that show it.
"""

from __future__ import annotations

from typing import Any

from .core import WRITE, History, LamportTimestamp
from .registers import SteppedRegister
from .sim import Advance, ScriptedAdversary, SimConfig, one_shot, run
from .sim import Read as ReadAction
from .sim import Write as WriteAction

COUNTEREXAMPLE_VALUES = (1, 2, 3)


class LamportRegister(SteppedRegister):
    """Cell ``Val[i]`` starts as ``(initial, <0,i>)``; a write takes ``max sq + 1``."""

    def initial_cell(self, i: int):
        return (self.initial, LamportTimestamp(0, i))

    def write_program(self, op_id: int, proc: int, value: Any):
        k = proc + 1
        top = 0
        for i in range(1, self.n + 1):
            _, ts = yield ("read", i)
            top = max(top, ts.sq)
        ts = LamportTimestamp(top + 1, k)
        yield ("write", k, (value, ts))
        return None, ts

    def read_program(self, op_id: int, proc: int):
        best = None
        for i in range(1, self.n + 1):
            cell = yield ("read", i)
            if best is None or cell[1] > best[1]:
                best = cell
        return best


def lam_write(reg: LamportRegister, proc: int, value: Any) -> LamportTimestamp:
    reg.write(proc, value)
    return reg.cells[proc + 1][1]


def lam_read(reg: LamportRegister, proc: int) -> tuple[Any, LamportTimestamp]:
    reg.read(proc)
    last = reg.trace.events[-1]
    return last.value, last.meta["ts"]


def counterexample_config(case: int) -> SimConfig:
    """Scripted run behind case 1 or case 2 of :func:`build_counterexample`."""
    v, v2, v3 = COUNTEREXAMPLE_VALUES
    if case == 1:
        third = one_shot(ReadAction("R"))
    else:
        third = one_shot(WriteAction("R", v3), ReadAction("R"))
    # p1 (proc 0) starts W1 and reads Val[1], Val[2]; p2 runs W2 to completion.
    script = [Advance(0), Advance(0), Advance(0)]
    script += [Advance(1)] * 5
    if case == 2:
        script += [Advance(2)] * 5  # W3: invoke, three reads, cell write + respond
    script += [Advance(0), Advance(0)]  # W1 reads Val[3], then writes Val[1]
    script += [Advance(2)] * 4  # read by p3
    return SimConfig(
        programs=[one_shot(WriteAction("R", v)), one_shot(WriteAction("R", v2)), third],
        registers=lambda: {"R": LamportRegister("R", 3, 0)},
        adversary=lambda: ScriptedAdversary(script),
    )


def build_counterexample() -> dict[str, History]:
    """Histories G, H_case1 and H_case2 over a three-process Lamport register ``R``.

    In G, W1 by process 0 is pending after reading two cells and W2 by
    process 1 has completed.  H_case1 finishes W1 and then lets process 2
    read.  H_case2 first runs a write W3 by process 2, then finishes W1,
    then lets process 2 read.
    """
    h1 = run(counterexample_config(1)).history
    h2 = run(counterexample_config(2)).history
    cut = counterexample_cut(h1)
    g = h1.prefix(cut)
    if h2.prefix(cut) != g:
        raise AssertionError("case histories do not share the prefix G")
    return {"G": g, "H_case1": h1, "H_case2": h2}


def counterexample_cut(h: History) -> int:
    """Time at which W2 (the write by process 1) responds; G ends there."""
    for op in h.operations("R").values():
        if op.proc == 1 and op.op_kind == WRITE:
            return op.respond_time
    raise LookupError("no write by process 1")
