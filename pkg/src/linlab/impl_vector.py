"""Multi-writer register from single-writer cells using vector timestamps.

A writer ``p_k`` builds its timestamp one entry at a time while reading the
cells: entry ``i`` is copied from ``Val[i]``'s own entry, plus one for its
own slot.  Entries it has not read yet stay at :data:`~linlab.core.INF`.
Each cell write records, as trace metadata, the partial timestamp of every
write in progress at that instant.  That snapshot is what the online
linearization function needs to order concurrent writes.
"""

from __future__ import annotations

from typing import Any

from .core import INF, WRITE, History, VectorTimestamp
from .registers import SteppedRegister


class VectorRegister(SteppedRegister):
    """Cells hold ``(value, VectorTimestamp)``; reads return the value with the largest timestamp."""

    def __init__(self, name: str, n: int, initial: Any = 0):
        super().__init__(name, n, initial)
        self.new_ts: dict[int, list] = {p: [INF] * n for p in range(n)}

    def initial_cell(self, i: int):
        return (self.initial, VectorTimestamp.zeros(self.n))

    def write_program(self, op_id: int, proc: int, value: Any):
        k = proc + 1
        new_ts = self.new_ts[proc]
        for i in range(1, self.n + 1):
            _, ts = yield ("read", i)
            new_ts[i - 1] = ts[i - 1] + (1 if i == k else 0)
        final = VectorTimestamp(tuple(new_ts))
        yield ("write", k, (value, final))
        yield ("local", "reset")
        self.new_ts[proc] = [INF] * self.n
        return None, final

    def read_program(self, op_id: int, proc: int):
        best = None
        for i in range(1, self.n + 1):
            cell = yield ("read", i)
            if best is None or cell[1] > best[1]:
                best = cell
        return best

    def write_meta(self, op_id: int) -> dict:
        snapshot = tuple(
            (w, VectorTimestamp(tuple(self.new_ts[op.proc])))
            for w, op in self._ops.items()
            if op.kind == WRITE and not op.done
        )
        return {"pts": snapshot}


def mw_write(reg: VectorRegister, proc: int, value: Any) -> VectorTimestamp:
    """Run a whole write by ``proc`` without interleaving; return its timestamp."""
    reg.write(proc, value)
    return reg.cells[proc + 1][1]


def mw_read(reg: VectorRegister, proc: int) -> tuple[Any, VectorTimestamp]:
    """Run a whole read by ``proc``; return ``(value, timestamp)``."""
    reg.read(proc)
    last = reg.trace.events[-1]
    return last.value, last.meta["ts"]


def three_writer_config():
    """Three overlapping writes whose batch order differs from completion order.

    Process 0 starts ``w1`` (value 1) and reads one cell.  Process 2 starts
    ``w3`` (value 3) and reads two cells.  Process 1 then runs ``w2``
    (value 2) to completion, so when ``w2`` writes its cell, ``w3``'s
    partial timestamp ``[0,0,inf]`` is below ``w2``'s ``[0,1,0]`` while
    ``w1``'s ``[1,inf,inf]`` is above it.  ``w3`` and ``w1`` then finish
    and process 1 reads, getting ``w1``'s value.
    """
    from .sim import Advance, Read, ScriptedAdversary, SimConfig, Write, one_shot

    script = [Advance(0)] * 2 + [Advance(2)] * 3 + [Advance(1)] * 6
    script += [Advance(2)] * 3 + [Advance(0)] * 4 + [Advance(1)] * 4
    return SimConfig(
        programs=[one_shot(Write("R", 1)), one_shot(Write("R", 2), Read("R")), one_shot(Write("R", 3))],
        registers=lambda: {"R": VectorRegister("R", 3, 0)},
        adversary=lambda: ScriptedAdversary(script),
    )


def three_writer_script() -> History:
    from .sim import run

    return run(three_writer_config()).history
