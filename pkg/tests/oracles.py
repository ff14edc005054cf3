"""Reference implementations used to cross-check the package.

These deliberately share no code with ``linlab.linearize``: they rebuild
operation intervals straight from raw events and try every permutation.
"""

from __future__ import annotations

import itertools
import math

from linlab.core import INF


def lex_reference(a, b) -> int:
    """-1, 0 or 1 comparing two timestamp vectors, INF mapped to float infinity."""
    fa = tuple(math.inf if x is INF else x for x in a)
    fb = tuple(math.inf if x is INF else x for x in b)
    return (fa > fb) - (fa < fb)


def intervals(history, register):
    """{op_id: [kind, proc, arg, result, start, end]} for top-level ops on ``register``."""
    ops = {}
    for e in history.events:
        if e.register != register or e.parent is not None:
            continue
        if e.kind == "invoke":
            ops[e.op_id] = [e.op_kind, e.proc, e.value if e.op_kind == "write" else None, None, e.time, None]
        elif e.kind == "respond":
            ops[e.op_id][3] = e.value
            ops[e.op_id][5] = e.time
    return ops


def valid_order(ops, order, initial) -> bool:
    pos = {o: k for k, o in enumerate(order)}
    for a in order:
        for b in order:
            ea = ops[a][5]
            if ea is not None and ea < ops[b][4] and pos[b] < pos[a]:
                return False
    value = initial
    for o in order:
        kind, _, arg, res, _, _ = ops[o]
        if kind == "write":
            value = arg
        elif res != value:
            return False
    return True


def all_linearizations(history, register, initial):
    """Every valid order: all completed ops plus any subset of pending writes."""
    ops = intervals(history, register)
    done = [o for o, v in ops.items() if v[5] is not None]
    pending_w = [o for o, v in ops.items() if v[5] is None and v[0] == "write"]
    out = set()
    for r in range(len(pending_w) + 1):
        for extra in itertools.combinations(pending_w, r):
            for perm in itertools.permutations(done + list(extra)):
                if valid_order(ops, perm, initial):
                    out.add(perm)
    return out


def is_linearizable(history, register, initial) -> bool:
    return bool(all_linearizations(history, register, initial))
