"""Linearization functions, checkers and a brute-force oracle.

* :func:`check_linearization` validates a claimed linearization.
* :func:`check_linearizable` / :func:`enumerate_linearizations` search
  exhaustively over small histories.
* :func:`f_vector` is the online write-strong-linearization for
  :class:`~linlab.impl_vector.VectorRegister` histories.
* :func:`f_star` adapts any linearization of a single-writer history.
* :func:`check_wsl_prefixes` and :func:`refute_wsl` test prefix stability
  of write orders.

All functions look at top-level operations only (``parent is None``) on one
register; nested cell accesses are ignored except where ``f_vector`` reads
their metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence

from .core import WRITE, History, Linearization, OperationRecord, TraceError, VectorTimestamp, precedes

DEFAULT_MAX_OPS = 9


class OracleRefusal(ValueError):
    """The history is too large for exhaustive search."""


@dataclass(frozen=True)
class Violation:
    clause: int  # 1: completeness, 2: precedence, 3: read semantics
    reason: str
    ops: tuple = ()


@dataclass(frozen=True)
class PrefixViolation:
    prefix_time: int
    prefix_writes: tuple[int, ...]
    full_writes: tuple[int, ...]


def top_level_ops(h: History, register: str | None = None) -> dict[int, OperationRecord]:
    """Top-level operation records of one register, in invocation order."""
    ops = {i: op for i, op in h.operations(register).items() if op.parent is None}
    if register is None:
        names = {op.register for op in ops.values()}
        if len(names) > 1:
            raise TraceError(f"history mixes registers {sorted(names)}; pass register=")
    return ops


# ---------------------------------------------------------------------------
# Checking a given linearization
# ---------------------------------------------------------------------------


def check_linearization(h: History, lin: Linearization | Sequence[int], initial: Any = None,
                        register: str | None = None) -> Violation | None:
    """Return ``None`` if ``lin`` is a valid linearization of ``h``, else the first violation."""
    ids = lin.op_ids if isinstance(lin, Linearization) else tuple(lin)
    if register is None and isinstance(lin, Linearization) and lin.ops:
        register = lin.ops[0].register
    ops = top_level_ops(h, register)
    seen: set[int] = set()
    for i in ids:
        if i not in ops:
            return Violation(1, f"op {i} is not an operation of the history", (i,))
        if i in seen:
            return Violation(1, f"op {i} appears twice", (i,))
        seen.add(i)
        if ops[i].pending and not ops[i].is_write:
            return Violation(1, f"pending read {i} included", (i,))
    for i, op in ops.items():
        if op.complete and i not in seen:
            return Violation(1, f"completed op {i} missing", (i,))
    position = {i: k for k, i in enumerate(ids)}
    for a in ids:
        for b in ids:
            if position[a] < position[b] and precedes(ops[b], ops[a]):
                return Violation(2, f"op {b} precedes op {a} but is placed after it", (b, a))
    current = initial
    last_write = None
    for i in ids:
        op = ops[i]
        if op.is_write:
            current, last_write = op.argument, i
        elif op.result != current:
            return Violation(3, f"read {i} returns {op.result!r} but the last write "
                                f"({'initial' if last_write is None else last_write}) holds {current!r}",
                             (last_write, i))
    return None


# ---------------------------------------------------------------------------
# Exhaustive oracle
# ---------------------------------------------------------------------------


class _Search:
    """Bitmask search space shared by the oracle entry points."""

    def __init__(self, h: History, initial: Any, register: str | None, max_ops: int):
        ops = top_level_ops(h, register)
        # Pending reads impose nothing and are left out.
        self.ops = [op for op in ops.values() if op.complete or op.is_write]
        if len(self.ops) > max_ops:
            raise OracleRefusal(f"{len(self.ops)} operations exceed the oracle bound of {max_ops}")
        self.initial = initial
        k = len(self.ops)
        self.pred = [0] * k
        for b in range(k):
            for a in range(k):
                if a != b and precedes(self.ops[a], self.ops[b]):
                    self.pred[b] |= 1 << a
        self.required = sum(1 << i for i, op in enumerate(self.ops) if op.complete)

    def candidates(self, done: int) -> Iterator[int]:
        for i in range(len(self.ops)):
            if not done >> i & 1 and self.pred[i] & ~done == 0:
                yield i


def check_linearizable(h: History, initial: Any = None, register: str | None = None,
                       max_ops: int = DEFAULT_MAX_OPS) -> Linearization | None:
    """Some valid linearization of ``h``, or ``None`` when none exists.

    Pending writes are placed only if that helps; pending reads are never
    placed.  Raises :class:`OracleRefusal` above ``max_ops`` operations.
    """
    s = _Search(h, initial, register, max_ops)
    dead: set[tuple[int, Any]] = set()

    def dfs(done: int, value: Any, last: int) -> list[int] | None:
        if done & s.required == s.required:
            return []
        key = (done, last)
        if key in dead:
            return None
        for i in s.candidates(done):
            op = s.ops[i]
            if op.is_write:
                rest = dfs(done | 1 << i, op.argument, i)
            elif op.result == value:
                rest = dfs(done | 1 << i, value, last)
            else:
                continue
            if rest is not None:
                return [i] + rest
        dead.add(key)
        return None

    order = dfs(0, initial, -1)
    if order is None:
        return None
    return Linearization(tuple(s.ops[i] for i in order))


def enumerate_linearizations(h: History, initial: Any = None, register: str | None = None,
                             max_ops: int = DEFAULT_MAX_OPS) -> Iterator[tuple[int, ...]]:
    """Every valid linearization of ``h`` as a tuple of op ids.

    Each subset of pending writes may or may not be included.
    """
    s = _Search(h, initial, register, max_ops)
    k = len(s.ops)

    def rec(done: int, value: Any, prefix: list[int]) -> Iterator[tuple[int, ...]]:
        if done & s.required == s.required:
            yield tuple(s.ops[i].op_id for i in prefix)
        for i in s.candidates(done):
            op = s.ops[i]
            if op.is_write:
                prefix.append(i)
                yield from rec(done | 1 << i, op.argument, prefix)
                prefix.pop()
            elif op.result == value:
                prefix.append(i)
                yield from rec(done | 1 << i, value, prefix)
                prefix.pop()

    if k == 0:
        yield ()
        return
    yield from rec(0, initial, [])


def write_sequences(h: History, initial: Any = None, register: str | None = None,
                    max_ops: int = DEFAULT_MAX_OPS) -> set[tuple[int, ...]]:
    ops = top_level_ops(h, register)
    return {tuple(i for i in lin if ops[i].is_write)
            for lin in enumerate_linearizations(h, initial, register, max_ops)}


def has_linearization_with_write_prefix(h: History, prefix: Sequence[int], initial: Any = None,
                                        register: str | None = None,
                                        max_ops: int = DEFAULT_MAX_OPS) -> bool:
    """Does some valid linearization of ``h`` begin its write sequence with ``prefix``?"""
    s = _Search(h, initial, register, max_ops)
    index = {op.op_id: i for i, op in enumerate(s.ops)}
    if any(w not in index for w in prefix):
        return False
    prefix_idx = [index[w] for w in prefix]
    dead: set[tuple[int, int, int]] = set()

    def dfs(done: int, last: int, nw: int) -> bool:
        if nw == len(prefix_idx) and done & s.required == s.required:
            return True
        key = (done, last, nw)
        if key in dead:
            return False
        value = s.initial if last < 0 else s.ops[last].argument
        for i in s.candidates(done):
            op = s.ops[i]
            if op.is_write:
                if nw < len(prefix_idx):
                    if i != prefix_idx[nw]:
                        continue
                    if dfs(done | 1 << i, i, nw + 1):
                        return True
                elif dfs(done | 1 << i, i, nw):
                    return True
            elif op.result == value and dfs(done | 1 << i, last, nw):
                return True
        dead.add(key)
        return False

    return dfs(0, -1, 0)


# ---------------------------------------------------------------------------
# Prefix stability
# ---------------------------------------------------------------------------


def _writes(lin: Linearization | Sequence[int], h: History) -> tuple[int, ...]:
    if isinstance(lin, Linearization):
        return lin.writes()
    ops = h.operations()
    return tuple(i for i in lin if ops[i].op_kind == WRITE)


def check_wsl_prefixes(pairs: Iterable[tuple[History, Linearization | Sequence[int]]]) -> PrefixViolation | None:
    """Check that the write sequence of each prefix is a prefix of its extensions'.

    ``pairs`` is any family of ``(history, linearization)`` pairs.  Each pair
    is compared with its longest proper prefix in the family; by
    transitivity that covers every prefix relation.
    """
    items = sorted(((h, _writes(lin, h)) for h, lin in pairs), key=lambda p: len(p[0]))
    for j, (h, wh) in enumerate(items):
        for i in range(j - 1, -1, -1):
            g, wg = items[i]
            if len(g) <= len(h) and h.events[: len(g)] == g.events:
                if wh[: len(wg)] != wg:
                    return PrefixViolation(g.last_time, wg, wh)
                break
    return None


def refute_wsl(g: History, extensions: Sequence[History], initial: Any = None,
               register: str | None = None, max_ops: int = DEFAULT_MAX_OPS) -> dict | None:
    """Look for a proof that no write strong-linearization covers ``g`` and ``extensions``.

    Returns ``{linearization of g: index of an extension it cannot be
    extended to}`` covering every valid linearization of ``g``, or ``None``
    when some linearization of ``g`` survives all extensions.
    """
    for h in extensions:
        if h.events[: len(g)] != g.events:
            raise TraceError("every extension must have g as a prefix")
    ops = top_level_ops(g, register)
    witness: dict[tuple[int, ...], int] = {}
    verdicts: dict[tuple[int, ...], int | None] = {}
    for lin in enumerate_linearizations(g, initial, register, max_ops):
        writes = tuple(i for i in lin if ops[i].is_write)
        if writes not in verdicts:
            verdicts[writes] = None
            for k, h in enumerate(extensions):
                if not has_linearization_with_write_prefix(h, writes, initial, register, max_ops):
                    verdicts[writes] = k
                    break
        if verdicts[writes] is None:
            return None
        witness[lin] = verdicts[writes]
    return witness


# ---------------------------------------------------------------------------
# Online linearization of vector-timestamp histories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Batch:
    index: int
    time: int
    w_i: int
    candidates: frozenset[int]
    pts: dict = field(compare=False, hash=False)
    members: tuple[int, ...] = ()


@dataclass
class VectorAnalysis:
    linearization: Linearization
    batches: list[Batch]
    write_ts: dict[int, VectorTimestamp]


def _val_writes(h: History, register: str):
    prefix = register + ".Val["
    for e in h.events:
        if e.kind == "invoke" and e.op_kind == WRITE and e.parent is not None and (e.register or "").startswith(prefix):
            yield e


def analyze_vector(h: History, register: str = "R", initial: Any = 0) -> VectorAnalysis:
    """Run the batch construction and read placement over a vector-register history."""
    ops = top_level_ops(h, register)
    writes = {i: op for i, op in ops.items() if op.is_write}
    write_ts: dict[int, VectorTimestamp] = {}
    wseq: list[int] = []
    placed: set[int] = set()
    batches: list[Batch] = []
    for e in _val_writes(h, register):
        w_i = e.parent
        if w_i not in writes:
            raise TraceError(f"cell write {e.op_id} has no parent write on {register}")
        write_ts[w_i] = e.value[1]
        if w_i in placed:
            continue
        pts = dict((e.meta or {}).get("pts", ()))
        active = {w for w, op in writes.items()
                  if w not in placed and op.invoke_time <= e.time
                  and (op.respond_time is None or e.time <= op.respond_time)}
        missing = active - set(pts)
        if missing:
            raise TraceError(f"no partial timestamp recorded for writes {sorted(missing)} at time {e.time}")
        mine = pts[w_i]
        chosen = [w for w in active if not pts[w] > mine]
        chosen.sort(key=lambda w: (pts[w], writes[w].proc))
        batches.append(Batch(len(batches) + 1, e.time, w_i, frozenset(active),
                             {w: pts[w] for w in active}, tuple(chosen)))
        wseq.extend(chosen)
        placed.update(chosen)

    # Place completed reads.
    after: dict[int, list[OperationRecord]] = {}
    front: list[OperationRecord] = []
    ts_to_write = {ts: w for w, ts in write_ts.items()}
    for op in ops.values():
        if not op.is_read or op.pending:
            continue
        ts = op.meta.get("ts")
        if ts is None:
            raise TraceError(f"read {op.op_id} carries no timestamp")
        if ts == VectorTimestamp.zeros(len(ts)) and op.result == initial:
            front.append(op)
            continue
        w = ts_to_write.get(ts)
        if w is None or writes[w].argument != op.result:
            raise TraceError(f"read {op.op_id} returns ({op.result!r}, {ts}) which no write produced")
        after.setdefault(w, []).append(op)
    out: list[OperationRecord] = sorted(front, key=lambda o: o.invoke_time)
    for w in wseq:
        out.append(writes[w])
        out.extend(sorted(after.get(w, ()), key=lambda o: o.invoke_time))
    return VectorAnalysis(Linearization(tuple(out)), batches, write_ts)


def f_vector(h: History, register: str = "R", initial: Any = 0) -> Linearization:
    return analyze_vector(h, register, initial).linearization


def check_batch_invariants(analysis: VectorAnalysis) -> list[str]:
    """Return descriptions of every violated batch fact (empty when clean)."""
    problems: list[str] = []
    ts = analysis.write_ts
    seen_ts: dict[VectorTimestamp, int] = {}
    for w, t in ts.items():
        if not t.is_finite:
            problems.append(f"write {w} stored a timestamp with an infinite entry")
        if t in seen_ts:
            problems.append(f"writes {seen_ts[t]} and {w} share timestamp {t}")
        seen_ts[t] = w
    for b in analysis.batches:
        if b.w_i not in b.members:
            problems.append(f"batch {b.index}: w_i={b.w_i} missing from its own batch")
            continue
        if b.pts[b.w_i] != ts[b.w_i]:
            problems.append(f"batch {b.index}: pts(w_i)={b.pts[b.w_i]} differs from ts={ts[b.w_i]}")
        for w in b.members:
            if w != b.w_i and not b.pts[w] < ts[b.w_i]:
                problems.append(f"batch {b.index}: pts({w})={b.pts[w]} not below ts(w_i)={ts[b.w_i]}")
            if w in ts and ts[w] > ts[b.w_i]:
                problems.append(f"batch {b.index}: ts({w})={ts[w]} above ts(w_i)={ts[b.w_i]}")
        order = [b.pts[w] for w in b.members]
        if any(order[k] > order[k + 1] for k in range(len(order) - 1)):
            problems.append(f"batch {b.index}: members not in increasing pts order")
    for i, b in enumerate(analysis.batches):
        for later in analysis.batches[i + 1:]:
            for w in b.members:
                for w2 in later.members:
                    if w in ts and w2 in ts and not ts[w2] > ts[w]:
                        problems.append(f"batches {b.index}<{later.index}: ts({w2})={ts[w2]} "
                                        f"not above ts({w})={ts[w]}")
    return problems


def check_read_chain(h: History, register: str = "R") -> list[str]:
    """Reads that follow one another in real time return non-decreasing timestamps."""
    reads = [op for op in top_level_ops(h, register).values() if op.is_read and op.complete]
    problems = []
    for r in reads:
        for r2 in reads:
            if precedes(r, r2) and r2.meta["ts"] < r.meta["ts"]:
                problems.append(f"read {r2.op_id} returns older timestamp than earlier read {r.op_id}")
    return problems


# ---------------------------------------------------------------------------
# Single-writer registers
# ---------------------------------------------------------------------------


def f_star(h: History, base: Linearization | Sequence[int], initial: Any = None,
           register: str | None = None) -> Linearization:
    """Drop the last operation of ``base`` when it is a write still pending in ``h``.

    ``base`` must already be a valid linearization of the single-writer
    history ``h``; anything else raises :class:`TraceError`.
    """
    if not isinstance(base, Linearization):
        base = Linearization.from_ids(top_level_ops(h, register), base)
    problem = check_linearization(h, base, initial, register)
    if problem is not None:
        raise TraceError(f"base linearization is invalid: {problem.reason}")
    if base.ops and base.ops[-1].is_write and base.ops[-1].pending:
        return Linearization(base.ops[:-1])
    return base
