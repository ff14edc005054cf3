"""Histories, events, operation records and timestamp orders.

Every other module speaks in terms of these types.  Values are plain Python
objects: ``None`` is the distinguished bottom value, integers and tuples are
ordinary register contents.  Vector timestamps use an explicit :data:`INF`
entry so that lexicographic comparison over partially built timestamps is
exact.
"""

from __future__ import annotations

import enum
import functools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, NamedTuple, Sequence

BOT = None
"""The bottom value.  Encoded as JSON ``null``."""


class ConfigurationError(ValueError):
    """Raised for malformed inputs: bad process counts, mismatched lengths."""


class TraceError(ValueError):
    """Raised when a history is not well formed or cannot be decoded."""


@functools.total_ordering
class _Infinity:
    """Timestamp entry greater than every natural number and equal to itself."""

    _instance: _Infinity | None = None

    def __new__(cls) -> _Infinity:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other: object) -> bool:
        return other is self

    def __lt__(self, other: object) -> bool:
        if other is self or isinstance(other, int):
            return False
        return NotImplemented

    def __gt__(self, other: object) -> bool:
        if other is self:
            return False
        if isinstance(other, int):
            return True
        return NotImplemented

    def __hash__(self) -> int:
        return hash("linlab.INF")

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


class Ordering(enum.Enum):
    LT = -1
    EQ = 0
    GT = 1


@functools.total_ordering
@dataclass(frozen=True)
class VectorTimestamp:
    """Length-n vector over naturals and :data:`INF`, ordered lexicographically."""

    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for e in self.entries:
            if e is not INF and not (isinstance(e, int) and e >= 0):
                raise ConfigurationError(f"bad timestamp entry {e!r}")

    @classmethod
    def zeros(cls, n: int) -> VectorTimestamp:
        return cls((0,) * n)

    @classmethod
    def infinite(cls, n: int) -> VectorTimestamp:
        return cls((INF,) * n)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    @property
    def is_finite(self) -> bool:
        return INF not in self.entries

    def replace(self, index: int, value) -> VectorTimestamp:
        entries = list(self.entries)
        entries[index] = value
        return VectorTimestamp(tuple(entries))

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, VectorTimestamp):
            return NotImplemented
        return vts_compare(self, other) is Ordering.LT

    def __repr__(self) -> str:
        return "[" + ",".join("inf" if e is INF else str(e) for e in self.entries) + "]"


def vts_compare(a: VectorTimestamp, b: VectorTimestamp) -> Ordering:
    """Lexicographic comparison with INF maximal."""
    if len(a) != len(b):
        raise ConfigurationError(f"timestamp lengths differ: {len(a)} vs {len(b)}")
    for x, y in zip(a.entries, b.entries):
        if x == y:
            continue
        return Ordering.LT if x < y else Ordering.GT
    return Ordering.EQ


class LamportTimestamp(NamedTuple):
    """``<sq, pid>`` pair; tuple order is the lexicographic order we need."""

    sq: int
    pid: int

    def __repr__(self) -> str:
        return f"<{self.sq},{self.pid}>"


# ---------------------------------------------------------------------------
# Events and histories
# ---------------------------------------------------------------------------

INVOKE = "invoke"
RESPOND = "respond"
COIN = "coin"
READ = "read"
WRITE = "write"


@dataclass(frozen=True)
class Event:
    """One line of a trace.

    ``parent`` links a base-register operation to the implemented operation
    it serves; it is ``None`` for top-level operations.  ``meta`` carries
    auxiliary data such as timestamps and writer-local snapshots.
    """

    kind: str
    op_id: int | None
    proc: int
    register: str | None
    op_kind: str | None
    value: Any
    time: int
    parent: int | None = None
    meta: dict | None = None


@dataclass(frozen=True)
class OperationRecord:
    op_id: int
    proc: int
    register: str
    op_kind: str
    argument: Any = None
    result: Any = None
    invoke_time: int = 0
    respond_time: int | None = None
    parent: int | None = None
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def complete(self) -> bool:
        return self.respond_time is not None

    @property
    def pending(self) -> bool:
        return self.respond_time is None

    @property
    def is_write(self) -> bool:
        return self.op_kind == WRITE

    @property
    def is_read(self) -> bool:
        return self.op_kind == READ

    def __repr__(self) -> str:
        span = f"{self.invoke_time}..{self.respond_time if self.complete else '?'}"
        if self.is_write:
            return f"W#{self.op_id}(p{self.proc},{self.register}<-{self.argument!r},{span})"
        return f"R#{self.op_id}(p{self.proc},{self.register}->{self.result!r},{span})"


def precedes(a: OperationRecord, b: OperationRecord) -> bool:
    """True iff ``a`` responds before ``b`` is invoked."""
    return a.respond_time is not None and a.respond_time < b.invoke_time


def is_active(op: OperationRecord, t: int) -> bool:
    """``op`` started at or before ``t`` and has not responded before ``t``."""
    return op.invoke_time <= t and (op.respond_time is None or t <= op.respond_time)


@dataclass(frozen=True)
class History:
    events: tuple[Event, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    @property
    def last_time(self) -> int:
        return self.events[-1].time if self.events else 0

    def operations(self, register: str | None = None) -> dict[int, OperationRecord]:
        """Operation records keyed by op_id, in invocation order."""
        records: dict[int, OperationRecord] = {}
        for e in self.events:
            if e.kind == INVOKE:
                if register is not None and e.register != register:
                    continue
                records[e.op_id] = OperationRecord(
                    op_id=e.op_id, proc=e.proc, register=e.register, op_kind=e.op_kind,
                    argument=e.value if e.op_kind == WRITE else None,
                    invoke_time=e.time, parent=e.parent, meta=dict(e.meta or {}),
                )
            elif e.kind == RESPOND and e.op_id in records:
                rec = records[e.op_id]
                meta = dict(rec.meta)
                meta.update(e.meta or {})
                records[e.op_id] = OperationRecord(
                    op_id=rec.op_id, proc=rec.proc, register=rec.register, op_kind=rec.op_kind,
                    argument=rec.argument, result=e.value if rec.op_kind == READ else None,
                    invoke_time=rec.invoke_time, respond_time=e.time, parent=rec.parent, meta=meta,
                )
        return records

    def project(self, register: str) -> History:
        return History(tuple(e for e in self.events if e.register == register))

    def registers(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.events:
            if e.register is not None:
                seen.setdefault(e.register)
        return list(seen)

    def prefix(self, upto_time: int) -> History:
        return history_prefix(self, upto_time)

    def times(self) -> list[int]:
        return [e.time for e in self.events]

    def validate(self, swmr: dict[str, int] | None = None) -> None:
        """Raise :class:`TraceError` unless the history is well formed.

        Checks strictly increasing times, matched responses, sequential
        processes (separately for top-level and nested operations) and the
        single-writer rule.  A register is SWMR when ``swmr`` maps it to its
        writer or when a write invocation carries ``meta["writer"]``.
        """
        last = None
        open_ops: dict[int, Event] = {}
        busy: dict[tuple[int, bool], int] = {}
        writers: dict[str, int] = dict(swmr or {})
        for e in self.events:
            if last is not None and e.time <= last:
                raise TraceError(f"time not increasing at event {e}")
            last = e.time
            if e.kind == INVOKE:
                key = (e.proc, e.parent is not None)
                if key in busy:
                    raise TraceError(f"process {e.proc} overlaps op {busy[key]} with op {e.op_id}")
                if e.op_id in open_ops:
                    raise TraceError(f"duplicate op_id {e.op_id}")
                busy[key] = e.op_id
                open_ops[e.op_id] = e
                if e.op_kind == WRITE and e.meta and "writer" in e.meta:
                    writers.setdefault(e.register, e.meta["writer"])
                if e.op_kind == WRITE and e.register in writers:
                    if writers[e.register] != e.proc:
                        raise TraceError(f"second writer p{e.proc} on SWMR register {e.register}")
            elif e.kind == RESPOND:
                inv = open_ops.pop(e.op_id, None)
                if inv is None:
                    raise TraceError(f"response without invocation: {e}")
                busy.pop((inv.proc, inv.parent is not None), None)


def history_prefix(h: History, upto_time: int) -> History:
    """Events with time <= upto_time."""
    return History(tuple(e for e in h.events if e.time <= upto_time))


@dataclass(frozen=True)
class Linearization:
    """A sequential order of operations claimed to explain a history."""

    ops: tuple[OperationRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    @property
    def op_ids(self) -> tuple[int, ...]:
        return tuple(o.op_id for o in self.ops)

    def writes(self) -> tuple[int, ...]:
        return tuple(o.op_id for o in self.ops if o.is_write)

    @classmethod
    def from_ids(cls, h: History | dict[int, OperationRecord], op_ids: Iterable[int]) -> Linearization:
        records = h.operations() if isinstance(h, History) else h
        try:
            return cls(tuple(records[i] for i in op_ids))
        except KeyError as exc:
            raise TraceError(f"linearization names unknown op {exc.args[0]}") from None

    def __repr__(self) -> str:
        return "Linearization(" + ", ".join(map(repr, self.ops)) + ")"


# ---------------------------------------------------------------------------
# JSONL encoding
# ---------------------------------------------------------------------------


def encode_value(v: Any) -> Any:
    if v is INF:
        return "inf"
    if isinstance(v, VectorTimestamp):
        return {"vts": [encode_value(e) for e in v.entries]}
    if isinstance(v, LamportTimestamp):
        return {"lts": [v.sq, v.pid]}
    if isinstance(v, (tuple, list)):
        return [encode_value(x) for x in v]
    if isinstance(v, dict):
        return {str(k): encode_value(x) for k, x in v.items()}
    return v


def decode_value(v: Any) -> Any:
    if v == "inf":
        return INF
    if isinstance(v, list):
        return tuple(decode_value(x) for x in v)
    if isinstance(v, dict):
        if set(v) == {"vts"}:
            return VectorTimestamp(tuple(decode_value(x) for x in v["vts"]))
        if set(v) == {"lts"}:
            return LamportTimestamp(*v["lts"])
        return {k: decode_value(x) for k, x in v.items()}
    return v


def event_to_json(e: Event) -> str:
    doc = {
        "kind": e.kind, "op_id": e.op_id, "proc": e.proc, "register": e.register,
        "op_kind": e.op_kind, "value": encode_value(e.value), "time": e.time,
    }
    if e.parent is not None:
        doc["parent"] = e.parent
    if e.meta:
        doc["meta"] = encode_value(e.meta)
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def event_from_json(line: str) -> Event:
    try:
        doc = json.loads(line)
        return Event(
            kind=doc["kind"], op_id=doc["op_id"], proc=doc["proc"], register=doc["register"],
            op_kind=doc["op_kind"], value=decode_value(doc["value"]), time=doc["time"],
            parent=doc.get("parent"), meta=decode_value(doc["meta"]) if "meta" in doc else None,
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise TraceError(f"bad trace line: {line!r}") from exc


def history_to_jsonl(h: History) -> str:
    return "".join(event_to_json(e) + "\n" for e in h.events)


def history_from_jsonl(text: str) -> History:
    return History(tuple(event_from_json(line) for line in text.splitlines() if line.strip()))


def linearization_to_jsonl(lin: Linearization | Sequence[int]) -> str:
    ids = lin.op_ids if isinstance(lin, Linearization) else tuple(lin)
    return "".join(f"{i}\n" for i in ids)


def linearization_ids_from_jsonl(text: str) -> list[int]:
    return [int(json.loads(line)) for line in text.splitlines() if line.strip()]
