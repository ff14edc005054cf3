"""Register back-ends driven by the simulation kernel.

* :class:`AtomicRegister` executes every operation in a single step.
* :class:`AdversarialLinearizableRegister` lets the adversary pick each
  read's result, constrained only by linearizability of the register's
  history so far.
* :class:`AdversarialWSLRegister` additionally keeps an append-only commit
  log of writes; writes can only be linearized in log order, so the write
  sequence of any prefix stays a prefix of every extension.
* :class:`SteppedRegister` is the base for registers built out of atomic
  single-writer cells, one cell access per step.

Read results are chosen by *source*: the op id of the write whose value
the read returns, or ``None`` for the initial value.  Working with sources
rather than raw values makes the monitor exact even when two writes store
equal values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Generator

from .core import INVOKE, READ, RESPOND, WRITE, ConfigurationError
from .sim import IllegalDecision, MonitorViolation, Trace

_DEFAULT = object()
_W = "w"  # marker for a linearized pending write inside a monitor config


@dataclass
class _Op:
    proc: int
    kind: str
    argument: Any
    invoke_time: int
    done: bool = False
    result: Any = None
    source: Any = None
    chosen: Any = _DEFAULT


class Register:
    """Common bookkeeping: op table, trace emission, SWMR and busy checks."""

    adversarial = False

    def __init__(self, name: str, initial: Any = None, writer: int | None = None):
        self.name = name
        self.initial = initial
        self.writer = writer
        self.trace: Trace | None = None
        self._ops: dict[int, _Op] = {}
        self._busy: dict[int, int] = {}

    def attach(self, trace: Trace) -> None:
        self.trace = trace

    def _tr(self) -> Trace:
        if self.trace is None:
            self.trace = Trace()
        return self.trace

    def owns(self, op_id: int) -> bool:
        return op_id in self._ops

    def is_read(self, op_id: int) -> bool:
        return self._ops[op_id].kind == READ

    def is_done(self, op_id: int) -> bool:
        return self._ops[op_id].done

    def result(self, op_id: int) -> Any:
        op = self._ops[op_id]
        if not op.done:
            raise IllegalDecision(f"op {op_id} is still pending")
        return op.result

    def pending_ops(self) -> list[int]:
        return [i for i, op in self._ops.items() if not op.done]

    def _start(self, proc: int, kind: str, value: Any) -> int:
        if kind not in (READ, WRITE):
            raise ConfigurationError(f"unknown op kind {kind!r}")
        if proc in self._busy:
            raise IllegalDecision(f"process {proc} already has op {self._busy[proc]} pending on {self.name}")
        if kind == WRITE and self.writer is not None and proc != self.writer:
            raise ConfigurationError(f"p{proc} may not write SWMR register {self.name} (writer is p{self.writer})")
        tr = self._tr()
        op_id = tr.new_op_id()
        e = tr.emit(INVOKE, proc, self.name, kind, value if kind == WRITE else None, op_id=op_id)
        self._ops[op_id] = _Op(proc, kind, value if kind == WRITE else None, e.time)
        self._busy[proc] = op_id
        return op_id

    def _finish(self, op_id: int, result: Any, meta: dict | None = None) -> None:
        op = self._ops[op_id]
        op.done = True
        op.result = result if op.kind == READ else None
        self._busy.pop(op.proc, None)
        self._tr().emit(RESPOND, op.proc, self.name, op.kind, op.result, op_id=op_id, meta=meta)

    def _pending_check(self, op_id: int) -> _Op:
        op = self._ops.get(op_id)
        if op is None:
            raise IllegalDecision(f"op {op_id} does not belong to {self.name}")
        if op.done:
            raise IllegalDecision(f"op {op_id} already responded")
        return op

    def commit(self, op_ids: tuple[int, ...]) -> None:
        raise IllegalDecision(f"{type(self).__name__} {self.name} takes no commitments")

    def choose(self, op_id: int, source: Any) -> None:
        raise IllegalDecision(f"{type(self).__name__} {self.name} takes no read choices")

    # Convenience for driving a register outside the kernel.
    def read(self, proc: int) -> Any:
        op_id = self.invoke(proc, READ)
        while not self.is_done(op_id):
            self.step(op_id)
        return self.result(op_id)

    def write(self, proc: int, value: Any) -> None:
        op_id = self.invoke(proc, WRITE, value)
        while not self.is_done(op_id):
            self.step(op_id)


class AtomicRegister(Register):
    """Invocation and response happen in the same step."""

    def __init__(self, name: str, initial: Any = None, writer: int | None = None):
        super().__init__(name, initial, writer)
        self.current = initial

    def invoke(self, proc: int, op_kind: str, value: Any = None) -> int:
        op_id = self._start(proc, op_kind, value)
        if op_kind == WRITE:
            self.current = value
            self._finish(op_id, None)
        else:
            self._finish(op_id, self.current)
        return op_id

    def step(self, op_id: int) -> None:
        raise IllegalDecision(f"atomic op {op_id} has no further steps")


class AdversarialLinearizableRegister(Register):
    """Register whose read results are picked by the adversary.

    An online monitor keeps every configuration the history could be in:
    ``(current source, linearized-but-pending ops, commit-log position)``.
    A response is accepted only when some configuration has already
    linearized the responding op with the chosen source; configurations
    that did not are discarded.  This is the standard configuration-set
    check for linearizability, evaluated one response at a time.

    Commitments are recorded in :attr:`commit_log` but do not constrain the
    linearization.
    """

    adversarial = True
    ordered = False

    def __init__(self, name: str, initial: Any = None, writer: int | None = None):
        super().__init__(name, initial, writer)
        self._configs: set[tuple] = {(None, frozenset(), 0)}
        self._pending: dict[int, str] = {}
        self.commit_log: list[int] = []
        self.commit_snapshots: list[tuple[int, tuple[int, ...]]] = []

    # -- op lifecycle -----------------------------------------------------

    def invoke(self, proc: int, op_kind: str, value: Any = None) -> int:
        op_id = self._start(proc, op_kind, value)
        self._pending[op_id] = op_kind
        return op_id

    def choose(self, op_id: int, source: Any) -> None:
        op = self._pending_check(op_id)
        if op.kind != READ:
            raise IllegalDecision(f"op {op_id} is a write; only reads take a choice")
        if source is not None and (source not in self._ops or self._ops[source].kind != WRITE):
            raise IllegalDecision(f"source {source} is not a write on {self.name}")
        op.chosen = source

    def step(self, op_id: int) -> None:
        op = self._pending_check(op_id)
        if op.kind == WRITE:
            self.respond(op_id)
        else:
            self.respond(op_id, op.chosen)

    def respond(self, op_id: int, source: Any = _DEFAULT) -> Any:
        op = self._pending_check(op_id)
        if op.kind == WRITE:
            log = self._extended_log(op_id)
            configs = self._configs_with(op_id, _W, log)
            if not configs:
                raise MonitorViolation(f"write {op_id} on {self.name} cannot be linearized")
            self._accept(op_id, configs, log)
            self._finish(op_id, None)
            return None
        if source is _DEFAULT:
            source = self.default_source(op_id)
        log = self._extended_log(source)
        configs = self._configs_with(op_id, source, log)
        if not configs:
            raise MonitorViolation(
                f"read {op_id} on {self.name} cannot return the value of "
                f"{'the initial value' if source is None else f'write {source}'}"
            )
        self._accept(op_id, configs, log)
        op.source = source
        value = self.initial if source is None else self._ops[source].argument
        self._finish(op_id, value)
        return value

    # -- adversary helpers ------------------------------------------------

    def legal_sources(self, op_id: int) -> list[Any]:
        """Sources the pending read ``op_id`` may still return, oldest first."""
        self._pending_check(op_id)
        legal = {src for src, lin, _ in self._closure(self._configs, self.commit_log)
                 for o, src in lin if o == op_id}
        if self.ordered:
            for w, kind in self._pending.items():
                if kind == WRITE and w not in self.commit_log and w not in legal:
                    if self._configs_with(op_id, w, self.commit_log + [w]):
                        legal.add(w)
        return sorted(legal, key=lambda s: -1 if s is None else self._ops[s].invoke_time)

    def default_source(self, op_id: int) -> Any:
        legal = self._closure_sources(op_id)
        if not legal:
            legal = self.legal_sources(op_id)
        return legal[-1]

    def _closure_sources(self, op_id: int) -> list[Any]:
        legal = {src for src, lin, _ in self._closure(self._configs, self.commit_log)
                 for o, src in lin if o == op_id}
        return sorted(legal, key=lambda s: -1 if s is None else self._ops[s].invoke_time)

    def commit(self, op_ids: tuple[int, ...]) -> None:
        seen = set(self.commit_log)
        for w in op_ids:
            op = self._ops.get(w)
            if op is None or op.kind != WRITE:
                raise IllegalDecision(f"{w} is not a write on {self.name}")
            if w in seen:
                raise IllegalDecision(f"write {w} already committed on {self.name}")
            seen.add(w)
        self._commit_validated(list(op_ids))

    def _commit_validated(self, op_ids: list[int]) -> None:
        self.commit_log.extend(op_ids)
        self.commit_snapshots.append((self._tr().clock, tuple(self.commit_log)))

    # -- monitor internals ------------------------------------------------

    def _extended_log(self, op_id: Any) -> list[int]:
        return self.commit_log

    def _accept(self, op_id: int, configs: set, log: list[int]) -> None:
        if log is not self.commit_log:
            self._commit_validated(log[len(self.commit_log):])
        self._configs = configs
        del self._pending[op_id]

    def _configs_with(self, op_id: int, marker: Any, log: list[int]) -> set:
        out = set()
        for src, lin, pos in self._closure(self._configs, log):
            if (op_id, marker) in lin:
                out.add((src, lin - {(op_id, marker)}, pos))
        return out

    def _closure(self, configs, log) -> set:
        index = {w: k for k, w in enumerate(log)}
        seen = set(configs)
        stack = list(configs)
        while stack:
            src, lin, pos = stack.pop()
            placed = {o for o, _ in lin}
            for op_id, kind in self._pending.items():
                if op_id in placed:
                    continue
                if kind == WRITE:
                    if self.ordered:
                        if index.get(op_id) != pos:
                            continue
                        nxt = (op_id, lin | {(op_id, _W)}, pos + 1)
                    else:
                        nxt = (op_id, lin | {(op_id, _W)}, pos)
                else:
                    nxt = (src, lin | {(op_id, src)}, pos)
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen


class AdversarialWSLRegister(AdversarialLinearizableRegister):
    """Adversarial register whose write order is fixed by an append-only log.

    A write enters the log when the adversary commits it, when it responds,
    or when a read is made to return its value, whichever happens first.
    Writes are linearized strictly in log order, so a commitment can never
    be revised by a later choice.
    """

    ordered = True

    def commit(self, op_ids: tuple[int, ...]) -> None:
        for w in op_ids:
            op = self._ops.get(w)
            if op is not None and op.kind == WRITE and op.done:
                raise IllegalDecision(f"write {w} on {self.name} already responded and is committed")
        super().commit(op_ids)
        if not self._closure(self._configs, self.commit_log):
            raise MonitorViolation(f"commit {op_ids} on {self.name} admits no linearization")

    def _extended_log(self, op_id: Any) -> list[int]:
        if op_id is None or op_id in self.commit_log:
            return self.commit_log
        op = self._ops.get(op_id)
        if op is None or op.kind != WRITE or op.done:
            return self.commit_log
        return self.commit_log + [op_id]


# ---------------------------------------------------------------------------
# Registers implemented from atomic single-writer cells
# ---------------------------------------------------------------------------

Cell = tuple  # (value, timestamp)
Step = Generator[tuple, Any, Any]


class SteppedRegister(Register):
    """A multi-writer register built from ``n`` atomic SWMR cells.

    Process ``p`` owns cell ``Val[p+1]``.  Each call to :meth:`step` performs
    one base access and records it in the trace as a nested operation whose
    ``parent`` is the implemented operation.  Subclasses supply the write and
    read procedures as generators yielding ``("read", i)``,
    ``("write", i, cell)`` or ``("local", label)``.
    """

    def __init__(self, name: str, n: int, initial: Any = 0):
        if n < 1:
            raise ConfigurationError("need at least one process")
        super().__init__(name, initial)
        self.n = n
        self.cells: dict[int, Cell] = {i: self.initial_cell(i) for i in range(1, n + 1)}
        self._programs: dict[int, Step] = {}
        self._next: dict[int, tuple] = {}

    def cell_name(self, i: int) -> str:
        return f"{self.name}.Val[{i}]"

    def initial_cell(self, i: int) -> Cell:
        raise NotImplementedError

    def write_program(self, op_id: int, proc: int, value: Any) -> Step:
        raise NotImplementedError

    def read_program(self, op_id: int, proc: int) -> Step:
        raise NotImplementedError

    def write_meta(self, op_id: int) -> dict | None:
        return None

    def invoke(self, proc: int, op_kind: str, value: Any = None) -> int:
        if not 0 <= proc < self.n:
            raise ConfigurationError(f"process {proc} out of range for {self.name} with n={self.n}")
        op_id = self._start(proc, op_kind, value)
        if op_kind == WRITE:
            gen = self.write_program(op_id, proc, value)
        else:
            gen = self.read_program(op_id, proc)
        self._programs[op_id] = gen
        self._next[op_id] = next(gen)
        return op_id

    def step(self, op_id: int) -> None:
        op = self._pending_check(op_id)
        action = self._next[op_id]
        tr = self._tr()
        result = None
        if action[0] == "read":
            i = action[1]
            base = tr.new_op_id()
            tr.emit(INVOKE, op.proc, self.cell_name(i), READ, None, op_id=base, parent=op_id)
            result = self.cells[i]
            tr.emit(RESPOND, op.proc, self.cell_name(i), READ, result, op_id=base, parent=op_id)
        elif action[0] == "write":
            i, cell = action[1], action[2]
            if i != op.proc + 1:
                raise ConfigurationError(f"p{op.proc} may not write SWMR cell Val[{i}]")
            base = tr.new_op_id()
            tr.emit(INVOKE, op.proc, self.cell_name(i), WRITE, cell, op_id=base, parent=op_id,
                    meta=self.write_meta(op_id))
            self.cells[i] = cell
            tr.emit(RESPOND, op.proc, self.cell_name(i), WRITE, None, op_id=base, parent=op_id)
        try:
            self._next[op_id] = self._programs[op_id].send(result)
        except StopIteration as stop:
            del self._programs[op_id], self._next[op_id]
            value, ts = stop.value
            op.done = True
            op.result = value if op.kind == READ else None
            self._busy.pop(op.proc, None)
            tr.emit(RESPOND, op.proc, self.name, op.kind, op.result, op_id=op_id, meta={"ts": ts})


BACKENDS = ("atomic", "lin-adv", "wsl-adv", "alg2", "alg4")


def make_register(backend: str, name: str, n: int, initial: Any = None) -> Register:
    """Build one register of the named back-end."""
    if backend == "atomic":
        return AtomicRegister(name, initial)
    if backend == "lin-adv":
        return AdversarialLinearizableRegister(name, initial)
    if backend == "wsl-adv":
        return AdversarialWSLRegister(name, initial)
    if backend == "alg2":
        from .impl_vector import VectorRegister
        return VectorRegister(name, n, initial)
    if backend == "alg4":
        from .impl_lamport import LamportRegister
        return LamportRegister(name, n, initial)
    raise ConfigurationError(f"unknown register back-end {backend!r}")


def register_factory(backend: str, n: int, initials: dict[str, Any]) -> Callable[[], dict[str, Register]]:
    def build() -> dict[str, Register]:
        return {name: make_register(backend, name, n, init) for name, init in initials.items()}
    return build
