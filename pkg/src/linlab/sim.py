"""Deterministic discrete-event simulation of processes over shared registers.

Process programs are generators.  They yield base actions (:class:`Read`,
:class:`Write`, :class:`Flip`) and receive each action's result; a
:class:`Mark` is a zero-cost annotation recorded for later inspection.
An adversary drives the run one decision at a time and sees everything that
has happened so far, including coin outcomes already flipped, but nothing
about flips that have not executed yet.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Generator, Mapping, Protocol, Sequence

import numpy as np

from .core import COIN, INVOKE, READ, RESPOND, WRITE, Event, History

log = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 10**6


# ---------------------------------------------------------------------------
# Actions yielded by programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Read:
    register: str
    label: str | None = None


@dataclass(frozen=True)
class Write:
    register: str
    value: Any
    label: str | None = None


@dataclass(frozen=True)
class Flip:
    label: str | None = None


@dataclass(frozen=True)
class Mark:
    label: str
    data: Any = None


Program = Generator[Any, Any, None]


# ---------------------------------------------------------------------------
# Adversary decisions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Advance:
    proc: int


@dataclass(frozen=True)
class Commit:
    """Append ``op_ids`` (writes) to the register's committed write order."""

    register: str
    op_ids: tuple[int, ...]


@dataclass(frozen=True)
class ChooseRead:
    """Fix which write a pending read returns (``source=None``: initial value)."""

    op_id: int
    source: int | None


Decision = Advance | Commit | ChooseRead


class Adversary(Protocol):
    def decide(self, sim: Simulation) -> Decision | None: ...


class SimulationFault(RuntimeError):
    def __init__(self, index: int, decision: Any, reason: str):
        super().__init__(f"decision #{index} {decision!r}: {reason}")
        self.index = index
        self.decision = decision
        self.reason = reason


class IllegalDecision(RuntimeError):
    """Raised by registers for decisions they cannot honour."""


class MonitorViolation(AssertionError):
    """A register response would break the register's consistency contract."""


class ReplayDivergence(RuntimeError):
    def __init__(self, index: int, expected: Event | None, actual: Event | None):
        super().__init__(f"replay diverges at event {index}: expected {expected}, got {actual}")
        self.index = index
        self.expected = expected
        self.actual = actual


class Outcome(enum.Enum):
    ALL_RETURNED = "all_returned"
    STEP_BUDGET_EXHAUSTED = "step_budget_exhausted"
    HALTED = "halted"


# ---------------------------------------------------------------------------
# Coins and trace recording
# ---------------------------------------------------------------------------


class CoinStream:
    """Fair bits from numpy's PCG64.

    Outcome ``i`` is the top bit of the ``i``-th raw 64-bit output of
    ``PCG64(seed)``, so it depends only on ``(seed, i)``.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.cursor = 0
        self._bits = np.random.PCG64(self.seed)

    def flip(self) -> int:
        self.cursor += 1
        return int(self._bits.random_raw() >> 63)

    def outcome(self, i: int) -> int:
        bg = np.random.PCG64(self.seed).advance(i)
        return int(bg.random_raw() >> 63)


class Trace:
    """Event recorder shared by the kernel and the registers it owns."""

    def __init__(self):
        self.events: list[Event] = []
        self.clock = 1
        self._next_op = 0

    def new_op_id(self) -> int:
        op_id = self._next_op
        self._next_op += 1
        return op_id

    def emit(self, kind, proc, register, op_kind, value, op_id=None, parent=None, meta=None) -> Event:
        e = Event(kind, op_id, proc, register, op_kind, value, self.clock, parent, meta)
        self.clock += 1
        self.events.append(e)
        return e

    def history(self) -> History:
        return History(tuple(self.events))


@dataclass(frozen=True)
class MarkRecord:
    index: int
    time: int
    proc: int
    label: str
    data: Any


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


@dataclass
class SimConfig:
    """Everything needed to run, and re-run, a simulation.

    ``programs`` holds one zero-argument factory per process and
    ``registers`` builds a fresh ``{name: register}`` mapping; both are
    factories so that :func:`replay` can start from a clean state.
    """

    programs: Sequence[Callable[[], Program]]
    registers: Callable[[], Mapping[str, Any]]
    adversary: Callable[[], Adversary]
    seed: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    halt: Callable[[Simulation], bool] | None = None

    @property
    def n(self) -> int:
        return len(self.programs)


@dataclass
class RunResult:
    history: History
    outcome: Outcome
    rounds_per_proc: list[int]
    marks: list[MarkRecord]
    decisions: list[Decision]
    coins: list[int]
    steps: int
    simulation: Simulation = field(repr=False)


class Simulation:
    def __init__(self, config: SimConfig):
        if config.n < 1:
            raise ValueError("need at least one process")
        self.config = config
        self.n = config.n
        self.trace = Trace()
        self.registers = dict(config.registers())
        for reg in self.registers.values():
            reg.attach(self.trace)
        self.coin_stream = CoinStream(config.seed)
        self.coins: list[int] = []
        self.marks: list[MarkRecord] = []
        self.decisions: list[Decision] = []
        self.commitments: dict[str, list[int]] = {}
        self.returned = [False] * self.n
        self.next_action: list[Any] = [None] * self.n
        self.pending: list[tuple[Any, int] | None] = [None] * self.n
        self.rounds = [0] * self.n
        self.steps = 0
        self._programs = [factory() for factory in config.programs]
        self._started = [False] * self.n
        for p in range(self.n):
            self._resume(p, None)

    # -- adversary view ----------------------------------------------------

    @property
    def history(self) -> History:
        return self.trace.history()

    @property
    def now(self) -> int:
        return self.trace.clock

    def alive(self) -> list[int]:
        return [p for p in range(self.n) if not self.returned[p]]

    def pending_op(self, p: int) -> int | None:
        return self.pending[p][1] if self.pending[p] else None

    def register_of(self, op_id: int):
        for reg in self.registers.values():
            if reg.owns(op_id):
                return reg
        return None

    # -- mechanics ----------------------------------------------------------

    def _resume(self, p: int, value: Any) -> None:
        gen = self._programs[p]
        while True:
            try:
                if not self._started[p]:
                    self._started[p] = True
                    action = next(gen)
                else:
                    action = gen.send(value)
            except StopIteration:
                self.returned[p] = True
                self.next_action[p] = None
                self._mark(p, "return", None)
                return
            value = None
            if isinstance(action, Mark):
                self._mark(p, action.label, action.data)
                continue
            self.next_action[p] = action
            return

    def _mark(self, p: int, label: str, data: Any) -> None:
        if label == "enter":
            self.rounds[p] = max(self.rounds[p], data)
        self.marks.append(MarkRecord(len(self.marks), self.trace.clock, p, label, data))

    def advance(self, p: int) -> None:
        if not 0 <= p < self.n:
            raise IllegalDecision(f"no process {p}")
        if self.returned[p]:
            raise IllegalDecision(f"process {p} has returned")
        if self.pending[p] is not None:
            reg, op_id = self.pending[p]
            reg.step(op_id)
            if reg.is_done(op_id):
                self.pending[p] = None
                self._resume(p, reg.result(op_id))
            return
        action = self.next_action[p]
        if isinstance(action, Flip):
            bit = self.coin_stream.flip()
            self.coins.append(bit)
            self.trace.emit(COIN, p, None, "flip", bit)
            self._resume(p, bit)
        elif isinstance(action, (Read, Write)):
            reg = self.registers.get(action.register)
            if reg is None:
                raise IllegalDecision(f"unknown register {action.register!r}")
            if isinstance(action, Read):
                op_id = reg.invoke(p, READ)
            else:
                op_id = reg.invoke(p, WRITE, action.value)
            if reg.is_done(op_id):
                self._resume(p, reg.result(op_id))
            else:
                self.pending[p] = (reg, op_id)
        else:
            raise IllegalDecision(f"process {p} yielded unknown action {action!r}")

    def apply(self, decision: Decision) -> None:
        index = len(self.decisions)
        self.decisions.append(decision)
        try:
            if isinstance(decision, Advance):
                self.advance(decision.proc)
            elif isinstance(decision, Commit):
                reg = self.registers.get(decision.register)
                if reg is None:
                    raise IllegalDecision(f"unknown register {decision.register!r}")
                reg.commit(tuple(decision.op_ids))
                self.commitments.setdefault(decision.register, []).extend(decision.op_ids)
            elif isinstance(decision, ChooseRead):
                reg = self.register_of(decision.op_id)
                if reg is None:
                    raise IllegalDecision(f"unknown op {decision.op_id}")
                reg.choose(decision.op_id, decision.source)
            else:
                raise IllegalDecision("unknown decision type")
        except IllegalDecision as exc:
            raise SimulationFault(index, decision, str(exc)) from exc
        except MonitorViolation as exc:
            raise MonitorViolation(f"decision #{index} {decision!r}: {exc}") from exc

    def run(self, adversary: Adversary) -> Outcome:
        cfg = self.config
        while True:
            if all(self.returned):
                return Outcome.ALL_RETURNED
            if self.steps >= cfg.max_steps or (cfg.halt is not None and cfg.halt(self)):
                return Outcome.STEP_BUDGET_EXHAUSTED
            decision = adversary.decide(self)
            if decision is None:
                return Outcome.HALTED
            self.apply(decision)
            self.steps += 1


def run(config: SimConfig) -> RunResult:
    sim = Simulation(config)
    outcome = sim.run(config.adversary())
    log.debug("run seed=%s outcome=%s steps=%d", config.seed, outcome.value, sim.steps)
    return RunResult(
        history=sim.history, outcome=outcome, rounds_per_proc=list(sim.rounds),
        marks=list(sim.marks), decisions=list(sim.decisions), coins=list(sim.coins),
        steps=sim.steps, simulation=sim,
    )


def replay(history: History, config: SimConfig, allow_prefix: bool = False) -> History:
    """Re-run ``config`` and check that it reproduces ``history`` exactly.

    With ``allow_prefix`` the stored history may stop early; the replayed
    run must agree with it event for event up to that point.
    """
    fresh = run(config).history
    for i, (a, b) in enumerate(zip(history.events, fresh.events)):
        if a != b:
            raise ReplayDivergence(i, a, b)
    if len(history) > len(fresh) or (len(history) < len(fresh) and not allow_prefix):
        i = min(len(history), len(fresh))
        raise ReplayDivergence(
            i,
            history.events[i] if i < len(history) else None,
            fresh.events[i] if i < len(fresh) else None,
        )
    return fresh if not allow_prefix else History(fresh.events[: len(history)])


def one_shot(*actions) -> Callable[[], Program]:
    """Program factory that yields ``actions`` in order and then returns."""

    def factory() -> Program:
        def program():
            for a in actions:
                yield a
        return program()

    return factory


class ScriptedAdversary:
    """Replays a fixed list of decisions, then halts."""

    def __init__(self, decisions: Sequence[Decision]):
        self._decisions = list(decisions)
        self._i = 0

    def decide(self, sim: Simulation) -> Decision | None:
        if self._i >= len(self._decisions):
            return None
        d = self._decisions[self._i]
        self._i += 1
        return d


class RandomAdversary:
    """Advances a uniformly random live process.

    Before a pending read on an adversarial register responds, it picks one of
    the read's legal sources uniformly at random and then immediately lets
    that read respond, so the choice is still legal when it is used.
    """

    def __init__(self, seed: int):
        self.rng = np.random.default_rng([int(seed), 0xAD])
        self._chosen: set[int] = set()
        self._follow: int | None = None

    def decide(self, sim: Simulation) -> Decision | None:
        if self._follow is not None:
            p, self._follow = self._follow, None
            return Advance(p)
        live = sim.alive()
        if not live:
            return None
        p = live[int(self.rng.integers(len(live)))]
        op_id = sim.pending_op(p)
        if op_id is not None and op_id not in self._chosen:
            reg = sim.pending[p][0]
            if getattr(reg, "adversarial", False) and reg.is_read(op_id):
                self._chosen.add(op_id)
                legal = reg.legal_sources(op_id)
                self._follow = p
                return ChooseRead(op_id, legal[int(self.rng.integers(len(legal)))])
        return Advance(p)
