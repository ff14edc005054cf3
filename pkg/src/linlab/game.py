"""The randomized hosts-and-players game and the adversaries that play against it.

Processes 0 and 1 are hosts; processes 2..n-1 are players.  Every round,
both hosts write their tag into ``R1`` and host 0 flips a coin into ``C``.
Players clear ``R1`` and ``C``, read ``R1`` twice and ``C`` once, and survive
only if they saw the coin's tag first and the other host's tag second.
Survivors count themselves in ``R2``; a host continues only when all
``n-2`` players were counted.

Program steps are labelled by role rather than by listing line numbers:

=================  ===========================================
label              step
=================  ===========================================
``host_r1``        host writes its tag into ``R1``
``coin``           host 0 flips the coin
``host_c``         host 0 writes the coin into ``C``
``host_reset``     host writes 0 into ``R2``
``host_read``      host reads ``R2`` into ``v``
``player_clear1``  player writes bottom into ``R1``
``player_clear2``  player writes bottom into ``C``
``player_u1``      player's first read of ``R1``
``player_u2``      player's second read of ``R1``
``player_c``       player reads ``C``
``player_reset``   player writes 0 into ``R2`` (first Phase-2 step)
``player_read``    player reads ``R2``
``player_inc``     player writes ``v+1`` into ``R2`` (last Phase-2 step)
=================  ===========================================
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator

import numpy as np

from .core import BOT, ConfigurationError
from .registers import AdversarialWSLRegister, AtomicRegister, register_factory
from .sim import (
    DEFAULT_MAX_STEPS,
    Advance,
    ChooseRead,
    Commit,
    Flip,
    Mark,
    RandomAdversary,
    Read,
    SimConfig,
    Simulation,
    Write,
)

HOSTS = (0, 1)
GAME_INITIALS = {"R1": BOT, "C": BOT, "R2": 0}
ADVERSARIES = ("random", "theorem1", "theorem1-wsl")
DEFAULT_ROUNDS = 100

VALID_COMBOS = {
    "theorem1": ("lin-adv",),
    "theorem1-wsl": ("wsl-adv", "alg2", "atomic"),
    "random": ("atomic", "lin-adv", "wsl-adv", "alg2", "alg4"),
}


@dataclass
class GameProcState:
    """Locals of one game process, updated as its program runs."""

    proc: int
    role: str
    j: int = 0
    u1: Any = None
    u2: Any = None
    c: Any = None
    v: Any = None
    phase: int = 1
    pc: str = "start"
    exited: tuple[int, str] | None = None


def _tag(i: int, j: int, bounded: bool):
    return i if bounded else (i, j)


def host_program(i: int, n: int, bounded: bool = False, state: GameProcState | None = None):
    st = state or GameProcState(i, f"host{i}")
    j = 0
    while True:
        j += 1
        st.j, st.phase, st.pc = j, 1, "host_r1"
        yield Mark("enter", j)
        yield Write("R1", _tag(i, j, bounded), "host_r1")
        if i == 0:
            st.pc = "coin"
            st.c = yield Flip("coin")
            yield Mark("coin", (j, st.c))
            st.pc = "host_c"
            yield Write("C", st.c, "host_c")
        st.phase, st.pc = 2, "host_reset"
        yield Write("R2", 0, "host_reset")
        st.pc = "host_read"
        st.v = yield Read("R2", "host_read")
        if st.v < n - 2:
            st.exited = (j, "host_v")
            yield Mark("exit", (j, "host_v"))
            return
        yield Mark("continue", j)


def player_program(i: int, n: int, bounded: bool = False, state: GameProcState | None = None):
    st = state or GameProcState(i, "player")
    j = 0
    while True:
        j += 1
        st.j, st.phase = j, 1
        yield Mark("enter", j)
        st.pc = "player_clear1"
        yield Write("R1", BOT, "player_clear1")
        st.pc = "player_clear2"
        yield Write("C", BOT, "player_clear2")
        st.pc = "player_u1"
        st.u1 = yield Read("R1", "player_u1")
        st.pc = "player_u2"
        st.u2 = yield Read("R1", "player_u2")
        st.pc = "player_c"
        st.c = yield Read("C", "player_c")
        bottom = st.u1 is BOT or st.u2 is BOT or st.c is BOT
        yield Mark("guard", {"j": j, "u1": st.u1, "u2": st.u2, "c": st.c, "bottom": bottom})
        if bottom:
            st.exited = (j, "bottom")
            yield Mark("exit", (j, "bottom"))
            return
        if st.u1 != _tag(st.c, j, bounded) or st.u2 != _tag(1 - st.c, j, bounded):
            st.exited = (j, "mismatch")
            yield Mark("exit", (j, "mismatch"))
            return
        st.phase, st.pc = 2, "player_reset"
        yield Mark("reach_reset", j)
        yield Write("R2", 0, "player_reset")
        st.pc = "player_read"
        st.v = yield Read("R2", "player_read")
        st.v += 1
        st.pc = "player_inc"
        yield Mark("reach_inc", j)
        yield Write("R2", st.v, "player_inc")
        yield Mark("continue", j)


def game_program(i: int, n: int, bounded: bool = False, state: GameProcState | None = None):
    if n < 3:
        raise ConfigurationError(f"the game needs n >= 3 processes, got {n}")
    if not 0 <= i < n:
        raise ConfigurationError(f"process {i} out of range for n={n}")
    if i in HOSTS:
        return host_program(i, n, bounded, state)
    return player_program(i, n, bounded, state)


# ---------------------------------------------------------------------------
# Adversaries
# ---------------------------------------------------------------------------


class ScriptAdversary:
    """An adversary written as a generator of decisions.

    The generator may inspect the simulation between yields, since each
    decision is applied before the next one is requested.
    """

    def __init__(self):
        self._gen: Iterator | None = None

    def script(self, sim: Simulation) -> Iterator:
        raise NotImplementedError

    def decide(self, sim: Simulation):
        if self._gen is None:
            self._gen = self.script(sim)
        return next(self._gen, None)


def finish(sim: Simulation, p: int):
    """Run ``p``'s next action to completion (nothing if ``p`` has returned)."""
    if sim.returned[p]:
        return
    yield Advance(p)
    while sim.pending[p] is not None:
        yield Advance(p)


def complete(sim: Simulation, p: int):
    while sim.pending[p] is not None:
        yield Advance(p)


def start(sim: Simulation, p: int):
    """Invoke ``p``'s next operation and return its op id (``None`` if it already completed)."""
    if sim.returned[p]:
        return None
    yield Advance(p)
    return sim.pending_op(p)


def drain(sim: Simulation):
    while not all(sim.returned):
        for p in sim.alive():
            yield from finish(sim, p)


def _clear_phase(sim: Simulation, players):
    for p in players:
        yield from finish(sim, p)
    for p in players:
        yield from finish(sim, p)


def _phase_two(sim: Simulation, players):
    for p in (*HOSTS, *players):
        yield from finish(sim, p)
    for p in players:
        yield from finish(sim, p)
        yield from finish(sim, p)
    for h in HOSTS:
        yield from finish(sim, h)


class Theorem1Adversary(ScriptAdversary):
    """Keeps every process in the game forever when registers are merely linearizable.

    Both host writes to ``R1`` and the players' first reads start together.
    Host 0's write finishes, the coin is flipped and written to ``C``, then
    host 1's write finishes.  Only now, knowing the coin ``c``, does the
    adversary order host ``c``'s write first and have the first reads
    return it; the second reads return the other host's tag.
    """

    def script(self, sim: Simulation):
        players = range(2, sim.n)
        while True:
            if any(sim.returned):
                yield from drain(sim)
                return
            yield from _clear_phase(sim, players)
            w0 = yield from start(sim, 0)
            w1 = yield from start(sim, 1)
            first_reads = {}
            for p in players:
                first_reads[p] = yield from start(sim, p)
            yield from complete(sim, 0)
            yield from finish(sim, 0)  # coin
            c = sim.coins[-1]
            yield from finish(sim, 0)  # C <- c
            yield from complete(sim, 1)
            first, second = (w0, w1) if c == 0 else (w1, w0)
            yield Commit("R1", (first, second))
            for p in players:
                yield ChooseRead(first_reads[p], first)
                yield from complete(sim, p)
            for p in players:
                r = yield from start(sim, p)
                yield ChooseRead(r, second)
                yield from complete(sim, p)
            for p in players:
                yield from finish(sim, p)  # read C
            yield from _phase_two(sim, players)


class Theorem1WSLAdversary(ScriptAdversary):
    """The same attack when the write order must be fixed before the coin is seen.

    Each round the adversary draws a bit ``b`` from its own generator and
    arranges for host ``b``'s write to take effect first, before host 0
    flips.  Players survive the round only when ``b`` equals the coin.
    Supports adversarial write-strongly-linearizable registers, vector
    timestamp registers and atomic registers.
    """

    def __init__(self, seed: int):
        super().__init__()
        self.rng = np.random.default_rng([int(seed), 0x5753])
        self.guesses: list[int] = []

    def script(self, sim: Simulation):
        from .impl_vector import VectorRegister

        r1 = sim.registers["R1"]
        if isinstance(r1, AdversarialWSLRegister):
            phase_one = self._wsl_round
        elif isinstance(r1, VectorRegister):
            phase_one = self._vector_round
        elif isinstance(r1, AtomicRegister):
            phase_one = self._atomic_round
        else:
            raise ConfigurationError(f"theorem1-wsl adversary cannot drive {type(r1).__name__}")
        players = range(2, sim.n)
        while True:
            if any(sim.returned):
                yield from drain(sim)
                return
            yield from _clear_phase(sim, players)
            b = int(self.rng.integers(2))
            self.guesses.append(b)
            yield from phase_one(sim, players, b)
            for p in players:
                yield from finish(sim, p)  # second read of R1
            for p in players:
                yield from finish(sim, p)  # read C
            yield from _phase_two(sim, players)

    def _wsl_round(self, sim, players, b):
        w0 = yield from start(sim, 0)
        w1 = yield from start(sim, 1)
        reads = {}
        for p in players:
            reads[p] = yield from start(sim, p)
        first, second = (w0, w1) if b == 0 else (w1, w0)
        yield Commit("R1", (first, second))
        yield from complete(sim, 0)
        yield from finish(sim, 0)  # coin
        yield from finish(sim, 0)  # C <- c
        yield from complete(sim, 1)
        for p in players:
            yield ChooseRead(reads[p], first)
            yield from complete(sim, p)

    def _vector_round(self, sim, players, b):
        # Host 1's write is ordered first exactly when it reads Val[1] before
        # host 0 writes it.
        yield from start(sim, 0)
        yield from start(sim, 1)
        for p in players:
            yield from start(sim, p)
        if b == 1:
            yield from complete(sim, 1)
            for p in players:
                yield from complete(sim, p)
            yield from complete(sim, 0)
            yield from finish(sim, 0)  # coin
            yield from finish(sim, 0)  # C <- c
        else:
            yield from complete(sim, 0)
            for p in players:
                yield from complete(sim, p)
            yield from finish(sim, 0)  # coin
            yield from finish(sim, 0)  # C <- c
            yield from complete(sim, 1)

    def _atomic_round(self, sim, players, b):
        if b == 1:
            yield from finish(sim, 1)
            for p in players:
                yield from finish(sim, p)
            yield from finish(sim, 0)
            yield from finish(sim, 0)  # coin
            yield from finish(sim, 0)  # C <- c
        else:
            yield from finish(sim, 0)
            for p in players:
                yield from finish(sim, p)
            yield from finish(sim, 0)  # coin
            yield from finish(sim, 0)  # C <- c
            yield from finish(sim, 1)


def make_adversary(name: str, seed: int):
    if name == "theorem1":
        return Theorem1Adversary()
    if name == "theorem1-wsl":
        return Theorem1WSLAdversary(seed)
    if name == "random":
        return RandomAdversary(seed)
    raise ConfigurationError(f"unknown adversary {name!r}")


def check_combo(adversary: str, backend: str) -> None:
    if adversary not in VALID_COMBOS:
        raise ConfigurationError(f"unknown adversary {adversary!r}")
    if backend not in VALID_COMBOS[adversary]:
        raise ConfigurationError(
            f"adversary {adversary} needs registers in {VALID_COMBOS[adversary]}, got {backend}")


def game_config(n: int, seed: int, backend: str, adversary: str, bounded: bool = False,
                rounds: int | None = DEFAULT_ROUNDS, max_steps: int = DEFAULT_MAX_STEPS) -> SimConfig:
    """Configuration for one game run.

    The run stops early, reported as budget exhaustion, once every process
    has entered round ``rounds + 1``.
    """
    if n < 3:
        raise ConfigurationError(f"the game needs n >= 3 processes, got {n}")
    check_combo(adversary, backend)
    programs = [(lambda i=i: game_program(i, n, bounded)) for i in range(n)]
    halt = None
    if rounds is not None:
        halt = lambda sim: min(sim.rounds) > rounds  # noqa: E731
    return SimConfig(
        programs=programs,
        registers=register_factory(backend, n, GAME_INITIALS),
        adversary=lambda: make_adversary(adversary, seed),
        seed=seed,
        max_steps=max_steps,
        halt=halt,
    )


# ---------------------------------------------------------------------------
# Safety properties over finished runs
# ---------------------------------------------------------------------------


def round_decisions(marks) -> dict[int, dict[int, str]]:
    """Per process, map each round to ``"continue"`` or ``"exit:<reason>"``."""
    out: dict[int, dict[int, str]] = {}
    for m in marks:
        if m.label == "continue":
            out.setdefault(m.proc, {})[m.data] = "continue"
        elif m.label == "exit":
            j, why = m.data
            out.setdefault(m.proc, {})[j] = "exit:" + why
    return out


def check_game_lemmas(marks, n: int) -> list[str]:
    """Check the game's safety lemmas against the marks of an unbounded-variant run.

    Returns a list of violations; an empty list means every lemma held.
    """
    problems: list[str] = []
    players = range(2, n)
    entered: dict[tuple[int, int], int] = {}
    coin_of_round: dict[int, tuple[int, int]] = {}
    reached_inc: dict[tuple[int, int], int] = {}
    last_guard: dict[int, dict] = {}
    for m in marks:
        if m.label == "enter":
            entered.setdefault((m.proc, m.data), m.index)
            j = m.data
            if m.proc in HOSTS and j > 1:
                for p in players:
                    if (p, j - 1) not in reached_inc:
                        problems.append(f"host p{m.proc} entered round {j} before p{p} reached its "
                                        f"R2 increment in round {j - 1}")
        elif m.label == "coin":
            coin_of_round[m.data[0]] = (m.data[1], m.index)
        elif m.label == "guard":
            last_guard[m.proc] = m.data
            g = m.data
            if not g["bottom"]:
                j = g["j"]
                if j not in coin_of_round:
                    problems.append(f"p{m.proc} passed the bottom check in round {j} before host 0 flipped")
                elif g["c"] != coin_of_round[j][0]:
                    problems.append(f"p{m.proc} holds c={g['c']} in round {j} but host 0 flipped "
                                    f"{coin_of_round[j][0]}")
                for name in ("u1", "u2"):
                    u = g[name]
                    if not (isinstance(u, tuple) and len(u) == 2 and u[1] == j):
                        problems.append(f"p{m.proc} holds {name}={u!r} at the tag check of round {j}")
        elif m.label == "reach_reset":
            j = m.data
            g = last_guard.get(m.proc)
            if g is None or {g["u1"], g["u2"]} != {(0, j), (1, j)}:
                problems.append(f"p{m.proc} reached the R2 reset in round {j} without reading both host tags")
            for h in HOSTS:
                if (h, j) not in entered:
                    problems.append(f"p{m.proc} reached the R2 reset in round {j} before host p{h} entered it")
        elif m.label == "reach_inc":
            reached_inc[(m.proc, m.data)] = m.index
    return problems
