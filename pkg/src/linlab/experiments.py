"""Batch experiments, random workloads and golden traces.

Termination statistics use scipy for the confidence intervals: a Student-t
interval for the mean termination round and Clopper-Pearson intervals for
per-round continuation frequencies.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from .core import History, history_to_jsonl
from .game import DEFAULT_ROUNDS, game_config
from .impl_lamport import LamportRegister, counterexample_config, counterexample_cut
from .impl_vector import VectorRegister, three_writer_config
from .registers import AdversarialLinearizableRegister
from .sim import CoinStream, Outcome, RandomAdversary, Read, RunResult, SimConfig, Write, one_shot, replay, run

log = logging.getLogger(__name__)

CSV_COLUMNS = ("seed", "termination_round", "steps")


# ---------------------------------------------------------------------------
# Game experiments
# ---------------------------------------------------------------------------


@dataclass
class Trial:
    seed: int
    termination_round: int | None
    steps: int
    rounds_per_proc: list[int]


def termination_round(result: RunResult) -> int | None:
    """Last round any process entered, or ``None`` if the run did not finish."""
    if result.outcome is not Outcome.ALL_RETURNED:
        return None
    return max(result.rounds_per_proc)


def run_trial(n: int, seed: int, backend: str, adversary: str, rounds: int = DEFAULT_ROUNDS,
              bounded: bool = False, max_steps: int | None = None) -> tuple[Trial, RunResult]:
    kwargs = {} if max_steps is None else {"max_steps": max_steps}
    result = run(game_config(n, seed, backend, adversary, bounded, rounds, **kwargs))
    return Trial(seed, termination_round(result), result.steps, list(result.rounds_per_proc)), result


@dataclass
class ExperimentReport:
    trials: list[Trial]
    terminated: int
    budget_exhausted: int
    mean_round: float | None
    ci95: tuple[float, float] | None
    continuation: dict[int, tuple[int, int, float]] = field(default_factory=dict)

    def continuation_ci(self, j: int, level: float = 0.95) -> tuple[float, float]:
        survivors, went_on, _ = self.continuation[j]
        ci = stats.binomtest(went_on, survivors).proportion_ci(level)
        return float(ci.low), float(ci.high)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for t in sorted(self.trials, key=lambda t: t.seed):
            w.writerow((t.seed, "" if t.termination_round is None else t.termination_round, t.steps))
        return buf.getvalue()

    def summary_lines(self) -> list[str]:
        lines = [f"trials={len(self.trials)} terminated={self.terminated} "
                 f"budget_exhausted={self.budget_exhausted}"]
        if self.mean_round is not None:
            lo, hi = self.ci95
            lines.append(f"mean_termination_round={self.mean_round:.4f} ci95=[{lo:.4f},{hi:.4f}]")
        for j, (s, c, f) in sorted(self.continuation.items()):
            lines.append(f"round={j} survivors={s} continued={c} frequency={f:.4f}")
        return lines


def summarize(trials: list[Trial], rounds: int) -> ExperimentReport:
    done = [t.termination_round for t in trials if t.termination_round is not None]
    mean = ci = None
    if done:
        arr = np.asarray(done, dtype=float)
        mean = float(arr.mean())
        if len(arr) > 1 and arr.std(ddof=1) > 0:
            lo, hi = stats.t.interval(0.95, len(arr) - 1, loc=mean, scale=stats.sem(arr))
            ci = (float(lo), float(hi))
        else:
            ci = (mean, mean)
    # A non-terminated trial survived every round up to the cap.
    reached = [rounds + 1 if t.termination_round is None else t.termination_round for t in trials]
    continuation = {}
    for j in range(1, max(reached, default=0) + 1):
        survivors = sum(r >= j for r in reached)
        went_on = sum(r >= j + 1 for r in reached)
        if survivors and j <= rounds:
            continuation[j] = (survivors, went_on, went_on / survivors)
    return ExperimentReport(trials, len(done), len(trials) - len(done), mean, ci, continuation)


def termination_experiment(n: int, seeds, backend: str, adversary: str, rounds: int = DEFAULT_ROUNDS,
                           bounded: bool = False) -> ExperimentReport:
    trials = [run_trial(n, s, backend, adversary, rounds, bounded)[0] for s in seeds]
    return summarize(trials, rounds)


# ---------------------------------------------------------------------------
# Random workloads for the register implementations
# ---------------------------------------------------------------------------


def _random_programs(rng: np.random.Generator, n: int, total_ops: int, writers=None):
    """Split ``total_ops`` operations among ``n`` processes; write values are distinct."""
    plans: list[list] = [[] for _ in range(n)]
    next_value = 1
    for _ in range(total_ops):
        p = int(rng.integers(n))
        may_write = writers is None or p in writers
        if may_write and rng.random() < 0.5:
            plans[p].append(Write("R", next_value))
            next_value += 1
        else:
            plans[p].append(Read("R"))
    return [one_shot(*plan) for plan in plans]


def random_workload(kind: str, seed: int, max_n: int = 4, max_ops: int = 8) -> tuple[History, SimConfig]:
    """A random run of the vector (``"alg2"``) or Lamport (``"alg4"``) register."""
    rng = np.random.default_rng([int(seed), 0x574B])
    n = int(rng.integers(2, max_n + 1))
    total = int(rng.integers(1, max_ops + 1))
    programs = _random_programs(rng, n, total)
    cls = VectorRegister if kind == "alg2" else LamportRegister
    config = SimConfig(programs=programs, registers=lambda: {"R": cls("R", n, 0)},
                       adversary=lambda: RandomAdversary(seed), seed=seed)
    return run(config).history, config


def random_swmr_history(seed: int, max_readers: int = 3, max_ops: int = 8) -> History:
    """A random run of an adversarial single-writer register (writer is process 0)."""
    rng = np.random.default_rng([int(seed), 0x5357])
    readers = int(rng.integers(1, max_readers + 1))
    total = int(rng.integers(1, max_ops + 1))
    programs = _random_programs(rng, readers + 1, total, writers={0})
    config = SimConfig(programs=programs,
                       registers=lambda: {"R": AdversarialLinearizableRegister("R", 0, writer=0)},
                       adversary=lambda: RandomAdversary(seed), seed=seed)
    return run(config).history


def event_prefixes(h: History) -> list[History]:
    return [History(h.events[:k]) for k in range(len(h) + 1)]


# ---------------------------------------------------------------------------
# Golden traces
# ---------------------------------------------------------------------------


def first_seed_with_coin(bit: int) -> int:
    seed = 0
    while CoinStream(seed).outcome(0) != bit:
        seed += 1
    return seed


@dataclass(frozen=True)
class Golden:
    name: str
    config: Callable[[], SimConfig]
    cut: Callable[[History], int] | None = None  # time at which the golden prefix ends

    def history(self) -> History:
        h = run(self.config()).history
        return h if self.cut is None else h.prefix(self.cut(h))

    def replay(self, stored: History) -> History:
        return replay(stored, self.config(), allow_prefix=self.cut is not None)


def _theorem1_config(bit: int) -> SimConfig:
    return game_config(3, first_seed_with_coin(bit), "lin-adv", "theorem1", rounds=1)


GOLDENS: dict[str, Golden] = {
    "theorem1_round1_coin0": Golden("theorem1_round1_coin0", lambda: _theorem1_config(0)),
    "theorem1_round1_coin1": Golden("theorem1_round1_coin1", lambda: _theorem1_config(1)),
    "lamport_G": Golden("lamport_G", lambda: counterexample_config(1), counterexample_cut),
    "lamport_H_case1": Golden("lamport_H_case1", lambda: counterexample_config(1)),
    "lamport_H_case2": Golden("lamport_H_case2", lambda: counterexample_config(2)),
    "vector_three_writers": Golden("vector_three_writers", three_writer_config),
}


def golden_dir() -> Path:
    return Path(str(resources.files("linlab") / "data" / "goldens"))


def golden_text(name: str) -> str:
    return history_to_jsonl(GOLDENS[name].history())


def compare_text(expected: str, actual: str) -> str | None:
    """Describe the first differing line, or ``None`` when identical."""
    a, b = expected.splitlines(), actual.splitlines()
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return f"line {i + 1}: expected {x} got {y}"
    if len(a) != len(b):
        return f"line {min(len(a), len(b)) + 1}: length differs ({len(a)} vs {len(b)} lines)"
    return None
