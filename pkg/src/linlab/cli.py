"""Command-line entry point: ``linlab <subcommand> ...``.

Exit codes: 0 success, 1 a checked property was violated (or a refutation
was not found), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .core import (
    ConfigurationError,
    History,
    TraceError,
    history_from_jsonl,
    history_to_jsonl,
    linearization_ids_from_jsonl,
    linearization_to_jsonl,
)
from .game import ADVERSARIES, DEFAULT_ROUNDS, check_game_lemmas
from .registers import BACKENDS
from .sim import DEFAULT_MAX_STEPS, MonitorViolation

log = logging.getLogger("linlab")


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("LINLAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"LINLAB_SEED must be an integer, got {raw!r}") from None


def _read_history(path: str) -> History:
    try:
        return history_from_jsonl(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _initial(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        raise UsageError(f"--initial must be JSON, got {raw!r}") from None


def _register(h: History, name: str | None) -> str:
    if name is not None:
        return name
    names = {e.register for e in h.events if e.parent is None and e.register is not None}
    if len(names) != 1:
        raise UsageError(f"trace has top-level registers {sorted(names)}; pass --register")
    return names.pop()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate_game(args) -> int:
    from .experiments import run_trial

    trial, result = run_trial(args.n, args.seed, args.registers, args.adversary, args.rounds,
                              bool(args.bounded), args.max_steps)
    problems = [] if args.bounded else check_game_lemmas(result.marks, args.n)
    if args.trace_out:
        Path(args.trace_out).write_text(history_to_jsonl(result.history))
    print(json.dumps({
        "outcome": result.outcome.value,
        "termination_round": trial.termination_round,
        "rounds_per_proc": trial.rounds_per_proc,
        "steps": trial.steps,
        "coins": len(result.coins),
        "lemma_violations": problems,
    }, sort_keys=True))
    return 1 if problems else 0


def cmd_experiment(args) -> int:
    from .experiments import termination_experiment

    seeds = range(args.seed, args.seed + args.trials)
    report = termination_experiment(args.n, seeds, args.registers, args.adversary, args.rounds,
                                    bool(args.bounded))
    if args.csv_out:
        Path(args.csv_out).write_text(report.to_csv())
    for line in report.summary_lines():
        print(line)
    return 0


def cmd_linearize(args) -> int:
    from . import linearize as L

    h = _read_history(args.trace)
    reg = _register(h, args.register)
    initial = _initial(args.initial)
    if args.algo == "f-vector":
        lin = L.f_vector(h, reg, initial)
    else:
        base = L.check_linearizable(h, initial, reg, args.max_ops)
        if base is None:
            print("no linearization exists", file=sys.stderr)
            return 1
        lin = base if args.algo == "oracle" else L.f_star(h, base, initial, reg)
    _emit(linearization_to_jsonl(lin), args.out)
    return 0


def cmd_check(args) -> int:
    from . import linearize as L

    h = _read_history(args.trace)
    reg = _register(h, args.register)
    initial = _initial(args.initial)
    try:
        ids = linearization_ids_from_jsonl(Path(args.lin).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read linearization {args.lin}: {exc}") from None
    problem = L.check_linearization(h, ids, initial, reg)
    if problem is not None:
        print(f"violation (property {problem.clause}): {problem.reason}")
        return 1
    if args.mode == "wsl-prefix":
        pairs = []
        for k in range(len(h)):
            g = History(h.events[:k])
            if args.algo == "f-vector":
                lin = L.f_vector(g, reg, initial)
            else:
                base = L.check_linearizable(g, initial, reg, args.max_ops)
                lin = L.f_star(g, base, initial, reg)
            pairs.append((g, lin))
        pairs.append((h, ids))
        v = L.check_wsl_prefixes(pairs)
        if v is not None:
            print(f"violation at prefix ending t={v.prefix_time}: writes {list(v.prefix_writes)} "
                  f"not a prefix of {list(v.full_writes)}")
            return 1
    print("ok")
    return 0


def cmd_refute_wsl(args) -> int:
    from .linearize import refute_wsl

    g = _read_history(args.g)
    hs = [_read_history(p) for p in args.extensions]
    reg = _register(g, args.register)
    witness = refute_wsl(g, hs, _initial(args.initial), reg, args.max_ops)
    if witness is None:
        print("not refuted")
        return 1
    doc = [{"linearization": list(lin), "extension": args.extensions[k]} for lin, k in witness.items()]
    print(json.dumps({"refuted": True, "witness": doc}, sort_keys=True))
    return 0


def cmd_counterexample(args) -> int:
    from .impl_lamport import build_counterexample

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, h in build_counterexample().items():
        path = out / f"{name}.jsonl"
        path.write_text(history_to_jsonl(h))
        print(path)
    return 0


def cmd_goldens(args) -> int:
    from .experiments import GOLDENS, compare_text, golden_dir, golden_text

    if args.write:
        out = Path(args.write)
        out.mkdir(parents=True, exist_ok=True)
        for name in GOLDENS:
            (out / f"{name}.jsonl").write_text(golden_text(name))
            print(out / f"{name}.jsonl")
        return 0
    status = 0
    for name in GOLDENS:
        path = golden_dir() / f"{name}.jsonl"
        fresh = golden_text(name)
        stored = path.read_text() if path.exists() else ""
        diff = compare_text(stored, fresh)
        if diff is None:
            print(f"{name}: identical")
        else:
            print(f"{name}: differs at {diff}")
            status = 1
    return status


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="linlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def game_flags(sp, default_adversary="random", default_registers="atomic"):
        sp.add_argument("--n", type=int, default=3)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--rounds", type=int, default=DEFAULT_ROUNDS)
        sp.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
        sp.add_argument("--registers", choices=BACKENDS, default=default_registers)
        sp.add_argument("--adversary", choices=ADVERSARIES, default=default_adversary)
        sp.add_argument("--bounded", type=int, choices=(0, 1), default=0)

    sp = sub.add_parser("simulate-game", help="run the game once")
    game_flags(sp)
    sp.add_argument("--trace-out")
    sp.set_defaults(func=cmd_simulate_game)

    sp = sub.add_parser("experiment", help="termination statistics over many seeds")
    game_flags(sp)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--csv-out")
    sp.set_defaults(func=cmd_experiment)

    def trace_flags(sp):
        sp.add_argument("--register")
        sp.add_argument("--initial", default="0", help="initial value as JSON (default 0)")
        sp.add_argument("--max-ops", type=int, default=9)

    sp = sub.add_parser("linearize", help="print a linearization as JSONL op ids")
    sp.add_argument("--algo", choices=("f-vector", "f-star", "oracle"), required=True)
    sp.add_argument("trace")
    sp.add_argument("--out")
    trace_flags(sp)
    sp.set_defaults(func=cmd_linearize)

    sp = sub.add_parser("check", help="check a linearization file against a trace")
    sp.add_argument("--mode", choices=("lin", "wsl-prefix"), required=True)
    sp.add_argument("--algo", choices=("f-vector", "f-star"), default="f-vector",
                    help="function applied to each prefix in wsl-prefix mode")
    sp.add_argument("trace")
    sp.add_argument("lin")
    trace_flags(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("refute-wsl", help="search for a write strong-linearizability refutation")
    sp.add_argument("g")
    sp.add_argument("extensions", nargs="+")
    trace_flags(sp)
    sp.set_defaults(func=cmd_refute_wsl)

    sp = sub.add_parser("counterexample-lamport", help="write the three Lamport-register traces")
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(func=cmd_counterexample)

    sp = sub.add_parser("goldens", help="regenerate golden traces and compare with the fixtures")
    sp.add_argument("--write", metavar="DIR", help="write the goldens to DIR instead of comparing")
    sp.set_defaults(func=cmd_goldens)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        if getattr(args, "adversary", None) is not None:
            from .game import check_combo
            check_combo(args.adversary, args.registers)
        return args.func(args)
    except (UsageError, ConfigurationError, TraceError) as exc:
        print(f"linlab: error: {exc}", file=sys.stderr)
        return 2
    except MonitorViolation as exc:
        print(f"linlab: monitor violation: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
