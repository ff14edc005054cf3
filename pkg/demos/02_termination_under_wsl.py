"""With write strongly-linearizable registers the same adversary must guess.

The write order on R1 is fixed before host 0 flips, so the adversary
commits to a host blindly.  A wrong guess makes every player exit, and a
fair coin means roughly half the runs end in each round.
"""

from __future__ import annotations

from linlab.experiments import termination_experiment

for backend in ("wsl-adv", "alg2", "atomic"):
    rep = termination_experiment(n=3, seeds=range(1000), backend=backend, adversary="theorem1-wsl")
    print(f"--- registers={backend}")
    for line in rep.summary_lines():
        print("   ", line)
    lo, hi = rep.continuation_ci(1)
    print(f"    round-1 continuation 95% Clopper-Pearson interval: [{lo:.3f}, {hi:.3f}]")
