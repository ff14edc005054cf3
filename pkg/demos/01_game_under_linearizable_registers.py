"""The hosts-and-players game never ends when its registers are only linearizable.

The adversary starts both host writes to R1 together with the players'
first reads, waits for host 0's coin, and only then decides which host
write took effect first.  Every player sees the coin's host first and the
other host second, every host counts all players, and the next round
begins.  We watch twenty rounds and then check the safety lemmas.
"""

from __future__ import annotations

from linlab.game import check_game_lemmas, game_config, round_decisions
from linlab.sim import Commit, run

res = run(game_config(n=4, seed=0, backend="lin-adv", adversary="theorem1", rounds=20))
print(f"outcome: {res.outcome.value}; rounds entered per process: {res.rounds_per_proc}")

commits = [d for d in res.decisions if isinstance(d, Commit)]
for j, (coin, commit) in enumerate(zip(res.coins[:5], commits), start=1):
    print(f"round {j}: coin={coin}, R1 write order committed after the flip: {commit.op_ids}")

decisions = round_decisions(res.marks)
print("player 2 decisions in rounds 1-5:", [decisions[2][j] for j in range(1, 6)])
print("lemma violations:", check_game_lemmas(res.marks, 4) or "none")
