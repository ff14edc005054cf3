"""A linearizable Lamport-timestamp register whose write order cannot be fixed online.

After G, write W1 (process 0) is pending and W2 (process 1) is done.  In
H_case1 W1 ends up with the smaller timestamp, so W1 must precede W2.  In
H_case2 a third write pushes W1's timestamp above W2's, so W2 must precede
W1.  Whatever write order a linearization of G picks, one extension
contradicts it.  The search below
finds, for every linearization of G, the extension that breaks it.
"""

from __future__ import annotations

from linlab.impl_lamport import build_counterexample
from linlab.linearize import enumerate_linearizations, refute_wsl

hs = build_counterexample()
for name, h in hs.items():
    lins = list(enumerate_linearizations(h, 0, "R"))
    print(f"{name}: {len(h)} events, linearizations {lins}")

witness = refute_wsl(hs["G"], [hs["H_case1"], hs["H_case2"]], 0, "R")
for lin, k in witness.items():
    print(f"linearization {lin} of G cannot be extended in {('H_case1', 'H_case2')[k]}")
