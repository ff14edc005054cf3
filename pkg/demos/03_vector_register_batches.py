"""How the online linearization orders three overlapping vector-timestamp writes.

Process 0 starts w1 and reads one cell, process 2 starts w3 and reads two,
then process 1 runs w2 to completion.  When w2 writes its cell, w3's
partial timestamp is already below w2's, so both go into the first batch.
w1's partial timestamp still has infinite entries and waits.  The write
order (w3, w2, w1) is fixed online and differs from completion order.
"""

from __future__ import annotations

from linlab.impl_vector import three_writer_script
from linlab.linearize import analyze_vector, check_batch_invariants

h = three_writer_script()
ops = h.operations("R")
a = analyze_vector(h, "R", 0)
for b in a.batches:
    print(f"batch {b.index} at t={b.time}, triggered by write #{b.w_i}")
    for w, ts in sorted(b.pts.items()):
        mark = "*" if w in b.members else " "
        print(f"   {mark} write #{w} (value {ops[w].argument}) pts={ts}")
print("linearization:", a.linearization)
print("batch invariants:", check_batch_invariants(a) or "all hold")
