"""
Pseudocounts from gating signatures
===================================

Every gating unit hashes a context to a signature, and the agent counts how
often each (signature, action) pair was played. The pseudocount is a soft
minimum of those counts across units, sharpened as time goes on.
"""
import numpy as np

from gatedbandit import CountTable, exploration_bonus, pseudocount, sample_gating, total_signature
from gatedbandit.pseudocount import soft_min_count

# soft-min of counts {2, 10}: the arithmetic mean at t=1, the minimum as t grows
for t in [1, 10, 100, 1e4, 1e9]:
    print(f"t={t:>8g}  soft-min(2, 10) = {soft_min_count([2, 10], t):.4f}")

rng = np.random.default_rng(1)
gates = sample_gating(2, 50, 4, 0.05, rng)
table = CountTable(gates.num_units, gates.num_signatures, num_actions=1)

# play action 0 many times near the origin corner only
for _ in range(500):
    x = rng.random(2) * 0.3
    table.increment(total_signature(gates, x), 0)

t = table.step
for x in ([0.1, 0.1], [0.2, 0.25], [0.5, 0.5], [0.9, 0.9]):
    nhat = pseudocount(table, total_signature(gates, np.array(x)), 0, t)
    print(f"x={x}  pseudocount={nhat:7.2f}  bonus(C=0.1)={exploration_bonus(t, nhat, 0.1):.4f}")
