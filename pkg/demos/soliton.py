"""
A soliton that fades
====================

In dimension five the walk splits into a packet travelling right at full
speed and a slower bulk. The packet keeps shedding mass into the bulk, and the
initial site empties out.
"""

import math

from oqrw import preset
from oqrw.walk import distribution, evolve

pre = preset("z_dim5", t=math.pi / 40)

for n in (10, 50, 100, 200):
    s = evolve(pre.initial, pre.ops, n, prune_threshold=0.0)
    d = distribution(s)
    bulk = sum(p for v, p in d.probs.items() if v < n - 10)
    print(f"n={n:4d}  front P({n})={d[n]:.4f}  P(0)={d[0]:.2e}  mass behind the front={bulk:.4f}")
