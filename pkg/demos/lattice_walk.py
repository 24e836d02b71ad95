"""
A walk on the integers
======================

Every site sends its chirality state left with ``B`` and right with ``C``.
The position law starts lopsided and drifts toward a centered bell shape.
"""

import numpy as np

from oqrw import analysis, preset
from oqrw.walk import distribution, evolve, step

pre = preset("z_sqrt3")
B, C = pre.ops.stationary
print("B =\n", np.round(B.real, 4))
print("C =\n", np.round(C.real, 4))

# The first few laws are small rationals: multiply by 3^n to see them.
state = pre.initial
for n in range(5):
    d = distribution(state)
    print(f"n={n}:", {v: round(p * 3**n, 9) for v, p in d.probs.items()})
    state = step(state, pre.ops)

# Longer runs: the mean stops drifting and the law gets closer to a normal one.
for n in (20, 80, 200):
    d = distribution(evolve(pre.initial, pre.ops, n))
    m = analysis.moments(d)
    print(
        f"n={n:4d}  mean/n={m.mean / n:+.4f}  variance/n={m.variance / n:.4f}"
        f"  gaussian discrepancy={analysis.gaussian_discrepancy(d):.2e}"
    )

# A crude text histogram at n=40 (occupied sites share the parity of n).
d = distribution(evolve(pre.initial, pre.ops, 40))
for v in range(-20, 21, 2):
    print(f"{v:+4d} {'#' * int(400 * d[v])}")
