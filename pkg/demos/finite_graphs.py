"""
Absorption on finite graphs
===========================

Two vertices: vertex 1 splits its state between staying and moving, vertex 2
keeps ``C = diag(1, sqrt(1 - p))`` and sends ``B`` back to 1. Every initial
state ends at vertex 2 in the first chirality state.

On a chain the same mechanism transports everything to the last vertex.
"""

import numpy as np

from oqrw import BlockState, preset
from oqrw.walk import distribution, evolve, step

pre = preset("two_vertex", p=0.5)
rng = np.random.default_rng(0)
g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
rho = g @ g.conj().T
rho /= np.trace(rho).real
start = BlockState(pre.ops.space, {1: 0.3 * rho, 2: 0.7 * np.eye(2) / 2})

for n in (0, 5, 20, 60, 200):
    s = evolve(start, pre.ops, n)
    print(f"n={n:3d}  P(2)={distribution(s)[2]:.12f}  block at 2 =", np.round(s.block(2), 8).tolist())

chain = preset("chain", N=5)
s = chain.initial
for n in range(1, 501):
    s = step(s, chain.ops)
    if n in (10, 50, 100) or distribution(s)[5] > 0.99:
        print(f"chain n={n:3d}  P(5)={distribution(s)[5]:.4f}")
    if distribution(s)[5] > 0.99:
        break
