"""
A physical realization
======================

Each step of an open walk can be built from unitaries: a controlled dilation,
decoherence of an auxiliary position register, a swap of the two registers and
a refresh. Without the decoherence step, walks satisfying an orthogonality
condition become unitary quantum walks such as the Hadamard walk.
"""

import math

import numpy as np

from oqrw import preset
from oqrw import realization as r
from oqrw.walk import distribution, evolve

# Two vertices with the closed-form dilations.
pre = preset("two_vertex")
dils = r.two_vertex_dilations(0.5, 1 / math.sqrt(2), 1 / math.sqrt(2))
print("U(2) =\n", np.round(dils[2].matrix.real, 4))
G = r.build_global_unitary(pre.ops, dils)
print("global unitary is", G.shape, "and unitary to", np.max(np.abs(G.conj().T @ G - np.eye(8))))

states = r.realize(pre.initial, pre.ops, 10, dilations=dils)
for n in (1, 5, 10):
    phys = distribution(states[n])
    ref = distribution(evolve(pre.initial, pre.ops, n))
    print(f"n={n:2d}  realized P(2)={phys[2]:.12f}  exact P(2)={ref[2]:.12f}")

# Lattice walks run on a ring wide enough that the seam is never reached.
z = preset("z_sqrt3")
lo, hi = r.ring_for(z.initial.support, 4)
ring = r.cyclic_truncation(z.ops, lo, hi)
out = r.realize(ring.to_graph_state(z.initial), ring.ops, 4)[-1]
print("ring, n=4:", {ring.site(v): round(p * 81, 9) for v, p in distribution(out).probs.items()}, "(x 1/81)")

# The Hadamard pair satisfies the orthogonality condition; the sqrt(3) pair does not.
h = preset("hadamard_unitary")
print("Hadamard condition:", r.check_unitary_walk_condition(h.ops))
print("sqrt(3) condition: ", r.check_unitary_walk_condition(z.ops))

n = 30
ring = r.cyclic_truncation(h.ops, -n - 1, n + 1)
real = r.PhysicalRealization(ring.ops)
V = ring.ops.space.count
phi = np.array([1, 1j]) / math.sqrt(2)
vec = r.canonical_vector({ring.vertex(0): phi}, 2, V)
psi = {0: phi}
for _ in range(n):
    vec = real.unitary_cycle_vector(vec)
    psi = r.unitary_walk_step(psi, h.ops)
got = r.read_canonical_vector(vec, 2, V)
dev = max(np.max(np.abs(got[ring.vertex(s)] - p)) for s, p in psi.items())
print(f"cycle without decoherence vs amplitude walk after {n} steps: {dev:.1e}")
law = r.amplitude_distribution(psi)
print("ballistic spread: peaks near", sorted(law.probs, key=law.probs.get)[-2:], "for n =", n)
