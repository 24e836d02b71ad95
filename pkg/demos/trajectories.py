"""
Quantum trajectories
====================

Measuring the position after every step gives a classical Markov chain on
(position, local state). Its law matches the exact walk, and pure local states
stay pure along every path.
"""

import time

import numpy as np

from oqrw import RngStream, TrajectoryState, preset, sample_trajectories
from oqrw.analysis import total_variation
from oqrw.trajectory import run_trajectory
from oqrw.walk import distribution, evolve

pre = preset("z_sqrt3")
start = TrajectoryState(0, np.array([1.0, 0.0]))

path = run_trajectory(start, pre.ops, 10, RngStream(seed=3, stream_index=0))
print("one path:", [s.vertex for s in path])

exact = distribution(evolve(pre.initial, pre.ops, 4))
for samples in (1_000, 10_000, 100_000):
    t0 = time.perf_counter()
    est, _ = sample_trajectories(start, pre.ops, 4, samples, seed=1)
    print(f"{samples:7d} samples  TV to exact law {total_variation(est, exact):.4f}  ({time.perf_counter() - t0:.2f} s)")

# Scheduling does not change the answer: sample s always uses stream (seed, s).
a, _ = sample_trajectories(start, pre.ops, 4, 20_000, seed=7)
b, _ = sample_trajectories(start, pre.ops, 4, 20_000, seed=7, workers=4, chunk_size=999)
print("identical under 4 workers:", dict(a.probs) == dict(b.probs))
