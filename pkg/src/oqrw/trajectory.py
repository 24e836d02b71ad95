"""
Quantum-trajectory unraveling of an open walk.

Measuring the position after every step turns the walk into a classical Markov
chain on pairs ``(vertex, local state)``: from ``(j, rho)`` it jumps to
``(i, B rho B^* / p_i)`` with probability ``p_i = Tr(B rho B^*)``, where
``B = B[i, j]``. Pure local states stay pure: ``(j, phi)`` jumps to
``(i, B phi / sqrt(p_i))`` with ``p_i = |B phi|^2``. Averaged over outcomes one
step reproduces the walk map exactly.

Randomness comes from counter-based Philox streams: sample ``s`` of a run with
seed ``seed`` draws its k-th uniform from stream ``(seed, s)`` at position k,
so results do not depend on how samples are scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import matrix as mx
from .errors import DeadEndError, DefinitionError
from .walk import TransitionOperators, WalkDistribution

MIN_BRANCH_PROB = 1e-15
STATE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TrajectoryState:
    """
    One sample of the trajectory chain.

    ``local`` is either a unit vector (pure) or a trace-one PSD matrix (mixed).
    """

    vertex: int
    local: np.ndarray

    def __post_init__(self):
        local = np.array(self.local, dtype=np.complex128)
        if local.ndim == 1:
            norm2 = float(np.vdot(local, local).real)
            if abs(norm2 - 1.0) > STATE_TOL:
                raise DefinitionError(f"pure local state has squared norm {norm2!r}")
        elif local.ndim == 2:
            tr = complex(np.trace(local))
            if abs(tr - 1.0) > STATE_TOL or not mx.is_positive_semidefinite(local, STATE_TOL):
                raise DefinitionError("mixed local state must be PSD with unit trace")
        else:
            raise DefinitionError(f"local state must be a vector or a matrix, got ndim={local.ndim}")
        local.setflags(write=False)
        object.__setattr__(self, "vertex", int(self.vertex))
        object.__setattr__(self, "local", local)

    @property
    def is_pure(self) -> bool:
        return self.local.ndim == 1

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.local, np.conj(self.local))
        return self.local.copy()

    @classmethod
    def from_block(cls, vertex: int, rho) -> "TrajectoryState":
        """Mixed trajectory state from an unnormalized positive block."""
        rho = mx.as_matrix(rho)
        return cls(vertex, rho / np.trace(rho).real)


class RngStream:
    """
    Uniform draws from the Philox stream ``(seed, stream_index)``.

    Streams are disjoint windows of the Philox counter space, so equal
    ``(seed, stream_index)`` pairs reproduce the same sequence bit for bit.
    """

    def __init__(self, seed: int, stream_index: int = 0):
        if not (0 <= seed < 2**64 and 0 <= stream_index < 2**64):
            raise ValueError("seed and stream_index must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        self._gen = np.random.Generator(np.random.Philox(key=self.seed, counter=[0, 0, 0, self.stream_index]))

    def uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_index={self.stream_index})"


# ---------------------------------------------------------------------------
# Branch kernel (batched over samples sharing a source vertex)
# ---------------------------------------------------------------------------


def _branches(locals_: np.ndarray, pure: bool, out: list[tuple[int, np.ndarray]]):
    """Unnormalized outcomes (K, S, ...) and probabilities (K, S) for every target."""
    ops = np.stack([op for _, op in out])
    if pure:
        outcomes = np.einsum("kab,sb->ksa", ops, locals_)
        probs = np.einsum("ksa,ksa->ks", np.conj(outcomes), outcomes).real
    else:
        outcomes = ops[:, None] @ locals_[None] @ np.conj(np.swapaxes(ops, 1, 2))[:, None]
        probs = np.trace(outcomes, axis1=2, axis2=3).real
    return outcomes, probs


def _choose(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF choice over targets (ascending order), ignoring negligible branches."""
    p = np.where(probs > MIN_BRANCH_PROB, probs, 0.0)
    total = p.sum(axis=0)
    if np.any(total <= 0.0):
        raise DeadEndError("every branch has probability below 1e-15")
    cdf = np.cumsum(p, axis=0) / total
    choice = (u[None, :] >= cdf).sum(axis=0)
    # u can exceed the last cdf entry by round-off; fall back to the last live branch
    last_live = p.shape[0] - 1 - np.argmax(p[::-1] > 0.0, axis=0)
    return np.minimum(choice, last_live)


def _advance(vertex: int, locals_: np.ndarray, pure: bool, ops: TransitionOperators, u: np.ndarray):
    out = ops.out_edges(vertex)
    if not out:
        raise DeadEndError(f"vertex {vertex} has no outgoing operators")
    outcomes, probs = _branches(locals_, pure, out)
    k = _choose(probs, u)
    idx = np.arange(locals_.shape[0])
    chosen = outcomes[k, idx]
    p = probs[k, idx]
    if pure:
        new = chosen / np.sqrt(p)[:, None]
    else:
        new = chosen / p[:, None, None]
        new = 0.5 * (new + np.conj(np.swapaxes(new, 1, 2)))
    targets = np.array([t for t, _ in out], dtype=np.int64)[k]
    return targets, new


def branch_outcomes(ts: TrajectoryState, ops: TransitionOperators) -> list[tuple[int, float, np.ndarray]]:
    """
    Every possible next state: ``(target, probability, normalized local)`` in
    ascending target order, skipping branches with probability <= 1e-15.
    """
    out = ops.out_edges(ts.vertex)
    outcomes, probs = _branches(ts.local[None], ts.is_pure, out)
    result = []
    for k, (target, _) in enumerate(out):
        p = float(probs[k, 0])
        if p <= MIN_BRANCH_PROB:
            continue
        if ts.is_pure:
            local = outcomes[k, 0] / np.sqrt(p)
        else:
            local = outcomes[k, 0] / p
        result.append((target, p, local))
    return result


def expected_next(ts: TrajectoryState, ops: TransitionOperators) -> dict[int, np.ndarray]:
    """``sum_i p_i * (outcome at i)`` as a block map, enumerating every branch."""
    blocks: dict[int, np.ndarray] = {}
    for target, p, local in branch_outcomes(ts, ops):
        rho = np.outer(local, np.conj(local)) if ts.is_pure else local
        blocks[target] = blocks.get(target, 0) + p * rho
    return blocks


def trajectory_step(ts: TrajectoryState, ops: TransitionOperators, rng: RngStream) -> TrajectoryState:
    """Draw one uniform from ``rng`` and jump to the selected branch."""
    if ts.local.shape[0] != ops.chirality_dim:
        raise DefinitionError(f"local state has dimension {ts.local.shape[0]}, operators act on {ops.chirality_dim}")
    u = np.array([rng.uniform()])
    targets, new = _advance(ts.vertex, ts.local[None], ts.is_pure, ops, u)
    return TrajectoryState(int(targets[0]), new[0])


def run_trajectory(initial: TrajectoryState, ops: TransitionOperators, n_steps: int, rng: RngStream) -> list[TrajectoryState]:
    """The path ``[initial, X_1, ..., X_n]``."""
    path = [initial]
    for _ in range(n_steps):
        path.append(trajectory_step(path[-1], ops, rng))
    return path


def _run_chunk(initial: TrajectoryState, ops: TransitionOperators, uniforms: np.ndarray) -> np.ndarray:
    S, n_steps = uniforms.shape
    vertices = np.full(S, initial.vertex, dtype=np.int64)
    locals_ = np.repeat(initial.local[None], S, axis=0)
    pure = initial.is_pure
    for step in range(n_steps):
        new_vertices = np.empty_like(vertices)
        new_locals = np.empty_like(locals_)
        for v in np.unique(vertices):
            sel = np.flatnonzero(vertices == v)
            targets, new = _advance(int(v), locals_[sel], pure, ops, uniforms[sel, step])
            new_vertices[sel] = targets
            new_locals[sel] = new
        vertices, locals_ = new_vertices, new_locals
    return vertices


def sample_trajectories(
    initial: TrajectoryState,
    ops: TransitionOperators,
    n_steps: int,
    n_samples: int,
    seed: int,
    *,
    workers: int = 1,
    chunk_size: int = 8192,
) -> tuple[WalkDistribution, np.ndarray]:
    """
    Run ``n_samples`` independent trajectories of ``n_steps`` steps.

    Sample ``s`` uses :class:`RngStream` ``(seed, s)``. Returns the empirical
    distribution of the final vertex and the final vertex of every sample.
    The result does not depend on ``workers`` or ``chunk_size``.
    """
    if n_steps < 0:
        raise ValueError(f"n_steps must be nonnegative, got {n_steps}")
    if n_samples < 1:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    if initial.local.shape[0] != ops.chirality_dim:
        raise DefinitionError(
            f"local state has dimension {initial.local.shape[0]}, operators act on {ops.chirality_dim}"
        )
    starts = list(range(0, n_samples, chunk_size))

    def work(start: int) -> np.ndarray:
        stop = min(start + chunk_size, n_samples)
        u = np.empty((stop - start, n_steps))
        for s in range(start, stop):
            u[s - start] = RngStream(seed, s).uniforms(n_steps)
        return _run_chunk(initial, ops, u)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]
    finals = np.concatenate(parts)
    vertices, counts = np.unique(finals, return_counts=True)
    probs = {int(v): c / n_samples for v, c in zip(vertices, counts)}
    return WalkDistribution(probs), finals


def pure_stays_pure_check(initial: TrajectoryState, ops: TransitionOperators, n_steps: int, rng: RngStream) -> bool:
    """True iff every local state along one pure trajectory has unit norm within 1e-9."""
    if not initial.is_pure:
        raise DefinitionError("pure_stays_pure_check needs a pure initial state")
    vertex, phi = initial.vertex, initial.local[None]
    for _ in range(n_steps):
        targets, phi = _advance(vertex, phi, True, ops, np.array([rng.uniform()]))
        vertex = int(targets[0])
        if phi.ndim != 2 or abs(np.vdot(phi[0], phi[0]).real - 1.0) > STATE_TOL:
            return False
    return True
