"""
Open quantum random walks: definitions and exact evolution.

A walk is given by a vertex space and, for every oriented edge ``j -> i``, a
transition operator ``B[i, j]`` acting on the chirality space. The state is a
family of positive blocks ``rho_i`` (one per vertex) whose traces sum to one;
one step maps it to ``rho'_i = sum_j B[i, j] rho_j B[i, j]^*``.

Vertices are integers. Finite graphs use ``1..count``; lattice sites are
signed integers inside a finite window ``[lo, hi]`` that grows as the walk
spreads.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Union

import numpy as np

from . import matrix as mx
from .errors import CorruptedStateError, DefinitionError, DimensionError, WindowOverflowError

DEFAULT_VALIDATION_TOL = 1e-10
DEFAULT_PRUNE_THRESHOLD = 1e-15
DEFAULT_WINDOW_CAP = 100_000
WINDOW_CAP_ENV = "OQRW_WINDOW_CAP"


def default_window_cap() -> int:
    """Hard cap on lattice window width; ``OQRW_WINDOW_CAP`` overrides it."""
    raw = os.environ.get(WINDOW_CAP_ENV)
    if raw is None:
        return DEFAULT_WINDOW_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise DefinitionError(f"{WINDOW_CAP_ENV}={raw!r} is not an integer") from exc
    if cap < 1:
        raise DefinitionError(f"{WINDOW_CAP_ENV} must be positive, got {cap}")
    return cap


# ---------------------------------------------------------------------------
# Vertex spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FiniteGraph:
    """Vertices ``1..count``."""

    count: int

    def __post_init__(self):
        if self.count < 1:
            raise DefinitionError(f"graph needs at least one vertex, got {self.count}")

    @property
    def vertices(self) -> range:
        return range(1, self.count + 1)

    def contains(self, v: int) -> bool:
        return 1 <= v <= self.count

    def index(self, v: int) -> int:
        """Zero-based basis index of vertex ``v`` in the position register."""
        return v - 1


@dataclass(frozen=True)
class LatticeZ:
    """A finite window ``[lo, hi]`` of the integer lattice."""

    lo: int = 0
    hi: int = 0

    def __post_init__(self):
        if self.lo > self.hi:
            raise DefinitionError(f"empty lattice window [{self.lo}, {self.hi}]")

    @property
    def vertices(self) -> range:
        return range(self.lo, self.hi + 1)

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1

    def contains(self, v: int) -> bool:
        return self.lo <= v <= self.hi


VertexSpace = Union[FiniteGraph, LatticeZ]


# ---------------------------------------------------------------------------
# Transition operators
# ---------------------------------------------------------------------------


def _frozen(m: np.ndarray) -> np.ndarray:
    m = mx.as_matrix(m)
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class TransitionOperators:
    """
    The family of transition operators defining a walk.

    ``edges`` maps ``(target, source)`` to the operator applied when jumping
    from ``source`` to ``target``. A lattice walk may instead carry a
    ``stationary`` pair ``(left, right)``: every site ``j`` jumps to ``j - 1``
    with ``left`` and to ``j + 1`` with ``right``.
    """

    space: VertexSpace
    chirality_dim: int
    edges: Mapping[tuple[int, int], np.ndarray] = field(default_factory=dict)
    stationary: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        d = self.chirality_dim
        if d < 1:
            raise DefinitionError(f"chirality_dim must be positive, got {d}")
        frozen = {}
        for key, op in self.edges.items():
            target, source = (int(key[0]), int(key[1]))
            op = _frozen(op)
            if op.shape != (d, d):
                raise DefinitionError(
                    f"operator for edge {source}->{target} has shape {op.shape}, expected {(d, d)}"
                )
            if isinstance(self.space, FiniteGraph):
                for v in (target, source):
                    if not self.space.contains(v):
                        raise DefinitionError(f"edge {source}->{target} leaves the graph 1..{self.space.count}")
            frozen[(target, source)] = op
        object.__setattr__(self, "edges", MappingProxyType(frozen))

        if self.stationary is not None:
            if not isinstance(self.space, LatticeZ):
                raise DefinitionError("a stationary pair requires a lattice vertex space")
            if frozen:
                raise DefinitionError("give either explicit edges or a stationary pair, not both")
            left, right = (_frozen(m) for m in self.stationary)
            for name, op in (("left", left), ("right", right)):
                if op.shape != (d, d):
                    raise DefinitionError(f"{name} operator has shape {op.shape}, expected {(d, d)}")
            object.__setattr__(self, "stationary", (left, right))

        out: dict[int, list[tuple[int, np.ndarray]]] = {}
        for (target, source), op in sorted(frozen.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            out.setdefault(source, []).append((target, op))
        object.__setattr__(self, "_out", out)

    @property
    def is_stationary(self) -> bool:
        return self.stationary is not None

    def out_edges(self, source: int) -> list[tuple[int, np.ndarray]]:
        """``(target, operator)`` pairs leaving ``source`` in ascending target order."""
        if self.stationary is not None:
            left, right = self.stationary
            return [(source - 1, left), (source + 1, right)]
        return list(self._out.get(source, ()))

    def sources(self) -> list[int]:
        """Vertices whose outgoing operators are checked by :func:`validate_transitions`."""
        if self.stationary is not None:
            return list(self.space.vertices)
        return sorted(self._out)

    def operator(self, target: int, source: int) -> np.ndarray | None:
        if self.stationary is not None:
            if target == source - 1:
                return self.stationary[0]
            if target == source + 1:
                return self.stationary[1]
            return None
        return self.edges.get((target, source))


@dataclass(frozen=True)
class ValidationReport:
    """Per-source deviation ``max|sum_i B[i,j]^* B[i,j] - I|``."""

    deviations: Mapping[int, float]
    tol: float

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return all(dev <= self.tol for dev in self.deviations.values())

    def failures(self) -> dict[int, float]:
        return {j: dev for j, dev in self.deviations.items() if dev > self.tol}


def normalization_deviation(operators: Iterable[np.ndarray], dim: int) -> float:
    acc = np.zeros((dim, dim), dtype=np.complex128)
    for op in operators:
        if op.shape != (dim, dim):
            raise DefinitionError(f"operator shape {op.shape} does not match chirality dimension {dim}")
        acc += np.conj(op).T @ op
    return mx.max_abs(acc - np.eye(dim))


def validate_transitions(ops: TransitionOperators, tol: float = DEFAULT_VALIDATION_TOL) -> ValidationReport:
    """Check ``sum_i B[i,j]^* B[i,j] = I`` for every source ``j`` with outgoing edges."""
    d = ops.chirality_dim
    if ops.is_stationary:
        dev = normalization_deviation(ops.stationary, d)
        deviations = {j: dev for j in ops.sources()}
    else:
        deviations = {j: normalization_deviation((op for _, op in ops.out_edges(j)), d) for j in ops.sources()}
    return ValidationReport(MappingProxyType(deviations), tol)


# ---------------------------------------------------------------------------
# Block states and distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BlockState:
    """
    Block-diagonal walk state ``sum_i rho_i (x) |i><i|``.

    Vertices missing from ``blocks`` carry the zero block. ``pruned_mass`` is the
    total trace discarded by pruning during evolution; it is reported, never
    renormalized away.
    """

    space: VertexSpace
    blocks: Mapping[int, np.ndarray]
    pruned_mass: float = 0.0

    def __post_init__(self):
        frozen = {}
        dim = None
        for v, rho in sorted(self.blocks.items()):
            v = int(v)
            rho = _frozen(rho)
            if rho.shape[0] != rho.shape[1]:
                raise DimensionError(f"block at vertex {v} is not square: {rho.shape}")
            if dim is None:
                dim = rho.shape[0]
            elif rho.shape[0] != dim:
                raise DimensionError(f"block at vertex {v} has dimension {rho.shape[0]}, expected {dim}")
            if not self.space.contains(v):
                raise DefinitionError(f"vertex {v} lies outside the vertex space {self.space}")
            frozen[v] = rho
        if dim is None:
            raise DefinitionError("a block state needs at least one block")
        object.__setattr__(self, "blocks", MappingProxyType(frozen))
        object.__setattr__(self, "_dim", dim)

    @classmethod
    def localized(cls, space: VertexSpace, vertex: int, rho) -> "BlockState":
        """The state ``rho (x) |vertex><vertex|``."""
        return cls(space, {vertex: rho})

    @property
    def chirality_dim(self) -> int:
        return self._dim

    @property
    def support(self) -> list[int]:
        return list(self.blocks)

    def block(self, v: int) -> np.ndarray:
        rho = self.blocks.get(v)
        if rho is None:
            return np.zeros((self._dim, self._dim), dtype=np.complex128)
        return rho

    def total_trace(self) -> float:
        return float(sum(np.trace(rho).real for rho in self.blocks.values()))

    def check(self, tol: float = mx.DEFAULT_PSD_TOL) -> None:
        """Raise :class:`CorruptedStateError` unless every block is PSD and traces sum to one."""
        for v, rho in self.blocks.items():
            if not mx.is_positive_semidefinite(rho, tol):
                raise CorruptedStateError(f"block at vertex {v} is not positive semidefinite")
        drift = abs(self.total_trace() - 1.0)
        if drift > tol:
            raise CorruptedStateError(f"total trace differs from 1 by {drift:.3e}")


@dataclass(frozen=True)
class WalkDistribution:
    """Probability of each vertex; vertices absent from ``probs`` have probability 0."""

    probs: Mapping[int, float]

    def __post_init__(self):
        clean = {int(v): float(p) for v, p in sorted(self.probs.items())}
        for v, p in clean.items():
            if not (0.0 <= p <= 1.0 + 1e-9):
                raise ValueError(f"probability {p} at vertex {v} outside [0, 1]")
        total = sum(clean.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", MappingProxyType(clean))

    def __getitem__(self, v: int) -> float:
        return self.probs.get(v, 0.0)

    @property
    def support(self) -> list[int]:
        return [v for v, p in self.probs.items() if p > 0.0]

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Vertices and probabilities, sorted by vertex."""
        vertices = np.fromiter(self.probs.keys(), dtype=np.int64, count=len(self.probs))
        probs = np.fromiter(self.probs.values(), dtype=np.float64, count=len(self.probs))
        return vertices, probs


def distribution(state: BlockState) -> WalkDistribution:
    """``p_i = Tr(rho_i)``, real part taken and round-off below zero clamped."""
    probs = {}
    for v, rho in state.blocks.items():
        tr = complex(np.trace(rho))
        if abs(tr.imag) > 1e-9:
            raise CorruptedStateError(f"block at vertex {v} has trace with imaginary part {tr.imag:.3e}")
        p = tr.real
        if p < 0.0:
            if p < -1e-12:
                raise CorruptedStateError(f"block at vertex {v} has negative trace {p:.3e}")
            p = 0.0
        probs[v] = p
    try:
        return WalkDistribution(probs)
    except ValueError as exc:
        raise CorruptedStateError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------


def _check_compatible(state: BlockState, ops: TransitionOperators) -> None:
    if state.chirality_dim != ops.chirality_dim:
        raise DimensionError(
            f"state blocks have dimension {state.chirality_dim}, operators act on {ops.chirality_dim}"
        )
    if type(state.space) is not type(ops.space):
        raise DefinitionError(f"state lives on {state.space}, operators on {ops.space}")
    if isinstance(ops.space, FiniteGraph) and state.space != ops.space:
        raise DefinitionError(f"state lives on {state.space}, operators on {ops.space}")


def _grown_window(space: LatticeZ, lo: int, hi: int, cap: int) -> LatticeZ:
    new_lo = min(space.lo - 1, lo)
    new_hi = max(space.hi + 1, hi)
    width = new_hi - new_lo + 1
    if width > cap:
        raise WindowOverflowError(
            f"lattice window [{new_lo}, {new_hi}] ({width} sites) exceeds the cap of {cap} sites; "
            f"raise it with {WINDOW_CAP_ENV}"
        )
    return LatticeZ(new_lo, new_hi)


def _prune(blocks: dict[int, np.ndarray], threshold: float) -> tuple[dict[int, np.ndarray], float]:
    kept = {}
    lost = 0.0
    for v, rho in blocks.items():
        tr = float(np.trace(rho).real)
        if tr < threshold:
            lost += tr
        else:
            kept[v] = rho
    return kept, lost


def _generic_step(blocks: Mapping[int, np.ndarray], ops: TransitionOperators) -> dict[int, np.ndarray]:
    new: dict[int, np.ndarray] = {}
    for j, rho in blocks.items():
        out = ops.out_edges(j)
        if not out:
            if np.trace(rho).real > 0.0:
                raise DefinitionError(f"vertex {j} carries mass but has no outgoing operators")
            continue
        for i, op in out:
            contrib = op @ rho @ np.conj(op).T
            if i in new:
                new[i] = new[i] + contrib
            else:
                new[i] = contrib
    return {i: new[i] for i in sorted(new)}


def step(
    state: BlockState,
    ops: TransitionOperators,
    *,
    prune_threshold: float = DEFAULT_PRUNE_THRESHOLD,
    window_cap: int | None = None,
) -> BlockState:
    """
    One application of the walk map.

    Blocks whose trace falls below ``prune_threshold`` are dropped and their
    mass is added to ``pruned_mass``. Lattice windows grow by one site on each
    side; :class:`WindowOverflowError` is raised past ``window_cap``.
    """
    return evolve(state, ops, 1, prune_threshold=prune_threshold, window_cap=window_cap)


def evolve(
    state: BlockState,
    ops: TransitionOperators,
    n: int,
    *,
    prune_threshold: float = DEFAULT_PRUNE_THRESHOLD,
    window_cap: int | None = None,
) -> BlockState:
    """Apply :func:`step` ``n`` times. ``evolve(s, ops, 0)`` returns ``s``."""
    if n < 0:
        raise ValueError(f"number of steps must be nonnegative, got {n}")
    _check_compatible(state, ops)
    if n == 0:
        return state
    cap = default_window_cap() if window_cap is None else window_cap
    if ops.is_stationary:
        return _evolve_stationary(state, ops, n, prune_threshold, cap)

    blocks = dict(state.blocks)
    space = state.space
    lost = state.pruned_mass
    for _ in range(n):
        blocks = _generic_step(blocks, ops)
        blocks, dropped = _prune(blocks, prune_threshold)
        lost += dropped
        if not blocks:
            raise CorruptedStateError(f"all mass was pruned away (pruned mass {lost:.3e})")
        if isinstance(space, LatticeZ):
            space = _grown_window(space, min(blocks), max(blocks), cap)
    return BlockState(space, blocks, lost)


def _evolve_stationary(state: BlockState, ops: TransitionOperators, n: int, threshold: float, cap: int) -> BlockState:
    # Dense array over the support range; zero blocks stand for pruned sites.
    left, right = ops.stationary
    left_h = np.conj(left).T
    right_h = np.conj(right).T
    d = state.chirality_dim
    first = min(state.blocks)
    last = max(state.blocks)
    arr = np.zeros((last - first + 1, d, d), dtype=np.complex128)
    for v, rho in state.blocks.items():
        arr[v - first] = rho
    space = state.space
    lost = state.pruned_mass
    for _ in range(n):
        m = arr.shape[0]
        new = np.zeros((m + 2, d, d), dtype=np.complex128)
        # target s-1 receives left.rho_s.left^*, target s+1 receives right.rho_s.right^*;
        # sources are summed in ascending order (s-1 via right first, then s+1 via left).
        new[2:] += right @ arr @ right_h
        new[:m] += left @ arr @ left_h
        first -= 1
        traces = np.trace(new, axis1=1, axis2=2).real
        dropped = traces < threshold
        if dropped.any():
            lost += float(traces[dropped].sum())
            new[dropped] = 0.0
        kept = np.flatnonzero(~dropped)
        if kept.size == 0:
            raise CorruptedStateError(f"all mass was pruned away (pruned mass {lost:.3e})")
        arr = new[kept[0] : kept[-1] + 1]
        first += int(kept[0])
        space = _grown_window(space, first, first + arr.shape[0] - 1, cap)
    traces = np.trace(arr, axis1=1, axis2=2).real
    blocks = {first + k: arr[k] for k in range(arr.shape[0]) if traces[k] >= threshold}
    return BlockState(space, blocks, lost)


# ---------------------------------------------------------------------------
# Full-space picture (small finite graphs)
# ---------------------------------------------------------------------------


def embed_state(state: BlockState) -> np.ndarray:
    """The density matrix ``sum_i rho_i (x) |i><i|`` on ``H (x) K`` for a finite graph."""
    if not isinstance(state.space, FiniteGraph):
        raise DefinitionError("embedding into H (x) K requires a finite graph")
    V = state.space.count
    out = np.zeros((state.chirality_dim * V, state.chirality_dim * V), dtype=np.complex128)
    for v, rho in state.blocks.items():
        e = np.zeros((V, V))
        e[v - 1, v - 1] = 1.0
        out += mx.kron(rho, e)
    return out


def position_block(rho: np.ndarray, d: int, V: int, i: int, j: int) -> np.ndarray:
    """The ``H``-operator ``<i| rho |j>`` (vertices 1-based) of a matrix on ``H (x) K``."""
    t = np.asarray(rho).reshape(d, V, d, V)
    return t[:, i - 1, :, j - 1].copy()


def extract_state(rho: np.ndarray, d: int, space: FiniteGraph) -> BlockState:
    """Read the diagonal position blocks of a density matrix on ``H (x) K``."""
    V = space.count
    blocks = {v: position_block(rho, d, V, v, v) for v in space.vertices}
    blocks = {v: b for v, b in blocks.items() if mx.max_abs(b) > 0.0}
    return BlockState(space, blocks)


def apply_full_map(rho: np.ndarray, ops: TransitionOperators) -> np.ndarray:
    """
    Apply ``M(rho) = sum_{i,j} M_ij rho M_ij^*`` with ``M_ij = B[i,j] (x) |i><j|``
    to an arbitrary matrix on ``H (x) K`` (finite graphs only).
    """
    if not isinstance(ops.space, FiniteGraph):
        raise DefinitionError("the full map is only materialized on finite graphs")
    d = ops.chirality_dim
    V = ops.space.count
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (d * V, d * V):
        raise DefinitionError(f"expected a {(d * V, d * V)} matrix, got {rho.shape}")
    out = np.zeros_like(rho)
    for (i, j), op in sorted(ops.edges.items()):
        e = np.zeros((V, V))
        e[i - 1, j - 1] = 1.0
        big = mx.kron(op, e)
        out += big @ rho @ np.conj(big).T
    return out
