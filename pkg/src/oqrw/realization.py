"""
Physical realization of an open walk by unitary dilation.

The walk is run on ``H (x) K1 (x) K2`` where ``K1`` and ``K2`` are two copies of
the position space. Each cycle

1. applies ``U = sum_j U(j) (x) |j><j|`` (``U(j)`` dilates the operators leaving ``j``),
2. decoheres ``K1`` in the position basis,
3. swaps ``K1`` and ``K2``,
4. refreshes ``K1`` to ``|1><1|``,

after which the ``H (x) K2`` marginal carries one step of the walk. Skipping
step 2 for operators that satisfy the orthogonality condition
``sum_i B[i,j]^* B[i,j'] = delta_jj' I`` produces a unitary quantum walk
instead.

Layout conventions
------------------
* Tripartite matrices use Kronecker order ``H (x) K1 (x) K2``; the basis index of
  ``|h> (x) |a> (x) |k>`` is ``(h * V + a) * V + k``.
* Position registers index vertex ``v`` of a finite graph as ``v - 1``; the
  refresh state ``|1>`` is index 0.
* A :class:`DilationUnitary` matrix is written as a block matrix over ``K1``
  (``d x d`` blocks, ``K1`` outer) so its first block column reads directly as
  the stacked transition operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import matrix as mx
from .errors import CannotDilateError, CanonicalFormError, DefinitionError, UnitaryConditionError
from .walk import (
    DEFAULT_VALIDATION_TOL,
    BlockState,
    FiniteGraph,
    TransitionOperators,
    WalkDistribution,
    normalization_deviation,
)

CANONICAL_TOL = 1e-9


# ---------------------------------------------------------------------------
# Dilations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DilationUnitary:
    """
    Unitary on ``H (x) C^m`` whose first block column stacks the operators
    leaving ``source`` toward ``target_order[0], ..., target_order[m-1]``.
    """

    source: int
    matrix: np.ndarray
    target_order: tuple[int, ...]

    def __post_init__(self):
        m = mx.as_matrix(self.matrix)
        order = tuple(int(v) for v in self.target_order)
        if len(set(order)) != len(order) or not order:
            raise DefinitionError(f"target order must list distinct vertices, got {order}")
        if m.shape[0] != m.shape[1] or m.shape[0] % len(order):
            raise DefinitionError(f"dilation of shape {m.shape} does not split into {len(order)} block rows")
        if not mx.is_unitary(m, 1e-10):
            raise DefinitionError("dilation matrix is not unitary within 1e-10")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "target_order", order)

    @property
    def chirality_dim(self) -> int:
        return self.matrix.shape[0] // len(self.target_order)

    def block(self, row: int, col: int) -> np.ndarray:
        d = self.chirality_dim
        return self.matrix[row * d : (row + 1) * d, col * d : (col + 1) * d]

    def first_block_column(self) -> dict[int, np.ndarray]:
        """``{target: operator}`` read from the first block column."""
        return {v: self.block(r, 0) for r, v in enumerate(self.target_order)}

    def column_deviation(self, ops: TransitionOperators) -> float:
        """Max entrywise distance between the first block column and the walk's operators."""
        zero = np.zeros((self.chirality_dim,) * 2)
        expected = {i: op for i, op in ops.out_edges(self.source)}
        dev = 0.0
        for v, blk in self.first_block_column().items():
            dev = max(dev, mx.max_abs(blk - expected.pop(v, zero)))
        for op in expected.values():
            dev = max(dev, mx.max_abs(op))
        return dev


def complete_to_unitary(columns: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """
    Extend orthonormal ``columns`` (n x r) to an n x n unitary by modified
    Gram-Schmidt against the standard basis ``e_0, e_1, ...`` in order.

    The given columns are kept verbatim; candidates whose residual norm falls
    below 1e-6 are skipped.
    """
    n, r = columns.shape
    gram = np.conj(columns).T @ columns
    if mx.max_abs(gram - np.eye(r)) > tol:
        raise CannotDilateError(f"columns are not orthonormal (deviation {mx.max_abs(gram - np.eye(r)):.3e})")
    basis = [columns[:, c] for c in range(r)]
    for e in range(n):
        if len(basis) == n:
            break
        v = np.zeros(n, dtype=np.complex128)
        v[e] = 1.0
        for _ in range(2):  # second pass restores orthogonality lost to cancellation
            for q in basis:
                v = v - np.vdot(q, v) * q
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            basis.append(v / norm)
    return np.column_stack(basis)


def dilate(ops: TransitionOperators, j: int, target_order: Sequence[int] | None = None) -> DilationUnitary:
    """Deterministic unitary dilation of the operators leaving vertex ``j``."""
    out = dict(ops.out_edges(j))
    if not out:
        raise CannotDilateError(f"vertex {j} has no outgoing operators")
    order = tuple(sorted(out)) if target_order is None else tuple(target_order)
    if set(order) != set(out):
        raise DefinitionError(f"target order {order} does not match the targets {sorted(out)} of vertex {j}")
    d = ops.chirality_dim
    dev = normalization_deviation(out.values(), d)
    if dev > DEFAULT_VALIDATION_TOL:
        raise CannotDilateError(f"operators leaving vertex {j} are not normalized (deviation {dev:.3e})")
    column = np.vstack([out[v] for v in order])
    return DilationUnitary(j, complete_to_unitary(column), order)


def two_vertex_dilations(p: float, a: float, alpha: float) -> dict[int, DilationUnitary]:
    """
    Closed-form dilations for the two-vertex example.

    Vertex 1 uses ``exp(-i K)`` with ``K = diag(lam, mu) (x) sigma_y`` and
    ``a = cos lam``, ``alpha = cos mu``; vertex 2 uses the beam-splitter
    unitary with ``sin(gamma) = sqrt(p)``, whose first block column lists the
    stay operator before the jump operator.
    """
    lam, mu = math.acos(a), math.acos(alpha)
    cos_ = np.diag([math.cos(lam), math.cos(mu)])
    sin_ = np.diag([math.sin(lam), math.sin(mu)])
    v_mat = np.block([[cos_, -sin_], [sin_, cos_]])
    s, c = math.sqrt(p), math.sqrt(1 - p)
    u_mat = np.array(
        [
            [1, 0, 0, 0],
            [0, c, -s, 0],
            [0, s, c, 0],
            [0, 0, 0, 1],
        ],
        dtype=np.complex128,
    )
    return {1: DilationUnitary(1, v_mat, (1, 2)), 2: DilationUnitary(2, u_mat, (2, 1))}


def _graph_of(ops: TransitionOperators) -> FiniteGraph:
    if not isinstance(ops.space, FiniteGraph):
        raise DefinitionError("realization needs a finite graph; use cyclic_truncation for lattice walks")
    return ops.space


def embed_dilation(dil: DilationUnitary, V: int) -> np.ndarray:
    """
    The dilation as a unitary on ``H (x) K1`` with ``dim K1 = V`` (block matrix
    over ``K1``): block row ``target - 1`` of column 0 holds the operator for
    ``target``. Unused register states are paired up by identity blocks.
    """
    d = dil.chirality_dim
    m = len(dil.target_order)
    rows = [v - 1 for v in dil.target_order]
    if any(not 0 <= r < V for r in rows):
        raise DefinitionError(f"targets {dil.target_order} do not fit a register of dimension {V}")
    cols = [0] + [c for c in range(1, V)][: m - 1] if m <= V else None
    if cols is None or len(cols) != m:
        raise DefinitionError(f"a dilation with {m} targets does not fit a register of dimension {V}")
    full = np.zeros((d * V, d * V), dtype=np.complex128)
    for r_slot, r in enumerate(rows):
        for c_slot, c in enumerate(cols):
            full[r * d : (r + 1) * d, c * d : (c + 1) * d] = dil.block(r_slot, c_slot)
    spare_rows = [r for r in range(V) if r not in rows]
    spare_cols = [c for c in range(V) if c not in cols]
    for r, c in zip(spare_rows, spare_cols):
        full[r * d : (r + 1) * d, c * d : (c + 1) * d] = np.eye(d)
    return full


def _register_blocks(ops: TransitionOperators, dilations: Mapping[int, DilationUnitary] | None) -> np.ndarray:
    """Per-source dilations on ``H (x) K1`` in ``(h, a)`` index order, shape (V, dV, dV)."""
    graph = _graph_of(ops)
    d, V = ops.chirality_dim, graph.count
    out = np.empty((V, d * V, d * V), dtype=np.complex128)
    for j in graph.vertices:
        dil = dilations[j] if dilations is not None and j in dilations else dilate(ops, j)
        if dil.source != j:
            raise DefinitionError(f"dilation for vertex {j} is labelled with source {dil.source}")
        if dil.column_deviation(ops) > DEFAULT_VALIDATION_TOL:
            raise DefinitionError(f"dilation for vertex {j} does not reproduce its transition operators")
        full = embed_dilation(dil, V).reshape(V, d, V, d)  # [a, h, b, g]
        out[j - 1] = full.transpose(1, 0, 3, 2).reshape(d * V, d * V)
    return out


def build_global_unitary(ops: TransitionOperators, dilations: Mapping[int, DilationUnitary] | None = None) -> np.ndarray:
    """``U = sum_j U(j) (x) |j><j|`` on ``H (x) K1 (x) K2`` (Kronecker order)."""
    blocks = _register_blocks(ops, dilations)
    V = blocks.shape[0]
    d = ops.chirality_dim
    n = d * V
    G = np.zeros((d, V, V, d, V, V), dtype=np.complex128)
    for k in range(V):
        G[:, :, k, :, :, k] = blocks[k].reshape(d, V, d, V)
    return G.reshape(n * V, n * V)


def to_register_major(m: np.ndarray, d: int, V: int) -> np.ndarray:
    """Reorder a tripartite matrix to ``K2 (x) K1 (x) H`` (block matrix over ``K2``, then ``K1``)."""
    t = np.asarray(m).reshape(d, V, V, d, V, V)
    return t.transpose(2, 1, 0, 5, 4, 3).reshape(d * V * V, d * V * V)


# ---------------------------------------------------------------------------
# Tripartite states and the cycle's elementary operations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TripartiteState:
    """Density matrix on ``H (x) K1 (x) K2`` with ``dim H = d`` and ``dim K1 = dim K2 = V``."""

    matrix: np.ndarray
    d: int
    V: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        n = self.d * self.V * self.V
        if m.shape != (n, n):
            raise DefinitionError(f"expected a {n} x {n} matrix for d={self.d}, V={self.V}, got {m.shape}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def tensor(self) -> np.ndarray:
        """View with axes ``(h, a, k, h', a', k')``."""
        d, V = self.d, self.V
        return self.matrix.reshape(d, V, V, d, V, V)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def check(self, tol: float = CANONICAL_TOL) -> None:
        if abs(self.trace() - 1.0) > tol:
            raise DefinitionError(f"tripartite state has trace {self.trace()!r}")
        if not mx.is_positive_semidefinite(self.matrix, tol):
            raise DefinitionError("tripartite state is not positive semidefinite")

    def canonical_deviation(self) -> float:
        """Distance from the form ``sum_k rho_k (x) |1><1| (x) |k><k|``."""
        t = self.tensor.copy()
        V = self.V
        t[:, 0, :, :, 0, :] *= 1 - np.eye(V)[None, :, None, :]
        return mx.max_abs(t)


def canonical_state(state: BlockState) -> TripartiteState:
    """Embed a block state as ``sum_k rho_k (x) |1><1| (x) |k><k|``."""
    if not isinstance(state.space, FiniteGraph):
        raise DefinitionError("canonical embedding needs a finite graph")
    d, V = state.chirality_dim, state.space.count
    t = np.zeros((d, V, V, d, V, V), dtype=np.complex128)
    for k, rho in state.blocks.items():
        t[:, 0, k - 1, :, 0, k - 1] = rho
    return TripartiteState(t.reshape(d * V * V, d * V * V), d, V)


def k2_marginal(rho: TripartiteState) -> np.ndarray:
    """Partial trace over ``K1``: a matrix on ``H (x) K2``."""
    d, V = rho.d, rho.V
    return np.einsum("hakgal->hkgl", rho.tensor).reshape(d * V, d * V)


def k2_blocks(rho: TripartiteState) -> BlockState:
    """Diagonal ``K2`` blocks of the ``H (x) K2`` marginal, as a block state."""
    d, V = rho.d, rho.V
    m = k2_marginal(rho).reshape(d, V, d, V)
    blocks = {k + 1: m[:, k, :, k].copy() for k in range(V)}
    blocks = {k: b for k, b in blocks.items() if mx.max_abs(b) > 0.0}
    return BlockState(FiniteGraph(V), blocks)


def decohere(rho: np.ndarray, subsystem: int, dims: Sequence[int]) -> np.ndarray:
    """
    Pinch ``rho`` in the basis of one tensor factor: every element whose row and
    column indices differ on ``subsystem`` is set to zero.
    """
    dims = tuple(int(x) for x in dims)
    n = int(np.prod(dims))
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (n, n):
        raise DefinitionError(f"dims {dims} imply a {n} x {n} matrix, got {rho.shape}")
    if not 0 <= subsystem < len(dims):
        raise DefinitionError(f"subsystem {subsystem} out of range for {len(dims)} factors")
    t = rho.reshape(dims + dims).copy()
    s = dims[subsystem]
    shape = [1] * (2 * len(dims))
    shape[subsystem] = s
    shape[len(dims) + subsystem] = s
    t *= np.eye(s).reshape([s if i in (subsystem, len(dims) + subsystem) else 1 for i in range(2 * len(dims))])
    return t.reshape(n, n)


def swap_k1_k2(rho: TripartiteState) -> TripartiteState:
    """Conjugation by ``I (x) S`` with ``S |j>|k> = |k>|j>``."""
    d, V = rho.d, rho.V
    t = rho.tensor.transpose(0, 2, 1, 3, 5, 4)
    return TripartiteState(t.reshape(d * V * V, d * V * V), d, V)


def refresh_k1(rho: TripartiteState) -> TripartiteState:
    """Discard ``K1`` (partial trace) and re-prepare it in ``|1><1|``."""
    d, V = rho.d, rho.V
    sigma = np.einsum("hakgal->hkgl", rho.tensor)
    t = np.zeros((d, V, V, d, V, V), dtype=np.complex128)
    t[:, 0, :, :, 0, :] = sigma
    return TripartiteState(t.reshape(d * V * V, d * V * V), d, V)


def coherent_refresh_k1(rho: TripartiteState) -> TripartiteState:
    """
    Conjugation by ``I (x) R (x) I`` with ``R = sum_a |1><a|``: every ``K1``
    amplitude is mapped onto ``|1>`` without measuring ``K1``.

    Unlike :func:`refresh_k1` this keeps coherences between the ``K2`` branches;
    it preserves the trace on the states reachable under the orthogonality
    condition.
    """
    d, V = rho.d, rho.V
    t = np.zeros((d, V, V, d, V, V), dtype=np.complex128)
    t[:, 0, :, :, 0, :] = rho.tensor.sum(axis=(1, 4))
    return TripartiteState(t.reshape(d * V * V, d * V * V), d, V)


def _conjugate_blockwise(blocks: np.ndarray, rho: TripartiteState) -> TripartiteState:
    # blocks[k] acts on (h, a) when K2 = k
    d, V = rho.d, rho.V
    n = d * V
    t = rho.tensor.transpose(2, 0, 1, 5, 3, 4).reshape(V, n, V, n)  # [k, (h a), k', (h' a')]
    t = np.einsum("kxy,kylz->kxlz", blocks, t)
    t = np.einsum("kxlz,lwz->kxlw", t, np.conj(blocks))
    t = t.reshape(V, d, V, V, d, V).transpose(1, 2, 0, 4, 5, 3)
    return TripartiteState(t.reshape(n * V, n * V), d, V)


# ---------------------------------------------------------------------------
# The cycle
# ---------------------------------------------------------------------------


class PhysicalRealization:
    """
    Reusable four-step cycle for a finite-graph walk.

    ``dilations`` optionally overrides the deterministic dilation of selected
    vertices (e.g. :func:`two_vertex_dilations`).
    """

    def __init__(self, ops: TransitionOperators, dilations: Mapping[int, DilationUnitary] | None = None):
        self.ops = ops
        self.graph = _graph_of(ops)
        self.d = ops.chirality_dim
        self.V = self.graph.count
        self._blocks = _register_blocks(ops, dilations)
        self._unitary_report = None

    def apply_unitary(self, rho: TripartiteState) -> TripartiteState:
        return _conjugate_blockwise(self._blocks, rho)

    def step(self, rho: TripartiteState, *, check: bool = True) -> TripartiteState:
        """Unitary, decoherence of ``K1``, swap, refresh."""
        self._check_shape(rho)
        if check:
            dev = rho.canonical_deviation()
            if dev > CANONICAL_TOL:
                raise CanonicalFormError(f"state is not of canonical form (deviation {dev:.3e})")
        out = self.apply_unitary(rho)
        out = TripartiteState(decohere(out.matrix, 1, (self.d, self.V, self.V)), self.d, self.V)
        out = swap_k1_k2(out)
        return refresh_k1(out)

    def unitary_condition(self) -> "UnitaryConditionReport":
        if self._unitary_report is None:
            self._unitary_report = check_unitary_walk_condition(self.ops)
        return self._unitary_report

    def _require_condition(self) -> None:
        report = self.unitary_condition()
        if not report.passed:
            raise UnitaryConditionError(
                f"orthogonality condition fails (deviation {report.max_deviation:.3e} at sources {report.worst_pair})"
            )

    def unitary_cycle(self, rho: TripartiteState) -> TripartiteState:
        """Unitary, swap and coherent refresh: the cycle with decoherence skipped."""
        self._check_shape(rho)
        self._require_condition()
        out = swap_k1_k2(self.apply_unitary(rho))
        return coherent_refresh_k1(out)

    def unitary_cycle_vector(self, psi: np.ndarray) -> np.ndarray:
        """Amplitude-level :meth:`unitary_cycle` on a vector in ``H (x) K1 (x) K2``."""
        self._require_condition()
        d, V = self.d, self.V
        t = np.asarray(psi, dtype=np.complex128).reshape(d, V, V)
        x = t.transpose(2, 0, 1).reshape(V, d * V)  # [k, (h a)]
        y = np.einsum("kxy,ky->kx", self._blocks, x).reshape(V, d, V)  # [k, h, a]
        y = y.transpose(1, 2, 0)  # [h, a, k]
        y = y.transpose(0, 2, 1)  # swap K1 and K2
        out = np.zeros_like(y)
        out[:, 0, :] = y.sum(axis=1)
        return out.reshape(-1)

    def _check_shape(self, rho: TripartiteState) -> None:
        if (rho.d, rho.V) != (self.d, self.V):
            raise DefinitionError(f"state has d={rho.d}, V={rho.V}; realization has d={self.d}, V={self.V}")


def physical_step(
    rho: TripartiteState,
    ops: TransitionOperators,
    dilations: Mapping[int, DilationUnitary] | None = None,
) -> TripartiteState:
    """One four-step cycle; the input must be of canonical form."""
    return PhysicalRealization(ops, dilations).step(rho)


def realize(state: BlockState, ops: TransitionOperators, n_steps: int, dilations=None) -> list[BlockState]:
    """Run ``n_steps`` cycles from ``state``; returns the ``H (x) K2`` block states at times 0..n."""
    real = PhysicalRealization(ops, dilations)
    rho = canonical_state(state)
    out = [k2_blocks(rho)]
    for _ in range(n_steps):
        rho = real.step(rho)
        out.append(k2_blocks(rho))
    return out


# ---------------------------------------------------------------------------
# Lattice walks on a finite ring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CyclicTruncation:
    """A lattice walk restricted to the ring of sites ``lo..hi`` (vertex ``v`` is site ``lo + v - 1``)."""

    ops: TransitionOperators
    lo: int
    hi: int

    def vertex(self, site: int) -> int:
        return site - self.lo + 1

    def site(self, vertex: int) -> int:
        return vertex + self.lo - 1

    def to_graph_state(self, state: BlockState) -> BlockState:
        return BlockState(self.ops.space, {self.vertex(s): rho for s, rho in state.blocks.items()})

    def to_lattice_blocks(self, state: BlockState) -> dict[int, np.ndarray]:
        return {self.site(v): rho for v, rho in state.blocks.items()}


def cyclic_truncation(ops: TransitionOperators, lo: int, hi: int) -> CyclicTruncation:
    """Wrap a stationary lattice walk onto the ring ``lo..hi`` (at least 3 sites)."""
    if not ops.is_stationary:
        raise DefinitionError("cyclic truncation is defined for stationary lattice walks")
    W = hi - lo + 1
    if W < 3:
        raise DefinitionError(f"ring needs at least 3 sites, got {W}")
    left, right = ops.stationary
    edges = {}
    for v in range(1, W + 1):
        edges[((v - 2) % W + 1, v)] = left
        edges[(v % W + 1, v)] = right
    return CyclicTruncation(TransitionOperators(FiniteGraph(W), ops.chirality_dim, edges), lo, hi)


def check_seam(support: Sequence[int], lo: int, hi: int, n_steps: int) -> None:
    """Raise unless nearest-neighbour spreading from ``support`` stays inside ``lo..hi`` for ``n_steps``."""
    if min(support) - n_steps < lo or max(support) + n_steps > hi:
        raise DefinitionError(
            f"support [{min(support)}, {max(support)}] spread over {n_steps} steps reaches the seam of ring [{lo}, {hi}]"
        )


def ring_for(support: Sequence[int], n_steps: int, margin: int = 1) -> tuple[int, int]:
    """Smallest ring around ``support`` that the walk cannot wrap within ``n_steps``."""
    return min(support) - n_steps - margin, max(support) + n_steps + margin


# ---------------------------------------------------------------------------
# Unitary quantum walks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitaryConditionReport:
    """Max over source pairs of ``max|sum_i B[i,j]^* B[i,j'] - delta_jj' I|``."""

    max_deviation: float
    worst_pair: tuple[int, int] | None
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol


def check_unitary_walk_condition(ops: TransitionOperators, tol: float = DEFAULT_VALIDATION_TOL) -> UnitaryConditionReport:
    """
    Orthogonality condition for unitary walks. For a stationary lattice pair it
    reduces to ``B^*B + C^*C = I`` and ``C^*B = 0``.
    """
    d = ops.chirality_dim
    if ops.is_stationary:
        left, right = ops.stationary
        diag = normalization_deviation((left, right), d)
        cross = mx.max_abs(np.conj(right).T @ left)
        if diag >= cross:
            return UnitaryConditionReport(diag, (0, 0), tol)
        return UnitaryConditionReport(cross, (0, 2), tol)
    incoming: dict[int, list[tuple[int, np.ndarray]]] = {}
    for (i, j), op in ops.edges.items():
        incoming.setdefault(i, []).append((j, op))
    acc: dict[tuple[int, int], np.ndarray] = {}
    for i, pairs in incoming.items():
        for j, bj in pairs:
            for jp, bjp in pairs:
                key = (j, jp)
                acc[key] = acc.get(key, 0) + np.conj(bj).T @ bjp
    for j in ops.sources():
        acc.setdefault((j, j), np.zeros((d, d)))
    worst, worst_pair = 0.0, None
    for (j, jp), m in sorted(acc.items()):
        target = np.eye(d) if j == jp else 0.0
        dev = mx.max_abs(m - target)
        if worst_pair is None or dev > worst:
            worst, worst_pair = dev, (j, jp)
    return UnitaryConditionReport(worst, worst_pair, tol)


def unitary_walk_step(psi: Mapping[int, np.ndarray], ops: TransitionOperators, *, check: bool = True) -> dict[int, np.ndarray]:
    """``phi'_i = sum_j B[i,j] phi_j`` for amplitude families ``{vertex: phi}``."""
    if check:
        report = check_unitary_walk_condition(ops)
        if not report.passed:
            raise UnitaryConditionError(
                f"orthogonality condition fails (deviation {report.max_deviation:.3e} at sources {report.worst_pair})"
            )
        norm2 = sum(float(np.vdot(phi, phi).real) for phi in psi.values())
        if abs(norm2 - 1.0) > CANONICAL_TOL:
            raise DefinitionError(f"amplitudes have total squared norm {norm2!r}")
    new: dict[int, np.ndarray] = {}
    for j in sorted(psi):
        phi = np.asarray(psi[j], dtype=np.complex128)
        for i, op in ops.out_edges(j):
            contrib = op @ phi
            new[i] = new[i] + contrib if i in new else contrib
    return {i: new[i] for i in sorted(new)}


def unitary_walk(psi: Mapping[int, np.ndarray], ops: TransitionOperators, n_steps: int) -> dict[int, np.ndarray]:
    report = check_unitary_walk_condition(ops)
    if not report.passed:
        raise UnitaryConditionError(f"orthogonality condition fails (deviation {report.max_deviation:.3e})")
    for _ in range(n_steps):
        psi = unitary_walk_step(psi, ops, check=False)
    return dict(psi)


def amplitude_distribution(psi: Mapping[int, np.ndarray]) -> WalkDistribution:
    """``P(i) = |phi_i|^2``."""
    return WalkDistribution({v: float(np.vdot(phi, phi).real) for v, phi in psi.items()})


def canonical_vector(psi: Mapping[int, np.ndarray], d: int, V: int) -> np.ndarray:
    """``sum_k phi_k (x) |1> (x) |k>`` for graph vertices ``k`` in ``1..V``."""
    t = np.zeros((d, V, V), dtype=np.complex128)
    for k, phi in psi.items():
        t[:, 0, k - 1] = phi
    return t.reshape(-1)


def read_canonical_vector(vec: np.ndarray, d: int, V: int) -> dict[int, np.ndarray]:
    """Inverse of :func:`canonical_vector`; raises if ``K1`` is not in ``|1>``."""
    t = np.asarray(vec).reshape(d, V, V)
    if mx.max_abs(t[:, 1:, :]) > CANONICAL_TOL:
        raise CanonicalFormError("K1 register is not in |1>")
    return {k + 1: t[:, 0, k].copy() for k in range(V)}
