"""
Builders for the walk families used throughout the package.

* :func:`from_classical` embeds a classical Markov chain, ``B[i,j] = sqrt(P[j,i]) U[i,j]``.
* :func:`stationary_z` builds a translation-invariant nearest-neighbour walk on Z.
* :func:`from_operator_matrix` reads a finite-graph walk written as a V x V grid
  whose row ``j`` lists the operators leaving vertex ``j``.
* :func:`preset` returns the named example walks together with a recommended
  initial state.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from . import matrix as mx
from .errors import DefinitionError
from .walk import (
    DEFAULT_VALIDATION_TOL,
    BlockState,
    FiniteGraph,
    LatticeZ,
    TransitionOperators,
    normalization_deviation,
    validate_transitions,
)

PRESET_NAMES = ("z_sqrt3", "z_dim5", "two_vertex", "chain", "hadamard_unitary")


def check_stochastic(P, tol: float = 1e-12) -> np.ndarray:
    """Return ``P`` as a float array after checking it is row-stochastic."""
    P = np.array(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise DefinitionError(f"stochastic matrix must be square and non-empty, got shape {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0.0):
        raise DefinitionError("stochastic matrix entries must be finite and nonnegative")
    row_sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(row_sums - 1.0) > tol)
    if bad.size:
        j = int(bad[0])
        raise DefinitionError(f"row {j + 1} of the stochastic matrix sums to {row_sums[j]!r}")
    return P


def from_classical(P, unitaries=None, chirality_dim: int | None = None, tol: float = 1e-10) -> TransitionOperators:
    """
    Open walk with the same position law as the Markov chain ``P``.

    ``P[j, i]`` is the probability of moving from vertex ``j + 1`` to ``i + 1``.
    ``unitaries[j][i]`` (same indexing) is the unitary attached to that move;
    identity when omitted. Edges are created only where ``P[j, i] > 0``.
    """
    P = check_stochastic(P)
    V = P.shape[0]
    if chirality_dim is None:
        chirality_dim = V
        if unitaries is not None:
            for row in unitaries:
                for u in row:
                    if u is not None:
                        chirality_dim = np.asarray(u).shape[0]
                        break
                else:
                    continue
                break
    if unitaries is not None and len(unitaries) != V:
        raise DefinitionError(f"unitary grid has {len(unitaries)} rows, expected {V}")

    edges = {}
    for j in range(V):
        for i in range(V):
            if P[j, i] <= 0.0:
                continue
            if unitaries is None or unitaries[j][i] is None:
                u = mx.identity(chirality_dim)
            else:
                u = mx.as_matrix(unitaries[j][i])
                if u.shape != (chirality_dim, chirality_dim):
                    raise DefinitionError(f"unitary for {j + 1}->{i + 1} has shape {u.shape}")
                if not mx.is_unitary(u, tol):
                    raise DefinitionError(f"matrix for {j + 1}->{i + 1} is not unitary")
            edges[(i + 1, j + 1)] = math.sqrt(P[j, i]) * u
    return TransitionOperators(FiniteGraph(V), chirality_dim, edges)


def stationary_z(B, C, *, tol: float = DEFAULT_VALIDATION_TOL, window: tuple[int, int] = (0, 0)) -> TransitionOperators:
    """Walk on Z jumping left with ``B`` and right with ``C`` from every site."""
    B = mx.as_matrix(B)
    C = mx.as_matrix(C)
    if B.shape != C.shape or B.shape[0] != B.shape[1]:
        raise DefinitionError(f"B and C must be square of equal size, got {B.shape} and {C.shape}")
    dev = normalization_deviation((B, C), B.shape[0])
    if dev > tol:
        raise DefinitionError(f"B*B + C*C differs from I by {dev:.3e} (tolerance {tol:.1e})")
    return TransitionOperators(LatticeZ(*window), B.shape[0], stationary=(B, C))


def from_operator_matrix(om: Sequence[Sequence], *, tol: float = DEFAULT_VALIDATION_TOL) -> TransitionOperators:
    """
    Finite-graph walk from a V x V grid; ``om[j-1][i-1]`` is the operator for the
    jump ``j -> i`` or ``None`` when there is no such edge.
    """
    V = len(om)
    if V == 0:
        raise DefinitionError("operator matrix is empty")
    dim = None
    edges = {}
    for j, row in enumerate(om, start=1):
        if len(row) != V:
            raise DefinitionError(f"row {j} of the operator matrix has {len(row)} entries, expected {V}")
        for i, op in enumerate(row, start=1):
            if op is None:
                continue
            op = mx.as_matrix(op)
            if dim is None:
                dim = op.shape[0]
            edges[(i, j)] = op
    if dim is None:
        raise DefinitionError("operator matrix has no entries")
    ops = TransitionOperators(FiniteGraph(V), dim, edges)
    report = validate_transitions(ops, tol)
    if not report.passed:
        j, dev = next(iter(report.failures().items()))
        raise DefinitionError(f"row {j} of the operator matrix is not normalized (deviation {dev:.3e})")
    return ops


# ---------------------------------------------------------------------------
# Named presets
# ---------------------------------------------------------------------------


class Preset(NamedTuple):
    ops: TransitionOperators
    initial: BlockState


def z_sqrt3_pair() -> tuple[np.ndarray, np.ndarray]:
    s = 1.0 / math.sqrt(3.0)
    B = s * np.array([[1, 1], [0, 1]], dtype=np.complex128)
    C = s * np.array([[1, 0], [-1, 1]], dtype=np.complex128)
    return B, C


def z_dim5_pair(t: float) -> tuple[np.ndarray, np.ndarray]:
    c2, c4, s2, s4 = math.cos(2 * t), math.cos(4 * t), math.sin(2 * t), math.sin(4 * t)
    r = 2.0 * math.sqrt(1.5) * s4
    u = -2 * s2 - s4
    w = 2 * s2 - s4
    B = np.array(
        [
            [0, u, 0, w, 0],
            [u, 0, -r, 0, w],
            [0, -r, 0, -r, 0],
            [w, 0, -r, 0, u],
            [0, w, 0, u, 0],
        ],
        dtype=np.complex128,
    ) / 4.0
    L = 3 + 4 * c2 + c4
    Lp = 3 - 4 * c2 + c4
    k = -math.sqrt(6.0) * (1 - c4)
    C = np.array(
        [
            [L, 0, k, 0, Lp],
            [0, 4 * (c2 + c4), 0, 4 * (-c2 + c4), 0],
            [k, 0, 2 * (1 + 3 * c4), 0, k],
            [0, 4 * (-c2 + c4), 0, 4 * (c2 + c4), 0],
            [Lp, 0, k, 0, L],
        ],
        dtype=np.complex128,
    ) / 8.0
    return B, C


def hadamard_pair() -> tuple[np.ndarray, np.ndarray]:
    s = 1.0 / math.sqrt(2.0)
    B = s * np.array([[1, 1], [0, 0]], dtype=np.complex128)
    C = s * np.array([[0, 0], [1, -1]], dtype=np.complex128)
    return B, C


def damping_pair(p: float) -> tuple[np.ndarray, np.ndarray]:
    """The ``(B, C)`` operators leaving the absorbing end of the graph examples."""
    B = np.array([[0, math.sqrt(p)], [0, 0]], dtype=np.complex128)
    C = np.array([[1, 0], [0, math.sqrt(1 - p)]], dtype=np.complex128)
    return B, C


def diagonal_split(a: float, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Real diagonal ``D1 = diag(a, alpha)``, ``D2 = diag(b, beta)`` with ``D1^2 + D2^2 = I``."""
    for name, x in (("a", a), ("alpha", alpha)):
        if not 0.0 <= x <= 1.0:
            raise DefinitionError(f"{name} must lie in [0, 1], got {x}")
    D1 = np.diag([a, alpha]).astype(np.complex128)
    D2 = np.diag([math.sqrt(1 - a * a), math.sqrt(1 - alpha * alpha)]).astype(np.complex128)
    return D1, D2


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise DefinitionError(f"p must lie in (0, 1), got {p}")


def chain_operator_matrix(N: int, p: float = 0.5, angles=None) -> list[list]:
    """
    Grid for the N-site transport chain: vertex 1 stays or moves right, inner
    vertices move left or right, vertex N sends ``B`` back and keeps ``C``.

    ``angles[k-1] = (lam, mu)`` sets the pair leaving vertex ``k`` (k < N) to
    ``diag(cos lam, cos mu)`` (left, or stay at vertex 1) and
    ``diag(sin lam, sin mu)`` (right). Default angles are pi/4, i.e. ``I/sqrt(2)``.
    """
    if N < 2:
        raise DefinitionError(f"chain needs at least 2 sites, got {N}")
    _check_p(p)
    if angles is None:
        angles = [(math.pi / 4, math.pi / 4)] * (N - 1)
    if len(angles) != N - 1:
        raise DefinitionError(f"chain of {N} sites needs {N - 1} angle pairs, got {len(angles)}")
    om: list[list] = [[None] * N for _ in range(N)]
    for k, (lam, mu) in enumerate(angles, start=1):
        first = np.diag([math.cos(lam), math.cos(mu)]).astype(np.complex128)
        second = np.diag([math.sin(lam), math.sin(mu)]).astype(np.complex128)
        back = k if k == 1 else k - 1
        om[k - 1][back - 1] = first
        om[k - 1][k] = second
    B, C = damping_pair(p)
    om[N - 1][N - 2] = B
    om[N - 1][N - 1] = C
    return om


def preset(name: str, **params) -> Preset:
    """
    Named example walks.

    ==================  ==========================  =============================
    name                parameters (defaults)       initial state
    ==================  ==========================  =============================
    z_sqrt3             none                        ``|e1><e1|`` at 0
    z_dim5              ``t`` (pi/40)               ``I/5`` at 0
    two_vertex          ``p`` (0.5), ``a``,         ``I/2`` at vertex 1
                        ``alpha`` (both 1/sqrt 2)
    chain               ``N`` (5), ``p`` (0.5),     ``|e1><e1|`` at vertex 1
                        ``angles`` (pi/4 each)
    hadamard_unitary    none                        ``|e1><e1|`` at 0
    ==================  ==========================  =============================
    """
    allowed = {
        "z_sqrt3": set(),
        "z_dim5": {"t"},
        "two_vertex": {"p", "a", "alpha"},
        "chain": {"N", "p", "angles"},
        "hadamard_unitary": set(),
    }
    if name not in allowed:
        raise DefinitionError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    extra = set(params) - allowed[name]
    if extra:
        raise DefinitionError(f"preset {name!r} does not take parameters {sorted(extra)}")

    e1 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
    if name == "z_sqrt3":
        ops = stationary_z(*z_sqrt3_pair())
        return Preset(ops, BlockState.localized(LatticeZ(0, 0), 0, e1))
    if name == "z_dim5":
        t = float(params.get("t", math.pi / 40))
        ops = stationary_z(*z_dim5_pair(t))
        return Preset(ops, BlockState.localized(LatticeZ(0, 0), 0, np.eye(5) / 5))
    if name == "hadamard_unitary":
        ops = stationary_z(*hadamard_pair())
        return Preset(ops, BlockState.localized(LatticeZ(0, 0), 0, e1))
    if name == "two_vertex":
        p = float(params.get("p", 0.5))
        _check_p(p)
        D1, D2 = diagonal_split(float(params.get("a", 1 / math.sqrt(2))), float(params.get("alpha", 1 / math.sqrt(2))))
        B, C = damping_pair(p)
        ops = from_operator_matrix([[D1, D2], [B, C]])
        return Preset(ops, BlockState.localized(FiniteGraph(2), 1, np.eye(2) / 2))
    N = int(params.get("N", 5))
    ops = from_operator_matrix(chain_operator_matrix(N, float(params.get("p", 0.5)), params.get("angles")))
    return Preset(ops, BlockState.localized(FiniteGraph(N), 1, e1))
