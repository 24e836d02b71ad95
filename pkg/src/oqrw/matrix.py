"""
Dense complex matrix helpers.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``. The
functions here add the shape checks and tolerance-based predicates the rest of
the package relies on, plus conversion to and from the JSON matrix literal
format (nested arrays of ``[re, im]`` pairs).
"""

from __future__ import annotations

from typing import Any

import numpy as np

from .errors import DimensionError

DEFAULT_PSD_TOL = 1e-9


def as_matrix(m: Any) -> np.ndarray:
    """Coerce ``m`` to a finite 2-D complex128 array (copying)."""
    arr = np.array(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("matrix contains NaN or Inf entries")
    return arr


def _require_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def adjoint(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(np.asarray(m)).T.copy()


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product ``a (x) b``; row index of the result is ``ia * rows(b) + ib``."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def trace(m: np.ndarray) -> complex:
    m = np.asarray(m)
    _require_square(m)
    return complex(np.trace(m))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.conj(m).T)


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_PSD_TOL) -> bool:
    m = np.asarray(m)
    _require_square(m)
    return bool(np.max(np.abs(m - np.conj(m).T), initial=0.0) <= tol)


def is_positive_semidefinite(m: np.ndarray, tol: float = DEFAULT_PSD_TOL) -> bool:
    """
    True iff ``m`` is Hermitian within ``tol`` (max-norm of ``m - m*``) and
    every eigenvalue of its Hermitian part is at least ``-tol``.
    """
    m = np.asarray(m)
    _require_square(m)
    if not is_hermitian(m, tol):
        return False
    eigvals = np.linalg.eigvalsh(hermitian_part(m))
    return bool(eigvals.min() >= -tol)


def is_unitary(m: np.ndarray, tol: float = 1e-10) -> bool:
    """True iff ``max|m* m - I| <= tol``."""
    m = np.asarray(m)
    _require_square(m)
    gram = np.conj(m).T @ m
    return bool(np.max(np.abs(gram - np.eye(m.shape[0]))) <= tol)


def max_abs(m: np.ndarray) -> float:
    """Entrywise max-norm (0 for an empty array)."""
    return float(np.max(np.abs(m), initial=0.0))


def matrix_from_literal(literal: Any) -> np.ndarray:
    """
    Parse a matrix literal: a list of rows, each row a list of ``[re, im]``
    pairs. Bare real numbers are accepted as entries with zero imaginary part.
    """
    if not isinstance(literal, (list, tuple)) or not literal:
        raise DimensionError("matrix literal must be a non-empty list of rows")
    rows = []
    width = None
    for r, row in enumerate(literal):
        if not isinstance(row, (list, tuple)) or not row:
            raise DimensionError(f"row {r} of matrix literal is not a non-empty list")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DimensionError(f"row {r} has {len(row)} entries, expected {width}")
        parsed = []
        for c, entry in enumerate(row):
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                parsed.append(complex(entry, 0.0))
            elif (
                isinstance(entry, (list, tuple))
                and len(entry) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                parsed.append(complex(entry[0], entry[1]))
            else:
                raise DimensionError(f"entry ({r},{c}) is not a [re, im] pair: {entry!r}")
        rows.append(parsed)
    return as_matrix(rows)


def matrix_to_literal(m: np.ndarray) -> list[list[list[float]]]:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]
