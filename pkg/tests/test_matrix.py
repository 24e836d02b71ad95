import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oqrw import matrix as mx
from oqrw.errors import DimensionError

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def complex_matrices(draw, max_dim=4):
    r = draw(st.integers(1, max_dim))
    c = draw(st.integers(1, max_dim))
    re = draw(st.lists(finite, min_size=r * c, max_size=r * c))
    im = draw(st.lists(finite, min_size=r * c, max_size=r * c))
    return (np.array(re) + 1j * np.array(im)).reshape(r, c)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(DimensionError):
        mx.as_matrix([1, 2, 3])
    with pytest.raises(DimensionError):
        mx.as_matrix(np.zeros((0, 2)))
    with pytest.raises(DimensionError):
        mx.as_matrix([[1.0, np.nan]])


def test_as_matrix_copies():
    a = np.eye(2, dtype=complex)
    b = mx.as_matrix(a)
    b[0, 0] = 5
    assert a[0, 0] == 1


def test_trace_needs_square():
    assert mx.trace(np.diag([1, 2j])) == 1 + 2j
    with pytest.raises(DimensionError):
        mx.trace(np.zeros((2, 3)))


def test_kron_index_order():
    a = np.array([[1, 2], [3, 4]])
    b = np.array([[0, 1], [1, 0]])
    k = mx.kron(a, b)
    # row (ia, ib) -> ia * 2 + ib
    assert k[1 * 2 + 0, 0 * 2 + 1] == a[1, 0] * b[0, 1]
    assert k.shape == (4, 4)


def test_adjoint_and_hermitian_part():
    m = np.array([[1, 2j], [3, 4]])
    assert np.array_equal(mx.adjoint(m), np.conj(m).T)
    h = mx.hermitian_part(m)
    assert mx.is_hermitian(h, 0.0)
    assert not mx.is_hermitian(m)


def test_psd_predicate():
    assert mx.is_positive_semidefinite(np.diag([1.0, 0.0]))
    assert mx.is_positive_semidefinite(np.diag([1.0, -1e-12]))
    assert not mx.is_positive_semidefinite(np.diag([1.0, -1e-6]))
    assert not mx.is_positive_semidefinite(np.array([[1, 1], [0, 1]]))


def test_unitary_predicate():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert mx.is_unitary(h)
    assert not mx.is_unitary(2 * h)
    assert not mx.is_unitary(h + 1e-8)


def test_literal_parsing():
    m = mx.matrix_from_literal([[[1, 0], [0, -1]], [2.5, [0, 0]]])
    assert np.array_equal(m, np.array([[1, -1j], [2.5, 0]]))
    with pytest.raises(DimensionError):
        mx.matrix_from_literal([[1, 2], [3]])
    with pytest.raises(DimensionError):
        mx.matrix_from_literal([[[1, 2, 3]]])
    with pytest.raises(DimensionError):
        mx.matrix_from_literal([[True]])
    with pytest.raises(DimensionError):
        mx.matrix_from_literal([])


@given(complex_matrices())
def test_literal_round_trip_is_exact(m):
    assert np.array_equal(mx.matrix_from_literal(mx.matrix_to_literal(m)), m)


@settings(max_examples=50)
@given(complex_matrices(), complex_matrices())
def test_kron_mixed_product(a, b):
    # (a x b)(a x b)^* = (a a^*) x (b b^*)
    lhs = mx.kron(a, b) @ mx.adjoint(mx.kron(a, b))
    rhs = mx.kron(a @ mx.adjoint(a), b @ mx.adjoint(b))
    scale = max(1.0, mx.max_abs(rhs))
    assert mx.max_abs(lhs - rhs) <= 1e-9 * scale
