from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiconsensus.exact import Matrix, kron, solve, vec


def small_matrix(r, c):
    return st.lists(st.lists(st.integers(-3, 3), min_size=c, max_size=c), min_size=r, max_size=r).map(Matrix)


def test_fraction_entries_normalise_to_int():
    m = Matrix([[Fraction(4, 2), Fraction(1, 3)]])
    assert isinstance(m[0, 0], int)
    assert m[0, 1] == Fraction(1, 3)


def test_ragged_and_empty_rejected():
    with pytest.raises(ValueError):
        Matrix([[1, 2], [3]])
    with pytest.raises(ValueError):
        Matrix([])


def test_float_entries_rejected():
    with pytest.raises(TypeError):
        Matrix([[0.5]])


def test_matmul_matches_numpy():
    rng = np.random.default_rng(0)
    a = rng.integers(-4, 5, size=(4, 3))
    b = rng.integers(-4, 5, size=(3, 5))
    assert (Matrix.from_numpy(a) @ Matrix.from_numpy(b)).to_numpy(int).tolist() == (a @ b).tolist()


@settings(max_examples=40, deadline=None)
@given(small_matrix(3, 3), small_matrix(3, 3), small_matrix(3, 3))
def test_vec_of_product_is_kron(a, x, b):
    # vec(A X B) = (B^T (x) A) vec(X) for column-major vec
    lhs = vec(a @ x @ b)
    rhs = kron(b.T, a).matvec(vec(x))
    assert lhs == rhs


def test_solve_exact_and_singular():
    a = Matrix([[2, 1], [1, 3]])
    x = solve(a, [1, 2])
    assert a.matvec(x) == (1, 2)
    assert x == (Fraction(1, 5), Fraction(3, 5))
    with pytest.raises(ZeroDivisionError):
        solve(Matrix([[1, 2], [2, 4]]), [1, 1])


def test_submatrix_transpose_rowsums():
    m = Matrix([[1, 2, 3], [4, 5, 6]])
    assert m.submatrix([1], [0, 2]) == Matrix([[4, 6]])
    assert m.T.shape == (3, 2)
    assert m.row_sums() == (6, 15)
    with pytest.raises(ValueError):
        m.n
