"""Dense exact matrices over the integers and the rationals.

Entries are Python ``int`` or :class:`fractions.Fraction`; a matrix whose
entries are all integral is what the rest of the package calls an integer
matrix, otherwise it is a rational matrix.  Fractions are always kept in
lowest terms by the stdlib, so equality is structural.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

Scalar = Union[int, Fraction]


def _norm(x: Scalar) -> Scalar:
    # Fraction(3, 1) -> 3 so integer matrices stay integer
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    if isinstance(x, (bool, np.integer)):
        return int(x)
    if isinstance(x, (int, Fraction)):
        return x
    raise TypeError(f"exact matrices hold int/Fraction entries, got {type(x).__name__}")


class Matrix:
    """Immutable dense matrix with exact entries."""

    __slots__ = ("rows", "shape")

    def __init__(self, rows: Iterable[Iterable[Scalar]]):
        data = tuple(tuple(_norm(x) for x in r) for r in rows)
        if not data or not data[0]:
            raise ValueError("matrix must have at least one row and one column")
        width = len(data[0])
        if any(len(r) != width for r in data):
            raise ValueError("ragged rows")
        self.rows = data
        self.shape = (len(data), width)

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, r: int, c: int | None = None) -> "Matrix":
        return cls([[0] * (r if c is None else c) for _ in range(r)])

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def from_numpy(cls, a: np.ndarray) -> "Matrix":
        if not np.issubdtype(a.dtype, np.integer):
            raise TypeError("only integer arrays convert exactly")
        return cls(a.tolist())

    # access ---------------------------------------------------------------

    @property
    def n(self) -> int:
        if self.shape[0] != self.shape[1]:
            raise ValueError(f"matrix is not square: {self.shape}")
        return self.shape[0]

    def __getitem__(self, idx: tuple[int, int]) -> Scalar:
        i, j = idx
        return self.rows[i][j]

    def __iter__(self):
        return iter(self.rows)

    def col(self, j: int) -> tuple[Scalar, ...]:
        return tuple(r[j] for r in self.rows)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "Matrix":
        return Matrix([[self.rows[i][j] for j in cols] for i in rows])

    def is_integral(self) -> bool:
        return all(isinstance(x, int) for r in self.rows for x in r)

    def is_square(self) -> bool:
        return self.shape[0] == self.shape[1]

    def row_sums(self) -> tuple[Scalar, ...]:
        return tuple(_norm(sum(r, 0)) for r in self.rows)

    # arithmetic -----------------------------------------------------------

    def _check_same(self, other: "Matrix") -> None:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check_same(other)
        return Matrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._check_same(other)
        return Matrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self.rows])

    def scale(self, c: Scalar) -> "Matrix":
        return Matrix([[c * a for a in r] for r in self.rows])

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        cols = list(zip(*other.rows))
        out = []
        for r in self.rows:
            nz = [(k, a) for k, a in enumerate(r) if a]
            out.append([sum((a * c[k] for k, a in nz), 0) for c in cols])
        return Matrix(out)

    def matvec(self, v: Sequence[Scalar]) -> tuple[Scalar, ...]:
        if len(v) != self.shape[1]:
            raise ValueError("vector length mismatch")
        return tuple(_norm(sum((a * b for a, b in zip(r, v) if a), 0)) for r in self.rows)

    @property
    def T(self) -> "Matrix":
        return Matrix(zip(*self.rows))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __repr__(self) -> str:
        body = "; ".join(" ".join(str(x) for x in r) for r in self.rows)
        return f"Matrix[{self.shape[0]}x{self.shape[1]}]({body})"

    def to_numpy(self, dtype=float) -> np.ndarray:
        if dtype is float:
            return np.array([[float(x) for x in r] for r in self.rows], dtype=float)
        return np.array(self.rows, dtype=dtype)

    def tolist(self) -> list[list[Scalar]]:
        return [list(r) for r in self.rows]


def kron(a: Matrix, b: Matrix) -> Matrix:
    ra, ca = a.shape
    rb, cb = b.shape
    return Matrix(
        [[a[i, j] * b[k, l] for j in range(ca) for l in range(cb)] for i in range(ra) for k in range(rb)]
    )


def vec(a: Matrix) -> tuple[Scalar, ...]:
    """Column-major vectorization."""
    return tuple(a[i, j] for j in range(a.shape[1]) for i in range(a.shape[0]))


def solve(a: Matrix, b: Sequence[Scalar]) -> tuple[Scalar, ...]:
    """Solve ``a x = b`` exactly by Gauss-Jordan elimination.

    Raises ``ZeroDivisionError`` if ``a`` is singular.
    """
    n = a.n
    if len(b) != n:
        raise ValueError("right-hand side length mismatch")
    aug = [[Fraction(x) for x in row] + [Fraction(bi)] for row, bi in zip(a.rows, b)]
    for k in range(n):
        piv = next((i for i in range(k, n) if aug[i][k] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[k], aug[piv] = aug[piv], aug[k]
        p = aug[k][k]
        aug[k] = [x / p for x in aug[k]]
        for i in range(n):
            if i != k and aug[i][k] != 0:
                f = aug[i][k]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[k])]
    return tuple(_norm(row[n]) for row in aug)
