"""Node partitions and the exact algebra attached to them.

Everything here is computed over the rationals, so :func:`is_eep` is a
true predicate rather than a tolerance test.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ParseError, PartitionError
from .exact import Matrix


class Partition:
    """Ordered cells covering ``0..n-1``; cells sorted by their minimum."""

    __slots__ = ("cells", "n", "_cell_of")

    def __init__(self, cells: Iterable[Iterable[int]], n: int | None = None):
        cs = [tuple(sorted(int(v) for v in c)) for c in cells]
        if any(not c for c in cs):
            raise PartitionError("empty cell")
        members = [v for c in cs for v in c]
        size = n if n is not None else (max(members) + 1 if members else 0)
        if len(members) != len(set(members)):
            dup = sorted({v for v in members if members.count(v) > 1})
            raise PartitionError(f"nodes {[v + 1 for v in dup]} appear in more than one cell")
        if set(members) != set(range(size)):
            missing = sorted(set(range(size)) - set(members))
            extra = sorted(set(members) - set(range(size)))
            raise PartitionError(
                f"cells must cover 1..{size} exactly (missing {[v + 1 for v in missing]}, "
                f"out of range {[v + 1 for v in extra]})"
            )
        self.cells: tuple[tuple[int, ...], ...] = tuple(sorted(cs, key=lambda c: c[0]))
        self.n = size
        where = [0] * size
        for k, c in enumerate(self.cells):
            for v in c:
                where[v] = k
        self._cell_of = tuple(where)

    @classmethod
    def ordered(cls, cells: Sequence[Iterable[int]], n: int | None = None) -> "Partition":
        """Keep the given cell order instead of canonicalizing it."""
        p = cls(cells, n)
        given = [tuple(sorted(c)) for c in cells]
        p.cells = tuple(given)
        where = [0] * p.n
        for k, c in enumerate(given):
            for v in c:
                where[v] = k
        p._cell_of = tuple(where)
        return p

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls([[v] for v in range(n)], n)

    @classmethod
    def whole(cls, n: int) -> "Partition":
        return cls([range(n)], n)

    def cell_of(self, v: int) -> int:
        return self._cell_of[v]

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.n == other.n and set(self.cells) == set(other.cells)

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self.cells)))

    def __repr__(self) -> str:
        return f"Partition({format_partition(self)})"

    def refines(self, other: "Partition") -> bool:
        """True when every cell of ``self`` lies inside one cell of ``other``."""
        return all(len({other.cell_of(v) for v in c}) == 1 for c in self.cells)


def format_partition(p: Partition) -> str:
    return "{" + " | ".join(",".join(str(v + 1) for v in c) for c in p.cells) + "}"


def partition_from_json(obj: dict, n: int | None = None) -> Partition:
    try:
        cells = [[int(v) - 1 for v in c] for c in obj["cells"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"partition JSON needs 'cells': [[...], ...]: {exc}") from None
    try:
        return Partition(cells, n)
    except PartitionError as exc:
        raise ParseError(str(exc)) from None


def partition_to_json(p: Partition) -> dict:
    return {"cells": [[v + 1 for v in c] for c in p.cells]}


def load_partition(path: str | Path, n: int | None = None) -> Partition:
    p = Path(path)
    try:
        obj = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ParseError(f"{p}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}: invalid JSON: {exc}") from None
    try:
        return partition_from_json(obj, n)
    except ParseError as exc:
        raise ParseError(f"{p}: {exc}") from None


def _check_n(p: Partition, n: int) -> None:
    if p.n != n:
        raise PartitionError(f"partition covers {p.n} nodes but the graph has {n}")


def characteristic_matrix(p: Partition, n: int) -> Matrix:
    _check_n(p, n)
    return Matrix([[1 if p.cell_of(i) == k else 0 for k in range(len(p))] for i in range(n)])


def projector(P: Matrix) -> Matrix:
    """Orthogonal projector onto cell-constant vectors, ``P (P^T P)^-1 P^T``."""
    sizes = [sum(P.col(k)) for k in range(P.shape[1])]
    if any(s == 0 for s in sizes):
        raise PartitionError("characteristic matrix has an empty column")
    n = P.shape[0]
    cell = [P.rows[i].index(1) for i in range(n)]
    return Matrix(
        [[Fraction(1, sizes[cell[i]]) if cell[i] == cell[j] else 0 for j in range(n)] for i in range(n)]
    )


def quotient_laplacian(L: Matrix, P: Matrix) -> Matrix:
    """``(P^T P)^-1 P^T L P``."""
    if L.shape[0] != P.shape[0]:
        raise PartitionError("Laplacian and characteristic matrix sizes differ")
    PtP_inv = Matrix(
        [[Fraction(1, sum(P.col(k))) if k == l else 0 for l in range(P.shape[1])] for k in range(P.shape[1])]
    )
    return PtP_inv @ P.T @ L @ P


def is_eep(L: Matrix, p: Partition) -> bool:
    """Exact test of ``L P_H == P_H L P_H``."""
    _check_n(p, L.n)
    PH = projector(characteristic_matrix(p, L.n))
    LPH = L @ PH
    return LPH == PH @ LPH


def inter_cell_counts(L: Matrix, p: Partition) -> list[list[int]]:
    """``counts[i][k]``: number of in-neighbours of node ``i`` lying in cell ``k``."""
    counts = [[0] * len(p) for _ in range(L.n)]
    for i in range(L.n):
        for j in range(L.n):
            if i != j and L[i, j] != 0:
                counts[i][p.cell_of(j)] += -L[i, j]
    return counts


def is_eep_by_counts(L: Matrix, p: Partition) -> bool:
    """Combinatorial EEP test: equal in-counts from every *other* cell."""
    _check_n(p, L.n)
    counts = inter_cell_counts(L, p)
    for l, cell in enumerate(p.cells):
        for k in range(len(p)):
            if k != l and len({counts[i][k] for i in cell}) > 1:
                return False
    return True


def r_matrix(p: Partition, n: int) -> Matrix:
    """``I - P_H``: removes each cell's mean."""
    PH = projector(characteristic_matrix(p, n))
    return Matrix.identity(n) - PH


def external_refinement(L: Matrix, cells: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Coarsest EEP refining ``cells``.

    Cells are split by each node's in-counts from the other cells until
    nothing changes.  Any EEP finer than the input survives every split, so
    the fixed point is the coarsest one.  Split pieces keep the parent's
    position and are ordered by smallest member.
    """
    n = L.n
    cur = [tuple(sorted(c)) for c in cells]
    while True:
        where = [0] * n
        for k, c in enumerate(cur):
            for v in c:
                where[v] = k
        nxt = []
        for k, c in enumerate(cur):
            groups: dict[tuple, list[int]] = {}
            for i in c:
                sig = [0] * len(cur)
                for j in range(n):
                    if j != i and L[i, j] != 0 and where[j] != k:
                        sig[where[j]] += -L[i, j]
                groups.setdefault(tuple(sig), []).append(i)
            nxt.extend(sorted((tuple(g) for g in groups.values()), key=min))
        if len(nxt) == len(cur):
            return nxt
        cur = nxt
