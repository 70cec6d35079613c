"""Reach-based block decomposition and the coarsest non-trivial EEP.

Permuting nodes as ``H_1, ..., H_mu, C`` puts a Laplacian in block lower
triangular form::

    [ L_1              ]
    [      ...         ]
    [           L_mu   ]
    [ M_1 ... M_mu   M ]

Each common node's absorption weights toward the exclusive parts come from
``M_i 1 + M gamma_i = 0``; common nodes with identical weight tuples reach
the same agreement value.  That grouping is not always external equitable
(two nodes can share weights yet hear from different cells), so the common
cells are the coarsest EEP refinement of it.  On graphs where the grouping
is already an EEP the two coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exact import Matrix, Scalar, solve
from .graph import Digraph, exclusive_and_common, reaches
from .partition import Partition, external_refinement


@dataclass(frozen=True)
class ReachDecomposition:
    order: tuple[int, ...]  # order[k] = original node placed at position k
    H: tuple[tuple[int, ...], ...]
    C: tuple[int, ...]
    blocks: tuple[Matrix, ...]  # L_1..L_mu
    couplings: tuple[Matrix | None, ...]  # M_1..M_mu (None when C is empty)
    common: Matrix | None  # M
    permuted: Matrix  # T^T L T

    @property
    def mu(self) -> int:
        return len(self.H)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(h) for h in self.H)

    @property
    def n_common(self) -> int:
        return len(self.C)


def block_decompose(L: Matrix) -> ReachDecomposition:
    g = Digraph.from_laplacian(L)
    hs, c = exclusive_and_common(reaches(g))
    H = tuple(tuple(sorted(h)) for h in hs)
    C = tuple(sorted(c))
    order = tuple(v for h in H for v in h) + C
    permuted = L.submatrix(order, order)
    blocks = tuple(L.submatrix(h, h) for h in H)
    if C:
        couplings = tuple(L.submatrix(C, h) for h in H)
        common = L.submatrix(C, C)
    else:
        couplings = tuple(None for _ in H)
        common = None
    return ReachDecomposition(order, H, C, blocks, couplings, common, permuted)


def gamma_vectors(d: ReachDecomposition) -> list[tuple[Scalar, ...]]:
    """Solve ``M gamma_i = -M_i 1`` exactly for each exclusive part."""
    if d.common is None:
        raise ValueError("decomposition has no common part")
    out = []
    for Mi in d.couplings:
        rhs = [-s for s in Mi.row_sums()]
        try:
            out.append(solve(d.common, rhs))
        except ZeroDivisionError:
            raise RuntimeError(
                "grounded common block is singular; the reach decomposition is inconsistent"
            ) from None
    return out


@dataclass(frozen=True)
class CoarsestEEP:
    pi_star: Partition
    gamma: tuple[tuple[Scalar, ...], ...]
    mu: int
    h: int
    decomposition: ReachDecomposition
    agreement: Partition | None = None  # grouping by equal gamma tuples, before refinement

    @property
    def common_cells(self) -> tuple[tuple[int, ...], ...]:
        return self.pi_star.cells[self.mu:] if self.mu > 1 else ()


def coarsest_eep(L: Matrix) -> CoarsestEEP:
    d = block_decompose(L)
    n = L.n
    if d.mu == 1:
        # one reach covers every node, so there is no common part
        return CoarsestEEP(Partition.whole(n), (), 1, 0, d, Partition.whole(n))
    if not d.C:
        p = Partition.ordered(d.H, n)
        return CoarsestEEP(p, (), d.mu, 0, d, p)
    gamma = gamma_vectors(d)
    groups: dict[tuple[Fraction, ...], list[int]] = {}
    for k, v in enumerate(d.C):
        key = tuple(Fraction(g[k]) for g in gamma)
        groups.setdefault(key, []).append(v)
    c_cells = sorted((tuple(vs) for vs in groups.values()), key=min)
    agreement = Partition.ordered(list(d.H) + c_cells, n)
    refined = external_refinement(L, agreement.cells)
    # exclusive parts only hear from themselves, so refinement never splits them
    h_cells, rest = refined[: d.mu], sorted(refined[d.mu :], key=min)
    pi = Partition.ordered(h_cells + rest, n)
    return CoarsestEEP(pi, tuple(gamma), d.mu, len(rest), d, agreement)
