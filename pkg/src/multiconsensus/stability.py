"""Spectra, the spectral gap behind the gain thresholds, and per-cluster rows.

For the second-order protocol each transverse mode ``lambda`` yields the
characteristic polynomial ``s^2 - (b - k2 lambda) s - (a - k1 lambda)``,
which is Hurwitz iff ``k1 > a / lambda`` and ``k2 > b / lambda``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .coarsest import ReachDecomposition, block_decompose
from .eigen import eigvals
from .errors import ComplexSpectrum, EmptyDifference, PartitionError
from .exact import Matrix
from .partition import Partition, characteristic_matrix, is_eep, quotient_laplacian, r_matrix

log = logging.getLogger(__name__)


def default_tol(m) -> float:
    a = m.to_numpy() if isinstance(m, Matrix) else np.asarray(m, dtype=float)
    norm = float(np.max(np.sum(np.abs(a), axis=1))) if a.size else 0.0
    return 1e-8 * max(1.0, norm)


@dataclass(frozen=True)
class Spectrum:
    values: tuple[complex, ...]
    tol: float

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def sorted(self) -> list[complex]:
        return sorted(self.values, key=lambda z: (round(z.real, 9), round(z.imag, 9)))

    def real_sorted(self) -> list[float]:
        return sorted(z.real for z in self.values)

    def is_real(self) -> bool:
        return all(abs(z.imag) <= self.tol for z in self.values)

    def count(self, z: complex) -> int:
        return sum(1 for w in self.values if abs(w - z) <= self.tol)

    def match(self, other: Iterable[complex]) -> tuple[list[complex], list[complex]]:
        """Greedy nearest matching of ``other`` into ``self``.

        Returns ``(leftover of self, unmatched of other)``.
        """
        free = list(range(len(self.values)))
        unmatched = []
        for z in other:
            cands = [k for k in free if abs(self.values[k] - z) <= self.tol]
            if not cands:
                unmatched.append(z)
                continue
            if len(cands) > 1 and len({self.values[k] for k in cands}) > 1:
                log.debug("ambiguous eigenvalue match for %s among %s", z, [self.values[k] for k in cands])
            best = min(cands, key=lambda k: (abs(self.values[k] - z), k))
            free.remove(best)
        return [self.values[k] for k in free], unmatched

    def contains(self, other: Iterable[complex]) -> bool:
        return not self.match(other)[1]

    def difference(self, other: Iterable[complex]) -> "Spectrum":
        rest, unmatched = self.match(other)
        if unmatched:
            raise ValueError(f"eigenvalues {unmatched} are not in the spectrum")
        return Spectrum(tuple(rest), self.tol)

    def same_as(self, other: Iterable[complex]) -> bool:
        other = list(other)
        rest, unmatched = self.match(other)
        return not rest and not unmatched


def eigenvalues(m, tol: float | None = None) -> Spectrum:
    """Spectrum of ``m``; exact matrices get exact multiplicities."""
    if tol is None:
        tol = default_tol(m)
    return Spectrum(tuple(eigvals(m)), tol)


def _transverse(L_total: Matrix, pi_star: Partition, tol: float | None) -> Spectrum:
    if not is_eep(L_total, pi_star):
        raise PartitionError("partition is not an EEP of the given Laplacian")
    tol = default_tol(L_total) if tol is None else tol
    full = eigenvalues(L_total, tol)
    quot = eigenvalues(quotient_laplacian(L_total, characteristic_matrix(pi_star, L_total.n)), tol)
    return full.difference(quot.values)


def _smallest_nonzero(values: Sequence[complex], tol: float, what: str) -> float:
    bad = [z for z in values if abs(z.imag) > tol]
    if bad:
        raise ComplexSpectrum(f"{what} has complex eigenvalues {bad}; real gain thresholds do not apply")
    nz = [z.real for z in values if abs(z) > tol]
    if not nz:
        return math.inf
    return min(nz)


def spectral_gamma(L_total: Matrix, pi_star: Partition, tol: float | None = None) -> float:
    diff = _transverse(L_total, pi_star, tol)
    g = _smallest_nonzero(diff.values, diff.tol, "transverse spectrum")
    if math.isinf(g):
        raise EmptyDifference("every eigenvalue outside the quotient spectrum is zero")
    return g


def routh_check(a: float, b: float, k1: float, k2: float, lam: float) -> bool:
    """Both roots of ``s^2 - (b - k2 lam) s - (a - k1 lam)`` in the open left half-plane."""
    return b - k2 * lam < 0 and a - k1 * lam < 0


def _thresholds(a: float, b: float, lams: Sequence[float]) -> tuple[float, float]:
    # k1 > a/lam must hold for every transverse lam; for a >= 0 the binding one is the smallest
    if not lams:
        return 0.0, 0.0
    return max(max(a / l for l in lams), 0.0), max(max(b / l for l in lams), 0.0)


@dataclass(frozen=True)
class ClusterRow:
    cells: tuple[tuple[int, ...], ...]
    kind: str  # "exclusive" or "common"
    lambda2: float
    k1_min: float
    k2_min: float
    spectrum: tuple[float, ...]

    def stable(self, k1: float, k2: float) -> bool:
        return k1 > self.k1_min and k2 > self.k2_min

    def to_json(self) -> dict:
        return {
            "cells": [[v + 1 for v in c] for c in self.cells],
            "kind": self.kind,
            "lambda2": None if math.isinf(self.lambda2) else self.lambda2,
            "k1_min": self.k1_min,
            "k2_min": self.k2_min,
            "spectrum": list(self.spectrum),
        }


@dataclass(frozen=True)
class GainRegion:
    gamma: float
    k1_min: float
    k2_min: float
    a: float
    b: float
    per_cluster: tuple[ClusterRow, ...] = field(default_factory=tuple)

    def contains(self, k1: float, k2: float) -> bool:
        return k1 > self.k1_min and k2 > self.k2_min

    def stable_clusters(self, k1: float, k2: float) -> list[ClusterRow]:
        return [r for r in self.per_cluster if r.stable(k1, k2)]

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "k1_min": self.k1_min,
            "k2_min": self.k2_min,
            "a": self.a,
            "b": self.b,
            "clusters": [r.to_json() for r in self.per_cluster],
        }


def common_part_matrix(L_total: Matrix, pi_star: Partition, d: ReachDecomposition) -> Matrix:
    """``R_delta M_delta``: the common block with each common cell's mean removed."""
    local = {v: k for k, v in enumerate(d.C)}
    cells = [[local[v] for v in c] for c in pi_star.cells if c[0] in local]
    return r_matrix(Partition(cells, len(d.C)), len(d.C)) @ d.common


def gain_region(
    L_total: Matrix,
    pi_star: Partition,
    a: float,
    b: float,
    decomposition: ReachDecomposition | None = None,
    tol: float | None = None,
) -> GainRegion:
    diff = _transverse(L_total, pi_star, tol)
    gamma = _smallest_nonzero(diff.values, diff.tol, "transverse spectrum")
    if math.isinf(gamma):
        raise EmptyDifference("every eigenvalue outside the quotient spectrum is zero")
    lams = [z.real for z in diff.values if abs(z) > diff.tol]
    k1_min, k2_min = _thresholds(a, b, lams)

    d = decomposition if decomposition is not None else block_decompose(L_total)
    rows = []
    for h, blk in zip(d.H, d.blocks):
        spec = eigenvalues(blk, diff.tol)
        lam2 = _smallest_nonzero(spec.values, spec.tol, f"block {[v + 1 for v in h]}")
        nz = [z.real for z in spec.values if abs(z) > spec.tol]
        k1, k2 = _thresholds(a, b, nz)
        rows.append(ClusterRow((h,), "exclusive", lam2, k1, k2, tuple(spec.real_sorted())))
    if d.C:
        m = common_part_matrix(L_total, pi_star, d)
        spec = eigenvalues(m, diff.tol)
        lam2 = _smallest_nonzero(spec.values, spec.tol, "common part")
        nz = [z.real for z in spec.values if abs(z) > spec.tol]
        k1, k2 = _thresholds(a, b, nz)
        cells = tuple(c for c in pi_star.cells if c[0] in set(d.C))
        rows.append(ClusterRow(cells, "common", lam2, k1, k2, tuple(spec.real_sorted())))
    return GainRegion(gamma, k1_min, k2_min, a, b, tuple(rows))


@dataclass(frozen=True)
class IdentityCheck:
    ok: bool
    lhs: tuple[complex, ...]
    rhs: tuple[complex, ...]
    report: str

    def __bool__(self) -> bool:
        return self.ok


def rl_spectrum_identity(L: Matrix, p: Partition, tol: float = 1e-6) -> IdentityCheck:
    """Check ``lambda(R L) = (lambda(L) minus lambda(L^pi)) + |p| zeros``."""
    if not is_eep(L, p):
        return IdentityCheck(False, (), (), "partition is not an EEP")
    R = r_matrix(p, L.n)
    lhs = eigenvalues(R @ L, tol)
    full = eigenvalues(L, tol)
    quot = eigenvalues(quotient_laplacian(L, characteristic_matrix(p, L.n)), tol)
    rest, unmatched = full.match(quot.values)
    rhs = tuple(rest) + (0j,) * len(p)
    if unmatched:
        return IdentityCheck(False, lhs.values, rhs, f"quotient eigenvalues {unmatched} missing from the full spectrum")
    left, right = lhs.match(rhs)
    ok = not left and not right
    report = "" if ok else f"only in RL: {left}; only in the difference: {right}"
    return IdentityCheck(ok, lhs.values, rhs, report)


def second_order_decay(a: float, b: float, k1: float, k2: float, lams: Iterable[float]) -> float:
    """Slowest decay rate ``-max Re(s)`` over the roots of every mode polynomial.

    Negative when some mode grows.
    """
    worst = -math.inf
    for lam in lams:
        roots = np.roots([1.0, -(b - k2 * lam), -(a - k1 * lam)])
        worst = max(worst, float(np.max(roots.real)))
    return -worst if not math.isinf(worst) else math.inf
