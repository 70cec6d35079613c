"""Minimal control layers that turn a target partition into an EEP.

A control layer is a signed Laplacian delta ``Lu``: an off-diagonal ``-1``
at ``(i, j)`` adds the link ``j -> i``, a ``+1`` removes it.  The search
space is the off-diagonal binaries ``y[(i, j)]`` with ``Lu[i, j] =
-sign[(i, j)] * y[(i, j)]``; the diagonal follows from zero row sums.

Feasibility is the Lyapunov-type identity ``(L + Lu) P_H = P_H (L + Lu)
P_H``.  Vectorized column-major, its coefficient matrix is ``(P_H^T (x) I)
- (P_H^T (x) P_H)``; eliminating the diagonal unknowns collapses the
coefficient of ``y[(k, l)]`` in equation ``(i, j)`` to

    -sign[(k, l)] * R[i, k] * (P_H[l, j] - P_H[k, j])

with ``R = I - P_H``, which is what :func:`lyapunov_rows` evaluates
(sparsely) instead of materialising the ``N^2 x N^2`` Kronecker product.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable

from .errors import BudgetExceeded, Infeasible, InsufficientSources, ParseError, SignViolation
from .exact import Matrix
from .graph import Digraph, adjacency, is_weakly_connected
from .partition import (
    Partition,
    characteristic_matrix,
    inter_cell_counts,
    projector,
)

DEFAULT_BUDGET = 10**7


class Mode(str, enum.Enum):
    ADD = "add"
    SIGNED = "signed"
    SIGNED_CONNECTED = "signed-connected"


@dataclass(frozen=True)
class ControlLayer:
    delta: Matrix
    mode: Mode

    @property
    def n(self) -> int:
        return self.delta.n

    def added(self) -> list[tuple[int, int]]:
        """Edges ``(u, v)`` (u -> v) the layer creates, sorted."""
        return sorted((j, i) for i in range(self.n) for j in range(self.n) if i != j and self.delta[i, j] == -1)

    def removed(self) -> list[tuple[int, int]]:
        return sorted((j, i) for i in range(self.n) for j in range(self.n) if i != j and self.delta[i, j] == 1)

    @property
    def cost(self) -> int:
        return len(self.added()) + len(self.removed())

    @classmethod
    def from_changes(
        cls, n: int, added: Iterable[tuple[int, int]] = (), removed: Iterable[tuple[int, int]] = (), mode: Mode | None = None
    ) -> "ControlLayer":
        d = [[0] * n for _ in range(n)]
        added, removed = list(added), list(removed)
        for u, v in added:
            d[v][u] = -1
            d[v][v] += 1
        for u, v in removed:
            d[v][u] = 1
            d[v][v] -= 1
        if mode is None:
            mode = Mode.SIGNED if removed else Mode.ADD
        return cls(Matrix(d), mode)

    @classmethod
    def empty(cls, n: int) -> "ControlLayer":
        return cls(Matrix.zeros(n), Mode.ADD)


def apply_layer(L: Matrix, u: ControlLayer) -> tuple[Matrix, Digraph]:
    """``L + Lu``, checked to still be a simple-graph Laplacian."""
    total = L + u.delta
    n = total.n
    for i in range(n):
        for j in range(n):
            if i != j and total[i, j] not in (0, -1):
                what = "adds an existing" if u.delta[i, j] == -1 else "removes a missing"
                raise SignViolation(f"layer {what} link {j + 1}->{i + 1} (entry {total[i, j]})")
    if any(s != 0 for s in total.row_sums()):
        raise SignViolation("layer breaks the zero row-sum property")
    return total, Digraph.from_laplacian(total)


# ---------------------------------------------------------------------------
# problem construction


@dataclass(frozen=True)
class Constraint:
    coefs: tuple[tuple[int, int], ...]  # (variable index, integer coefficient)
    rhs: int
    equality: bool
    label: str

    def satisfied(self, y: list[int]) -> bool:
        s = sum(c * y[v] for v, c in self.coefs)
        return s == self.rhs if self.equality else s >= self.rhs


@dataclass(frozen=True)
class BipProblem:
    L: Matrix
    target: Partition
    mode: Mode
    variables: tuple[tuple[int, int], ...]  # h-ordered (row-major) off-diagonal (i, j)
    sign: tuple[int, ...]
    forbidden: frozenset[int]
    constraints: tuple[Constraint, ...]
    require_weakly_connected: bool = False

    @property
    def n(self) -> int:
        return self.L.n

    def layer(self, y: list[int]) -> ControlLayer:
        n = self.n
        d = [[0] * n for _ in range(n)]
        for h, (i, j) in enumerate(self.variables):
            if y[h]:
                d[i][j] = -self.sign[h]
                d[i][i] += self.sign[h]
        return ControlLayer(Matrix(d), self.mode)

    def is_feasible(self, y: list[int]) -> bool:
        if any(y[h] for h in self.forbidden):
            return False
        if not all(c.satisfied(y) for c in self.constraints):
            return False
        if self.require_weakly_connected:
            _, g = apply_layer(self.L, self.layer(y))
            return is_weakly_connected(g)
        return True


def lyapunov_rows(
    L: Matrix, PH: Matrix, sign: dict[tuple[int, int], int]
) -> dict[tuple[int, int], tuple[dict[tuple[int, int], Fraction], Fraction]]:
    """Rational equations ``(i, j) -> (coefficients over y[(k, l)], rhs)``.

    Row ``(i, j)`` is entry ``(i, j)`` of ``Lu P_H - P_H Lu P_H = P_H L P_H
    - L P_H`` after substituting the layer's binaries.
    """
    n = L.n
    rhs_m = PH @ L @ PH - L @ PH
    cell = [next(k for k in range(n) if PH[i, k] != 0 and PH[i, i] == PH[i, k]) for i in range(n)]
    # cell representative: smallest node sharing the block
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(cell[v], []).append(v)
    rows = {}
    for i in range(n):
        same = groups[cell[i]]
        for j in range(n):
            coefs: dict[tuple[int, int], Fraction] = {}
            for k in same:
                r_ik = (1 if i == k else 0) - PH[i, k]
                if r_ik == 0:
                    continue
                pk = PH[k, j]
                for l in range(n):
                    if l == k:
                        continue
                    diff = PH[l, j] - pk
                    if diff:
                        coefs[(k, l)] = coefs.get((k, l), 0) - sign[(k, l)] * r_ik * diff
            rows[(i, j)] = ({kl: Fraction(c) for kl, c in coefs.items() if c}, Fraction(rhs_m[i, j]))
    return rows


def _integer_row(coefs: dict[int, Fraction], rhs: Fraction) -> tuple[tuple[tuple[int, int], ...], int]:
    den = 1
    for x in list(coefs.values()) + [rhs]:
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = {v: int(c * den) for v, c in coefs.items()}
    r = int(rhs * den)
    g = 0
    for x in list(ints.values()) + [r]:
        g = math.gcd(g, x)
    g = g or 1
    items = sorted((v, c // g) for v, c in ints.items())
    r //= g
    if items and items[0][1] < 0:
        items = [(v, -c) for v, c in items]
        r = -r
    return tuple(items), r


def build_bip(L: Matrix, target: Partition, mode: Mode | str) -> BipProblem:
    mode = Mode(mode)
    n = L.n
    if target.n != n:
        raise ValueError(f"target covers {target.n} nodes but the graph has {n}")
    A = adjacency(Digraph.from_laplacian(L))
    variables = tuple((i, j) for i in range(n) for j in range(n) if i != j)
    index = {kl: h for h, kl in enumerate(variables)}
    if mode is Mode.ADD:
        sign = {kl: 1 for kl in variables}
        forbidden = frozenset(index[(i, j)] for (i, j) in variables if A[i, j] == 1)
    else:
        sign = {kl: (-1 if A[kl] == 1 else 1) for kl in variables}
        forbidden = frozenset()

    PH = projector(characteristic_matrix(target, n))
    seen: dict[tuple, Constraint] = {}
    for (i, j), (coefs, rhs) in lyapunov_rows(L, PH, sign).items():
        if not coefs and rhs == 0:
            continue
        row, r = _integer_row({index[kl]: c for kl, c in coefs.items()}, rhs)
        key = (row, r)
        if key not in seen:
            seen[key] = Constraint(row, r, True, f"EEP balance at entry ({i + 1},{j + 1})")
    constraints = list(seen.values())

    if mode is Mode.SIGNED_CONNECTED:
        cells = target.cells
        for m, cm in enumerate(cells):
            for k, ck in enumerate(cells):
                if m == k:
                    continue
                links = sum(A[i, j] for i in cm for j in ck)
                if links == 0:
                    continue
                coefs = tuple((index[(i, j)], sign[(i, j)]) for i in cm for j in ck)
                lsum = -links  # sum of L[i, j] over the block
                label = "keep a link from cell {%s} into cell {%s}" % (
                    ",".join(str(v + 1) for v in ck),
                    ",".join(str(v + 1) for v in cm),
                )
                constraints.append(Constraint(tuple(sorted(coefs)), lsum + 1, False, label))

    return BipProblem(
        L=L,
        target=target,
        mode=mode,
        variables=variables,
        sign=tuple(sign[kl] for kl in variables),
        forbidden=forbidden,
        constraints=tuple(constraints),
        require_weakly_connected=mode is Mode.SIGNED_CONNECTED,
    )


# ---------------------------------------------------------------------------
# branch and bound


@dataclass
class SolveStats:
    nodes: int = 0
    incumbents: int = 0
    cost: int | None = None


class _Search:
    """Depth-first 0/1 search with bounds propagation.

    Variables are branched in index order, 0 before 1, and the incumbent is
    replaced only on strict improvement, so the optimum returned is the
    lexicographically smallest among all optimal assignments.
    """

    def __init__(
        self,
        nvars: int,
        constraints: tuple[Constraint, ...],
        fixed_zero: Iterable[int],
        leaf_ok: Callable[[list[int]], bool] | None,
        budget: int,
    ):
        self.nvars = nvars
        self.cons = constraints
        self.leaf_ok = leaf_ok
        self.budget = budget
        self.stats = SolveStats()
        self.val = [-1] * nvars
        self.occ: list[list[tuple[int, int]]] = [[] for _ in range(nvars)]
        self.fixed = [0] * len(constraints)
        self.pos = [0] * len(constraints)
        self.neg = [0] * len(constraints)
        self.maxabs = [1] * len(constraints)
        for r, c in enumerate(constraints):
            for v, a in c.coefs:
                self.occ[v].append((r, a))
                if a > 0:
                    self.pos[r] += a
                else:
                    self.neg[r] += a
            if c.coefs:
                self.maxabs[r] = max(abs(a) for _, a in c.coefs)
        self.ones = 0
        self.best: list[int] | None = None
        self.best_cost = math.inf
        self.conflict: int | None = None
        self._fixed_zero = list(fixed_zero)

    # -- bounds -----------------------------------------------------------

    def _row_ok(self, r: int) -> bool:
        c = self.cons[r]
        hi = self.fixed[r] + self.pos[r]
        if c.equality:
            return self.fixed[r] + self.neg[r] <= c.rhs <= hi
        return hi >= c.rhs

    def _forced(self, r: int) -> list[tuple[int, int]]:
        c = self.cons[r]
        lo = self.fixed[r] + self.neg[r]
        hi = self.fixed[r] + self.pos[r]
        out = []
        for v, a in c.coefs:
            if self.val[v] != -1:
                continue
            if c.equality:
                ok1 = lo + max(a, 0) <= c.rhs <= hi + min(a, 0)
                ok0 = lo - min(a, 0) <= c.rhs <= hi - max(a, 0)
            else:
                ok1 = hi + min(a, 0) >= c.rhs
                ok0 = hi - max(a, 0) >= c.rhs
            if ok1 and not ok0:
                out.append((v, 1))
            elif ok0 and not ok1:
                out.append((v, 0))
            elif not ok0 and not ok1:
                out.append((v, -1))
        return out

    def assign(self, v0: int, b0: int, trail: list[int]) -> bool:
        queue = [(v0, b0)]
        while queue:
            v, b = queue.pop()
            if b == -1:
                return False
            cur = self.val[v]
            if cur != -1:
                if cur != b:
                    return False
                continue
            self.val[v] = b
            trail.append(v)
            if b:
                self.ones += 1
            rows = self.occ[v]
            for r, a in rows:
                if a > 0:
                    self.pos[r] -= a
                else:
                    self.neg[r] -= a
                if b:
                    self.fixed[r] += a
            for r, _ in rows:
                if not self._row_ok(r):
                    self.conflict = r
                    return False
            for r, _ in rows:
                queue.extend(self._forced(r))
        return True

    def undo(self, trail: list[int], mark: int) -> None:
        while len(trail) > mark:
            v = trail.pop()
            b = self.val[v]
            for r, a in self.occ[v]:
                if a > 0:
                    self.pos[r] += a
                else:
                    self.neg[r] += a
                if b:
                    self.fixed[r] -= a
            if b:
                self.ones -= 1
            self.val[v] = -1

    def lower_bound(self) -> int:
        need = 0
        for r, c in enumerate(self.cons):
            res = c.rhs - self.fixed[r]
            if c.equality:
                res = abs(res)
            if res > 0:
                need = max(need, -(-res // self.maxabs[r]))
        return self.ones + need

    def _zero_completion_ok(self) -> bool:
        for r, c in enumerate(self.cons):
            if c.equality:
                if self.fixed[r] != c.rhs:
                    return False
            elif self.fixed[r] < c.rhs:
                return False
        return True

    # -- search -----------------------------------------------------------

    def _record(self) -> bool:
        y = [max(x, 0) for x in self.val]
        if self.leaf_ok is not None and not self.leaf_ok(y):
            return False
        self.best = y
        self.best_cost = self.ones
        self.stats.incumbents += 1
        return True

    def _dfs(self, start: int, trail: list[int]) -> None:
        self.stats.nodes += 1
        if self.stats.nodes > self.budget:
            raise BudgetExceeded(f"search exceeded {self.budget} node expansions")
        if self.lower_bound() >= self.best_cost:
            return
        if self._zero_completion_ok():
            # all-zero completion is both cheapest and lexicographically first here
            if self._record():
                return
        v = start
        while v < self.nvars and self.val[v] != -1:
            v += 1
        if v == self.nvars:
            return
        for b in (0, 1):
            mark = len(trail)
            if self.assign(v, b, trail):
                self._dfs(v + 1, trail)
            self.undo(trail, mark)

    def run(self) -> list[int] | None:
        trail: list[int] = []
        for v in self._fixed_zero:
            if not self.assign(v, 0, trail):
                return None
        # forced values at the root
        for r in range(len(self.cons)):
            if not self._row_ok(r):
                self.conflict = r
                return None
            for v, b in self._forced(r):
                if not self.assign(v, b, trail):
                    return None
        self._dfs(0, trail)
        self.stats.cost = None if self.best is None else self.best_cost
        return self.best


def solve_bip(p: BipProblem, budget: int = DEFAULT_BUDGET, stats: SolveStats | None = None) -> ControlLayer:
    """Cost-minimal feasible layer; ties go to the lexicographically smallest ``y``."""
    nvars = len(p.variables)
    used = {v for c in p.constraints for v, _ in c.coefs}
    fixed_zero = set(p.forbidden)
    if not p.require_weakly_connected:
        # a variable touching no constraint only adds cost
        fixed_zero |= set(range(nvars)) - used
    leaf_ok = None
    if p.require_weakly_connected:
        def leaf_ok(y: list[int]) -> bool:
            _, g = apply_layer(p.L, p.layer(y))
            return is_weakly_connected(g)

    search = _Search(nvars, p.constraints, sorted(fixed_zero), leaf_ok, budget)
    y = search.run()
    if stats is not None:
        stats.nodes, stats.incumbents, stats.cost = search.stats.nodes, search.stats.incumbents, search.stats.cost
    if y is None:
        if search.conflict is not None and search.stats.nodes == 0:
            raise Infeasible(f"{p.mode.value}: constraint cannot be met: {p.constraints[search.conflict].label}")
        what = "EEP balance equations"
        if p.mode is Mode.SIGNED_CONNECTED:
            what += ", inter-cell link constraints and weak connectivity"
        raise Infeasible(f"{p.mode.value}: no layer satisfies the {what}")
    return p.layer(y)


# ---------------------------------------------------------------------------
# constructive algorithm (add-only)


def constructive_add(L: Matrix, target: Partition) -> ControlLayer:
    """Top up every node's in-links from each other cell to the cell maximum.

    New sources are the smallest-index nodes of the source cell not already
    linked to the receiving node.
    """
    n = L.n
    A = adjacency(Digraph.from_laplacian(L))
    counts = inter_cell_counts(L, target)
    added = []
    cells = target.cells
    for k, ck in enumerate(cells):
        for h, ch in enumerate(cells):
            if h == k:
                continue
            b = max(counts[j][h] for j in ck)
            for j in ck:
                need = b - counts[j][h]
                if need <= 0:
                    continue
                sources = [i for i in ch if A[j, i] == 0]
                if len(sources) < need:
                    raise InsufficientSources(
                        f"node {j + 1} needs {need} more links from cell "
                        f"{{{','.join(str(v + 1) for v in ch)}}} but only {len(sources)} are available"
                    )
                added.extend((i, j) for i in sources[:need])
    return ControlLayer.from_changes(n, added=added, mode=Mode.ADD)


def constructive_count(L: Matrix, target: Partition) -> int:
    """Links the constructive algorithm adds: sum over cell pairs of ``b_kh - count``."""
    counts = inter_cell_counts(L, target)
    total = 0
    for k, ck in enumerate(target.cells):
        for h in range(len(target)):
            if h != k:
                b = max(counts[j][h] for j in ck)
                total += sum(b - counts[j][h] for j in ck)
    return total


# ---------------------------------------------------------------------------
# layer I/O


def format_layer_diff(u: ControlLayer) -> str:
    lines = [f"+ {a + 1} {b + 1}" for a, b in u.added()] + [f"- {a + 1} {b + 1}" for a, b in u.removed()]
    return "\n".join(lines) + ("\n" if lines else "")


def parse_layer_diff(text: str, n: int) -> ControlLayer:
    added, removed = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in "+-":
            raise ParseError(f"line {lineno}: expected '+ u v' or '- u v', got {raw.strip()!r}")
        try:
            u, v = int(parts[1]) - 1, int(parts[2]) - 1
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer node") from None
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise ParseError(f"line {lineno}: link {u + 1}->{v + 1} is not valid for {n} nodes")
        (added if parts[0] == "+" else removed).append((u, v))
    return ControlLayer.from_changes(n, added, removed)


def to_dot(g: Digraph, u: ControlLayer, name: str = "controlled") -> str:
    """DOT with original edges solid, added edges ``+`` (red), removed ``-`` (green, dashed)."""
    removed = set(u.removed())
    lines = [f"digraph {name} {{", "  node [shape=circle];"]
    lines += [f"  {v + 1};" for v in range(g.n)]
    for a, b in g.sorted_edges():
        if (a, b) in removed:
            lines.append(f'  {a + 1} -> {b + 1} [class="removed", label="-", color="green", style="dashed"];')
        else:
            lines.append(f'  {a + 1} -> {b + 1} [class="original", color="blue"];')
    for a, b in u.added():
        lines.append(f'  {a + 1} -> {b + 1} [class="added", label="+", color="red"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
