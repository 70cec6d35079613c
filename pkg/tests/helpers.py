"""Shared generators and independent oracles for the test-suite."""

from __future__ import annotations

import itertools

import numpy as np

from multiconsensus.exact import Matrix
from multiconsensus.graph import Digraph, laplacian, root_components
from multiconsensus.partition import Partition


def random_digraph(rng: np.random.Generator, n: int, p: float) -> Digraph:
    edges = [(u, v) for u in range(n) for v in range(n) if u != v and rng.random() < p]
    return Digraph(n, edges)


def random_partition(rng: np.random.Generator, nodes, k: int) -> list[list[int]]:
    nodes = list(nodes)
    k = max(1, min(k, len(nodes)))
    rng.shuffle(nodes)
    cells = [[v] for v in nodes[:k]]
    for v in nodes[k:]:
        cells[int(rng.integers(k))].append(v)
    return cells


def rooted_safe_target(rng: np.random.Generator, g: Digraph) -> Partition:
    """Target whose cells never mix a root-component node with anything outside that component."""
    roots = root_components(g)
    in_root = set().union(*roots) if roots else set()
    cells = []
    for comp in roots:
        cells += random_partition(rng, sorted(comp), int(rng.integers(1, len(comp) + 1)))
    rest = [v for v in range(g.n) if v not in in_root]
    if rest:
        cells += random_partition(rng, rest, int(rng.integers(1, min(4, len(rest)) + 1)))
    return Partition(cells, g.n)


def adjacency_np(g: Digraph) -> np.ndarray:
    a = np.zeros((g.n, g.n), dtype=int)
    for u, v in g.edges:
        a[v, u] = 1
    return a


def counts_eep(a: np.ndarray, cells) -> bool:
    """Equal in-counts from every other cell, computed straight from an adjacency array."""
    for l, cl in enumerate(cells):
        for k, ck in enumerate(cells):
            if k != l and len({int(a[i, list(ck)].sum()) for i in cl}) > 1:
                return False
    return True


def weakly_connected_np(a: np.ndarray) -> bool:
    n = a.shape[0]
    sym = (a + a.T) > 0
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for w in np.nonzero(sym[u])[0]:
            if int(w) not in seen:
                seen.add(int(w))
                stack.append(int(w))
    return len(seen) == n


def exhaustive_min_cost(g: Digraph, target: Partition, mode: str, max_cost: int | None = None):
    """Smallest number of link changes making ``target`` an EEP, by brute force.

    Returns ``None`` when no layer works.  Sign rules: ``add`` may only add
    missing links; the signed modes may also remove existing ones.
    ``signed-connected`` additionally keeps every originally linked ordered
    cell pair linked and the result weakly connected.
    """
    a0 = adjacency_np(g)
    n = g.n
    cells = target.cells
    slots = [(i, j) for i in range(n) for j in range(n) if i != j and (mode != "add" or a0[i, j] == 0)]
    linked = [
        (cm, ck) for m, cm in enumerate(cells) for k, ck in enumerate(cells)
        if m != k and a0[np.ix_(list(cm), list(ck))].sum() > 0
    ]
    top = len(slots) if max_cost is None else max_cost
    for cost in range(top + 1):
        for combo in itertools.combinations(slots, cost):
            a = a0.copy()
            for i, j in combo:
                a[i, j] ^= 1
            if not counts_eep(a, cells):
                continue
            if mode == "signed-connected":
                if any(a[np.ix_(list(cm), list(ck))].sum() == 0 for cm, ck in linked):
                    continue
                if not weakly_connected_np(a):
                    continue
            return cost
    return None


def controlled(L: Matrix, added=(), removed=()) -> Matrix:
    rows = [list(r) for r in L.rows]
    for u, v in added:
        rows[v][u] -= 1
        rows[v][v] += 1
    for u, v in removed:
        rows[v][u] += 1
        rows[v][v] -= 1
    return Matrix(rows)


def lap_of(n: int, edges) -> Matrix:
    return laplacian(Digraph(n, edges))
