"""Directed interaction graphs, their Laplacians, and reach structure.

Nodes are 0-based here.  An edge ``(u, v)`` means agent ``v`` receives
information from agent ``u``, so it shows up as ``a[v][u] = 1`` in the
adjacency matrix and as ``-1`` in row ``v`` of the in-degree Laplacian.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import GraphError, ParseError
from .exact import Matrix


@dataclass(frozen=True)
class Digraph:
    n: int
    edges: frozenset[tuple[int, int]]

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 1:
            raise GraphError(f"node count must be positive, got {n}")
        es = frozenset((int(u), int(v)) for u, v in edges)
        for u, v in es:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u + 1},{v + 1}) has an endpoint outside 1..{n}")
            if u == v:
                raise GraphError(f"self-loop at node {u + 1}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", es)

    @classmethod
    def from_laplacian(cls, lap: Matrix) -> "Digraph":
        """Inverse of :func:`laplacian` for 0/-1 off-diagonal Laplacians."""
        n = lap.n
        edges = []
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                x = lap[i, j]
                if x == -1:
                    edges.append((j, i))
                elif x != 0:
                    raise GraphError(f"entry ({i + 1},{j + 1}) = {x} is not a simple-graph Laplacian entry")
        return cls(n, edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def successors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in sorted(self.edges):
            out[u].append(v)
        return out

    def predecessors(self) -> list[list[int]]:
        inn: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in sorted(self.edges):
            inn[v].append(u)
        return inn


def adjacency(g: Digraph) -> Matrix:
    a = [[0] * g.n for _ in range(g.n)]
    for u, v in g.edges:
        a[v][u] = 1
    return Matrix(a)


def laplacian(g: Digraph) -> Matrix:
    a = adjacency(g)
    return Matrix(
        [[(sum(a.rows[i]) if i == j else -a[i, j]) for j in range(g.n)] for i in range(g.n)]
    )


def reachable_set(g: Digraph, v: int, _succ: list[list[int]] | None = None) -> frozenset[int]:
    if not 0 <= v < g.n:
        raise GraphError(f"node {v + 1} is not in 1..{g.n}")
    succ = _succ if _succ is not None else g.successors()
    seen = {v}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        for w in succ[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return frozenset(seen)


def reaches(g: Digraph) -> list[frozenset[int]]:
    """Maximal reachable sets, each once, ordered by their smallest node."""
    succ = g.successors()
    sets = {reachable_set(g, v, succ) for v in range(g.n)}
    maximal = [s for s in sets if not any(s < t for t in sets)]
    return sorted(maximal, key=min)


def exclusive_and_common(
    rs: list[frozenset[int]],
) -> tuple[list[frozenset[int]], frozenset[int]]:
    """Split reaches into their exclusive parts and the shared common part."""
    hs = []
    for i, r in enumerate(rs):
        others = frozenset().union(*(s for j, s in enumerate(rs) if j != i))
        hs.append(r - others)
    union = frozenset().union(*rs)
    return hs, union - frozenset().union(*hs)


def weak_components(g: Digraph) -> list[frozenset[int]]:
    nbr: list[set[int]] = [set() for _ in range(g.n)]
    for u, v in g.edges:
        nbr[u].add(v)
        nbr[v].add(u)
    seen: set[int] = set()
    comps = []
    for s in range(g.n):
        if s in seen:
            continue
        comp = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for w in nbr[u]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        comps.append(frozenset(comp))
    return comps


def is_weakly_connected(g: Digraph) -> bool:
    return len(weak_components(g)) == 1


def is_rooted(g: Digraph) -> bool:
    return is_weakly_connected(g) and len(reaches(g)) == 1


def strongly_connected_components(g: Digraph) -> list[frozenset[int]]:
    """Tarjan's algorithm, iterative; components ordered by smallest node."""
    succ = g.successors()
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[frozenset[int]] = []
    counter = 0
    for root in range(g.n):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            for k in range(pos, len(succ[v])):
                w = succ[v][k]
                if w not in index:
                    work.append((v, k + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                comps.append(frozenset(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return sorted(comps, key=min)


def root_components(g: Digraph) -> list[frozenset[int]]:
    """Strongly connected components that receive no edge from outside."""
    comps = strongly_connected_components(g)
    where = {v: k for k, c in enumerate(comps) for v in c}
    fed = {where[v] for u, v in g.edges if where[u] != where[v]}
    return [c for k, c in enumerate(comps) if k not in fed]


# ---------------------------------------------------------------------------
# file formats (1-based on disk)


def parse_edge_list(text: str, n: int | None = None) -> Digraph:
    """Parse ``u v`` lines (1-based, edge u -> v); ``#`` starts a comment.

    A line ``n <count>`` fixes the node count; otherwise it is the largest
    index seen (or ``n`` if given).
    """
    edges = []
    declared = n
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n" and len(parts) == 2:
            try:
                declared = int(parts[1])
            except ValueError:
                raise ParseError(f"line {lineno}: bad node count {parts[1]!r}") from None
            continue
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected 'u v', got {raw.strip()!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer node in {raw.strip()!r}") from None
        if u < 1 or v < 1:
            raise ParseError(f"line {lineno}: nodes are 1-based")
        edges.append((u - 1, v - 1))
    size = declared if declared is not None else max((max(e) for e in edges), default=-1) + 1
    if size < 1:
        raise ParseError("empty graph: declare the node count with a line 'n <count>'")
    try:
        return Digraph(size, edges)
    except GraphError as exc:
        raise ParseError(str(exc)) from None


def format_edge_list(g: Digraph) -> str:
    lines = [f"n {g.n}"] + [f"{u + 1} {v + 1}" for u, v in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def graph_from_json(obj: dict) -> Digraph:
    try:
        n = int(obj["n"])
        edges = [(int(u) - 1, int(v) - 1) for u, v in obj["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"graph JSON needs 'n' and 'edges' [[u,v],...]: {exc}") from None
    try:
        return Digraph(n, edges)
    except GraphError as exc:
        raise ParseError(str(exc)) from None


def graph_to_json(g: Digraph) -> dict:
    return {"n": g.n, "edges": [[u + 1, v + 1] for u, v in g.sorted_edges()]}


def load_graph(path: str | Path) -> Digraph:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{p}: {exc.strerror}") from None
    try:
        if text.lstrip().startswith("{"):
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}") from None
            return graph_from_json(obj)
        return parse_edge_list(text)
    except ParseError as exc:
        raise ParseError(f"{p}: {exc}") from None
