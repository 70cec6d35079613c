"""Worked examples embedded as fixture data.

Original topologies are recovered from the printed controlled Laplacians
by subtracting the stated added links.  Node labels are 1-based here, as
in the printed material; :func:`load` converts to 0-based objects.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exact import Matrix
from .graph import Digraph, laplacian
from .partition import Partition
from .synthesis import ControlLayer, Mode

EX1_EDGES = [(3, 2), (2, 3), (1, 4), (3, 4), (7, 5), (4, 6), (7, 6), (8, 6), (8, 7), (7, 8)]
EX1_TARGET = [[1], [2, 3], [4], [5, 6], [7, 8]]
EX1_ADDED = [(4, 5), (8, 5)]

EX2_EDGES = [
    (3, 1), (4, 2), (1, 4), (1, 5), (3, 5), (2, 6), (5, 6),
    (5, 7), (5, 8), (6, 8), (7, 8), (6, 9), (10, 8),
]
EX2_TARGET = [[1, 4], [2, 3], [5, 6], [7, 8], [9], [10]]
EX2_ADDED = [(3, 4), (4, 3), (4, 6), (6, 7), (10, 7)]

# printed controlled Laplacians L + L^u
EX1_CONTROLLED = [
    [0, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, -1, 0, 0, 0, 0, 0],
    [0, -1, 1, 0, 0, 0, 0, 0],
    [-1, 0, -1, 2, 0, 0, 0, 0],
    [0, 0, 0, -1, 3, 0, -1, -1],
    [0, 0, 0, -1, 0, 3, -1, -1],
    [0, 0, 0, 0, 0, 0, 1, -1],
    [0, 0, 0, 0, 0, 0, -1, 1],
]
EX2_CONTROLLED = [
    [1, 0, -1, 0, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, -1, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, -1, 0, 0, 0, 0, 0, 0],
    [-1, 0, -1, 2, 0, 0, 0, 0, 0, 0],
    [-1, 0, -1, 0, 2, 0, 0, 0, 0, 0],
    [0, -1, 0, -1, -1, 3, 0, 0, 0, 0],
    [0, 0, 0, 0, -1, -1, 3, 0, 0, -1],
    [0, 0, 0, 0, -1, -1, -1, 4, 0, -1],
    [0, 0, 0, 0, 0, -1, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
]


@dataclass(frozen=True)
class Example:
    number: int
    graph: Digraph
    target: Partition
    mode: Mode | None  # None for the constructive/add-only examples
    expected_layer: ControlLayer | None
    a: float | None = None
    b: float | None = None
    stable_gains: tuple[float, float] | None = None
    partial_gains: tuple[float, float] | None = None
    expected_converging: tuple[tuple[int, ...], ...] = ()  # 0-based cells converging in the partial run

    @property
    def L(self) -> Matrix:
        return laplacian(self.graph)


def _graph(n: int, edges) -> Digraph:
    return Digraph(n, [(u - 1, v - 1) for u, v in edges])


def _part(cells, n: int) -> Partition:
    return Partition([[v - 1 for v in c] for c in cells], n)


def _layer(n: int, added=(), removed=(), mode=Mode.ADD) -> ControlLayer:
    return ControlLayer.from_changes(
        n, [(u - 1, v - 1) for u, v in added], [(u - 1, v - 1) for u, v in removed], mode
    )


def load(number: int) -> Example:
    if number in (1, 3, 5, 6):
        g = _graph(8, EX1_EDGES)
        t = _part(EX1_TARGET, 8)
    elif number in (2, 4):
        g = _graph(10, EX2_EDGES)
        t = _part(EX2_TARGET, 10)
    else:
        raise ValueError(f"no example {number}; choose 1..6")
    if number == 1:
        return Example(1, g, t, Mode.ADD, _layer(8, EX1_ADDED))
    if number == 2:
        return Example(2, g, t, Mode.ADD, _layer(10, EX2_ADDED))
    if number == 3:
        return Example(
            3, g, t, Mode.ADD, _layer(8, EX1_ADDED), a=1.0, b=0.8,
            stable_gains=(0.62, 0.98), partial_gains=(0.45, 0.98), expected_converging=((4, 5),),
        )
    if number == 4:
        return Example(
            4, g, t, Mode.ADD, _layer(10, EX2_ADDED), a=1.0, b=0.8,
            stable_gains=(2.0, 1.8), partial_gains=(0.4, 1.8), expected_converging=((6, 7),),
        )
    if number == 5:
        return Example(5, g, t, Mode.SIGNED, None)
    return Example(6, g, t, Mode.SIGNED_CONNECTED, None)
