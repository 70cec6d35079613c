import networkx as nx
import numpy as np
import pytest

from helpers import random_digraph
from multiconsensus import examples
from multiconsensus.errors import GraphError, ParseError
from multiconsensus.exact import Matrix
from multiconsensus.graph import (
    Digraph,
    adjacency,
    exclusive_and_common,
    graph_from_json,
    graph_to_json,
    is_rooted,
    is_weakly_connected,
    laplacian,
    load_graph,
    parse_edge_list,
    format_edge_list,
    reachable_set,
    reaches,
    root_components,
    strongly_connected_components,
    weak_components,
)


def test_laplacian_convention():
    g = Digraph(3, [(0, 1), (2, 1)])
    L = laplacian(g)
    assert L.tolist() == [[0, 0, 0], [-1, 2, -1], [0, 0, 0]]
    assert adjacency(g)[1, 0] == 1
    assert Digraph.from_laplacian(L) == g
    assert all(s == 0 for s in L.row_sums())


def test_invalid_graphs():
    with pytest.raises(GraphError):
        Digraph(2, [(0, 0)])
    with pytest.raises(GraphError):
        Digraph(2, [(0, 2)])
    with pytest.raises(GraphError):
        Digraph(0)


def test_example1_reaches():
    g = examples.load(1).graph
    assert [sorted(v + 1 for v in r) for r in reaches(g)] == [[1, 4, 6], [2, 3, 4, 6], [5, 6, 7, 8]]
    rs = reaches(Digraph.from_laplacian(Matrix(examples.EX1_CONTROLLED)))
    # after adding 4->5 the reaches of 1 and {2,3} also cover node 5
    assert [sorted(v + 1 for v in r) for r in rs] == [[1, 4, 5, 6], [2, 3, 4, 5, 6], [5, 6, 7, 8]]
    hs, c = exclusive_and_common(rs)
    assert [sorted(v + 1 for v in h) for h in hs] == [[1], [2, 3], [7, 8]]
    assert sorted(v + 1 for v in c) == [4, 5, 6]


def test_reachable_set_bad_node():
    with pytest.raises(GraphError):
        reachable_set(Digraph(2), 5)


def test_components_against_networkx():
    rng = np.random.default_rng(5)
    for _ in range(60):
        n = int(rng.integers(1, 12))
        g = random_digraph(rng, n, float(rng.uniform(0.05, 0.4)))
        h = nx.DiGraph()
        h.add_nodes_from(range(n))
        h.add_edges_from(g.edges)
        assert sorted(map(sorted, strongly_connected_components(g))) == sorted(
            map(sorted, nx.strongly_connected_components(h))
        )
        assert sorted(map(sorted, weak_components(g))) == sorted(map(sorted, nx.weakly_connected_components(h)))
        cond = nx.condensation(h)
        roots = [sorted(cond.nodes[c]["members"]) for c in cond if cond.in_degree(c) == 0]
        assert sorted(map(sorted, root_components(g))) == sorted(roots)
        # each reach is what one root component can see
        assert len(reaches(g)) == len(roots)


def test_rooted_and_weak():
    assert is_rooted(Digraph(3, [(0, 1), (1, 2)]))
    assert not is_rooted(Digraph(3, [(0, 1), (2, 1)]))
    assert is_weakly_connected(Digraph(3, [(0, 1), (2, 1)]))
    assert not is_weakly_connected(Digraph(3, [(0, 1)]))


def test_edge_list_roundtrip_and_errors(tmp_path):
    g = examples.load(2).graph
    assert parse_edge_list(format_edge_list(g)) == g
    assert parse_edge_list("# c\r\n1 2\r\n\r\n2 3 # tail\n") == Digraph(3, [(0, 1), (1, 2)])
    assert parse_edge_list("n 5\n1 2\n").n == 5
    for bad in ["1\n", "a b\n", "0 1\n", "1 1\n", ""]:
        with pytest.raises(ParseError):
            parse_edge_list(bad)
    assert graph_from_json(graph_to_json(g)) == g
    with pytest.raises(ParseError):
        graph_from_json({"edges": [[1, 2]]})
    p = tmp_path / "g.json"
    p.write_text('{"n": 3, "edges": [[1, 2]]}')
    assert load_graph(p) == Digraph(3, [(0, 1)])
    with pytest.raises(ParseError):
        load_graph(tmp_path / "missing.txt")
