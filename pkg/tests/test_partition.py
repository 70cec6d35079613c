from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import adjacency_np, counts_eep, random_digraph, random_partition
from multiconsensus import examples
from multiconsensus.errors import ParseError, PartitionError
from multiconsensus.exact import Matrix
from multiconsensus.graph import laplacian
from multiconsensus.partition import (
    Partition,
    characteristic_matrix,
    format_partition,
    inter_cell_counts,
    is_eep,
    is_eep_by_counts,
    load_partition,
    partition_from_json,
    partition_to_json,
    projector,
    quotient_laplacian,
    r_matrix,
)


def test_validation():
    with pytest.raises(PartitionError):
        Partition([[0, 1], [1, 2]], 3)
    with pytest.raises(PartitionError):
        Partition([[0], [2]], 3)
    with pytest.raises(PartitionError):
        Partition([[0], []], 1)


def test_canonical_order_and_equality():
    p = Partition([[3, 2], [0], [1]], 4)
    assert p.cells == ((0,), (1,), (2, 3))
    assert p == Partition([[1], [2, 3], [0]], 4)
    assert format_partition(p) == "{1 | 2 | 3,4}"
    q = Partition.ordered([[2, 3], [0], [1]], 4)
    assert q.cells[0] == (2, 3) and q.cell_of(2) == 0
    assert q == p


def test_projector_properties():
    p = Partition([[0, 2], [1], [3, 4, 5]], 6)
    P = characteristic_matrix(p, 6)
    PH = projector(P)
    assert PH @ PH == PH
    assert PH.T == PH
    assert PH[3, 4] == Fraction(1, 3)
    R = r_matrix(p, 6)
    assert R @ P == Matrix.zeros(6, 3)


def test_example_targets_are_eep_after_control():
    for k, ctrl in ((1, examples.EX1_CONTROLLED), (2, examples.EX2_CONTROLLED)):
        ex = examples.load(k)
        assert not is_eep(ex.L, ex.target)
        assert is_eep(Matrix(ctrl), ex.target)


def test_quotient_laplacian_example1():
    ex = examples.load(1)
    L = Matrix(examples.EX1_CONTROLLED)
    Lq = quotient_laplacian(L, characteristic_matrix(ex.target, 8))
    # cells {1},{2,3},{4},{5,6},{7,8}
    assert Lq.tolist() == [
        [0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0],
        [-1, -1, 2, 0, 0],
        [0, 0, -1, 3, -2],
        [0, 0, 0, 0, 0],
    ]


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_projector_and_count_tests_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    g = random_digraph(rng, n, float(rng.uniform(0.1, 0.6)))
    p = Partition(random_partition(rng, range(n), int(rng.integers(1, n + 1))), n)
    L = laplacian(g)
    assert is_eep(L, p) == is_eep_by_counts(L, p) == counts_eep(adjacency_np(g), p.cells)


def test_singletons_and_whole_always_eep():
    rng = np.random.default_rng(1)
    for _ in range(20):
        g = random_digraph(rng, 6, 0.4)
        L = laplacian(g)
        assert is_eep(L, Partition.singletons(6))
        assert is_eep(L, Partition.whole(6))


def test_inter_cell_counts():
    ex = examples.load(1)
    c = inter_cell_counts(ex.L, ex.target)
    # node 6 hears from 4, 7, 8 -> one from {4}, two from {7,8}
    assert c[5] == [0, 0, 1, 0, 2]


def test_refines():
    a = Partition([[0], [1], [2, 3]], 4)
    b = Partition([[0, 1], [2, 3]], 4)
    assert a.refines(b) and not b.refines(a)


def test_json_roundtrip(tmp_path):
    p = Partition([[0, 3], [1, 2]], 4)
    assert partition_from_json(partition_to_json(p), 4) == p
    f = tmp_path / "p.json"
    f.write_text('{"cells": [[1, 4], [2, 3]]}')
    assert load_partition(f, 4) == p
    f.write_text('{"cells": [[1, 4], [2]]}')
    with pytest.raises(ParseError):
        load_partition(f, 4)
    f.write_text("{oops")
    with pytest.raises(ParseError):
        load_partition(f)
