import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selftrig.graph import (Graph, GraphError, complete, erdos_renyi, laplacian_quadratic,
                            parse_edge_list, path, ring)


def test_parse_path():
    g = parse_edge_list("0 1\n1 2")
    assert g.n == 3
    assert g.edges == ((0, 1), (1, 2)) or list(g.edges) == [(0, 1), (1, 2)]
    assert list(g.degrees) == [1, 2, 1]


def test_parse_dedups_unordered_pair():
    assert parse_edge_list("0 1\n1 0").m == 1


def test_parse_comments_and_blanks():
    g = parse_edge_list("# ring\n\n0 1\n1 2  # tail\n2 0\n")
    assert g.m == 3 and g.d_max == 2


def test_parse_self_loop_reports_line():
    with pytest.raises(GraphError, match="line 2"):
        parse_edge_list("0 1\n0 0")


def test_parse_rejects_non_integer():
    with pytest.raises(GraphError):
        parse_edge_list("0 x")


@pytest.mark.parametrize("n", [3, 5, 20])
def test_ring(n):
    g = ring(n)
    assert g.m == n
    assert set(g.degrees) == {2}
    assert g.d_max == 2 and g.d_sum == 2 * n


def test_ring3_is_triangle():
    assert ring(3).edges == complete(3).edges


def test_ring_too_small():
    with pytest.raises(GraphError):
        ring(2)


def test_generators():
    assert complete(4).m == 6 and set(complete(4).degrees) == {3}
    assert path(2).m == 1
    assert erdos_renyi(10, 0.5, 42) == erdos_renyi(10, 0.5, 42)
    assert erdos_renyi(10, 0.5, 42).is_connected()


def test_erdos_renyi_gives_up():
    with pytest.raises(GraphError, match="larger p"):
        erdos_renyi(10, 0.0, 1)


def test_neighbor_symmetry_and_sorting():
    g = erdos_renyi(12, 0.4, 3)
    for i in range(g.n):
        assert list(g.neighbors[i]) == sorted(g.neighbors[i])
        assert g.degrees[i] == len(g.neighbors[i])
        for j in g.neighbors[i]:
            assert i in g.neighbors[j]


def test_laplacian_structure():
    L = ring(6).laplacian()
    assert np.allclose(L, L.T)
    assert np.allclose(L.sum(axis=1), 0)
    assert list(np.diag(L)) == [2] * 6


def test_quadratic_examples():
    assert laplacian_quadratic(path(2), [1, -1]) == 4
    assert laplacian_quadratic(ring(3), [0, 1, 2]) == 6
    assert laplacian_quadratic(ring(5), [3.0] * 5) == 0


def test_quadratic_length_mismatch():
    with pytest.raises(GraphError):
        laplacian_quadratic(ring(3), [0, 1])


def test_disconnected_diameter():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    assert not g.is_connected()
    assert g.diameter() == float("inf")
    assert path(5).diameter() == 4


@st.composite
def small_graphs(draw):
    n = draw(st.integers(2, 8))
    pairs = list(itertools.combinations(range(n), 2))
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return Graph.from_edges(n, edges)


@settings(max_examples=200, deadline=None)
@given(small_graphs(), st.data())
def test_quadratic_matches_dense(g, data):
    x = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=g.n, max_size=g.n)))
    dense = float(x @ g.laplacian() @ x)
    assert laplacian_quadratic(g, x) == pytest.approx(dense, rel=1e-9, abs=1e-9)
    shift = data.draw(st.floats(-5, 5))
    assert laplacian_quadratic(g, x + shift) == pytest.approx(laplacian_quadratic(g, x),
                                                              rel=1e-7, abs=1e-7)
