import itertools

import pytest
from hypothesis import given, strategies as st

from pseudoarc_lab.graph_core import (
    Graph,
    GraphError,
    Partition,
    Path,
    canonical_path,
    clique_path,
    is_path,
    path_order,
    path_stats,
    product_edges,
    quotient,
    subpath,
)
from pseudoarc_lab.relations import is_co_bijective, is_edge_preserving

from conftest import graphs


def test_canonical_path_adjacency():
    g = canonical_path(4)
    for j, k in itertools.product(range(5), repeat=2):
        assert g.adjacent(j, k) == (abs(j - k) <= 1)
    assert path_order(g) == (0, 1, 2, 3, 4)


def test_single_vertex_path():
    g = canonical_path(0)
    stats = path_stats(g)
    assert stats.is_path and stats.edge_count == 0 and stats.ends == frozenset({0})


def test_negative_length_rejected():
    with pytest.raises(GraphError):
        canonical_path(-1)


def test_cycle_and_star_are_not_paths():
    cycle = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert not is_path(cycle) and not is_path(star)
    assert path_stats(cycle).ends == frozenset()


def test_graph_validation():
    with pytest.raises(GraphError):
        Graph(2, (0b01, 0b10 | 0b01))   # asymmetric
    with pytest.raises(GraphError):
        Graph(2, (0b00, 0b10))          # not reflexive
    with pytest.raises(GraphError):
        Graph(0, ())


def test_labels_do_not_affect_equality():
    g = canonical_path(2)
    labelled = Graph(g.n, g.rows, ("a", "b", "c"))
    assert labelled == g


@given(st.permutations(list(range(6))))
def test_shuffled_path_is_recognised(perm):
    edges = [(perm[i], perm[i + 1]) for i in range(5)]
    g = Graph.from_edges(6, edges)
    order = path_order(g)
    assert order is not None
    assert order in (tuple(perm), tuple(reversed(perm)))
    p = Path.of(g)
    assert p.length == 5


@given(graphs())
def test_path_stats_matches_definition(g):
    stats = path_stats(g)
    orders = [bin(g.rows[v]).count("1") - 1 for v in g.vertices]
    assert list(stats.orders) == orders
    assert stats.edge_count == len(g.edges())
    assert stats.is_path == (path_order(g) is not None)


@given(st.integers(0, 8), st.data())
def test_subpath_is_the_interval(n, data):
    p = Path.of(canonical_path(n))
    a = data.draw(st.integers(0, n))
    b = data.draw(st.integers(0, n))
    sp = subpath(p, a, b)
    assert sp.length == abs(a - b)
    assert is_path(sp.graph)


@given(st.integers(0, 6))
def test_clique_path_shape(n):
    cp = clique_path(Path.of(canonical_path(n)))
    assert cp.length == 2 * n
    labels = [cp.graph.label(v) for v in cp.order]
    assert labels[0] == frozenset({0})
    for k in range(n + 1):
        assert labels[2 * k] == frozenset({k})
    for k in range(n):
        assert labels[2 * k + 1] == frozenset({k, k + 1})
    # adjacent cliques are comparable under inclusion
    for x, y in zip(labels, labels[1:]):
        assert x <= y or y <= x


@given(st.integers(1, 8), st.data())
def test_quotient_of_interval_partition_is_a_path(n, data):
    cuts = sorted(set(data.draw(st.lists(st.integers(1, n), max_size=n))))
    bounds = [0] + cuts + [n + 1]
    blocks = tuple(frozenset(range(a, b)) for a, b in zip(bounds, bounds[1:]))
    g = canonical_path(n)
    q, qmap = quotient(g, Partition(g, blocks))
    assert is_path(q) and q.n == len(blocks)
    assert is_co_bijective(qmap) and is_edge_preserving(qmap)


def test_partition_validation():
    g = canonical_path(2)
    with pytest.raises(GraphError):
        Partition(g, (frozenset({0, 1}), frozenset({1, 2})))
    with pytest.raises(GraphError):
        Partition(g, (frozenset({0, 1}),))


@given(st.integers(0, 3), st.integers(0, 3))
def test_product_edges_modes(m, n):
    g, h = canonical_path(m), canonical_path(n)
    can = product_edges(g, h, "canonical")
    strict = product_edges(g, h, "strict")
    assert can.n == strict.n == g.n * h.n
    for i, (a, b) in enumerate(itertools.product(g.vertices, h.vertices)):
        for j, (c, d) in enumerate(itertools.product(g.vertices, h.vertices)):
            assert can.adjacent(i, j) == (g.adjacent(a, c) and h.adjacent(b, d))
            assert strict.adjacent(i, j) == ((a == c and h.adjacent(b, d)) or (g.adjacent(a, c) and b == d))
    with pytest.raises(GraphError):
        product_edges(g, h, "tensor")
