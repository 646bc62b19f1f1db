import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rumorlab.errors import GraphError
from rumorlab.graph import (Graph, gen_basic, gen_lct, gen_separation, gen_tightness, is_tree,
                            max_path_degree_sum, max_root_path_degree_sum, path_degree_sum,
                            path_max_degree, tree_path, validate, with_edges)


def symmetric_and_simple(g):
    adj = {v: set(g.neighbors(v).tolist()) for v in range(g.n)}
    for v, nb in adj.items():
        assert v not in nb
        assert len(nb) == g.degree(v)
        for w in nb:
            assert v in adj[w]
    assert all(np.all(np.diff(g.neighbors(v)) > 0) for v in range(g.n))


def test_path_three():
    g = gen_basic("path", 3)
    assert g.edges().tolist() == [[0, 1], [1, 2]]
    assert g.degrees.tolist() == [1, 2, 1]


def test_star_five():
    g = gen_basic("star", 5)
    assert g.degree(0) == 4
    assert all(g.degree(v) == 1 for v in range(1, 5))


def test_complete_four():
    g = gen_basic("complete", 4)
    assert g.num_edges == 6 and set(g.degrees.tolist()) == {3}
    assert gen_basic("clique", 4).num_edges == 6


def test_cbt_depth():
    g = gen_basic("complete_binary_tree", 3)
    assert g.n == 15 and is_tree(g)
    assert gen_basic("complete_binary_tree", 0).n == 1


@pytest.mark.parametrize("kind,size", [("path", 0), ("star", -1), ("complete_binary_tree", -1)])
def test_basic_bad_size(kind, size):
    with pytest.raises(GraphError):
        gen_basic(kind, size)


def test_basic_too_large():
    with pytest.raises(GraphError) as e:
        gen_basic("complete", 10 ** 5)
    assert e.value.code == "too-large"
    with pytest.raises(GraphError) as e:
        gen_basic("path", 10 ** 8)
    assert e.value.code == "too-large"


def nx_lct(k):
    """Independent construction: networkx balanced tree plus a clique on its leaves."""
    h = nx.balanced_tree(2, int(math.log2(k)))
    leaves = [v for v in h if h.degree(v) == 1 and v != 0] if k > 1 else [0]
    h.add_edges_from((a, b) for i, a in enumerate(leaves) for b in leaves[i + 1:])
    return h


@pytest.mark.parametrize("k", [2, 4, 8, 16])
def test_lct_matches_independent_construction(k):
    g, lay = gen_lct(k)
    ref = nx_lct(k)
    assert g.n == ref.number_of_nodes() == 2 * k - 1
    assert g.num_edges == ref.number_of_edges() == k * (k - 1) // 2 + 2 * (k - 1)
    assert sorted(g.degrees.tolist()) == sorted(d for _, d in ref.degree())
    mine = nx.Graph(g.edges().tolist())
    assert nx.is_isomorphic(mine, ref)
    assert validate(g, lay) == []


def test_lct_frozen_examples():
    g, lay = gen_lct(2)
    assert (g.n, g.num_edges) == (3, 3)
    g, lay = gen_lct(4)
    assert (g.n, g.num_edges) == (7, 12)
    assert all(g.degree(v) == 4 for v in lay.leaf_nodes)
    assert g.degree(lay.root) == 2
    assert len(lay.branch_nodes) == 3 and len(lay.leaf_nodes) == 4


@pytest.mark.parametrize("k", [1, 3, 6, 0])
def test_lct_shape_error(k):
    with pytest.raises(GraphError) as e:
        gen_lct(k)
    assert e.value.code == "lct-shape"


def test_lct_fault_injection():
    g, lay = gen_lct(4)
    a, b = lay.leaf_nodes[:2]
    bad = with_edges(g, remove=[(a, b)])
    assert "leaf-clique incomplete" in validate(bad, lay)


def test_separation_l8():
    g, lay = gen_separation(8, 1)
    assert lay.n_big == 64 and lay.log_n == 6 and lay.m == 8
    assert g.degree(lay.r) == 2 * 8 * 6 + 1 == 97
    assert validate(g, lay) == []
    symmetric_and_simple(g)


def test_separation_external_edges_of_d1():
    g, lay = gen_separation(8, 1)
    d1 = set(lay.blocks[0].nodes.tolist())
    for v in d1:
        outside = [w for w in g.neighbors(v).tolist() if w not in d1]
        assert len(outside) <= 1


def test_separation_edge_groups():
    g, lay = gen_separation(16, 1)
    assert g.has_edge(lay.r, lay.r_zeta)
    assert all(g.has_edge(lay.r, v) for v in lay.leaves_alpha[:lay.m * lay.log_n])
    assert not g.has_edge(lay.r, lay.leaves_alpha[lay.m * lay.log_n])
    for i in range(lay.m):
        assert all(g.has_edge(lay.r, v) for v in lay.leaves(i)[:lay.log_n])
        assert g.has_edge(lay.roots[i], lay.leaves_zeta[i])
        assert g.has_edge(lay.leaves(i)[-1], lay.c_alpha[i])
    # C_alpha is the first m nodes of layer ceil(log2 m) of D_alpha's branch tree
    depth = math.ceil(math.log2(lay.m))
    assert lay.c_alpha.tolist() == lay.alpha.layer(depth)[:lay.m].tolist()


def test_separation_doubled():
    g, lay = gen_separation(8, 1, doubled=True)
    assert g.n == 2 * lay.size
    assert g.has_edge(lay.r_alpha, lay.twin.r_alpha)
    assert validate(g, lay) == []
    assert g.degree(lay.twin.r) == 97


def test_separation_shape_errors():
    with pytest.raises(GraphError) as e:
        gen_separation(4, 8)
    assert e.value.code == "separation-shape"
    assert "exceeds" in str(e.value)
    for l in (6, 4, 2):
        with pytest.raises(GraphError):
            gen_separation(l, 1)


def test_tightness_k2():
    g, lay = gen_tightness(2)
    assert g.n == 8 + 16 * 2 == 40
    assert g.min_degree == 1 and g.max_degree == 8
    assert validate(g, lay) == []


def test_tightness_k3_ratio():
    g, _ = gen_tightness(3)
    assert g.max_degree / g.min_degree == 9


@pytest.mark.parametrize("k", [2, 3, 4])
def test_tightness_structure(k):
    g, lay = gen_tightness(k)
    k2 = k * k
    assert g.n == 2 * k2 + k ** 5
    assert all(g.degree(a) == k2 for a in lay.A)
    assert all(g.degree(b) == 2 * k2 for b in lay.B)
    interior = lay.cliques[:, :, 1:].ravel()
    assert set(g.degrees[interior].tolist()) == {k - 1}
    for i, b in enumerate(lay.B):
        nb = set(g.neighbors(b).tolist())
        for j in range(k2):
            assert len(nb & set(lay.cliques[i, j].tolist())) == 1


def test_tightness_fault_and_error():
    g, lay = gen_tightness(2)
    bad = with_edges(g, add=[(lay.A[0], lay.A[1])])
    assert "A independent set violated" in validate(bad, lay)
    with pytest.raises(GraphError) as e:
        gen_tightness(1)
    assert e.value.code == "tightness-shape"


def test_path_degree_sum_examples():
    g = gen_basic("path", 3)
    assert path_degree_sum(g, [0, 1, 2]) == 4
    s = gen_basic("star", 5)
    assert path_degree_sum(s, [3, 0]) == 5
    assert path_degree_sum(s, [0]) == 4
    assert path_max_degree(s, [3, 0]) == 4


def test_path_errors():
    g = gen_basic("path", 4)
    with pytest.raises(GraphError) as e:
        path_degree_sum(g, [0, 2])
    assert e.value.code == "not-a-path"
    with pytest.raises(GraphError):
        path_degree_sum(g, [0, 1, 0])


def test_tree_helpers():
    g = gen_basic("complete_binary_tree", 6)
    assert max_root_path_degree_sum(g, 0) == 2 + 3 * 5 + 1
    # leaf to leaf through the root: 1 + 3*5 + 2 + 3*5 + 1
    assert max_path_degree_sum(g) == 34
    assert max_path_degree_sum(gen_basic("star", 50)) == 51
    assert tree_path(g, 0, 127 - 1)[0] == 0
    with pytest.raises(GraphError) as e:
        max_path_degree_sum(gen_basic("complete", 4))
    assert e.value.code == "not-a-tree"


def test_from_edges_rejects_bad_input():
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 5)])


@st.composite
def random_graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph.from_edges(n, edges)


@given(random_graphs())
@settings(max_examples=60, deadline=None)
def test_random_graphs_are_valid(g):
    symmetric_and_simple(g)
    assert validate(g) == []
    mask = np.zeros(g.n, dtype=bool)
    mask[::2] = True
    ref = np.array([sum(mask[w] for w in g.neighbors(v)) for v in range(g.n)])
    assert np.array_equal(g.informed_degrees(mask), ref)


@given(st.integers(2, 30), st.data())
@settings(max_examples=40, deadline=None)
def test_path_degree_sum_additive(q, data):
    g = gen_basic("path", q)
    cut = data.draw(st.integers(0, q - 1))
    left, right = list(range(cut + 1)), list(range(cut, q))
    whole = path_degree_sum(g, list(range(q)))
    assert whole == path_degree_sum(g, left) + path_degree_sum(g, right) - g.degree(cut)


@pytest.mark.parametrize("make", [lambda: gen_lct(8), lambda: gen_separation(8, 1), lambda: gen_tightness(2)])
def test_generated_graphs_simple(make):
    g, lay = make()
    symmetric_and_simple(g)
    assert validate(g, lay) == []
