import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamqaoa import graphs
from hamqaoa.graphs import INFINITE_GIRTH, InteractionGraph


def test_ring_structure():
    g = graphs.generate("ring", n=6)
    assert g.n_vertices == 6 and g.n_edges == 6
    assert g.degrees().tolist() == [2] * 6


@pytest.mark.parametrize("seed", [7, 8, 123])
def test_random_regular_is_regular(seed):
    g = graphs.generate("random_regular", seed=seed, n=14, degree=3)
    assert np.all(g.degrees() == 3)


def test_random_regular_reproducible():
    a = graphs.generate("random_regular", seed=7, n=14, degree=3)
    b = graphs.generate("random_regular", seed=7, n=14, degree=3)
    assert a.edges == b.edges


def test_random_regular_parity_error():
    with pytest.raises(ValueError):
        graphs.generate("random_regular", n=5, degree=3)


def test_erdos_renyi_extremes():
    assert graphs.generate("erdos_renyi", n=6, prob=0.0).n_edges == 0
    assert graphs.generate("erdos_renyi", n=6, prob=1.0).n_edges == 15


@pytest.mark.parametrize("edges", [((0, 0),), ((0, 1), (1, 0)), ((0, 5),), ((0, 1, np.inf),)])
def test_rejects_bad_edges(edges):
    with pytest.raises(ValueError):
        InteractionGraph(3, edges)


@pytest.mark.parametrize("g,expected", [
    (graphs.ring(6), 6),
    (graphs.complete(4), 3),
    (graphs.heawood(), 6),
])
def test_girth(g, expected):
    assert graphs.girth(g) == expected


def test_girth_of_tree_is_infinite():
    gi = graphs.girth(graphs.path(5))
    assert gi is INFINITE_GIRTH
    assert gi > 10**9


@pytest.mark.parametrize("n,d,seed", [(10, 3, 0), (12, 4, 1), (9, 2, 2)])
def test_girth_matches_networkx(n, d, seed):
    if (n * d) % 2:
        pytest.skip("no regular graph")
    g = graphs.generate("random_regular", seed=seed, n=n, degree=d)
    assert graphs.girth(g) == nx.girth(g.to_networkx())


@pytest.mark.parametrize("s,val", [((1, -1, 1, -1), 4), ((1, 1, 1, 1), 0)])
def test_cut_value_ring4(s, val):
    assert graphs.cut_value(graphs.ring(4), s) == val


def _brute_cut(g):
    return max(graphs.cut_value(g, s) for s in itertools.product((1, -1), repeat=g.n_vertices))


@pytest.mark.parametrize("g,val", [
    (graphs.single_edge(), 1), (graphs.complete(4), 4), (graphs.ring(5), 4),
])
def test_max_cut_exact(g, val):
    s, cut = graphs.max_cut_exact(g)
    assert cut == val == _brute_cut(g)
    assert graphs.cut_value(g, s) == cut
    assert s[0] == 1


@given(st.integers(0, 2**31), st.integers(4, 9), st.floats(0.2, 0.9))
@settings(max_examples=25, deadline=None)
def test_max_cut_exact_matches_brute_force(seed, n, prob):
    g = graphs.generate("erdos_renyi", seed=seed, n=n, prob=prob)
    assert graphs.max_cut_exact(g)[1] == _brute_cut(g)


@pytest.mark.parametrize("g,val", [(graphs.ring(8), 8), (graphs.complete(4), 4), (InteractionGraph(4, ()), 0)])
def test_local_search(g, val):
    s, cut = graphs.max_cut_local_search(g, seed=0, restarts=4)
    assert cut == val
    assert graphs.cut_value(g, s) == cut


def test_choose_signs_exact_ring6_alternates():
    s = graphs.choose_signs(graphs.ring(6), "exact")
    assert s.tolist() == [1, -1, 1, -1, 1, -1]


def test_choose_signs_random_reproducible():
    g = graphs.complete(6)
    a = graphs.choose_signs(g, "random", seed=1)
    assert np.array_equal(a, graphs.choose_signs(g, "random", seed=1))
    assert graphs.cut_value(g, a) >= 0


def test_choose_signs_ring5_exact():
    g = graphs.ring(5)
    assert graphs.cut_value(g, graphs.choose_signs(g, "exact")) == 4


def test_graph_and_signs_json_round_trip(tmp_path):
    g = InteractionGraph(3, ((0, 1), (1, 2, 2.5)))
    g.save(tmp_path / "g.json")
    assert InteractionGraph.load(tmp_path / "g.json").edges == g.edges
    graphs.save_signs([1, -1, 1], tmp_path / "s.json")
    assert graphs.load_signs(tmp_path / "s.json").tolist() == [1, -1, 1]


def test_heawood_is_cubic_bipartite():
    g = graphs.heawood()
    assert g.n_vertices == 14 and np.all(g.degrees() == 3) and g.is_bipartite()
