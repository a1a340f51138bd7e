import networkx as nx
import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from wordrank.graph import (
    DirectedGraph,
    cycle_chain_witness,
    full_graph,
    paths_touch_at_most_one_cycle,
    simple_cycles,
    strongly_connected_components,
    transient_graph,
    vertex_on_two_cycles,
)

from .conftest import chain_from_seed


def comps(g):
    return sorted(strongly_connected_components(g).components)


def test_fig1b_single_component(figs):
    cond = strongly_connected_components(transient_graph(figs["fig1b"]))
    assert cond.components == [(1, 2)]
    assert cond.tags == ["complex"]


def test_fig2_two_components(figs):
    cond = strongly_connected_components(transient_graph(figs["fig2"]))
    assert sorted(cond.components) == [(1, 2), (3, 4)]
    assert cond.tags == ["complex", "complex"]
    # sinks first: {3,4} is reached from {1,2}
    assert cond.components[0] == (3, 4)
    assert cond.sources() == [1]


def test_edgeless_graph_has_singletons():
    g = DirectedGraph.from_matrix(np.zeros((3, 3)))
    assert comps(g) == [(0,), (1,), (2,)]
    assert strongly_connected_components(g).tags == ["trivial"] * 3


def test_zero_is_the_only_sink_of_g0(figs):
    for spec in figs.values():
        cond = strongly_connected_components(full_graph(spec))
        sinks = [c for c in range(len(cond.components)) if not cond.successors(c)]
        reachable_sinks = [cond.components[c] for c in sinks]
        assert (0,) in reachable_sinks


def test_cycle_catalogs(figs):
    assert [c.vertices for c in simple_cycles(transient_graph(figs["fig1b"]))] == [(1,), (1, 2)]
    cat = simple_cycles(transient_graph(figs["fig1e"]))
    assert [(c.vertices, c.weight) for c in cat] == [((1, 2), 0.25)]
    assert len(simple_cycles(transient_graph(figs["fig1a"]))) == 0


def test_two_cycle_predicate(figs):
    assert vertex_on_two_cycles(transient_graph(figs["fig1b"])) == (True, 1)
    assert vertex_on_two_cycles(transient_graph(figs["fig1c"])) == (False, None)
    loop = DirectedGraph.from_matrix(np.array([[0.5]]))
    assert vertex_on_two_cycles(loop) == (False, None)


def test_paths_touch_one_cycle(figs):
    assert not paths_touch_at_most_one_cycle(transient_graph(figs["fig1c"]))
    assert paths_touch_at_most_one_cycle(transient_graph(figs["fig1d"]))
    assert paths_touch_at_most_one_cycle(transient_graph(figs["fig1e"]))
    g = transient_graph(figs["fig1c"])
    cond = strongly_connected_components(g)
    c1, c2 = cycle_chain_witness(g, cond)
    assert (cond.components[c1], cond.components[c2]) == ((1,), (2,))


def random_graph(seed, n):
    rng = np.random.default_rng(seed)
    m = (rng.random((n, n)) < 0.3).astype(float)
    return DirectedGraph.from_matrix(m)


@given(st.integers(0, 10**6), st.integers(1, 9))
def test_scc_matches_networkx(seed, n):
    g = random_graph(seed, n)
    dg = nx.DiGraph()
    dg.add_nodes_from(g.vertices)
    dg.add_edges_from(g.arcs())
    expected = sorted(tuple(sorted(c)) for c in nx.strongly_connected_components(dg))
    assert comps(g) == expected


@given(st.integers(0, 10**6), st.integers(1, 8))
def test_condensation_is_acyclic_and_sinks_first(seed, n):
    cond = strongly_connected_components(random_graph(seed, n))
    for s, d in cond.arcs:
        assert d < s  # reverse topological order


@given(st.integers(0, 10**6), st.integers(1, 7))
def test_structural_predicates_match_cycle_catalog(seed, n):
    g = random_graph(seed, n)
    cycles = [set(c.vertices) for c in simple_cycles(g)]
    shared = any(sum(v in c for c in cycles) >= 2 for v in g.vertices)
    assert vertex_on_two_cycles(g)[0] == shared


@given(st.integers(0, 10**6))
def test_cycle_weights_are_arc_products(seed):
    spec = chain_from_seed(seed)
    g = transient_graph(spec)
    for c in simple_cycles(g):
        w = 1.0
        for v, u in zip(c.vertices, c.vertices[1:] + c.vertices[:1]):
            w *= spec.matrix[v, u]
        assert w == c.weight
