from __future__ import annotations

import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from nwrob.errors import InvalidWeight, NoPath, UnknownNode
from nwrob.graph import (NodeWeightedGraph, boundary_ball, closed_ball, connected_within,
                         node_distance, open_ball, shortest_path, subdivide_edges)


def path_sat(c_a: float = 5.0) -> NodeWeightedGraph:
    return NodeWeightedGraph({"s": 0, "a": c_a, "t": 0}, (("s", "a", 0), ("a", "t", 0)))


def four_cycle() -> NodeWeightedGraph:
    return NodeWeightedGraph({"s": 0, "a": 3, "t": 0, "b": 7},
                             (("s", "a", 0), ("a", "t", 0), ("t", "b", 0), ("b", "s", 0)))


def brute_distance(g: NodeWeightedGraph, zeroed, u, v) -> float:
    """Enumerate all simple paths (tiny graphs only)."""
    if u == v:
        return 0.0
    zeroed = set(zeroed)
    best = math.inf
    stack = [(u, [u])]
    while stack:
        x, path = stack.pop()
        for y in g.neighbors(x):
            if y in path:
                continue
            if y == v:
                cost = sum(0.0 if z in zeroed else g.weight(z) for z in path[1:])
                best = min(best, cost)
            else:
                stack.append((y, path + [y]))
    return best


# -- examples ------------------------------------------------------------------

def test_interior_node_counts_once():
    assert node_distance(path_sat(), (), "s", "t") == 5


def test_zeroing_removes_interior_cost():
    assert node_distance(path_sat(), {"a"}, "s", "t") == 0


def test_four_cycle_distance_and_path():
    g = four_cycle()
    assert node_distance(g, (), "s", "t") == 3
    assert shortest_path(g, (), "s", "t") == ["s", "a", "t"]


def test_path_examples():
    g = path_sat()
    assert shortest_path(g, (), "s", "t") == ["s", "a", "t"]
    assert shortest_path(g, (), "a", "a") == ["a"]
    assert node_distance(g, (), "s", "a") == 0  # adjacent


def test_disconnected_is_infinite_and_path_raises():
    g = NodeWeightedGraph({1: 0, 2: 0}, ())
    assert node_distance(g, (), 1, 2) == math.inf
    with pytest.raises(NoPath):
        shortest_path(g, (), 1, 2)


def test_unknown_node_and_bad_weight():
    with pytest.raises(UnknownNode):
        node_distance(path_sat(), (), "s", "zz")
    with pytest.raises(InvalidWeight):
        NodeWeightedGraph({1: -1.0})
    with pytest.raises(InvalidWeight):
        NodeWeightedGraph({1: 0, 2: 0}, ((1, 2, -3),))


def test_subdivide_unit_edge_gives_nine_nodes():
    g = subdivide_edges(NodeWeightedGraph({0: 0, 1: 0}, ((0, 1, 1.0),)))
    new = [v for v in g.nodes if v not in (0, 1)]
    assert len(new) == 9
    assert all(abs(g.weight(v) - 1 / 9) < 1e-15 for v in new)
    assert math.isclose(sum(g.weight(v) for v in new), 1.0)
    assert all(w == 0 for _, _, w in g.edges)
    assert g.subdivided


def test_subdivide_heavy_edge_respects_bound():
    g = subdivide_edges(NodeWeightedGraph({0: 0, 1: 0}, ((0, 1, 4.0),)))
    new = [v for v in g.nodes if v not in (0, 1)]
    assert len(new) == 33
    assert 4 / 33 < 1 / 8
    assert all(g.weight(v) < 1 / 8 for v in new)
    assert math.isclose(sum(g.weight(v) for v in new), 4.0)


def test_subdivide_zero_edge_unchanged():
    g = subdivide_edges(NodeWeightedGraph({0: 0, 1: 0}, ((0, 1, 0.0),)))
    assert g.nodes == [0, 1]
    with pytest.raises(ValueError):
        subdivide_edges(g)


def test_subdivide_string_ids():
    g = subdivide_edges(NodeWeightedGraph({"u": 0, "v": 0}, (("u", "v", 0.5),)))
    assert node_distance(g, (), "u", "v") == pytest.approx(0.5)
    assert all("~" in v for v in g.nodes if v not in ("u", "v"))


def test_open_ball_star():
    g = NodeWeightedGraph({"u": 0, "w": 1}, (("u", "w", 0),))
    assert open_ball(g, "u", 1) == {"u", "w"}
    heavy = NodeWeightedGraph({"u": 2, "w": 5}, (("u", "w", 0),))
    assert open_ball(heavy, "u", 1) == set()
    assert open_ball(NodeWeightedGraph({"u": 0, "w": 5}, (("u", "w", 0),)), "u", 1) == {"u"}


def test_boundary_ball_examples():
    g = NodeWeightedGraph({"u": 0, "w": 10}, (("u", "w", 0),))
    assert "w" in boundary_ball(g, "u", 1)
    assert "u" not in boundary_ball(g, "u", 1)  # zero weight never on the boundary


def test_balls_on_weighted_path_match_predicates():
    weights = {0: 0.0, 1: 1.0, 2: 0.5, 3: 2.0, 4: 0.25}
    g = NodeWeightedGraph(weights, tuple((i, i + 1, 0) for i in range(4)))
    r = 2.5
    d = {v: brute_distance(g, (), 0, v) for v in weights}
    assert open_ball(g, 0, r) == {v for v in weights if d[v] + weights[v] <= r}
    assert boundary_ball(g, 0, r) == {v for v in weights if d[v] <= r < d[v] + weights[v]}
    assert closed_ball(g, 0, r) == {v for v in weights if d[v] <= r}


def test_connected_within():
    g = path_sat()
    assert connected_within(g, {"s", "a", "t"}, "s", "t")
    assert not connected_within(g, {"s", "t"}, "s", "t")


def test_scaled_graph_scales_distances():
    g = four_cycle()
    h = g.scaled(2.5)
    assert node_distance(h, (), "s", "t") == pytest.approx(7.5)
    assert h.weight("b") == pytest.approx(17.5)


def test_shortest_path_prefers_fewer_nodes_on_zero_ties():
    # two zero-cost routes s-x-t and s-y-z-t: the shorter one wins
    g = NodeWeightedGraph({"s": 0, "t": 0, "x": 0, "y": 0, "z": 0},
                          (("s", "y", 0), ("y", "z", 0), ("z", "t", 0), ("s", "x", 0), ("x", "t", 0)))
    assert shortest_path(g, (), "s", "t") == ["s", "x", "t"]


def test_shortest_path_lexicographic_tie():
    g = NodeWeightedGraph({"s": 0, "t": 0, "b": 1, "a": 1},
                          (("s", "b", 0), ("b", "t", 0), ("s", "a", 0), ("a", "t", 0)))
    assert shortest_path(g, (), "s", "t") == ["s", "a", "t"]


# -- properties ----------------------------------------------------------------

@st.composite
def small_graphs(draw, max_nodes: int = 7):
    n = draw(st.integers(2, max_nodes))
    weights = {i: draw(st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0, 7.0])) for i in range(n)}
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    edges = tuple((u, v, draw(st.sampled_from([0.0, 0.0, 0.5, 1.0, 3.0]))) for u, v in chosen)
    return NodeWeightedGraph(weights, edges)


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.data())
def test_distance_matches_brute_force_and_is_symmetric(g, data):
    u = data.draw(st.sampled_from(g.nodes))
    v = data.draw(st.sampled_from(g.nodes))
    zeroed = data.draw(st.sets(st.sampled_from(g.nodes), max_size=3))
    d = node_distance(g, zeroed, u, v)
    assert d == pytest.approx(brute_distance(g, zeroed, u, v))
    assert d == pytest.approx(node_distance(g, zeroed, v, u))
    if d < math.inf:
        path = shortest_path(g, zeroed, u, v)
        assert path[0] == u and path[-1] == v
        cost = sum(0.0 if x in zeroed else g.weight(x) for x in path[1:-1])
        assert cost == pytest.approx(d)


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.data())
def test_triangle_inequality_through_node(g, data):
    u, v, w = (data.draw(st.sampled_from(g.nodes)) for _ in range(3))
    lhs = node_distance(g, (), u, w)
    rhs = node_distance(g, (), u, v) + g.weight(v) + node_distance(g, (), v, w)
    if u != w and v not in (u, w):
        assert lhs <= rhs + 1e-9


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.data())
def test_zeroing_is_monotone(g, data):
    u = data.draw(st.sampled_from(g.nodes))
    v = data.draw(st.sampled_from(g.nodes))
    A = data.draw(st.sets(st.sampled_from(g.nodes), max_size=3))
    x = data.draw(st.sampled_from(g.nodes))
    assert node_distance(g, A | {x}, u, v) <= node_distance(g, A, u, v) + 1e-12


@settings(max_examples=60, deadline=None)
@given(small_graphs(), st.data(), st.floats(0.1, 10.0), st.floats(0.0, 5.0))
def test_ball_partition_and_nesting(g, data, r, extra):
    u = data.draw(st.sampled_from(g.nodes))
    inner, bd = open_ball(g, u, r), boundary_ball(g, u, r)
    assert not inner & bd
    assert inner | bd == {v for v in g.nodes if node_distance(g, (), u, v) <= r}
    assert inner | bd == closed_ball(g, u, r)
    assert inner <= open_ball(g, u, r + extra)


@settings(max_examples=40, deadline=None)
@given(small_graphs(), st.data())
def test_subdivision_preserves_original_distances(g, data):
    h = subdivide_edges(g)
    assert all(h.weight(v) < 1 / 8 for v in h.nodes if v not in g.original_nodes)
    u = data.draw(st.sampled_from(g.nodes))
    v = data.draw(st.sampled_from(g.nodes))
    zeroed = data.draw(st.sets(st.sampled_from(g.nodes), max_size=2))
    expected = _edge_weighted_distance(g, zeroed, u, v)
    got = node_distance(h, zeroed, u, v)
    assert got == pytest.approx(expected, abs=1e-9) or (got == expected == math.inf)


def _edge_weighted_distance(g, zeroed, u, v) -> float:
    """Brute-force distance where weighted edges add their weight."""
    if u == v:
        return 0.0
    zeroed = set(zeroed)
    ew = {}
    for a, b, w in g.edges:
        ew[(a, b)] = min(ew.get((a, b), math.inf), w)
        ew[(b, a)] = ew[(a, b)]
    best = math.inf
    stack = [(u, [u])]
    while stack:
        x, path = stack.pop()
        for y in g.neighbors(x):
            if y in path:
                continue
            if y == v:
                full = path + [y]
                cost = sum(0.0 if z in zeroed else g.weight(z) for z in full[1:-1])
                cost += sum(ew[(a, b)] for a, b in zip(full, full[1:]))
                best = min(best, cost)
            else:
                stack.append((y, path + [y]))
    return best
