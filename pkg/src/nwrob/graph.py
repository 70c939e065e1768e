"""Node-weighted graphs, edge subdivision, and ball geometry.

Distances follow the node-weighted convention: the length of a path is the
sum of the weights of its *interior* nodes, so the two endpoints never
contribute.  A set of bought nodes is modelled by zeroing their weights
(the quotient ``G/A``).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

from nwrob.errors import InvalidWeight, NoPath, UnknownNode

Node = Hashable
INF = math.inf


def _check_weight(value: float, what: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise InvalidWeight(f"{what} has invalid weight {value!r}")
    return value


@dataclass(frozen=True, eq=False)
class NodeWeightedGraph:
    """Undirected graph with nonnegative node weights and optional edge weights.

    Edge weights are only meaningful before :func:`subdivide_edges`; afterwards
    every edge weight is zero and each weighted edge has been replaced by a
    chain of light nodes.

    Node ids must be mutually comparable (all ints or all strings); sorted id
    order drives every deterministic tie-break.
    """

    weights: Mapping[Node, float]
    edges: Tuple[Tuple[Node, Node, float], ...] = ()
    subdivided: bool = False
    # original edge (u, v) -> chain node ids, filled in by subdivide_edges
    chains: Mapping[Tuple[Node, Node], Tuple[Node, ...]] = field(default_factory=dict)
    original_nodes: Optional[FrozenSet[Node]] = None

    def __post_init__(self) -> None:
        weights = {v: _check_weight(w, f"node {v!r}") for v, w in self.weights.items()}
        order = sorted(weights)
        index = {v: i for i, v in enumerate(order)}
        adj: List[set] = [set() for _ in order]
        edges = []
        for u, v, w in self.edges:
            if u not in index or v not in index:
                raise UnknownNode(f"edge ({u!r}, {v!r}) references a missing node")
            w = _check_weight(w, f"edge ({u!r}, {v!r})")
            edges.append((u, v, w))
            if u != v:
                adj[index[u]].add(index[v])
                adj[index[v]].add(index[u])
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "edges", tuple(edges))
        if self.original_nodes is None:
            object.__setattr__(self, "original_nodes", frozenset(weights))
        object.__setattr__(self, "_order", order)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_adj", [sorted(a) for a in adj])
        object.__setattr__(self, "_w", [weights[v] for v in order])
        object.__setattr__(self, "_sssp", {})
        object.__setattr__(self, "_base", None)
        object.__setattr__(self, "_factor", 1.0)

    # -- basic accessors -------------------------------------------------
    @property
    def nodes(self) -> List[Node]:
        return list(self._order)

    @property
    def n(self) -> int:
        return len(self._order)

    @property
    def n_bar(self) -> int:
        """Number of original nodes with nonzero weight."""
        return sum(1 for v in self.original_nodes if self.weights[v] > 0)

    def weight(self, v: Node) -> float:
        try:
            return self.weights[v]
        except KeyError:
            raise UnknownNode(v) from None

    def __contains__(self, v: Node) -> bool:
        return v in self._index

    def neighbors(self, v: Node) -> List[Node]:
        return [self._order[j] for j in self._adj[self._idx(v)]]

    def has_weighted_edges(self) -> bool:
        return any(w > 0 for _, _, w in self.edges)

    def _idx(self, v: Node) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownNode(v) from None

    def scaled(self, factor: float) -> "NodeWeightedGraph":
        """Copy with every weight multiplied by ``factor``.

        Single-source distances of the copy are derived from the (cached)
        distances of this graph, so repeated rescaling stays cheap.
        """
        if factor <= 0 or not math.isfinite(factor):
            raise InvalidWeight(f"scale factor {factor!r}")
        g = NodeWeightedGraph(
            {v: w * factor for v, w in self.weights.items()},
            tuple((u, v, w * factor) for u, v, w in self.edges),
            subdivided=self.subdivided,
            chains=self.chains,
            original_nodes=self.original_nodes,
        )
        base = self._base if self._base is not None else self
        object.__setattr__(g, "_base", base)
        object.__setattr__(g, "_factor", self._factor * factor)
        return g

    def distances_from(self, u: Node) -> Dict[Node, float]:
        """All ``d_G(u, v)`` in the un-quotiented graph (memoized)."""
        i = self._idx(u)
        cached = self._sssp.get(i)
        if cached is None:
            if self._base is not None:
                base = self._base._sssp_list(self._base._idx(u))
                cached = [d * self._factor for d in base]
            else:
                cached = self._sssp_list(i)
            self._sssp[i] = cached
        return {self._order[j]: d for j, d in enumerate(cached)}

    def _dist_list(self, u: Node) -> List[float]:
        i = self._idx(u)
        if i not in self._sssp:
            self.distances_from(u)
        return self._sssp[i]

    def _sssp_list(self, i: int) -> List[float]:
        if i not in self._sssp:
            self._sssp[i] = _dijkstra(self._adj, self._w, i)[0]
        return self._sssp[i]

    def _effective(self, zeroed: Iterable[Node]) -> List[float]:
        zeroed = zeroed if isinstance(zeroed, (set, frozenset)) else set(zeroed)
        if not zeroed:
            return self._w
        w = list(self._w)
        for v in zeroed:
            w[self._idx(v)] = 0.0
        return w


def _dijkstra(adj: Sequence[Sequence[int]], w: Sequence[float], src: int,
              with_hops: bool = False) -> Tuple[List[float], List[int]]:
    """Endpoint-exclusive node-weighted Dijkstra.

    ``dist[y]`` is the cheapest sum of weights strictly between ``src`` and
    ``y``.  With ``with_hops`` labels are ``(cost, hop count)`` pairs compared
    lexicographically.
    """
    n = len(adj)
    dist = [INF] * n
    hops = [0] * n
    dist[src] = 0.0
    done = [False] * n
    heap = [(0.0, 0, src)]
    while heap:
        d, h, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        step = 0.0 if x == src else w[x]
        nd = d + step
        nh = h + 1
        for y in adj[x]:
            if done[y]:
                continue
            if nd < dist[y] or (with_hops and nd == dist[y] and nh < hops[y]):
                dist[y] = nd
                hops[y] = nh
                heapq.heappush(heap, (nd, nh if with_hops else 0, y))
    return dist, hops


# -- public operations -----------------------------------------------------

def subdivide_edges(g: NodeWeightedGraph) -> NodeWeightedGraph:
    """Replace each weighted edge by a chain of light nodes.

    An edge of weight ``c`` becomes a path through
    ``max(ceil(8/c + 1), ceil(8c) + 1)`` new nodes of equal weight (the last
    one absorbs the rounding residue), so every new node weighs strictly less
    than 1/8 and the chain sums to ``c``.  Zero-weight edges are kept.
    """
    if g.subdivided:
        raise ValueError("graph is already subdivided")
    weights = dict(g.weights)
    numeric = all(isinstance(v, int) for v in weights)
    next_id = (max(weights) + 1) if (numeric and weights) else 0
    edges: List[Tuple[Node, Node, float]] = []
    chains: Dict[Tuple[Node, Node], Tuple[Node, ...]] = {}
    for u, v, c in g.edges:
        if c == 0:
            edges.append((u, v, 0.0))
            continue
        k = max(math.ceil(8.0 / c + 1.0), math.ceil(8.0 * c) + 1)
        piece = c / k
        ids: List[Node] = []
        acc = 0.0
        for i in range(k):
            if numeric:
                nid = next_id
                next_id += 1
            else:
                nid = f"{u}~{v}#{i}"
            wi = piece if i < k - 1 else c - acc
            acc += piece
            weights[nid] = wi
            ids.append(nid)
        path = [u, *ids, v]
        edges.extend((a, b, 0.0) for a, b in zip(path, path[1:]))
        chains[(u, v)] = tuple(ids)
    return NodeWeightedGraph(weights, tuple(edges), subdivided=True, chains=chains,
                             original_nodes=frozenset(g.weights))


def node_distance(g: NodeWeightedGraph, zeroed: Iterable[Node], u: Node, v: Node) -> float:
    """``d_{G/A}(u, v)``; ``math.inf`` when disconnected."""
    i, j = g._idx(u), g._idx(v)
    if i == j:
        return 0.0
    zeroed = frozenset(zeroed)
    if not zeroed:
        return g._dist_list(u)[j]
    return _dijkstra(g._adj, g._effective(zeroed), i)[0][j]


def shortest_path(g: NodeWeightedGraph, zeroed: Iterable[Node], u: Node, v: Node) -> List[Node]:
    """A cheapest ``u``-``v`` path in ``G/A`` with both endpoints included.

    Among cheapest paths the one with fewest nodes wins, then the
    lexicographically smallest id sequence.
    """
    i, j = g._idx(u), g._idx(v)
    if i == j:
        return [u]
    w = g._effective(frozenset(zeroed))
    h, hops = _dijkstra(g._adj, w, j, with_hops=True)
    if h[i] == INF:
        raise NoPath(f"{u!r} and {v!r} are disconnected")
    path = [i]
    x = i
    while x != j:
        best = None
        choice = -1
        for y in g._adj[x]:  # sorted by id, so the first minimum is the smallest id
            if h[y] == INF:
                continue
            key = (0.0, 0) if y == j else (w[y] + h[y], hops[y] + 1)
            if best is None or key < best:
                best, choice = key, y
        path.append(choice)
        x = choice
    return [g._order[k] for k in path]


def open_ball(g: NodeWeightedGraph, u: Node, r: float) -> set:
    """``{v : d_G(u, v) + c_v <= r}``."""
    dist = g._dist_list(u)
    w = g._w
    return {g._order[k] for k, d in enumerate(dist) if d + w[k] <= r}


def boundary_ball(g: NodeWeightedGraph, u: Node, r: float) -> set:
    """``{v : d_G(u, v) <= r < d_G(u, v) + c_v}``."""
    dist = g._dist_list(u)
    w = g._w
    return {g._order[k] for k, d in enumerate(dist) if d <= r < d + w[k]}


def closed_ball(g: NodeWeightedGraph, u: Node, r: float) -> set:
    """Union of the open ball and its boundary, i.e. ``{v : d_G(u, v) <= r}``."""
    dist = g._dist_list(u)
    return {g._order[k] for k, d in enumerate(dist) if d <= r}


def connected_within(g: NodeWeightedGraph, allowed: Iterable[Node], s: Node, t: Node) -> bool:
    """Whether ``s`` and ``t`` are connected in the subgraph induced by ``allowed``."""
    allowed_idx = {g._idx(v) for v in allowed}
    a, b = g._idx(s), g._idx(t)
    if a not in allowed_idx or b not in allowed_idx:
        return False
    seen = {a}
    stack = [a]
    while stack:
        x = stack.pop()
        if x == b:
            return True
        for y in g._adj[x]:
            if y in allowed_idx and y not in seen:
                seen.add(y)
                stack.append(y)
    return False
