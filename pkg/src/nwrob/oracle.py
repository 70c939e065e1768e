"""Exact offline optima by exhaustive enumeration, for desk-scale instances.

The rent-or-buy optimum is ``min_B M*c(B) + sum_i d_{G/B}(s_i, t_i)``.
Buying part of a subdivided edge never helps, so the candidates are subsets
of *units*: weighted original nodes plus whole subdivision chains.

To make 2**units candidates cheap, the graph is contracted first: maximal
zero-weight components collapse to single free vertices, and each unit
becomes one vertex carrying its total weight.  A vertex-weighted
Floyd-Warshall that only pivots on units is then run for all subsets at
once with numpy, one unit at a time (bought or not doubles the batch).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from nwrob.errors import OracleRefused
from nwrob.graph import NodeWeightedGraph

Node = Hashable
Pair = Tuple[Node, Node]

MAX_UNITS = 16
MAX_SETS = 12
_BATCH_BITS = 12


@dataclass(frozen=True)
class OracleResult:
    cost: float
    bought: FrozenSet[Node]
    enumerated: int


def _units(g: NodeWeightedGraph) -> List[Tuple[Node, ...]]:
    chain_nodes = {x for ids in g.chains.values() for x in ids}
    units = [(v,) for v in sorted(g.original_nodes) if g.weight(v) > 0]
    units += [tuple(ids) for _, ids in sorted(g.chains.items(), key=lambda kv: kv[0])]
    stray = [v for v in g.nodes if g.weight(v) > 0 and v not in g.original_nodes
             and v not in chain_nodes]
    units += [(v,) for v in stray]
    return units


class RentOrBuyOracle:
    """Distances between a fixed set of terminal pairs under every unit subset."""

    def __init__(self, g: NodeWeightedGraph, pairs: Iterable[Pair], max_units: int = MAX_UNITS) -> None:
        self.g = g
        self.pairs: List[Pair] = sorted({(s, t) if s <= t else (t, s) for s, t in pairs})
        self.units = _units(g)
        u = len(self.units)
        if u > max_units:
            raise OracleRefused(f"{u} purchasable units exceed the limit of {max_units}")
        self.unit_cost = np.array([sum(g.weight(x) for x in unit) for unit in self.units])
        self.pair_index = {p: i for i, p in enumerate(self.pairs)}
        self.dist = self._all_subsets()  # shape (2**u, len(pairs))
        masks = np.arange(2 ** u)
        bits = (masks[:, None] >> np.arange(u)[None, :]) & 1
        self.buy_cost = bits @ self.unit_cost if u else np.zeros(1)

    def _vertex_map(self) -> Tuple[Dict[Node, int], int]:
        owner: Dict[Node, int] = {}
        for i, unit in enumerate(self.units):
            for x in unit:
                owner[x] = i
        nxt = len(self.units)
        for v in self.g.nodes:
            if v in owner:
                continue
            # flood the zero-weight component of v
            owner[v] = nxt
            stack = [v]
            while stack:
                x = stack.pop()
                for y in self.g.neighbors(x):
                    if y not in owner and self.g.weight(y) == 0:
                        owner[y] = nxt
                        stack.append(y)
            nxt += 1
        return owner, nxt

    def _all_subsets(self) -> np.ndarray:
        g = self.g
        u = len(self.units)
        owner, nv = self._vertex_map()
        adj = [set() for _ in range(nv)]
        for x in g.nodes:
            for y in g.neighbors(x):
                a, b = owner[x], owner[y]
                if a != b:
                    adj[a].add(b)
                    adj[b].add(a)
        # keep units and the free components that hold terminals; other free
        # components only act as zero-cost connectors between their neighbours
        terms = sorted({owner[x] for p in self.pairs for x in p} - set(range(u)))
        keep = list(range(u)) + terms
        pos = {v: i for i, v in enumerate(keep)}
        K = len(keep)
        base = np.full((K, K), np.inf)
        np.fill_diagonal(base, 0.0)
        for v in range(nv):
            if v in pos:
                for w in adj[v]:
                    if w in pos:
                        base[pos[v], pos[w]] = 0.0
            else:
                hub = [pos[w] for w in adj[v] if w in pos]
                for a in hub:
                    for b in hub:
                        base[a, b] = 0.0
        for v in terms:  # terminal components are free pivots
            k = pos[v]
            base = np.minimum(base, base[:, k:k + 1] + base[k:k + 1, :])
        pidx = np.array([[pos[owner[s]], pos[owner[t]]] for s, t in self.pairs], dtype=int).reshape(-1, 2)
        out = np.empty((2 ** u, len(self.pairs)))

        # pivot order: unit 0..u-1; mask bit i set means unit i is bought
        outer_bits = max(0, u - _BATCH_BITS)
        inner = u - outer_bits
        for hi in range(2 ** outer_bits):
            D = base[None, :, :].copy()
            for i in range(u):
                if i < outer_bits:
                    # unit i decided by the outer loop (high bits of the mask)
                    bought = (hi >> i) & 1
                    w = 0.0 if bought else self.unit_cost[i]
                    via = D[:, :, i:i + 1] + w + D[:, i:i + 1, :]
                    np.minimum(D, via, out=D)
                else:
                    free = D[:, :, i:i + 1] + D[:, i:i + 1, :]
                    paid = free + self.unit_cost[i]
                    D = np.concatenate([np.minimum(D, paid), np.minimum(D, free)], axis=0)
            # concatenation puts each later unit on a more significant bit of
            # the batch index; the first inner unit is the least significant
            b = np.arange(2 ** inner)
            mask = np.zeros(2 ** inner, dtype=np.int64)
            for k in range(inner):
                mask |= ((b >> k) & 1) << (outer_bits + k)
            mask |= hi
            out[mask] = D[:, pidx[:, 0], pidx[:, 1]] if len(self.pairs) else np.empty((len(b), 0))
        return out

    def pair_distance(self, mask: int, s: Node, t: Node) -> float:
        key = (s, t) if s <= t else (t, s)
        if s == t:
            return 0.0
        return float(self.dist[mask, self.pair_index[key]])

    def opt(self, requests: Sequence[Pair], M: float) -> OracleResult:
        counts = np.zeros(len(self.pairs))
        for s, t in requests:
            if s == t:
                continue
            counts[self.pair_index[(s, t) if s <= t else (t, s)]] += 1
        with np.errstate(invalid="ignore"):
            rent = np.where(counts[None, :] > 0, self.dist * counts[None, :], 0.0).sum(axis=1)
        total = M * self.buy_cost + rent
        best = int(np.argmin(total))
        nodes = frozenset(x for i, unit in enumerate(self.units) if (best >> i) & 1 for x in unit)
        return OracleResult(float(total[best]), nodes, len(total))


def offline_opt(g: NodeWeightedGraph, requests: Sequence[Pair], M: float,
                max_units: int = MAX_UNITS) -> OracleResult:
    """Exact rent-or-buy optimum of ``requests`` on subdivided graph ``g``."""
    if not requests:
        return OracleResult(0.0, frozenset(), 1)
    return RentOrBuyOracle(g, requests, max_units).opt(requests, M)


def pcsc_opt(costs: Mapping[Hashable, float], arrivals: Sequence[Tuple[float, Iterable[Hashable]]],
             max_sets: int = MAX_SETS) -> float:
    """Integral prize-collecting set cover optimum.

    ``arrivals`` lists ``(penalty, covering set ids)`` per arrival; an
    arrival either lies in a chosen set or pays its penalty.
    """
    ids = sorted(costs)
    m = len(ids)
    if m > max_sets:
        raise OracleRefused(f"{m} sets exceed the limit of {max_sets}")
    index = {s: i for i, s in enumerate(ids)}
    masks = np.arange(2 ** m, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(m)[None, :]) & 1
    total = bits @ np.array([costs[s] for s in ids], dtype=float) if m else np.zeros(1)
    for p, sets in arrivals:
        cover = 0
        for s in sets:
            cover |= 1 << index[s]
        total = total + np.where((masks & cover) != 0, 0.0, p)
    return float(total.min())
