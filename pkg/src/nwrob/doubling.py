"""Guess doubling that keeps core distances polynomially related.

A running estimate ``guess`` of the offline optimum is kept within a factor
``k**2`` of it, using a greedy k-approximation.  Whenever greedy outgrows the
guess, the guess jumps to ``k * greedy``, a fresh core is built over the
graph rescaled by ``k**3 * M / guess``, and every earlier arrival is replayed
through it.  Pairs that are very close (scaled distance below 1) are bought
outright; pairs that are very far (above ``2 * k**6``) are rented outright;
everything else goes to the core.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Mapping, Optional, Set, Tuple

from nwrob.core import ArrivalReport, RoBCore
from nwrob.errors import InvalidConfig
from nwrob.graph import NodeWeightedGraph, connected_within, node_distance, shortest_path

Node = Hashable
Pair = Tuple[Node, Node]

BUY = "buy"
RENT = "rent"
CORE = "core"


def pair_key(s: Node, t: Node) -> Pair:
    return (s, t) if s <= t else (t, s)


def greedy_cost(multiplicities: Mapping[Pair, int], M: float,
                dist: Callable[[Node, Node], float]) -> float:
    """Rent each distinct pair ``min(m, M)`` times along its own shortest path."""
    return sum(min(m, M) * dist(s, t) for (s, t), m in sorted(multiplicities.items()))


@dataclass
class RouteRecord:
    index: int
    s: Node
    t: Node
    epoch: int
    guess: float
    route: str
    d_core: float
    replay: bool
    buy_cost: float
    rent_cost: float
    nodes_bought: Tuple[Node, ...]
    rent_path: Tuple[Node, ...]
    report: Optional[ArrivalReport] = None
    feasible: Optional[bool] = None


@dataclass
class Epoch:
    number: int
    guess: float
    scale: float
    start: int
    core: Optional[RoBCore]
    side_buy: float = 0.0
    side_rent: float = 0.0
    core_pairs: List[Pair] = field(default_factory=list)


class GuessDoubling:
    """Online wrapper routing each pair to a side rule or to the current core.

    ``make_core(graph)`` builds a fresh core over an already rescaled graph.
    All costs recorded here are in the units of the unscaled graph.
    """

    def __init__(self, graph: NodeWeightedGraph, M: int, k_tilde: int,
                 make_core: Callable[[NodeWeightedGraph], RoBCore]) -> None:
        if k_tilde < 1:
            raise InvalidConfig(f"k_tilde must be at least 1, got {k_tilde!r}")
        if M < 1:
            raise InvalidConfig(f"M must be at least 1, got {M!r}")
        self.g = graph
        self.M = M
        self.k_tilde = k_tilde
        self.make_core = make_core
        self.guess = 0.0
        self.history: List[Pair] = []
        self.mult: Counter = Counter()
        self.side: Set[Node] = set()
        self.epochs: List[Epoch] = [Epoch(0, 0.0, 1.0, 0, None)]
        self.updates: List[Tuple[int, float]] = []
        self.records: List[RouteRecord] = []
        self.buy_total = 0.0
        self.rent_total = 0.0

    @property
    def epoch(self) -> Epoch:
        return self.epochs[-1]

    @property
    def total(self) -> float:
        return self.buy_total + self.rent_total

    def bought(self) -> Set[Node]:
        core = self.epoch.core
        return self.side | (core.A if core is not None else set())

    def greedy(self) -> float:
        return greedy_cost(self.mult, self.M, lambda s, t: node_distance(self.g, (), s, t))

    def arrive(self, s: Node, t: Node) -> RouteRecord:
        self.history.append((s, t))
        self.mult[pair_key(s, t)] += 1
        g = self.greedy()
        if g > self.guess:
            self._new_epoch(self.k_tilde * g)
        return self._route(len(self.history) - 1, s, t, replay=False)

    def _new_epoch(self, guess: float) -> None:
        self.guess = guess
        self.updates.append((len(self.history), guess))
        scale = self.k_tilde ** 3 * self.M / guess
        core = self.make_core(self.g.scaled(scale))
        self.epochs.append(Epoch(len(self.epochs), guess, scale, len(self.history) - 1, core))
        for i, (s, t) in enumerate(self.history[:-1]):
            self._route(i, s, t, replay=True)

    def _route(self, index: int, s: Node, t: Node, replay: bool) -> RouteRecord:
        ep = self.epoch
        core = ep.core
        cg = core.g if core is not None else self.g
        d_core = core.distance(s, t) if core is not None else 0.0
        report = None
        if s == t or d_core < 1.0:
            route = BUY
            known = self.bought()
            path = shortest_path(cg, known, s, t)
            fresh = tuple(x for x in path if x not in known)
            cost = self.M * sum(self.g.weight(x) for x in fresh)
            self.side.update(path)
            ep.side_buy += cost
            self.buy_total += cost
            buy_cost, rent_cost, nodes, rent_path = cost, 0.0, fresh, ()
        elif d_core > 2.0 * float(self.k_tilde) ** 6:
            route = RENT
            known = self.bought()
            path = shortest_path(cg, known, s, t)
            cost = sum(self.g.weight(x) for x in path[1:-1] if x not in known)
            if not replay:
                ep.side_rent += cost
                self.rent_total += cost
            buy_cost, rent_cost, nodes, rent_path = 0.0, cost, (), tuple(path)
        else:
            route = CORE
            ep.core_pairs.append((s, t))
            report = core.arrive_pair(s, t)
            buy_cost = report.buy_cost / ep.scale
            rent_cost = report.rent_cost / ep.scale
            self.buy_total += buy_cost
            if not replay:
                self.rent_total += rent_cost
            nodes, rent_path = report.nodes_bought, report.rent_path
        rec = RouteRecord(index=index, s=s, t=t, epoch=ep.number, guess=self.guess, route=route,
                          d_core=d_core, replay=replay, buy_cost=buy_cost,
                          rent_cost=0.0 if (replay and route != BUY) else rent_cost,
                          nodes_bought=tuple(nodes), rent_path=tuple(rent_path), report=report)
        if not replay:
            allowed = self.bought() | set(rent_path) | {s, t}
            rec.feasible = connected_within(self.g, allowed, s, t)
        self.records.append(rec)
        return rec
