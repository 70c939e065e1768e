"""Layered witness algorithm for node-weighted rent-or-buy Steiner forest.

Every arriving pair is classified by the dyadic layer ``j`` of its current
quotient distance.  If one of its terminals is still *uncovered* on that
layer, an element ``r_{v,j}`` is released to an online prize-collecting set
cover instance whose sets are the weighted nodes near ``v``; purchased sets
become bought nodes and witnesses.  Otherwise both terminals have a witness
close by and the algorithm buys a path between the two witnesses.  In every
case the pair itself is connected by renting a cheapest path in ``G/A``.

All quantities here are in the units of the graph handed to the core, which
the guess-doubling wrapper rescales so that core distances lie in
``[1, 2 * k**6]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Set, Tuple

from nwrob.errors import ConfigError, OutOfRange
from nwrob.graph import (NodeWeightedGraph, boundary_ball, closed_ball, connected_within,
                         node_distance, open_ball, shortest_path)
from nwrob.pcsc import PCSC, PCSCInstance

Node = Hashable

# Constants of the charging argument checked on every completed run.
ELSE_COST_FACTOR = 6.0
WITNESS_FACTOR = 128.0
IF_SET_FACTOR = 65.0
SC_OPT_FACTOR = 64.0
CHECK_TOL = 1e-9


def log2k(k_tilde: int) -> float:
    """``log2`` of the pair budget, floored at 1 so that ``k = 1`` stays usable."""
    return math.log2(max(k_tilde, 2))


def layer_of(d: float, k_tilde: int, slack: float = 1.0) -> int:
    """``floor(log2 d) + 1`` for ``1 <= d <= slack * k**6``.

    Computed from the binary exponent so exact powers of two land on the
    right layer regardless of ``log2`` rounding.
    """
    if not (1.0 <= d <= slack * float(k_tilde) ** 6):
        raise OutOfRange(f"distance {d!r} outside [1, {slack} * {k_tilde}**6]")
    return math.frexp(d)[1]


@dataclass
class CostLedger:
    c_if: float = 0.0
    c_else: float = 0.0
    c_rent: float = 0.0
    c_buy: float = 0.0

    @property
    def total(self) -> float:
        return self.c_rent + self.c_buy


@dataclass
class ArrivalReport:
    index: int
    s: Node
    t: Node
    d: float
    j: int
    branch: str
    released: Optional[Tuple[Node, int]]
    decision: Optional[str]
    sets_bought: Tuple[Node, ...]
    nodes_bought: Tuple[Node, ...]
    witnesses: Optional[Tuple[Node, Node]]
    rent_path: Tuple[Node, ...]
    rent_cost: float
    buy_cost: float


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + CHECK_TOL * max(1.0, abs(self.rhs))


class RoBCore:
    """Mutable state of the layered algorithm over one (scaled, subdivided) graph."""

    def __init__(self, graph: NodeWeightedGraph, M: int, k_tilde: int, variant: str = "randomized",
                 seed: int = 0, terminals: Optional[Iterable[Node]] = None,
                 arrival_cap: int = 1024, raise_covered: bool = False,
                 slack: float = 2.0) -> None:
        if M < 1:
            raise ConfigError(f"M must be at least 1, got {M!r}")
        if k_tilde < 1:
            raise ConfigError(f"k_tilde must be at least 1, got {k_tilde!r}")
        self.g = graph
        self.M = M
        self.k_tilde = k_tilde
        self.slack = slack
        self.log_k = log2k(k_tilde)
        self.layers = range(1, layer_of(slack * float(k_tilde) ** 6, k_tilde, slack) + 1)
        self.A: Set[Node] = set()
        self.F: Dict[int, Set[Node]] = {j: set() for j in self.layers}
        self.y: Dict[Tuple[Node, int], int] = {}
        self.else_count: Dict[int, int] = {j: 0 for j in self.layers}
        self.ledger = CostLedger()
        self.reports: List[ArrivalReport] = []
        self.rented: List[Tuple[Node, ...]] = []
        self.violations: List[str] = []
        self.max_counter = 0

        self.set_nodes = sorted(v for v in graph.original_nodes if graph.weight(v) > 0)
        costs = {v: self.log_k * M * graph.weight(v) for v in self.set_nodes}
        self.instance = PCSCInstance(costs)
        universe = None
        if variant == "deterministic":
            if terminals is None:
                raise ConfigError("the deterministic variant needs the terminal set declared upfront")
            universe = [(u, j) for u in sorted(set(terminals)) for j in self.layers]
            for u, j in universe:
                self._declare(u, j)
        self.pcsc = PCSC(self.instance, variant, seed=seed, universe=universe,
                         arrival_cap=arrival_cap, raise_covered=raise_covered)

    # -- geometry of the derived set system ----------------------------------
    def members(self, u: Node, j: int) -> List[Node]:
        """``R_{u,j}``: weighted original nodes on the boundary of ``B(u, 2^(j-5))`` of weight >= ``2^(j-6)``."""
        lo = 2.0 ** (j - 6)
        return sorted(v for v in boundary_ball(self.g, u, 2.0 ** (j - 5))
                      if v in self.instance.costs and self.g.weight(v) >= lo)

    def _declare(self, u: Node, j: int) -> Tuple[Node, int]:
        e = (u, j)
        if e not in self.instance.sets_of:
            self.instance.declare_element(e, self.members(u, j))
        return e

    def distance(self, s: Node, t: Node) -> float:
        return node_distance(self.g, self.A, s, t)

    def is_uncovered(self, v: Node, j: int) -> bool:
        if any(x in self.F[j] for x in self.members(v, j)):
            return False
        return all(self.y.get((w, j), 0) < self.M for w in open_ball(self.g, v, 2.0 ** (j - 5)))

    # -- main step -----------------------------------------------------------
    def _add_to_A(self, nodes: Iterable[Node]) -> Tuple[float, List[Node]]:
        cost = 0.0
        added = []
        for v in nodes:
            if v not in self.A:
                self.A.add(v)
                cost += self.M * self.g.weight(v)
                added.append(v)
        return cost, added

    def arrive_pair(self, s: Node, t: Node) -> ArrivalReport:
        d = self.distance(s, t)
        j = layer_of(d, self.k_tilde, self.slack)
        index = len(self.reports)

        released = None
        decision = None
        sets_bought: Tuple[Node, ...] = ()
        witnesses = None
        buy_cost = 0.0
        nodes_bought: List[Node] = []

        v = s if self.is_uncovered(s, j) else (t if self.is_uncovered(t, j) else None)
        if v is not None:
            branch = "if"
            released = self._declare(v, j)
            dec = self.pcsc.arrive(released, 2.0 ** j)
            decision = dec.kind
            sets_bought = dec.newly_bought
            for u in sets_bought:
                c, added = self._add_to_A([u])
                buy_cost += c
                nodes_bought += added
                cu = self.g.weight(u)
                for jj in self.layers:
                    if cu >= 2.0 ** (jj - 6):
                        self.F[jj].add(u)
            for w in open_ball(self.g, v, 2.0 ** (j - 5)):
                val = self.y.get((w, j), 0) + 1
                self.y[(w, j)] = val
                self.max_counter = max(self.max_counter, val)
                if val > self.M:
                    self.violations.append(f"arrival {index}: counter y[{w!r},{j}] = {val} > M")
        else:
            branch = "else"
            self.else_count[j] += 1
            radius = 2.0 ** (j - 3)
            picks = []
            for x in (s, t):
                near = self.F[j] & closed_ball(self.g, x, radius)
                if not near:
                    dist = self.g.distances_from(x)
                    if any(dist[f] <= radius for f in self.F[j]):
                        self.violations.append(f"arrival {index}: witness separation broken at {x!r}")
                    self.F[j].add(x)
                    near = {x}
                picks.append(min(near))
            ws, wt = picks
            witnesses = (ws, wt)
            path = shortest_path(self.g, self.A, ws, wt)
            buy_cost, nodes_bought = self._add_to_A(path)

        rent_path = shortest_path(self.g, self.A, s, t)
        rent_cost = sum(self.g.weight(x) for x in rent_path[1:-1] if x not in self.A)
        rented = tuple(x for x in rent_path if x not in self.A)
        self.rented.append(rented)

        self.ledger.c_buy += buy_cost
        self.ledger.c_rent += rent_cost
        if branch == "if":
            self.ledger.c_if += buy_cost + rent_cost
        else:
            self.ledger.c_else += buy_cost + rent_cost

        report = ArrivalReport(
            index=index, s=s, t=t, d=d, j=j, branch=branch, released=released,
            decision=decision, sets_bought=tuple(sets_bought), nodes_bought=tuple(nodes_bought),
            witnesses=witnesses, rent_path=tuple(rent_path), rent_cost=rent_cost,
            buy_cost=buy_cost)
        self.reports.append(report)
        return report

    def connectivity_check(self, i: int) -> bool:
        r = self.reports[i]
        allowed = set(self.A) | set(self.rented[i]) | {r.s, r.t}
        return connected_within(self.g, allowed, r.s, r.t)

    # -- analysis ------------------------------------------------------------
    def witness_weight(self) -> float:
        """``sum_j 2^j |F_j|``."""
        return sum(2.0 ** j * len(f) for j, f in self.F.items())

    def released_elements(self) -> Set[Tuple[Node, int]]:
        return {r.released for r in self.reports if r.released is not None}

    def bound_checks(self) -> List[BoundCheck]:
        pen, sets = self.pcsc.ledger.pen, self.pcsc.ledger.sets
        fw = self.witness_weight()
        checks = [
            BoundCheck("else_cost", self.ledger.c_else, ELSE_COST_FACTOR * self.M * fw),
            BoundCheck("witness_weight", self.M * fw, WITNESS_FACTOR * (pen + sets / self.log_k)),
            BoundCheck("if_cost", self.ledger.c_if, pen + IF_SET_FACTOR * sets / self.log_k),
            BoundCheck("counter", float(self.max_counter), float(self.M)),
            BoundCheck("set_count", float(len(self.instance.costs)), float(self.g.n_bar)),
            BoundCheck("released", float(len(self.released_elements())),
                       2.0 * self.k_tilde * (6.0 * self.log_k + 2.0)),
        ]
        for j in self.layers:
            checks.append(BoundCheck(f"else_count[{j}]", float(self.else_count[j]),
                                     2.0 * len(self.F[j])))
        return checks
