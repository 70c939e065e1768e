"""Monotone fractional solution for online (auxiliary) set cover.

When an element arrives uncovered, every set containing it is raised by
rounds of the multiplicative rule::

    x_S <- min(1, x_S * (1 + 1/c_S) + 1 / (d_e * c_S))

until the element's coverage reaches 1.  Between clamps each round is an
affine map, so the value after ``r`` rounds has the closed form
``(1 + 1/c)^r (x + 1/d) - 1/d``.  The first rounds are applied literally;
past that, the remaining count is located by exponential plus binary search
on the closed form (penalty costs reach ``2**20`` in deep layers, which
would mean millions of literal rounds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List

from nwrob.errors import InvalidWeight, Uncoverable, UnknownElement

LITERAL_ROUNDS = 256

SetId = Hashable
Element = Hashable


@dataclass
class AuxInstance:
    """Set system that grows online: sets with costs and an element->sets index."""

    costs: Dict[SetId, float] = field(default_factory=dict)
    members: Dict[SetId, List[Element]] = field(default_factory=dict)
    sets_of: Dict[Element, List[SetId]] = field(default_factory=dict)

    def add_set(self, set_id: SetId, cost: float) -> None:
        cost = float(cost)
        if not math.isfinite(cost) or cost < 0:
            raise InvalidWeight(f"set {set_id!r} has cost {cost!r}")
        if set_id in self.costs:
            raise ValueError(f"duplicate set {set_id!r}")
        self.costs[set_id] = cost
        self.members[set_id] = []

    def add_element(self, e: Element, set_ids: Iterable[SetId]) -> None:
        if e in self.sets_of:
            raise ValueError(f"duplicate element {e!r}")
        ids = list(set_ids)
        for s in ids:
            if s not in self.costs:
                raise KeyError(f"unknown set {s!r}")
            self.members[s].append(e)
        self.sets_of[e] = ids

    @property
    def max_frequency(self) -> int:
        """``l``: the largest number of sets any element lies in."""
        return max((len(v) for v in self.sets_of.values()), default=0)


@dataclass
class FractionalState:
    x: Dict[SetId, float] = field(default_factory=dict)
    round_log: List[int] = field(default_factory=list)

    def value(self, set_id: SetId) -> float:
        return self.x.get(set_id, 0.0)

    def cost(self, inst: AuxInstance) -> float:
        return sum(inst.costs[s] * v for s, v in self.x.items())


def coverage(state: FractionalState, inst: AuxInstance, e: Element) -> float:
    try:
        sets = inst.sets_of[e]
    except KeyError:
        raise UnknownElement(e) from None
    return sum(state.x.get(s, 0.0) for s in sets)


def round_cap(costs: Iterable[float], d: int) -> int:
    c_max = max(costs, default=0.0)
    return math.ceil(4 * (1 + c_max) * (1 + math.log(1 + d)))


def _after(x0: float, c: float, d: int, r: int) -> float:
    if x0 >= 1.0:
        return 1.0
    expo = r * math.log1p(1.0 / c)
    if expo > 700:
        return 1.0
    v = math.exp(expo) * (x0 + 1.0 / d) - 1.0 / d
    return min(1.0, max(x0, v))


def arrive_element(state: FractionalState, inst: AuxInstance, e: Element) -> int:
    """Raise the sets containing ``e`` until it is fractionally covered.

    Zero-cost sets take value 1 immediately and stay outside the update.
    Returns the number of multiplicative rounds performed (also appended to
    ``state.round_log``).
    """
    try:
        sets = inst.sets_of[e]
    except KeyError:
        raise UnknownElement(e) from None
    if not sets:
        raise Uncoverable(e)
    for s in sets:
        if inst.costs[s] == 0:
            state.x[s] = 1.0
    if coverage(state, inst, e) >= 1.0:
        state.round_log.append(0)
        return 0

    d = len(sets)
    live = [s for s in sets if inst.costs[s] > 0]
    cap = round_cap((inst.costs[s] for s in live), d)

    # Literal rounds first, so short updates follow the rule bit for bit.
    rounds = 0
    while rounds < LITERAL_ROUNDS:
        for s in live:
            c = inst.costs[s]
            state.x[s] = min(1.0, state.x.get(s, 0.0) * (1 + 1 / c) + 1 / (d * c))
        rounds += 1
        if coverage(state, inst, e) >= 1.0:
            state.round_log.append(rounds)
            return rounds

    start = [(s, state.x[s], inst.costs[s]) for s in live]

    def cov(r: int) -> float:
        return sum(_after(x0, c, d, r) for _, x0, c in start)

    lo, hi = 0, 1
    while cov(hi) < 1.0:
        lo, hi = hi, hi * 2
        if rounds + hi > 4 * cap:
            raise AssertionError(f"fractional update for {e!r} stalled beyond {cap} rounds")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if cov(mid) >= 1.0:
            hi = mid
        else:
            lo = mid
    rounds += hi
    assert rounds <= cap, f"fractional update for {e!r} needed {rounds} > {cap} rounds"
    for s, x0, c in start:
        state.x[s] = _after(x0, c, d, hi)
    state.round_log.append(rounds)
    return rounds
