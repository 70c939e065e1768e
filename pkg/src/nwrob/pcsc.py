"""Online prize-collecting set cover.

Each arrival ``(e, p)`` becomes a fresh element of an auxiliary covering
instance.  That element lies in the mirror of every original set containing
``e`` and in a private singleton set of cost ``p`` (buying the singleton
means paying the penalty).  Three strategies are provided:

* ``randomized``: fractional solution, penalty iff the singleton exceeds 1/2,
  then per-set random thresholds on the doubled mirror values;
* ``deterministic``: same fractional part, rounded greedily against a
  potential over a universe declared upfront;
* ``dual``: primal-dual greedy that raises the arrival's dual until a
  constraint becomes tight.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

from nwrob.errors import ConfigError, InvalidWeight, UniverseViolation, UnknownElement
from nwrob.fractional import AuxInstance, FractionalState, arrive_element, coverage

SetId = Hashable
Element = Hashable

VARIANTS = ("randomized", "deterministic", "dual")
PENALTY_THRESHOLD = 0.5
_TIGHT_TOL = 1e-12


def _set_key(s: SetId) -> Tuple[str, SetId]:
    return ("set", s)


def _single_key(k: int) -> Tuple[str, int]:
    return ("single", k)


class PCSCInstance:
    """Set system with costs; elements may be declared incrementally."""

    def __init__(self, costs: Mapping[SetId, float],
                 membership: Optional[Mapping[Element, Iterable[SetId]]] = None) -> None:
        self.costs: Dict[SetId, float] = {}
        for s in sorted(costs):
            c = float(costs[s])
            if not math.isfinite(c) or c < 0:
                raise InvalidWeight(f"set {s!r} has cost {c!r}")
            self.costs[s] = c
        self.sets_of: Dict[Element, Tuple[SetId, ...]] = {}
        self.members: Dict[SetId, List[Element]] = {s: [] for s in self.costs}
        for e, sets in (membership or {}).items():
            self.declare_element(e, sets)

    def declare_element(self, e: Element, sets: Iterable[SetId]) -> None:
        if e in self.sets_of:
            return
        ids = tuple(sorted(set(sets)))
        for s in ids:
            if s not in self.costs:
                raise KeyError(f"unknown set {s!r}")
            self.members[s].append(e)
        self.sets_of[e] = ids

    def sets_containing(self, e: Element) -> Tuple[SetId, ...]:
        try:
            return self.sets_of[e]
        except KeyError:
            raise UnknownElement(e) from None


@dataclass(frozen=True)
class Decision:
    """Outcome of one arrival.

    ``kind`` is ``"penalty"`` or ``"covered"``.  ``newly_bought`` lists every
    set bought while serving the arrival, in purchase order; a penalty
    decision can still come with purchases (eager rounding or a simultaneously
    tight set).
    """

    kind: str
    amount: float
    covering: Tuple[SetId, ...]
    newly_bought: Tuple[SetId, ...]


@dataclass
class ArrivalRecord:
    index: int
    element: Element
    penalty: float
    kind: str
    singleton_x: Optional[float]
    precovered: bool
    rounds: int
    dual: float
    newly_bought: Tuple[SetId, ...]
    covered_after: bool
    frac_coverage: Optional[float] = None
    monotone: bool = True


@dataclass
class PCSCLedger:
    pen: float = 0.0
    sets: float = 0.0

    @property
    def total(self) -> float:
        return self.pen + self.sets


class RandomizedRounder:
    """Buy a set once its doubled fractional value reaches the least of K uniform thresholds."""

    def __init__(self, set_ids: Sequence[SetId], seed: int, arrival_cap: int) -> None:
        self.k = math.ceil(2 * math.log(arrival_cap + 2))
        rng = random.Random(seed)
        self.threshold = {s: min(rng.random() for _ in range(self.k)) for s in set_ids}

    def round(self, pc: "PCSC", changed: Mapping[SetId, float]) -> List[SetId]:
        return [s for s in sorted(changed)
                if s not in pc.bought and changed[s] >= self.threshold[s]]


class PotentialRounder:
    """Greedy derandomized rounding against an exponential potential.

    The potential sums ``(n+2) ** (2 * min(f, 1))`` over declared elements not
    yet covered by bought sets, where ``f`` is the element's doubled
    fractional coverage.  After the fractional step of an arrival, sets are
    bought by best potential drop per unit cost until the potential is back
    to its value before the step.
    """

    def __init__(self, pc: "PCSC", universe: Iterable[Element]) -> None:
        self.universe = sorted(set(universe))
        for e in self.universe:
            pc.instance.sets_containing(e)
        self.allowed = set(self.universe)
        self.base = float(len(self.universe) + 2)
        self.safety_net_hits = 0

    def _f(self, pc: "PCSC", e: Element) -> float:
        return sum(pc.scaled_x(s) for s in pc.instance.sets_of[e])

    def term(self, pc: "PCSC", e: Element) -> float:
        if pc.is_covered(e):
            return 0.0
        return self.base ** (2.0 * min(self._f(pc, e), 1.0))

    def potential(self, pc: "PCSC") -> float:
        return sum(self.term(pc, e) for e in self.universe)

    def drop(self, pc: "PCSC", s: SetId) -> float:
        return sum(self.term(pc, e) for e in pc.instance.members[s] if e in self.allowed)

    def restore(self, pc: "PCSC", before: float) -> List[SetId]:
        """Buy sets until the potential is at most ``before``."""
        bought: List[SetId] = []
        phi = self.potential(pc)
        limit = before * (1 + 1e-12)
        while phi > limit:
            best = None
            for s in pc.instance.costs:
                if s in pc.bought:
                    continue
                gain = self.drop(pc, s)
                if gain <= 0:
                    continue
                c = pc.instance.costs[s]
                key = (-math.inf if c == 0 else -gain / c, c, s)
                if best is None or key < best[0]:
                    best = (key, s)
            if best is None:
                break
            pc._buy(best[1])
            bought.append(best[1])
            phi = self.potential(pc)
        return bought


class PCSC:
    """Online prize-collecting set cover driven by one of three variants."""

    def __init__(self, instance: PCSCInstance, variant: str = "randomized", seed: int = 0,
                 universe: Optional[Iterable[Element]] = None, arrival_cap: int = 1024,
                 raise_covered: bool = False) -> None:
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}")
        self.instance = instance
        self.variant = variant
        self.raise_covered = raise_covered
        self.aux = AuxInstance()
        self.frac = FractionalState()
        self.bought: Dict[SetId, None] = {}  # insertion-ordered set
        self.ledger = PCSCLedger()
        self.records: List[ArrivalRecord] = []
        self.arrivals: List[Tuple[Element, float]] = []
        self.y: Dict[int, float] = {}
        self.load: Dict[Tuple, float] = {}
        for s, c in instance.costs.items():
            self.aux.add_set(_set_key(s), c)
            self.load[_set_key(s)] = 0.0
        for s, c in instance.costs.items():
            if c == 0:
                self._buy(s)
        self.rounder = None
        if variant == "randomized":
            self.rounder = RandomizedRounder(list(instance.costs), seed, arrival_cap)
        elif variant == "deterministic":
            if universe is None:
                raise ConfigError("the deterministic variant needs its universe declared upfront")
            self.rounder = PotentialRounder(self, universe)

    # -- views -------------------------------------------------------------
    def scaled_x(self, s: SetId) -> float:
        return 2.0 * self.frac.x.get(_set_key(s), 0.0)

    def is_covered(self, e: Element) -> bool:
        return any(s in self.bought for s in self.instance.sets_of.get(e, ()))

    def covering(self, e: Element) -> Tuple[SetId, ...]:
        return tuple(s for s in self.instance.sets_containing(e) if s in self.bought)

    def dual_objective(self) -> float:
        return sum(self.y.values())

    def max_dual_violation(self) -> float:
        """Largest ``sum(y) - cost`` over auxiliary sets (<= 0 when feasible)."""
        worst = -math.inf
        for key, load in self.load.items():
            worst = max(worst, load - self.aux.costs[key])
        return worst

    # -- mutation ----------------------------------------------------------
    def _buy(self, s: SetId) -> None:
        if s not in self.bought:
            self.bought[s] = None
            self.ledger.sets += self.instance.costs[s]

    def register_arrival(self, e: Element, p: float) -> int:
        """Create the auxiliary copy of arrival ``(e, p)``; returns its index."""
        sets = self.instance.sets_containing(e)
        p = float(p)
        if not math.isfinite(p) or p < 0:
            raise InvalidWeight(f"penalty {p!r}")
        k = len(self.arrivals)
        self.arrivals.append((e, p))
        self.aux.add_set(_single_key(k), p)
        self.load[_single_key(k)] = 0.0
        self.aux.add_element(k, [_set_key(s) for s in sets] + [_single_key(k)])
        return k

    def arrive(self, e: Element, p: float) -> Decision:
        if self.variant == "dual":
            return self.arrive_dual_greedy(e, p)
        return self.arrive_threshold(e, p)

    def arrive_threshold(self, e: Element, p: float) -> Decision:
        if self.variant == "dual":
            raise ConfigError("threshold arrival on a dual-greedy state")
        if isinstance(self.rounder, PotentialRounder) and e not in self.rounder.allowed:
            raise UniverseViolation(e)
        k = self.register_arrival(e, p)
        p = self.arrivals[k][1]
        if self.is_covered(e):
            dec = Decision("covered", 0.0, self.covering(e), ())
            self._record(k, dec, None, True, 0, 0.0)
            return dec

        phi_before = self.rounder.potential(self) if isinstance(self.rounder, PotentialRounder) else 0.0
        before = {key: self.frac.x.get(key, 0.0) for key in self.aux.sets_of[k]}
        rounds = arrive_element(self.frac, self.aux, k)
        monotone = all(self.frac.x.get(key, 0.0) >= v for key, v in before.items())
        singleton = self.frac.x.get(_single_key(k), 0.0)
        pay = singleton > PENALTY_THRESHOLD
        changed = {s: self.scaled_x(s) for s in self.instance.sets_of[e]}

        new: List[SetId] = []
        if isinstance(self.rounder, RandomizedRounder):
            for s in self.rounder.round(self, changed):
                self._buy(s)
                new.append(s)
        else:
            new.extend(self.rounder.restore(self, phi_before))
        if not pay and not self.is_covered(e):
            if isinstance(self.rounder, PotentialRounder):
                self.rounder.safety_net_hits += 1
            s = min(self.instance.sets_of[e], key=lambda s: (self.instance.costs[s], s))
            self._buy(s)
            new.append(s)

        if pay:
            self.ledger.pen += p
            dec = Decision("penalty", p, self.covering(e), tuple(new))
        else:
            dec = Decision("covered", 0.0, self.covering(e), tuple(new))
        self._record(k, dec, singleton, False, rounds, 0.0)
        self.records[-1].frac_coverage = coverage(self.frac, self.aux, k)
        self.records[-1].monotone = monotone
        return dec

    def arrive_dual_greedy(self, e: Element, p: float) -> Decision:
        if self.variant != "dual":
            raise ConfigError("dual-greedy arrival on a threshold state")
        k = self.register_arrival(e, p)
        p = self.arrivals[k][1]
        pre = self.is_covered(e)
        if pre and not self.raise_covered:
            self.y[k] = 0.0
            dec = Decision("covered", 0.0, self.covering(e), ())
            self._record(k, dec, None, True, 0, 0.0)
            return dec

        keys = self.aux.sets_of[k]
        raise_by = max(0.0, min(self.aux.costs[key] - self.load[key] for key in keys))
        self.y[k] = raise_by
        new: List[SetId] = []
        pay = False
        for key in keys:
            self.load[key] += raise_by
            cost = self.aux.costs[key]
            if cost - self.load[key] <= _TIGHT_TOL * max(1.0, cost):
                self.load[key] = cost
                if key[0] == "single":
                    pay = not pre
                elif key[1] not in self.bought:
                    self._buy(key[1])
                    new.append(key[1])
        if pay:
            self.ledger.pen += p
            dec = Decision("penalty", p, self.covering(e), tuple(new))
        else:
            assert self.is_covered(e), f"dual raise left {e!r} uncovered"
            dec = Decision("covered", 0.0, self.covering(e), tuple(new))
        self._record(k, dec, None, pre, 0, raise_by)
        return dec

    def _record(self, k: int, dec: Decision, singleton: Optional[float], pre: bool,
                rounds: int, dual: float) -> None:
        e, p = self.arrivals[k]
        self.records.append(ArrivalRecord(
            index=k, element=e, penalty=p, kind=dec.kind, singleton_x=singleton,
            precovered=pre, rounds=rounds, dual=dual, newly_bought=dec.newly_bought,
            covered_after=self.is_covered(e)))
