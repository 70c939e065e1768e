from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from nwrob.errors import ConfigError, UniverseViolation, UnknownElement
from nwrob.fractional import AuxInstance, FractionalState, arrive_element
from nwrob.oracle import pcsc_opt
from nwrob.pcsc import PCSC, PCSCInstance


def four_set_instance() -> PCSCInstance:
    return PCSCInstance({"S1": 1.0, "S2": 2.0, "S3": 1.5, "S4": 3.0},
                        {"e1": ["S1"], "e2": ["S1", "S2"], "e3": ["S3"], "e4": ["S2", "S3", "S4"]})


def test_auxiliary_instance_has_one_copy_per_arrival():
    pc = PCSC(four_set_instance(), "randomized", seed=1)
    for e, times in (("e1", 1), ("e2", 2), ("e3", 1), ("e4", 3)):
        for _ in range(times):
            pc.register_arrival(e, 5.0)
    keys = pc.aux.costs
    assert len(pc.aux.sets_of) == 7
    assert sum(1 for k in keys if k[0] == "single") == 7
    assert sum(1 for k in keys if k[0] == "set") == 4
    # every aux element sits in exactly one singleton
    for k, sets in pc.aux.sets_of.items():
        assert [s for s in sets if s[0] == "single"] == [("single", k)]


def test_aux_frequency_is_at_most_sets_plus_one():
    pc = PCSC(PCSCInstance({"A": 1, "B": 1, "C": 1}, {"e": ["A", "B", "C"]}))
    k = pc.register_arrival("e", 2.0)
    assert len(pc.aux.sets_of[k]) == 4
    assert pc.aux.max_frequency <= len(pc.instance.costs) + 1


def test_unknown_element():
    pc = PCSC(four_set_instance())
    with pytest.raises(UnknownElement):
        pc.arrive("nope", 1.0)


@pytest.mark.parametrize("variant", ["randomized", "dual"])
def test_zero_penalty_is_paid_at_no_cost(variant):
    pc = PCSC(PCSCInstance({"A": 4.0}, {"e": ["A"]}), variant)
    dec = pc.arrive("e", 0.0)
    assert dec.kind == "penalty" and dec.amount == 0.0
    assert pc.ledger.total == 0.0
    if variant == "dual":
        assert pc.dual_objective() == 0.0


def test_cheap_set_beats_big_penalty():
    pc = PCSC(PCSCInstance({"A": 10.0}, {"e": ["A"]}), "randomized", seed=3)
    dec = pc.arrive("e", 100.0)
    assert dec.kind == "covered"
    assert dec.newly_bought == ("A",)
    assert pc.records[-1].singleton_x <= 0.5
    assert pc.ledger.pen == 0 and pc.ledger.sets == 10.0


def test_zero_cost_mirror_covers_for_free():
    pc = PCSC(PCSCInstance({"A": 0.0}, {"e": ["A"]}), "randomized")
    dec = pc.arrive("e", 7.0)
    assert dec.kind == "covered" and dec.covering == ("A",)
    assert pc.ledger.total == 0.0


def test_dual_greedy_ski_rental_trace():
    pc = PCSC(PCSCInstance({"A": 10.0}, {"e": ["A"]}), "dual")
    kinds = [pc.arrive("e", 1.0) for _ in range(20)]
    assert all(d.kind == "penalty" for d in kinds[:10])
    assert kinds[9].newly_bought == ("A",)
    assert all(d.kind == "covered" and not d.newly_bought for d in kinds[10:])
    assert pc.ledger.pen == 10 and pc.ledger.sets == 10 and pc.ledger.total == 20
    assert pc.dual_objective() == 10
    assert pc.max_dual_violation() <= 0


def test_dual_greedy_uncovered_element_pays():
    pc = PCSC(PCSCInstance({"A": 1.0}, {"e": []}), "dual")
    dec = pc.arrive("e", 5.0)
    assert dec.kind == "penalty" and dec.amount == 5.0


def test_dual_raise_covered_toggle():
    inst = PCSCInstance({"A": 1.0}, {"e": ["A"]})
    pc = PCSC(inst, "dual", raise_covered=True)
    pc.arrive("e", 5.0)
    assert "A" in pc.bought
    dec = pc.arrive("e", 5.0)
    assert dec.kind == "covered"
    assert pc.ledger.pen == 0


def test_randomized_fallback_when_thresholds_unreachable():
    pc = PCSC(PCSCInstance({"A": 3.0, "B": 1.0}, {"e": ["A", "B"]}), "randomized")
    pc.rounder.threshold = {"A": 2.0, "B": 2.0}
    dec = pc.arrive("e", 1000.0)
    assert dec.kind == "covered" and dec.newly_bought == ("B",)


def test_randomized_threshold_buy():
    pc = PCSC(PCSCInstance({"A": 1.0}, {"e": ["A"]}), "randomized")
    pc.rounder.threshold = {"A": 0.999}
    assert pc.arrive("e", 1000.0).newly_bought == ("A",)


def test_randomized_replay_is_deterministic():
    def run(seed):
        pc = PCSC(four_set_instance(), "randomized", seed=seed)
        seq = ["e1", "e2", "e4", "e2", "e3", "e4", "e4"]
        return [(d.kind, d.newly_bought) for d in (pc.arrive(e, 2.5) for e in seq)]
    assert run(11) == run(11)


def test_deterministic_needs_universe():
    with pytest.raises(ConfigError):
        PCSC(four_set_instance(), "deterministic")
    pc = PCSC(four_set_instance(), "deterministic", universe=["e1"])
    with pytest.raises(UniverseViolation):
        pc.arrive("e2", 1.0)


def test_deterministic_single_element_forces_purchase():
    pc = PCSC(PCSCInstance({"A": 5.0}, {"e": ["A"]}), "deterministic", universe=["e"])
    assert pc.rounder.potential(pc) == 1.0
    dec = pc.arrive("e", 100.0)
    assert "A" in pc.bought and dec.kind == "covered"


def test_deterministic_covered_element_buys_nothing():
    pc = PCSC(PCSCInstance({"A": 5.0}, {"e": ["A"]}), "deterministic", universe=["e"])
    pc.arrive("e", 100.0)
    dec = pc.arrive("e", 100.0)
    assert dec.newly_bought == () and pc.records[-1].precovered


def _reference_potential_run(costs, membership, universe, arrivals):
    """Independent re-simulation of the potential rounding, scoring every candidate from scratch."""
    aux = AuxInstance()
    frac = FractionalState()
    for s, c in sorted(costs.items()):
        aux.add_set(("set", s), c)
    bought = [s for s in sorted(costs) if costs[s] == 0]
    base = len(universe) + 2

    def phi(owned):
        total = 0.0
        for u in universe:
            if any(s in owned for s in membership[u]):
                continue
            f = sum(2 * frac.x.get(("set", s), 0.0) for s in membership[u])
            total += base ** (2 * min(f, 1.0))
        return total

    for k, (e, p) in enumerate(arrivals):
        aux.add_set(("single", k), p)
        aux.add_element(k, [("set", s) for s in sorted(membership[e])] + [("single", k)])
        if any(s in bought for s in membership[e]):
            continue
        before = phi(bought)
        arrive_element(frac, aux, k)
        while phi(bought) > before * (1 + 1e-12):
            now = phi(bought)
            scored = []
            for s in sorted(costs):
                if s in bought:
                    continue
                drop = now - phi(bought + [s])
                if drop > 0:
                    scored.append((-drop / costs[s] if costs[s] else -math.inf, costs[s], s))
            if not scored:
                break
            bought.append(min(scored)[2])
        if frac.x[("single", k)] <= 0.5 and not any(s in bought for s in membership[e]):
            bought.append(min(membership[e], key=lambda s: (costs[s], s)))
    return bought


def test_deterministic_matches_exhaustive_potential_scoring():
    costs = {"A": 2.0, "B": 3.0, "C": 1.5}
    membership = {"x": ["A", "B"], "y": ["B", "C"], "z": ["A", "C"]}
    arrivals = [("x", 4.0), ("y", 1.0), ("z", 6.0), ("y", 8.0), ("x", 2.0), ("z", 9.0)]
    pc = PCSC(PCSCInstance(costs, membership), "deterministic", universe=list(membership))
    for e, p in arrivals:
        pc.arrive(e, p)
    assert list(pc.bought) == _reference_potential_run(costs, membership, sorted(membership), arrivals)
    assert pc.rounder.safety_net_hits == 0


@st.composite
def pcsc_runs(draw):
    n_sets = draw(st.integers(1, 5))
    costs = {i: draw(st.sampled_from([0.0, 0.5, 1.0, 2.0, 5.0, 12.0])) for i in range(n_sets)}
    n_el = draw(st.integers(1, 5))
    membership = {f"e{k}": draw(st.lists(st.sampled_from(sorted(costs)), unique=True, max_size=3))
                  for k in range(n_el)}
    arrivals = draw(st.lists(st.tuples(st.sampled_from(sorted(membership)),
                                       st.sampled_from([0.0, 0.5, 1.0, 3.0, 8.0, 30.0])),
                             min_size=1, max_size=12))
    return costs, membership, arrivals


@settings(max_examples=60, deadline=None)
@given(pcsc_runs(), st.sampled_from(["randomized", "deterministic"]), st.integers(0, 2 ** 16))
def test_threshold_variants_follow_the_singleton_rule(run, variant, seed):
    costs, membership, arrivals = run
    pc = PCSC(PCSCInstance(costs, membership), variant, seed=seed, universe=list(membership))
    bought_before: list = []
    for e, p in arrivals:
        dec = pc.arrive(e, p)
        rec = pc.records[-1]
        assert list(pc.bought)[:len(bought_before)] == bought_before
        bought_before = list(pc.bought)
        if rec.precovered:
            assert dec.kind == "covered"
            continue
        assert (dec.kind == "penalty") == (rec.singleton_x > 0.5)
        if dec.kind == "penalty":
            assert dec.amount == p
        else:
            assert pc.is_covered(e)
        assert rec.frac_coverage >= 1 - 1e-12 and rec.monotone
        assert pc.ledger.total == pytest.approx(pc.ledger.pen + pc.ledger.sets)
    if variant == "deterministic":
        assert pc.rounder.safety_net_hits == 0


@settings(max_examples=60, deadline=None)
@given(pcsc_runs())
def test_dual_greedy_guarantees(run):
    costs, membership, arrivals = run
    pc = PCSC(PCSCInstance(costs, membership), "dual")
    for e, p in arrivals:
        dec = pc.arrive(e, p)
        assert pc.max_dual_violation() <= 1e-9
        assert dec.kind == "penalty" or pc.is_covered(e)
    opt = pcsc_opt(costs, [(p, membership[e]) for e, p in arrivals])
    assert pc.ledger.pen <= opt + 1e-9
    assert pc.ledger.total <= (len(costs) + 1) * pc.dual_objective() + 1e-9
