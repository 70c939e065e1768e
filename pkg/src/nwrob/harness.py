"""Experiment orchestration: run a variant, audit every invariant, compare to the oracle."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

from nwrob.core import SC_OPT_FACTOR, CHECK_TOL, RoBCore
from nwrob.doubling import CORE, GuessDoubling, pair_key
from nwrob.errors import ConfigError, OracleRefused
from nwrob.graph import NodeWeightedGraph, subdivide_edges
from nwrob.instances import Instance
from nwrob.oracle import MAX_SETS, RentOrBuyOracle, pcsc_opt

VARIANT_NAMES = ("randomized", "deterministic", "dual")
PENALTY_EPS = 1e-12
KAPPA_BOUND = 4.0
# checks that are measured and logged but do not count as violations
INFORMATIONAL = ("sc_opt",)


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    epoch: int = 0
    where: str = ""

    @property
    def ok(self) -> bool:
        if math.isnan(self.lhs) or math.isnan(self.rhs):
            return False
        return self.lhs <= self.rhs + CHECK_TOL * max(1.0, abs(self.rhs))


@dataclass
class ExperimentResult:
    variant: str
    seed: int
    recipe: Optional[str]
    instance_seed: Optional[int]
    n: int
    n_bar: int
    k_tilde: int
    M: int
    arrivals: int
    cost: float
    buy_cost: float
    rent_cost: float
    oracle_cost: Optional[float]
    epochs: int
    trace: List[dict]
    checks: List[Check] = field(default_factory=list)
    measures: Dict[str, float] = field(default_factory=dict)

    @property
    def ratio(self) -> Optional[float]:
        if self.oracle_cost is None:
            return None
        if self.oracle_cost == 0:
            return 1.0 if self.cost == 0 else math.inf
        return self.cost / self.oracle_cost

    @property
    def violations(self) -> List[Check]:
        return [c for c in self.checks if not c.ok and c.name not in INFORMATIONAL]

    def checks_named(self, prefix: str) -> List[Check]:
        return [c for c in self.checks if c.name.startswith(prefix)]

    def trace_bytes(self) -> bytes:
        return json.dumps(self.trace, sort_keys=True).encode()

    def summary(self) -> dict:
        return {
            "variant": self.variant, "seed": self.seed, "recipe": self.recipe,
            "instance_seed": self.instance_seed, "n": self.n, "n_bar": self.n_bar,
            "k_tilde": self.k_tilde, "M": self.M, "arrivals": self.arrivals,
            "cost": self.cost, "oracle_cost": self.oracle_cost, "ratio": self.ratio,
            "epochs": self.epochs, "violations": [c.name for c in self.violations],
            "measures": self.measures,
        }


def _jsonable(x):
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _trace_record(rec) -> dict:
    out = {
        "index": rec.index, "s": rec.s, "t": rec.t, "epoch": rec.epoch, "guess": rec.guess,
        "route": rec.route, "d_core": rec.d_core, "replay": rec.replay,
        "buy_cost": rec.buy_cost, "rent_cost": rec.rent_cost,
        "nodes_bought": rec.nodes_bought, "rent_path": rec.rent_path,
    }
    r = rec.report
    if r is not None:
        out.update({"j": r.j, "branch": r.branch, "released": r.released,
                    "decision": r.decision, "sets_bought": r.sets_bought,
                    "witnesses": r.witnesses})
    return {k: _jsonable(v) for k, v in out.items()}


def _audit_pcsc(core: RoBCore, epoch: int, checks: List[Check], measures: Dict[str, float]) -> None:
    pc = core.pcsc
    led = pc.ledger
    checks.append(Check("ledger_identity", abs(led.total - (led.pen + led.sets)), 0.0, epoch))
    if pc.variant == "dual":
        checks.append(Check("dual_feasible", pc.max_dual_violation(), 0.0, epoch))
    else:
        for r in pc.records:
            if r.precovered:
                continue
            paid = r.kind == "penalty"
            if paid != (r.singleton_x > 0.5):
                checks.append(Check("penalty_rule", 1.0, 0.0, epoch, f"aux {r.index}"))
            checks.append(Check("frac_feasible", 1.0, r.frac_coverage + 1e-9, epoch, f"aux {r.index}"))
            if not r.monotone:
                checks.append(Check("frac_monotone", 1.0, 0.0, epoch, f"aux {r.index}"))
        checks.append(Check("penalty_rule", 0.0, 0.0, epoch))
        if pc.variant == "deterministic":
            checks.append(Check("safety_net", float(pc.rounder.safety_net_hits), 0.0, epoch))

    if len(pc.instance.costs) > MAX_SETS or not pc.arrivals:
        return
    opt_int = pcsc_opt(pc.instance.costs, [(p, pc.instance.sets_of[e]) for e, p in pc.arrivals])
    measures.setdefault("pcsc_opt", 0.0)
    measures["pcsc_opt"] += opt_int
    if pc.variant == "dual":
        checks.append(Check("dual_penalty", led.pen, opt_int, epoch))
        checks.append(Check("dual_total", led.total,
                            (len(pc.instance.costs) + 1) * pc.dual_objective(), epoch))
    else:
        frac = pc.frac.cost(pc.aux)
        ell = pc.aux.max_frequency
        scale = (1 + math.log(1 + ell)) * opt_int
        kappa = frac / scale if scale > 0 else (0.0 if frac == 0 else math.inf)
        measures["kappa"] = max(measures.get("kappa", 0.0), kappa)
        checks.append(Check("frac_kappa", kappa, KAPPA_BOUND, epoch))


def run_experiment(instance: Instance, variant: str, seed: int = 0, *,
                   oracle: Optional[RentOrBuyOracle] = None, use_oracle: bool = True,
                   raise_covered: bool = False) -> ExperimentResult:
    """Run one variant end to end and audit it.

    Every invariant is recorded as a :class:`Check`; nothing raises on a
    violated inequality so that a whole corpus can be scanned.
    """
    if variant not in VARIANT_NAMES:
        raise ConfigError(f"unknown variant {variant!r}")
    if variant == "deterministic" and instance.T is None:
        raise ConfigError("the deterministic variant requires a declared terminal-pair set T")
    g = instance.graph if instance.graph.subdivided else subdivide_edges(instance.graph)
    M = instance.M
    k = instance.effective_k()
    terminals = sorted({x for p in instance.T for x in p}) if instance.T is not None else None
    cap = max(1, len(instance.requests))
    made = [0]

    def make_core(scaled: NodeWeightedGraph) -> RoBCore:
        made[0] += 1
        return RoBCore(scaled, M, k, variant, seed=seed * 1_000_003 + made[0], terminals=terminals,
                       arrival_cap=cap, raise_covered=raise_covered)

    wrap = GuessDoubling(g, M, k, make_core)
    checks: List[Check] = []
    for i, (s, t) in enumerate(instance.requests):
        rec = wrap.arrive(s, t)
        if not rec.feasible:
            checks.append(Check("feasibility", 1.0, 0.0, rec.epoch, f"arrival {i}"))
    checks.append(Check("feasibility", 0.0, 0.0))

    measures: Dict[str, float] = {}
    if oracle is None and use_oracle:
        try:
            oracle = RentOrBuyOracle(g, instance.requests)
        except OracleRefused:
            oracle = None
    oracle_cost = oracle.opt(instance.requests, M).cost if oracle is not None else None

    for ep in wrap.epochs:
        core = ep.core
        if core is None:
            continue
        for c in core.bound_checks():
            checks.append(Check(c.name, c.lhs, c.rhs, ep.number))
        for msg in core.violations:
            checks.append(Check("core_invariant", 1.0, 0.0, ep.number, msg))
        bound = ep.guess / k ** 2
        checks.append(Check("side_buy", ep.side_buy, bound, ep.number))
        checks.append(Check("side_rent", ep.side_rent, bound, ep.number))
        _audit_pcsc(core, ep.number, checks, measures)
        if oracle is not None and ep.core_pairs and len(core.instance.costs) <= MAX_SETS \
                and core.pcsc.arrivals:
            opt_rob = ep.scale * oracle.opt(ep.core_pairs, M).cost
            opt_sc = pcsc_opt(core.instance.costs,
                              [(p, core.instance.sets_of[e]) for e, p in core.pcsc.arrivals])
            checks.append(Check("sc_opt", opt_sc, SC_OPT_FACTOR * core.log_k * opt_rob, ep.number))
            if opt_rob > 0:
                measures["sc_opt_ratio"] = max(measures.get("sc_opt_ratio", 0.0),
                                               opt_sc / (core.log_k * opt_rob))

    if oracle is not None:
        for prefix, guess in wrap.updates:
            opt = oracle.opt(instance.requests[:prefix], M).cost
            checks.append(Check("guess_lower", opt, guess, where=f"prefix {prefix}"))
            checks.append(Check("guess_upper", guess, k ** 2 * opt, where=f"prefix {prefix}"))
        ratio_floor = oracle_cost * (1 - 1e-9)
        checks.append(Check("ratio_ge_1", ratio_floor, wrap.total + 1e-12))
    for a, b in zip(wrap.updates, wrap.updates[1:]):
        checks.append(Check("guess_growth", k * a[1], b[1]))

    live = [r for r in wrap.records if not r.replay]
    trace = [_trace_record(r) for r in wrap.records]
    return ExperimentResult(
        variant=variant, seed=seed, recipe=instance.recipe, instance_seed=instance.seed,
        n=g.n, n_bar=g.n_bar, k_tilde=k, M=M, arrivals=len(instance.requests),
        cost=wrap.total, buy_cost=wrap.buy_total, rent_cost=wrap.rent_total,
        oracle_cost=oracle_cost, epochs=len(wrap.epochs) - 1, trace=trace, checks=checks,
        measures={**measures, "core_arrivals": float(sum(1 for r in live if r.route == CORE))})


def declare_T(instance: Instance) -> Instance:
    """Copy of ``instance`` whose terminal-pair set ``T`` is its distinct request pairs."""
    pairs = sorted({pair_key(s, t) for s, t in instance.requests})
    return Instance(instance.graph, list(instance.requests), M=instance.M, k_tilde=instance.k_tilde,
                    T=pairs, seed=instance.seed, recipe=instance.recipe)


def run_suite(instances: Iterable[Instance], variants: Sequence[str] = VARIANT_NAMES,
              seed: int = 0) -> List[ExperimentResult]:
    results = []
    for inst in instances:
        if inst.T is None:
            inst = declare_T(inst)
        g = subdivide_edges(inst.graph) if not inst.graph.subdivided else inst.graph
        inst = Instance(g, inst.requests, M=inst.M, k_tilde=inst.k_tilde, T=inst.T,
                        seed=inst.seed, recipe=inst.recipe)
        try:
            oracle = RentOrBuyOracle(g, inst.requests)
        except OracleRefused:
            oracle = None
        for v in variants:
            results.append(run_experiment(inst, v, seed, oracle=oracle, use_oracle=oracle is not None))
    return results


# -- reporting -------------------------------------------------------------------

REPORT_COLUMNS = (
    "variant", "runs", "cost_mean", "oracle_mean", "ratio_mean", "ratio_p50", "ratio_p95",
    "ratio_max", "ratio_per_logn_lognbar", "ratio_per_logk_lognbar", "ratio_per_nbar_logk",
    "violations",
)


def _pct(values: List[float], q: float) -> float:
    if not values:
        return math.nan
    vals = sorted(values)
    if len(vals) == 1:
        return vals[0]
    return statistics.quantiles(vals, n=100, method="inclusive")[int(q) - 1] if 0 < q < 100 else vals[-1]


def _norms(r) -> Tuple[float, float, float]:
    ratio = r["ratio"]
    log_n = math.log2(max(r["n"], 2))
    log_nb = math.log2(r["n_bar"] + 1) or 1.0
    log_k = math.log2(max(r["k_tilde"], 2))
    return (ratio / (log_n * log_nb), ratio / (log_k * log_nb), ratio / (max(r["n_bar"], 1) * log_k))


@dataclass
class Report:
    rows: List[dict]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def to_text(self) -> str:
        table = [list(REPORT_COLUMNS)]
        for row in self.rows:
            table.append([f"{row[c]:.4g}" if isinstance(row[c], float) else str(row[c])
                          for c in REPORT_COLUMNS])
        widths = [max(len(r[i]) for r in table) for i in range(len(REPORT_COLUMNS))]
        lines = ["  ".join(cell.rjust(wd) for cell, wd in zip(r, widths)) for r in table]
        lines.insert(1, "  ".join("-" * wd for wd in widths))
        return "\n".join(lines) + "\n"


def report(results: Sequence) -> Report:
    """Aggregate per variant.  Accepts results or their ``summary()`` dicts."""
    if not results:
        raise ValueError("report needs at least one result")
    rows_in = [r.summary() if isinstance(r, ExperimentResult) else r for r in results]
    rows = []
    for v in sorted({r["variant"] for r in rows_in}):
        rs = [r for r in rows_in if r["variant"] == v]
        scored = [r for r in rs if r["ratio"] is not None and math.isfinite(r["ratio"])]
        ratios = [r["ratio"] for r in scored]
        norms = [_norms(r) for r in scored]
        oracle = [r["oracle_cost"] for r in rs if r["oracle_cost"] is not None]
        rows.append({
            "variant": v,
            "runs": len(rs),
            "cost_mean": statistics.fmean(r["cost"] for r in rs),
            "oracle_mean": statistics.fmean(oracle) if oracle else math.nan,
            "ratio_mean": statistics.fmean(ratios) if ratios else math.nan,
            "ratio_p50": _pct(ratios, 50),
            "ratio_p95": _pct(ratios, 95),
            "ratio_max": max(ratios) if ratios else math.nan,
            "ratio_per_logn_lognbar": statistics.fmean(x[0] for x in norms) if norms else math.nan,
            "ratio_per_logk_lognbar": statistics.fmean(x[1] for x in norms) if norms else math.nan,
            "ratio_per_nbar_logk": statistics.fmean(x[2] for x in norms) if norms else math.nan,
            "violations": sum(len(r["violations"]) for r in rs),
        })
    return Report(rows)
