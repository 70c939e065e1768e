"""Problem instances: seeded generators and a plain-text file format.

File grammar (whitespace separated, ``#`` starts a comment)::

    NODES
    <id> <weight>
    EDGES
    <u> <v> [<weight>]
    REQUESTS
    <s> <t>
    PARAMS
    M <int>
    k_tilde <int>

Section headers are case-insensitive.  Ids that all parse as integers are
read as ints, otherwise every id stays a string.  ``PARAMS`` may also hold
``seed`` and ``recipe`` lines, which are informational.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

from nwrob.errors import ConfigError, InstanceFormatError, UnknownNode
from nwrob.graph import NodeWeightedGraph

Node = Hashable
Pair = Tuple[Node, Node]

RECIPES = ("random-geometric", "weighted-grid", "star-cluster", "set-cover-gadget")
M_CHOICES = (1, 2, 4, 8)


@dataclass
class Instance:
    graph: NodeWeightedGraph
    requests: List[Pair]
    M: int = 1
    k_tilde: Optional[int] = None
    T: Optional[List[Pair]] = None
    seed: Optional[int] = None
    recipe: Optional[str] = None

    def __post_init__(self) -> None:
        for s, t in self.requests:
            for x in (s, t):
                if x not in self.graph:
                    raise UnknownNode(x)
        if self.M < 1:
            raise ConfigError(f"M must be at least 1, got {self.M!r}")
        if self.k_tilde is not None and self.k_tilde < self.distinct_pairs:
            raise ConfigError(f"k_tilde={self.k_tilde} is below the {self.distinct_pairs} distinct pairs")

    @property
    def distinct_pairs(self) -> int:
        return len({(s, t) if s <= t else (t, s) for s, t in self.requests})

    def effective_k(self) -> int:
        if self.T is not None:
            return max(1, len({(s, t) if s <= t else (t, s) for s, t in self.T}))
        if self.k_tilde is not None:
            return self.k_tilde
        return max(1, self.distinct_pairs)


# -- text format ---------------------------------------------------------------

def _coerce(tokens: Sequence[str]) -> Dict[str, Node]:
    try:
        return {t: int(t) for t in tokens}
    except ValueError:
        return {t: t for t in tokens}


def parse_instance(text: str) -> Instance:
    section = None
    nodes: List[Tuple[str, str]] = []
    edges: List[Tuple[str, str, str]] = []
    reqs: List[Tuple[str, str]] = []
    params: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0].upper()
        if len(parts) == 1 and head in ("NODES", "EDGES", "REQUESTS", "PARAMS"):
            section = head
            continue
        if section == "NODES" and len(parts) == 2:
            nodes.append((parts[0], parts[1]))
        elif section == "EDGES" and len(parts) in (2, 3):
            edges.append((parts[0], parts[1], parts[2] if len(parts) == 3 else "0"))
        elif section == "REQUESTS" and len(parts) == 2:
            reqs.append((parts[0], parts[1]))
        elif section == "PARAMS" and len(parts) == 2:
            params[parts[0].lower()] = parts[1]
        else:
            raise InstanceFormatError(f"line {lineno}: cannot parse {raw!r}")
    ids = _coerce([n for n, _ in nodes])
    try:
        weights = {ids[n]: float(w) for n, w in nodes}
        edge_list = tuple((ids[u], ids[v], float(w)) for u, v, w in edges)
        requests = [(ids[s], ids[t]) for s, t in reqs]
        M = int(params.get("m", 1))
        k = int(params["k_tilde"]) if "k_tilde" in params else None
        seed = int(params["seed"]) if "seed" in params else None
    except KeyError as exc:
        raise InstanceFormatError(f"unknown node id {exc.args[0]!r}") from None
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from None
    return Instance(NodeWeightedGraph(weights, edge_list), requests, M=M, k_tilde=k,
                    seed=seed, recipe=params.get("recipe"))


def format_instance(inst: Instance) -> str:
    g = inst.graph
    out = ["NODES"]
    out += [f"{v} {g.weight(v)!r}" for v in g.nodes]
    out.append("EDGES")
    out += [f"{u} {v} {w!r}" for u, v, w in g.edges]
    out.append("REQUESTS")
    out += [f"{s} {t}" for s, t in inst.requests]
    out.append("PARAMS")
    out.append(f"M {inst.M}")
    if inst.k_tilde is not None:
        out.append(f"k_tilde {inst.k_tilde}")
    if inst.seed is not None:
        out.append(f"seed {inst.seed}")
    if inst.recipe is not None:
        out.append(f"recipe {inst.recipe}")
    return "\n".join(out) + "\n"


def read_instance(path: str) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def write_instance(inst: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_instance(inst))


def parse_pairs(text: str) -> List[Tuple[str, str]]:
    """Read a terminal-pair list (``s t`` per line) for a declared ``T``."""
    pairs = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or line.upper() == "REQUESTS":
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InstanceFormatError(f"bad pair line {raw!r}")
        pairs.append((parts[0], parts[1]))
    return pairs


# -- generators ----------------------------------------------------------------

def _weight(rng: random.Random) -> float:
    return float(rng.randint(1, 16)) / 2.0


def _arrivals(rng: random.Random, pool: List[Pair], count: int) -> List[Pair]:
    seq = list(pool)
    seq += [rng.choice(pool) for _ in range(count - len(pool))]
    rng.shuffle(seq)
    return seq


def _connect(rng: random.Random, nodes: List[int], edges: set, hubs: set) -> None:
    """Join connected components with bridging edges that touch a hub node when possible."""
    parent = {v: v for v in nodes}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    roots = sorted({find(v) for v in nodes})
    for a, b in zip(roots, roots[1:]):
        comp_a = [v for v in nodes if find(v) == find(a)]
        comp_b = [v for v in nodes if find(v) == find(b)]
        hub_a = [v for v in comp_a if v in hubs]
        hub_b = [v for v in comp_b if v in hubs]
        if hub_a:
            u, w = rng.choice(hub_a), rng.choice(comp_b)
        elif hub_b:
            u, w = rng.choice(comp_a), rng.choice(hub_b)
        else:
            u, w = rng.choice(comp_a), rng.choice(comp_b)
        edges.add((min(u, w), max(u, w)))
        parent[find(u)] = find(w)


def _random_geometric(rng: random.Random, p: dict):
    n_term = p.get("terminals", rng.randint(4, 8))
    n_weighted = p.get("n_weighted", rng.randint(4, 10))
    n = n_term + n_weighted
    radius = p.get("radius", 0.45)
    pts = [(rng.random(), rng.random()) for _ in range(n)]
    weighted = set(range(n_term, n))
    # terminals never touch each other directly, so every connection costs something
    edges = {(i, j) for i in range(n) for j in range(i + 1, n)
             if (i in weighted or j in weighted) and math.dist(pts[i], pts[j]) <= radius}
    _connect(rng, list(range(n)), edges, weighted)
    weights = {v: (_weight(rng) if v in weighted else 0.0) for v in range(n)}
    elist = sorted(edges)
    heavy = set(rng.sample(range(len(elist)), min(p.get("weighted_edges", rng.randint(0, 2)), len(elist))))
    edge_list = [(u, v, (float(rng.choice((1, 2))) if i in heavy else 0.0))
                 for i, (u, v) in enumerate(elist)]
    return weights, edge_list, list(range(n_term))


def _weighted_grid(rng: random.Random, p: dict):
    rows = p.get("rows", rng.randint(2, 4))
    cols = p.get("cols", rng.randint(2, 5))
    n = rows * cols
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, 0.0))
            if r + 1 < rows:
                edges.append((v, v + cols, 0.0))
    lo = max(2, n - 12)
    n_term = p.get("terminals", rng.randint(lo, max(lo, min(n // 2, 8))))
    adj = {v: set() for v in range(n)}
    for u, v, _ in edges:
        adj[u].add(v)
        adj[v].add(u)
    for _ in range(50):
        terminals = sorted(rng.sample(range(n), n_term))
        # stop once some pair of terminals is separated by weighted nodes
        comp = {}
        for t in terminals:
            if t in comp:
                continue
            comp[t] = t
            stack = [t]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y in terminals and y not in comp:
                        comp[y] = t
                        stack.append(y)
        if len(set(comp.values())) > 1:
            break
    weights = {v: (0.0 if v in terminals else _weight(rng)) for v in range(n)}
    return weights, edges, terminals


def _star_cluster(rng: random.Random, p: dict):
    leaves = p.get("leaves", rng.randint(3, 8))
    hub_weight = float(p.get("hub_weight", rng.choice((2, 4, 8))))
    spokes = p.get("spokes", 0)
    weights = {0: hub_weight}
    edges = []
    for i in range(1, leaves + 1):
        weights[i] = 0.0
        edges.append((0, i, 0.0))
    # optional weighted detours between consecutive leaves
    nxt = leaves + 1
    for i in range(spokes):
        a, b = 1 + i % leaves, 1 + (i + 1) % leaves
        weights[nxt] = _weight(rng) + hub_weight
        edges += [(a, nxt, 0.0), (nxt, b, 0.0)]
        nxt += 1
    return weights, edges, list(range(1, leaves + 1))


def _set_cover_gadget(rng: random.Random, p: dict):
    m = p.get("sets", rng.randint(2, 6))
    n_el = p.get("elements", rng.randint(3, 8))
    weights = {0: 0.0}
    edges = []
    for i in range(1, m + 1):
        weights[i] = _weight(rng)
        edges.append((0, i, 0.0))
    for k in range(n_el):
        e = m + 1 + k
        weights[e] = 0.0
        for s in sorted(rng.sample(range(1, m + 1), rng.randint(1, min(3, m)))):
            edges.append((s, e, 0.0))
    return weights, edges, [0] + [m + 1 + k for k in range(n_el)]


_GENERATORS = {
    "random-geometric": _random_geometric,
    "weighted-grid": _weighted_grid,
    "star-cluster": _star_cluster,
    "set-cover-gadget": _set_cover_gadget,
}


def gen_instance(recipe: str, params: Optional[dict] = None, seed: int = 0) -> Instance:
    """Seeded instance from one of :data:`RECIPES`.

    Recognised ``params`` besides the recipe's shape keys: ``M``, ``pairs``
    (number of distinct pairs), ``arrivals`` and an explicit ``requests``
    list.  Terminals are always zero-weight nodes.
    """
    if recipe not in _GENERATORS:
        raise ConfigError(f"unknown recipe {recipe!r}; choose from {', '.join(RECIPES)}")
    p = dict(params or {})
    rng = random.Random(f"{recipe}:{seed}")
    weights, edges, terminals = _GENERATORS[recipe](rng, p)
    graph = NodeWeightedGraph(weights, tuple(edges))
    M = int(p.get("M", rng.choice(M_CHOICES)))
    if "requests" in p:
        requests = [tuple(r) for r in p["requests"]]
    elif recipe == "star-cluster" and "pairs" not in p:
        leaves = sorted(terminals)
        pool = [(leaves[i], leaves[(i + 1) % len(leaves)]) for i in range(len(leaves))][:8]
        requests = _arrivals(rng, pool, p.get("arrivals", len(pool)))
    elif recipe == "set-cover-gadget":
        elems = terminals[1:]
        pool = [(0, e) for e in rng.sample(elems, min(len(elems), p.get("pairs", 8)))]
        requests = _arrivals(rng, pool, p.get("arrivals", rng.randint(len(pool), 64)))
    else:
        all_pairs = [(a, b) for i, a in enumerate(terminals) for b in terminals[i + 1:]]
        costly = [(a, b) for a, b in all_pairs if graph.distances_from(a)[b] > 0]
        all_pairs = costly or all_pairs
        k = min(len(all_pairs), p.get("pairs", rng.randint(1, 8)))
        pool = sorted(rng.sample(all_pairs, k))
        requests = _arrivals(rng, pool, p.get("arrivals", rng.randint(len(pool), 64)))
    inst = Instance(graph, requests, M=M, seed=seed, recipe=recipe)
    inst.k_tilde = max(1, inst.distinct_pairs)
    return inst


def corpus(count: int = 500, base_seed: int = 0) -> List[Instance]:
    """The fixed acceptance corpus: recipes in rotation, seeds ``base_seed + i``."""
    return [gen_instance(RECIPES[i % len(RECIPES)], None, base_seed + i) for i in range(count)]
