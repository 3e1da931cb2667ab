"""Hard instances (gadget X, PARTITION reductions) and seeded random families.

Randomness comes from :class:`SplitMix64`, a fixed 64-bit mixing generator, so
instances are identical for a given seed on every platform.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .instance import (AdditiveValuation, GraphInstance, IdenticalValuation, Instance,
                       InstanceError, PlanarInstance, TableValuation, edge, to_fraction)

MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64: state += 0x9E3779B97F4A7C15, then the standard 30/27/31 xor-shift mix."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def randint(self, lo: int, hi: int) -> int:
        return lo + self.below(hi - lo + 1)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def choice(self, seq: Sequence):
        return seq[self.below(len(seq))]

    def shuffle(self, seq: list) -> None:
        for i in range(len(seq) - 1, 0, -1):
            j = self.below(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def sample(self, seq: Sequence, k: int) -> list:
        pool = list(seq)
        self.shuffle(pool)
        return pool[:k]

    def chance(self, p: float) -> bool:
        return self.random() < p


# ---------------------------------------------------------------------------
# PARTITION reductions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartitionInput:
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(x) for x in self.values))
        if any(x <= 0 for x in self.values):
            raise ValueError("PARTITION values must be positive integers")

    @property
    def T(self) -> int:
        return len(self.values)

    @property
    def B(self) -> Fraction:
        return Fraction(sum(self.values), 2)

    @property
    def valid_for_reduction(self) -> bool:
        return bool(self.values) and all(x < self.B for x in self.values)


def subset_sum_yes(values: Sequence[int]) -> bool:
    """Brute force: does some sub-multiset sum to half the total?"""
    total = sum(values)
    if total % 2:
        return False
    half = total // 2
    n = len(values)
    for mask in range(1 << n):
        if sum(values[k] for k in range(n) if mask >> k & 1) == half:
            return True
    return False


def _gadget_edges(B: Fraction, h: int) -> tuple[list[str], list]:
    """Weighted K4 on X<h>1..X<h>4: the two disjoint edges 12 and 34 weigh B, the rest 1."""
    xs = [f"X{h}{k}" for k in range(1, 5)]
    edges = []
    for a, b in combinations(range(4), 2):
        w = B if (a, b) in ((0, 1), (2, 3)) else Fraction(1)
        edges.append(edge(xs[a], xs[b], f"{xs[a]}-{xs[b]}", w))
    return xs, edges


def gadget_x(B=3) -> GraphInstance:
    """K4 admitting no EFX orientation."""
    B = to_fraction(B)
    if B < 3:
        raise ValueError("gadget X needs B >= 3")
    xs, edges = _gadget_edges(B, 1)
    return GraphInstance(tuple(xs), tuple(edges), meta={"B": str(B)})


def _as_partition(S) -> PartitionInput:
    p = S if isinstance(S, PartitionInput) else PartitionInput(tuple(S))
    if not p.valid_for_reduction:
        raise ValueError(f"reduction needs non-empty S with every element below B={p.B}")
    return p


def reduction_scale(p: PartitionInput) -> int:
    """Smallest integer factor c with c*B > 2.

    The gadgets only block EFX when B > 2; scaling every element of S by c
    gives an equivalent PARTITION instance that meets this bound.
    """
    c = 1
    while c * p.B <= 2:
        c += 1
    return c


def _scaled(p: PartitionInput) -> tuple[PartitionInput, int]:
    c = reduction_scale(p)
    return (p if c == 1 else PartitionInput(tuple(c * x for x in p.values))), c


def _reduction_cover(g1, g2) -> list[str]:
    # i and j touch every non-gadget edge; a K4 needs three of its vertices
    return ["i", "j"] + g1[:3] + g2[:3]


def partition_to_vc_graph(S) -> GraphInstance:
    """Graph with a constant-size vertex cover that has an EFX orientation iff S splits evenly."""
    orig = _as_partition(S)
    p, c = _scaled(orig)
    B = p.B
    xs = [f"x{t}" for t in range(1, p.T + 1)]
    g1, e1 = _gadget_edges(B, 1)
    g2, e2 = _gadget_edges(B, 2)
    edges = e1 + e2
    edges.append(edge("i", "X11", "i-X11", B))
    edges.append(edge("j", "X21", "j-X21", B))
    for x, s in zip(xs, p.values):
        edges.append(edge("i", x, f"i-{x}", s))
        edges.append(edge("j", x, f"j-{x}", s))
    return GraphInstance(tuple(["i", "j"] + xs + g1 + g2), tuple(edges),
                         meta={"B": str(B), "S": list(orig.values), "scale": c,
                               "vertex_cover": _reduction_cover(g1, g2)})


def partition_to_multigraph(S) -> GraphInstance:
    """Ten-vertex multigraph: one parallel i-j edge per element of S."""
    orig = _as_partition(S)
    p, c = _scaled(orig)
    B = p.B
    g1, e1 = _gadget_edges(B, 1)
    g2, e2 = _gadget_edges(B, 2)
    edges = e1 + e2
    edges.append(edge("i", "X11", "i-X11", B))
    edges.append(edge("j", "X21", "j-X21", B))
    for t, s in enumerate(p.values, 1):
        edges.append(edge("i", "j", f"s{t}", s))
    return GraphInstance(tuple(["i", "j"] + g1 + g2), tuple(edges), multi=True,
                         meta={"B": str(B), "S": list(orig.values), "scale": c,
                               "vertex_cover": _reduction_cover(g1, g2)})


def partition_multisets(max_total: int):
    """All multisets of positive integers with sum <= max_total, non-increasing tuples."""
    def parts(remaining, largest):
        yield ()
        for x in range(min(remaining, largest), 0, -1):
            for rest in parts(remaining - x, x):
                yield (x,) + rest
    for s in parts(max_total, max_total):
        if s:
            yield s


def vertex_cover_size(g: GraphInstance) -> int:
    """Minimum vertex cover by brute force over vertex subsets (small graphs only)."""
    vs = list(g.vertices)
    pairs = [(e.u, e.v) for e in g.edges]
    for k in range(len(vs) + 1):
        for c in combinations(vs, k):
            cs = set(c)
            if all(u in cs or v in cs for u, v in pairs):
                return k
    return len(vs)


# ---------------------------------------------------------------------------
# random families
# ---------------------------------------------------------------------------


def _weight(rng: SplitMix64, max_weight: int, zero_p: float = 0.0) -> Fraction:
    if zero_p and rng.chance(zero_p):
        return Fraction(0)
    return Fraction(rng.randint(1, max_weight))


def random_monotone_table(rng: SplitMix64, items: Sequence[str], max_value: int = 10) -> dict:
    """Full monotone table: random base values closed upwards by max over subsets."""
    items = list(items)
    n = len(items)
    base = [Fraction(0)] + [Fraction(rng.randint(1, max_value)) for _ in range((1 << n) - 1)]
    val = list(base)
    for k in range(n):
        bit = 1 << k
        for mask in range(1 << n):
            if mask & bit and val[mask ^ bit] > val[mask]:
                val[mask] = val[mask ^ bit]
    # every item must stay relevant: bump singletons above the empty set
    table = {}
    for mask in range(1 << n):
        key = frozenset(items[k] for k in range(n) if mask >> k & 1)
        table[key] = val[mask] + Fraction(bin(mask).count("1"))
    return table


def random_general(rng, n=4, m=6, max_weight=5, density=0.5) -> Instance:
    agents = [f"a{k}" for k in range(n)]
    items = [f"g{k}" for k in range(m)]
    weights = {ag: {} for ag in agents}
    for it in items:
        owners = [ag for ag in agents if rng.chance(density)] or [rng.choice(agents)]
        for ag in owners:
            weights[ag][it] = _weight(rng, max_weight)
    rel = {ag: frozenset(w) for ag, w in weights.items()}
    return Instance(tuple(agents), tuple(items), rel, AdditiveValuation(weights))


def random_table(rng, n=3, m=6, density=0.5, max_value=10) -> Instance:
    agents = [f"a{k}" for k in range(n)]
    items = [f"g{k}" for k in range(m)]
    rel = {ag: set() for ag in agents}
    for it in items:
        owners = [ag for ag in agents if rng.chance(density)] or [rng.choice(agents)]
        for ag in owners:
            rel[ag].add(it)
    tables = {ag: random_monotone_table(rng, [a for a in items if a in rel[ag]], max_value)
              for ag in agents}
    return Instance(tuple(agents), tuple(items), {a: frozenset(r) for a, r in rel.items()},
                    TableValuation(tables))


def random_graph(rng, n=6, m=9, max_weight=3, connected=True, symmetric=True,
                 multi=False) -> GraphInstance:
    vs = [f"v{k}" for k in range(n)]
    pairs = list(combinations(range(n), 2))
    if not multi and m > len(pairs):
        raise ValueError(f"{m} edges do not fit in a simple graph on {n} vertices")
    chosen: list[tuple[int, int]] = []
    if connected and n > 1:
        if m < n - 1:
            raise ValueError("a connected graph needs at least n-1 edges")
        order = list(range(n))
        rng.shuffle(order)
        for k in range(1, n):
            a, b = order[k], order[rng.below(k)]
            chosen.append((min(a, b), max(a, b)))
    rest = [p for p in pairs if p not in chosen]
    while len(chosen) < m:
        if multi:
            chosen.append(rng.choice(pairs))
        else:
            p = rest.pop(rng.below(len(rest)))
            chosen.append(p)
    edges = []
    for k, (a, b) in enumerate(chosen):
        w = _weight(rng, max_weight)
        wv = w if symmetric else _weight(rng, max_weight)
        edges.append(edge(vs[a], vs[b], f"e{k}", w, wv))
    return GraphInstance(tuple(vs), tuple(edges), multi=multi)


def random_laminar(rng, n=5, m=8, max_weight=5) -> Instance:
    """Agent lists drawn from a random laminar family (recursive splits of N)."""
    agents = [f"a{k}" for k in range(n)]
    family: list[frozenset] = []

    def split(block: list[str]):
        family.append(frozenset(block))
        if len(block) < 2:
            return
        cut = rng.randint(1, len(block) - 1)
        blk = list(block)
        rng.shuffle(blk)
        left, right = blk[:cut], blk[cut:]
        split(left)
        if rng.chance(0.7):
            split(right)

    split(list(agents))
    items = [f"g{k}" for k in range(m)]
    weights = {ag: {} for ag in agents}
    for it in items:
        for ag in rng.choice(family):
            weights[ag][it] = _weight(rng, max_weight)
    rel = {ag: frozenset(w) for ag, w in weights.items()}
    return Instance(tuple(agents), tuple(items), rel, AdditiveValuation(weights))


def random_identical(rng, n=4, m=8, max_weight=6, density=0.5, table=False) -> Instance:
    agents = [f"a{k}" for k in range(n)]
    items = [f"g{k}" for k in range(m)]
    rel = {ag: set() for ag in agents}
    for it in items:
        owners = [ag for ag in agents if rng.chance(density)] or [rng.choice(agents)]
        for ag in owners:
            rel[ag].add(it)
    if table:
        val = IdenticalValuation(table=random_monotone_table(rng, items))
    else:
        val = IdenticalValuation(weights={it: _weight(rng, max_weight) for it in items})
    return Instance(tuple(agents), tuple(items), {a: frozenset(r) for a, r in rel.items()}, val)


def random_decomposable(rng, n=6, groups=4, max_group_agents=3, max_group_items=4,
                        max_weight=5, table=False) -> Instance:
    """Groups of items whose agent lists pairwise share at most one agent."""
    agents = [f"a{k}" for k in range(n)]
    lists: list[frozenset] = []
    tries = 0
    while len(lists) < groups and tries < 200:
        tries += 1
        size = rng.randint(1, min(max_group_agents, n))
        cand = frozenset(rng.sample(agents, size))
        if cand in lists or any(len(cand & other) > 1 for other in lists):
            continue
        lists.append(cand)
    items, rel = [], {ag: set() for ag in agents}
    for gi, agl in enumerate(lists):
        for k in range(rng.randint(1, max_group_items)):
            it = f"g{gi}_{k}"
            items.append(it)
            for ag in agl:
                rel[ag].add(it)
    for ag in agents:        # agents outside every group still need an entry
        rel.setdefault(ag, set())
    frel = {a: frozenset(r) for a, r in rel.items()}
    if table:
        val = TableValuation({ag: random_monotone_table(rng, sorted(frel[ag]), 8)
                              for ag in agents})
    else:
        val = AdditiveValuation({ag: {it: _weight(rng, max_weight) for it in frel[ag]}
                                 for ag in agents})
    return Instance(tuple(agents), tuple(items), frel, val)


def random_planar(rng, n=8, max_value=10, table=True) -> PlanarInstance:
    """Delaunay triangulation of random points; faces are the items."""
    import numpy as np
    from scipy.spatial import Delaunay

    if n < 3:
        raise ValueError("need at least 3 vertices")
    for _ in range(100):
        pts = np.array([[rng.random(), rng.random()] for _ in range(n)])
        try:
            tri = Delaunay(pts)
        except Exception:   # degenerate (collinear) sample
            continue
        if len(tri.simplices) and len(set(tri.simplices.ravel())) == n:
            break
    else:
        raise RuntimeError("could not sample a non-degenerate point set")
    vs = [f"p{k}" for k in range(n)]
    faces = [tuple(vs[int(k)] for k in sorted(s)) for s in tri.simplices]
    faces.sort()
    ids = [f"f{k}" for k in range(len(faces))]
    hull = _hull_cycle(tri, vs)
    inc = {v: [fid for fid, f in zip(ids, faces) if v in f] for v in vs}
    if table:
        val = TableValuation({v: random_monotone_table(rng, inc[v], max_value) for v in vs})
    else:
        val = AdditiveValuation({v: {fid: Fraction(rng.randint(1, max_value)) for fid in inc[v]}
                                 for v in vs})
    return PlanarInstance(tuple(vs), tuple(faces), tuple(ids), val, tuple(hull))


def _hull_cycle(tri, vs) -> list[str]:
    nbr: dict[int, list[int]] = {}
    for a, b in tri.convex_hull:
        nbr.setdefault(int(a), []).append(int(b))
        nbr.setdefault(int(b), []).append(int(a))
    start = min(nbr)
    cyc, prev, cur = [start], None, start
    while True:
        nxt = [x for x in nbr[cur] if x != prev]
        nxt = nxt[0] if prev is not None else min(nbr[cur])
        if nxt == start:
            break
        cyc.append(nxt)
        prev, cur = cur, nxt
    return [vs[k] for k in cyc]


RANDOM_KINDS = {
    "general": random_general,
    "table": random_table,
    "graph": random_graph,
    "laminar": random_laminar,
    "identical": random_identical,
    "decomposable": random_decomposable,
    "planar": random_planar,
}


def random_instance(kind: str, params: dict | None = None, seed: int = 0):
    """Reproducible random instance of a structural class."""
    if kind not in RANDOM_KINDS:
        raise ValueError(f"unknown random kind {kind!r}; choose from {sorted(RANDOM_KINDS)}")
    try:
        return RANDOM_KINDS[kind](SplitMix64(seed), **(params or {}))
    except (TypeError, InstanceError) as exc:
        raise ValueError(f"infeasible parameters for {kind}: {exc}") from exc
