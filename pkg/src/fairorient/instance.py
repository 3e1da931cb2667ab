"""Fair-division instances, valuation oracles and the JSON instance format.

Every value is an exact :class:`fractions.Fraction`.  Instances are immutable
once built; all orderings follow declaration order.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping

logger = logging.getLogger(__name__)

#: Relevance is cross-checked exhaustively up to this many declared items.
RELEVANCE_CHECK_LIMIT = 20

KINDS = ("general", "graph", "multigraph", "planar-faces")


class InstanceError(ValueError):
    """Raised for malformed or inconsistent instances."""


def to_fraction(x) -> Fraction:
    """Parse ``"p/q"``, decimal strings, ints or floats exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InstanceError(f"not a rational: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError(f"not a rational: {x!r}") from exc
    raise InstanceError(f"not a rational: {x!r}")


def fraction_str(x: Fraction) -> str:
    return str(x)


def _nonneg(x, what: str) -> Fraction:
    q = to_fraction(x)
    if q < 0:
        raise InstanceError(f"negative value {q} for {what}")
    return q


def _subset_sums(weights: Iterable[Fraction]) -> set[Fraction]:
    sums = {Fraction(0)}
    for w in weights:
        sums |= {s + w for s in sums}
    return sums


# ---------------------------------------------------------------------------
# valuations
# ---------------------------------------------------------------------------


class Valuation:
    """Base class for valuation profiles.

    ``raw(agent, bundle)`` is only ever called with ``bundle`` already
    intersected with the agent's relevant set.
    """

    kind: str = "abstract"

    def raw(self, agent: str, bundle: frozenset) -> Fraction:
        raise NotImplementedError

    def derived_relevance(self, agent: str, declared: frozenset) -> frozenset | None:
        """Items of ``declared`` that are relevant by definition, or None if unknown."""
        return None

    def range_values(self, agent: str, declared: frozenset) -> set[Fraction] | None:
        return None

    def validate(self, agents, items, relevance) -> None:
        pass

    def restrict(self, items: frozenset) -> "Valuation":
        """Valuation of the sub-instance on ``items`` (relevance is intersected by caller)."""
        return self

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class AdditiveValuation(Valuation):
    weights: Mapping[str, Mapping[str, Fraction]]
    kind = "additive"

    def weight(self, agent, item) -> Fraction:
        return self.weights.get(agent, {}).get(item, Fraction(0))

    def raw(self, agent, bundle):
        w = self.weights.get(agent, {})
        return sum((w.get(a, Fraction(0)) for a in bundle), Fraction(0))

    def derived_relevance(self, agent, declared):
        return frozenset(a for a, w in self.weights.get(agent, {}).items() if w > 0)

    def range_values(self, agent, declared):
        return _subset_sums(self.weight(agent, a) for a in declared)

    def validate(self, agents, items, relevance):
        for agent, row in self.weights.items():
            if agent not in relevance:
                raise InstanceError(f"weights for unknown agent {agent!r}")
            for item, w in row.items():
                if item not in items:
                    raise InstanceError(f"weight for unknown item {item!r}")
                if w < 0:
                    raise InstanceError(f"negative weight {w} for ({agent}, {item})")

    def restrict(self, items):
        return AdditiveValuation({ag: {a: w for a, w in row.items() if a in items}
                                  for ag, row in self.weights.items()})

    def to_json(self):
        return {"type": "additive",
                "weights": {ag: {a: fraction_str(w) for a, w in row.items()}
                            for ag, row in self.weights.items()}}


def _table_lookup(table: Mapping[frozenset, Fraction], bundle: frozenset) -> Fraction:
    """Closure value: max over listed subsets of ``bundle`` (0 for none)."""
    hit = table.get(bundle)
    if hit is not None:
        return hit
    best = Fraction(0)
    for key, val in table.items():
        if val > best and key <= bundle:
            best = val
    return best


def _check_table_monotone(table: Mapping[frozenset, Fraction], what: str) -> None:
    keys = list(table)
    for s in keys:
        if table[s] < 0:
            raise InstanceError(f"negative table value for {what} {sorted(s)}")
    if frozenset() in table and table[frozenset()] != 0:
        raise InstanceError(f"value of the empty bundle must be 0 for {what}")
    for s, t in combinations(keys, 2):
        if s < t and table[s] > table[t]:
            raise InstanceError(f"non-monotone table for {what}: "
                                f"{sorted(s)}={table[s]} > {sorted(t)}={table[t]}")
        if t < s and table[t] > table[s]:
            raise InstanceError(f"non-monotone table for {what}: "
                                f"{sorted(t)}={table[t]} > {sorted(s)}={table[s]}")


def _table_relevance(table: Mapping[frozenset, Fraction], declared: frozenset) -> frozenset:
    # a relevant item is witnessed at some listed bundle, see _table_lookup
    rel = set()
    for key, val in table.items():
        if not key <= declared:
            continue
        for a in key:
            if a not in rel and _table_lookup(table, key - {a}) < val:
                rel.add(a)
    return frozenset(rel)


@dataclass(frozen=True)
class TableValuation(Valuation):
    """Explicit bundle -> value tables, one per agent, over subsets of A_i.

    Bundles missing from a table take the largest value of a listed sub-bundle.
    """

    tables: Mapping[str, Mapping[frozenset, Fraction]]
    kind = "table"

    def raw(self, agent, bundle):
        return _table_lookup(self.tables.get(agent, {}), bundle)

    def derived_relevance(self, agent, declared):
        return _table_relevance(self.tables.get(agent, {}), declared)

    def range_values(self, agent, declared):
        vals = {Fraction(0)}
        vals.update(v for k, v in self.tables.get(agent, {}).items() if k <= declared)
        return vals

    def validate(self, agents, items, relevance):
        for agent, table in self.tables.items():
            if agent not in relevance:
                raise InstanceError(f"table for unknown agent {agent!r}")
            for key in table:
                if not key <= relevance[agent]:
                    raise InstanceError(
                        f"table of {agent!r} lists items outside its relevant set: "
                        f"{sorted(key - relevance[agent])}")
            _check_table_monotone(table, f"agent {agent!r}")

    def restrict(self, items):
        return TableValuation({ag: {k: v for k, v in t.items() if k <= items}
                               for ag, t in self.tables.items()})

    def to_json(self):
        return {"type": "table",
                "tables": {ag: [{"bundle": sorted(k), "value": fraction_str(v)}
                                for k, v in t.items()]
                           for ag, t in self.tables.items()}}


@dataclass(frozen=True)
class IdenticalValuation(Valuation):
    """One shared function V; agent i values B as V(B & A_i).

    V is additive (``weights``) or an explicit monotone ``table``.
    """

    weights: Mapping[str, Fraction] | None = None
    table: Mapping[frozenset, Fraction] | None = None
    kind = "identical"

    def __post_init__(self):
        if (self.weights is None) == (self.table is None):
            raise InstanceError("identical valuation needs exactly one of weights/table")

    def shared(self, bundle: frozenset) -> Fraction:
        if self.weights is not None:
            return sum((self.weights.get(a, Fraction(0)) for a in bundle), Fraction(0))
        return _table_lookup(self.table, bundle)

    def raw(self, agent, bundle):
        return self.shared(bundle)

    def derived_relevance(self, agent, declared):
        if self.weights is not None:
            return frozenset(a for a in declared if self.weights.get(a, 0) > 0)
        sub = {k: v for k, v in self.table.items() if k <= declared}
        return _table_relevance(sub, declared)

    def range_values(self, agent, declared):
        if self.weights is not None:
            return _subset_sums(self.weights.get(a, Fraction(0)) for a in declared)
        vals = {Fraction(0)}
        vals.update(v for k, v in self.table.items() if k <= declared)
        return vals

    def validate(self, agents, items, relevance):
        if self.weights is not None:
            for a, w in self.weights.items():
                if a not in items:
                    raise InstanceError(f"weight for unknown item {a!r}")
                if w < 0:
                    raise InstanceError(f"negative weight {w} for item {a!r}")
        else:
            for key in self.table:
                if not key <= set(items):
                    raise InstanceError(f"shared table lists unknown items {sorted(key)}")
            _check_table_monotone(self.table, "the shared valuation")

    def restrict(self, items):
        if self.weights is not None:
            return IdenticalValuation(weights={a: w for a, w in self.weights.items() if a in items})
        return IdenticalValuation(table={k: v for k, v in self.table.items() if k <= items})

    def to_json(self):
        if self.weights is not None:
            return {"type": "identical",
                    "weights": {a: fraction_str(w) for a, w in self.weights.items()}}
        return {"type": "identical",
                "table": [{"bundle": sorted(k), "value": fraction_str(v)}
                          for k, v in self.table.items()]}


@dataclass(frozen=True)
class GraphSymmetricValuation(Valuation):
    """Both endpoints of an edge value it at the edge weight."""

    weights: Mapping[str, Fraction]
    endpoints: Mapping[str, tuple[str, str]]
    kind = "graph-symmetric"

    def raw(self, agent, bundle):
        return sum((self.weights[e] for e in bundle if agent in self.endpoints[e]), Fraction(0))

    def derived_relevance(self, agent, declared):
        return frozenset(e for e in declared
                         if agent in self.endpoints.get(e, ()) and self.weights.get(e, 0) > 0)

    def range_values(self, agent, declared):
        return _subset_sums(self.weights[e] for e in declared if agent in self.endpoints[e])

    def restrict(self, items):
        return GraphSymmetricValuation({e: w for e, w in self.weights.items() if e in items},
                                       {e: p for e, p in self.endpoints.items() if e in items})

    def to_json(self):
        return {"type": "graph-symmetric"}


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    """Agents, items, relevant sets A_i and a valuation profile.

    ``structural`` marks instances whose relevant sets come from structure
    (edges of a graph, faces of a planar map): the valuation-derived relevant
    set may then be smaller than the declared one (zero-weight edges).
    """

    agents: tuple[str, ...]
    items: tuple[str, ...]
    relevance: Mapping[str, frozenset]
    valuation: Valuation
    structural: bool = False

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "relevance",
                           {ag: frozenset(self.relevance.get(ag, ())) for ag in self.agents})
        object.__setattr__(self, "_cache", {})
        self._validate()

    def _validate(self):
        if len(set(self.agents)) != len(self.agents):
            raise InstanceError("duplicate agent ids")
        if len(set(self.items)) != len(self.items):
            raise InstanceError("duplicate item ids")
        items = set(self.items)
        covered = set()
        for ag, rel in self.relevance.items():
            if not rel <= items:
                raise InstanceError(f"relevant set of {ag!r} has unknown items {sorted(rel - items)}")
            covered |= rel
        missing = [a for a in self.items if a not in covered]
        if missing:
            raise InstanceError(f"items with empty agent list: {missing}")
        self.valuation.validate(self.agents, items, self.relevance)
        for ag in self.agents:
            declared = self.relevance[ag]
            if len(declared) > RELEVANCE_CHECK_LIMIT:
                logger.warning("relevance of %s not cross-checked (%d items)", ag, len(declared))
                continue
            self._check_relevance(ag)

    def _check_relevance(self, agent) -> frozenset:
        declared = self.relevance[agent]
        derived = self.valuation.derived_relevance(agent, declared)
        if derived is None:
            derived = _exhaustive_relevance(lambda b: self.value(agent, b), declared)
        if self.structural:
            ok = derived <= declared
        else:
            ok = derived == declared
        if not ok:
            raise InstanceError(
                f"declared relevance of {agent!r} {sorted(declared)} inconsistent with "
                f"valuation-derived relevance {sorted(derived)}")
        return derived

    # -- derived structure -------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def m(self) -> int:
        return len(self.items)

    @cached_property
    def agent_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.agents)}

    @cached_property
    def item_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.items)}

    @cached_property
    def agent_lists(self) -> dict[str, tuple[str, ...]]:
        """N_a for every item, in agent declaration order."""
        return {a: tuple(ag for ag in self.agents if a in self.relevance[ag]) for a in self.items}

    def value(self, agent: str, bundle: Iterable[str]) -> Fraction:
        b = bundle if isinstance(bundle, frozenset) else frozenset(bundle)
        rel = self.relevance.get(agent)
        if rel is None:
            raise InstanceError(f"unknown agent {agent!r}")
        b = b & rel
        key = (agent, b)
        hit = self._cache.get(key)
        if hit is None:
            hit = self.valuation.raw(agent, b)
            self._cache[key] = hit
        return hit

    def sort_items(self, items: Iterable[str]) -> list[str]:
        idx = self.item_index
        return sorted(items, key=idx.__getitem__)

    def sort_agents(self, agents: Iterable[str]) -> list[str]:
        idx = self.agent_index
        return sorted(agents, key=idx.__getitem__)

    def subinstance(self, items: Iterable[str], agents: Iterable[str] | None = None) -> "Instance":
        """Restriction to ``items`` (and optionally to a subset of agents)."""
        keep = frozenset(items)
        ags = self.agents if agents is None else tuple(self.sort_agents(agents))
        return Instance(ags, tuple(a for a in self.items if a in keep),
                        {ag: self.relevance[ag] & keep for ag in ags},
                        _restrict_agents(self.valuation.restrict(keep), ags),
                        structural=self.structural)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.agents, self.items, self.relevance, self.valuation, self.structural) == \
            (other.agents, other.items, other.relevance, other.valuation, other.structural)

    __hash__ = None


def _restrict_agents(val: Valuation, agents) -> Valuation:
    keep = set(agents)
    if isinstance(val, AdditiveValuation):
        return AdditiveValuation({a: w for a, w in val.weights.items() if a in keep})
    if isinstance(val, TableValuation):
        return TableValuation({a: t for a, t in val.tables.items() if a in keep})
    return val


def _exhaustive_relevance(value, declared: frozenset) -> frozenset:
    items = sorted(declared)
    rel = set()
    for r in range(len(items) + 1):
        for combo in combinations(items, r):
            s = frozenset(combo)
            vs = value(s)
            for a in combo:
                if a not in rel and value(s - {a}) < vs:
                    rel.add(a)
    return frozenset(rel)


def value_of(inst: Instance, agent: str, bundle: Iterable[str]) -> Fraction:
    """Exact value of ``bundle`` for ``agent``."""
    b = frozenset(bundle)
    unknown = b - set(inst.items)
    if unknown:
        raise InstanceError(f"unknown items {sorted(unknown)}")
    return inst.value(agent, b)


def relevant_items(inst: Instance, agent: str) -> frozenset:
    """Relevant set of ``agent`` recomputed from the valuation and checked against A_i."""
    if agent not in inst.relevance:
        raise InstanceError(f"unknown agent {agent!r}")
    derived = inst._check_relevance(agent)
    return inst.relevance[agent] if inst.structural else derived


def range_size(inst: Instance, agent: str, cap: int = RELEVANCE_CHECK_LIMIT) -> int | None:
    """Number of distinct values over subsets of A_i; None when |A_i| exceeds ``cap``."""
    declared = inst.relevance[agent]
    vals = inst.valuation.range_values(agent, declared)
    if vals is not None:
        return len(vals)
    if len(declared) > cap:
        return None
    return len(_enumerate_range(inst, agent))


def _enumerate_range(inst: Instance, agent: str) -> set[Fraction]:
    items = sorted(inst.relevance[agent])
    return {inst.value(agent, c) for r in range(len(items) + 1) for c in combinations(items, r)}


# ---------------------------------------------------------------------------
# graph / planar forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    id: str
    weight_u: Fraction
    weight_v: Fraction

    @property
    def symmetric(self) -> bool:
        return self.weight_u == self.weight_v

    def other(self, x: str) -> str:
        return self.v if x == self.u else self.u

    def weight_for(self, x: str) -> Fraction:
        return self.weight_u if x == self.u else self.weight_v


def edge(u: str, v: str, id: str, weight=1, weight_v=None) -> Edge:
    wu = _nonneg(weight, f"edge {id}")
    wv = wu if weight_v is None else _nonneg(weight_v, f"edge {id}")
    return Edge(u, v, id, wu, wv)


@dataclass(frozen=True)
class GraphInstance:
    """Agents on vertices, one item per edge; an orientation gives each edge to an endpoint."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    multi: bool = False
    valuation: Valuation | None = None
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise InstanceError("duplicate vertex ids")
        ids = set()
        pairs = set()
        for e in self.edges:
            if e.u == e.v:
                raise InstanceError(f"self-loop on {e.u!r} (edge {e.id})")
            if e.u not in vs or e.v not in vs:
                raise InstanceError(f"edge {e.id} has unknown endpoint")
            if e.id in ids:
                raise InstanceError(f"duplicate edge id {e.id!r}")
            ids.add(e.id)
            p = frozenset((e.u, e.v))
            if p in pairs and not self.multi:
                raise InstanceError(f"parallel edge {e.id} in a simple graph")
            pairs.add(p)

    @cached_property
    def instance(self) -> Instance:
        return self.to_instance()

    def to_instance(self) -> Instance:
        rel = {v: frozenset(e.id for e in self.edges if v in (e.u, e.v)) for v in self.vertices}
        val = self.valuation
        if val is None:
            if all(e.symmetric for e in self.edges):
                val = GraphSymmetricValuation({e.id: e.weight_u for e in self.edges},
                                              {e.id: (e.u, e.v) for e in self.edges})
            else:
                w: dict[str, dict[str, Fraction]] = {v: {} for v in self.vertices}
                for e in self.edges:
                    w[e.u][e.id] = e.weight_u
                    w[e.v][e.id] = e.weight_v
                val = AdditiveValuation(w)
        return Instance(self.vertices, tuple(e.id for e in self.edges), rel, val, structural=True)

    @cached_property
    def edge_by_id(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def adjacency(self) -> dict[str, list[str]]:
        """Distinct neighbours per vertex, in vertex declaration order."""
        idx = {v: i for i, v in enumerate(self.vertices)}
        nb: dict[str, set[str]] = {v: set() for v in self.vertices}
        for e in self.edges:
            nb[e.u].add(e.v)
            nb[e.v].add(e.u)
        return {v: sorted(s, key=idx.__getitem__) for v, s in nb.items()}

    @cached_property
    def incident(self) -> dict[str, list[Edge]]:
        inc: dict[str, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            inc[e.u].append(e)
            inc[e.v].append(e)
        return inc

    @cached_property
    def pair_edges(self) -> dict[frozenset, list[Edge]]:
        out: dict[frozenset, list[Edge]] = {}
        for e in self.edges:
            out.setdefault(frozenset((e.u, e.v)), []).append(e)
        return out

    def edge_between(self, u: str, v: str) -> Edge | None:
        es = self.pair_edges.get(frozenset((u, v)))
        return es[0] if es else None

    @property
    def is_simple(self) -> bool:
        return all(len(es) == 1 for es in self.pair_edges.values())

    def __hash__(self):
        return id(self)


@dataclass(frozen=True)
class PlanarInstance:
    """Vertices of an embedded planar map; every inner (triangular) face is an item
    relevant exactly to its three vertices."""

    vertices: tuple[str, ...]
    faces: tuple[tuple[str, str, str], ...]
    face_ids: tuple[str, ...]
    valuation: Valuation
    outer_boundary: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "faces", tuple(tuple(f) for f in self.faces))
        ids = tuple(self.face_ids) or tuple(f"f{i}" for i in range(len(self.faces)))
        object.__setattr__(self, "face_ids", ids)
        object.__setattr__(self, "outer_boundary", tuple(self.outer_boundary))
        vs = set(self.vertices)
        if len(ids) != len(self.faces) or len(set(ids)) != len(ids):
            raise InstanceError("face ids must be unique, one per face")
        for fid, f in zip(ids, self.faces):
            if len(f) != 3 or len(set(f)) != 3:
                raise InstanceError(f"inner face {fid} is not a triangle: {list(f)}")
            if not set(f) <= vs:
                raise InstanceError(f"face {fid} has unknown vertices")
        if not set(self.outer_boundary) <= vs:
            raise InstanceError("outer boundary has unknown vertices")

    @cached_property
    def instance(self) -> Instance:
        return self.to_instance()

    def to_instance(self) -> Instance:
        rel = {v: frozenset(fid for fid, f in zip(self.face_ids, self.faces) if v in f)
               for v in self.vertices}
        return Instance(self.vertices, self.face_ids, rel, self.valuation, structural=True)

    def __hash__(self):
        return id(self)


# ---------------------------------------------------------------------------
# allocations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Allocation:
    """Bundles pi_i (pairwise disjoint) plus the set of unallocated items."""

    bundles: Mapping[str, frozenset]
    unallocated: frozenset = frozenset()

    @classmethod
    def from_bundles(cls, inst: Instance, bundles: Mapping[str, Iterable[str]]) -> "Allocation":
        seen: dict[str, str] = {}
        out = {}
        items = set(inst.items)
        for ag in inst.agents:
            b = frozenset(bundles.get(ag, ()))
            for a in b:
                if a not in items:
                    raise InstanceError(f"unknown item {a!r} in bundle of {ag!r}")
                if a in seen:
                    raise InstanceError(f"item {a!r} given to both {seen[a]!r} and {ag!r}")
                seen[a] = ag
            out[ag] = b
        extra = set(bundles) - set(inst.agents)
        if extra:
            raise InstanceError(f"bundles for unknown agents {sorted(extra)}")
        return cls(out, frozenset(items - set(seen)))

    @classmethod
    def empty(cls, inst: Instance) -> "Allocation":
        return cls({ag: frozenset() for ag in inst.agents}, frozenset(inst.items))

    def owner(self, item: str) -> str | None:
        for ag, b in self.bundles.items():
            if item in b:
                return ag
        return None

    @property
    def is_total(self) -> bool:
        return not self.unallocated

    def to_json(self, inst: Instance | None = None) -> dict:
        order = (lambda s: inst.sort_items(s)) if inst is not None else sorted
        return {ag: order(b) for ag, b in self.bundles.items()}


def orientation_to_allocation(g: GraphInstance, receivers: Mapping[str, str]) -> Allocation:
    """Allocation giving every edge id to the endpoint named in ``receivers``."""
    bundles: dict[str, set[str]] = {v: set() for v in g.vertices}
    for e in g.edges:
        r = receivers[e.id]
        if r not in (e.u, e.v):
            raise InstanceError(f"edge {e.id} oriented to non-endpoint {r!r}")
        bundles[r].add(e.id)
    return Allocation.from_bundles(g.instance, bundles)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _parse_table(rows, what) -> dict[frozenset, Fraction]:
    table: dict[frozenset, Fraction] = {}
    for row in rows:
        key = frozenset(row["bundle"])
        if key in table:
            raise InstanceError(f"bundle {sorted(key)} listed twice for {what}")
        table[key] = _nonneg(row["value"], what)
    return table


def _parse_valuation(spec: Mapping, agents, items, graph_edges=None) -> Valuation | None:
    kind = spec.get("type")
    if kind == "additive":
        return AdditiveValuation({ag: {a: _nonneg(w, f"({ag}, {a})") for a, w in row.items()}
                                  for ag, row in spec.get("weights", {}).items()})
    if kind == "table":
        return TableValuation({ag: _parse_table(rows, f"agent {ag!r}")
                               for ag, rows in spec.get("tables", {}).items()})
    if kind == "identical":
        if "weights" in spec:
            return IdenticalValuation(weights={a: _nonneg(w, a) for a, w in spec["weights"].items()})
        if "table" in spec:
            return IdenticalValuation(table=_parse_table(spec["table"], "the shared valuation"))
        raise InstanceError("identical valuation needs 'weights' or 'table'")
    if kind == "graph-symmetric":
        if graph_edges is None:
            raise InstanceError("graph-symmetric valuations need edges")
        return None
    raise InstanceError(f"unknown valuation type {kind!r}")


def instance_from_dict(doc: Mapping) -> Instance | GraphInstance | PlanarInstance:
    if not isinstance(doc, Mapping):
        raise InstanceError("instance document must be a JSON object")
    kind = doc.get("kind", "general")
    if kind not in KINDS:
        raise InstanceError(f"unknown instance kind {kind!r}")
    try:
        if kind in ("graph", "multigraph"):
            return _graph_from_dict(doc, multi=(kind == "multigraph"))
        if kind == "planar-faces":
            return _planar_from_dict(doc)
        agents = list(doc["agents"])
        items = list(doc["items"])
        rel = {ag: frozenset(doc.get("relevance", {}).get(ag, ())) for ag in agents}
        unknown = set(doc.get("relevance", {})) - set(agents)
        if unknown:
            raise InstanceError(f"relevance for unknown agents {sorted(unknown)}")
        val = _parse_valuation(doc["valuations"], agents, items)
        return Instance(tuple(agents), tuple(items), rel, val)
    except KeyError as exc:
        raise InstanceError(f"missing field {exc.args[0]!r}") from exc
    except TypeError as exc:
        raise InstanceError(f"schema violation: {exc}") from exc


def _graph_from_dict(doc, multi) -> GraphInstance:
    vertices = list(doc["agents"])
    edges = []
    for row in doc["edges"]:
        if "weights" in row:
            w = row["weights"]
            edges.append(edge(row["u"], row["v"], row["id"], w[row["u"]], w[row["v"]]))
        else:
            edges.append(edge(row["u"], row["v"], row["id"], row.get("weight", 1)))
    if "items" in doc and list(doc["items"]) != [e.id for e in edges]:
        raise InstanceError("items must list the edge ids in edge order")
    val = None
    if "valuations" in doc:
        val = _parse_valuation(doc["valuations"], vertices, [e.id for e in edges], graph_edges=edges)
    g = GraphInstance(tuple(vertices), tuple(edges), multi=multi, valuation=val,
                      meta=dict(doc.get("meta", {})))
    inst = g.instance
    if "relevance" in doc:
        for ag, rel in doc["relevance"].items():
            if frozenset(rel) != inst.relevance.get(ag):
                raise InstanceError(f"declared relevance of {ag!r} is not its incident edges")
    return g


def _planar_from_dict(doc) -> PlanarInstance:
    faces = [tuple(f) for f in doc["faces"]]
    ids = doc.get("items") or doc.get("face_ids") or [f"f{i}" for i in range(len(faces))]
    val = _parse_valuation(doc["valuations"], doc["agents"], ids)
    p = PlanarInstance(tuple(doc["agents"]), tuple(faces), tuple(ids), val,
                       tuple(doc.get("outer_boundary", ())))
    inst = p.instance
    if "relevance" in doc:
        for ag, rel in doc["relevance"].items():
            if frozenset(rel) != inst.relevance.get(ag):
                raise InstanceError(f"declared relevance of {ag!r} is not its incident faces")
    return p


def parse_instance(text: str) -> Instance | GraphInstance | PlanarInstance:
    """Parse and validate a JSON instance document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from exc
    return instance_from_dict(doc)


def instance_to_dict(x: Instance | GraphInstance | PlanarInstance) -> dict:
    if isinstance(x, GraphInstance):
        rows = []
        for e in x.edges:
            row = {"u": e.u, "v": e.v, "id": e.id}
            if e.symmetric:
                row["weight"] = fraction_str(e.weight_u)
            else:
                row["weights"] = {e.u: fraction_str(e.weight_u), e.v: fraction_str(e.weight_v)}
            rows.append(row)
        doc = {"kind": "multigraph" if x.multi else "graph",
               "agents": list(x.vertices),
               "items": [e.id for e in x.edges],
               "edges": rows}
        if x.valuation is not None:
            doc["valuations"] = x.valuation.to_json()
        if x.meta:
            doc["meta"] = dict(x.meta)
        return doc
    if isinstance(x, PlanarInstance):
        return {"kind": "planar-faces",
                "agents": list(x.vertices),
                "items": list(x.face_ids),
                "faces": [list(f) for f in x.faces],
                "outer_boundary": list(x.outer_boundary),
                "valuations": x.valuation.to_json()}
    if isinstance(x, Instance):
        return {"kind": "general",
                "agents": list(x.agents),
                "items": list(x.items),
                "relevance": {ag: x.sort_items(x.relevance[ag]) for ag in x.agents},
                "valuations": x.valuation.to_json()}
    raise TypeError(f"cannot serialize {type(x).__name__}")


def serialize_instance(x, indent: int | None = None) -> str:
    return json.dumps(instance_to_dict(x), indent=indent)


def as_instance(x: Instance | GraphInstance | PlanarInstance) -> Instance:
    return x if isinstance(x, Instance) else x.instance
