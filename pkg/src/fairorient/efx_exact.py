"""Exhaustive EFX search on (multi)graph orientations and small general allocations."""
from __future__ import annotations

import logging
from itertools import product

from .instance import Allocation, GraphInstance, Instance, as_instance, orientation_to_allocation
from .verify import check_efx, check_orientation

logger = logging.getLogger(__name__)

DEFAULT_EDGE_CAP = 24
ALLOCATION_CAP = 2 ** 20     # n ** m


class CapExceeded(ValueError):
    pass


def orientation_receivers(g: GraphInstance, vector) -> dict[str, str]:
    """Per-edge bit -> receiving endpoint (0: u, 1: v)."""
    return {e.id: (e.v if bit else e.u) for e, bit in zip(g.edges, vector)}


def orientation_allocation(g: GraphInstance, vector) -> Allocation:
    return orientation_to_allocation(g, orientation_receivers(g, vector))


def twin_classes(g: GraphInstance) -> list[list[tuple[tuple[int, str], ...]]]:
    """Interchangeable parts of an edge-weighted graph.

    Each class lists members; a member is a tuple of (edge index, role vertex)
    pairs aligned across the class.  Swapping two members (and their edges)
    is an automorphism of the weighted instance, so an EFX orientation exists
    iff one exists whose member states are sorted.  Only edge-weight
    valuations are considered; explicit valuation oracles get no classes.
    """
    if g.valuation is not None:
        return []
    idx = {e.id: k for k, e in enumerate(g.edges)}
    classes = []
    # parallel edges with identical endpoint weights
    for pair, es in g.pair_edges.items():
        if len(es) < 2:
            continue
        a = min(pair, key=g.vertices.index)
        buckets: dict = {}
        for e in es:
            buckets.setdefault((e.weight_for(a), e.weight_for(e.other(a))), []).append(e)
        for group in buckets.values():
            if len(group) > 1:
                classes.append([((idx[e.id], a),) for e in group])
    # non-adjacent vertices with the same weighted neighbourhood
    if g.is_simple:
        buckets = {}
        for x in g.vertices:
            nb = g.adjacency[x]
            if not nb:
                continue
            key = tuple((w, g.edge_between(x, w).weight_for(w), g.edge_between(x, w).weight_for(x))
                        for w in nb)
            buckets.setdefault(key, []).append(x)
        used: set[int] = set()
        for key, xs in buckets.items():
            if len(xs) < 2:
                continue
            cls = [tuple((idx[g.edge_between(x, w).id], x) for w, _, _ in key) for x in xs]
            ks = {k for member in cls for k, _ in member}
            if ks & used:      # classes must act on disjoint edge sets
                continue
            used |= ks
            classes.append(cls)
    return classes


def _search_order(g: GraphInstance, classes=()) -> list[int]:
    inst = g.instance

    def heaviness(k):
        e = g.edges[k]
        return max(inst.value(e.u, {e.id}), inst.value(e.v, {e.id}))
    blocks, used = [], set()
    for cls in classes:
        block = [k for member in cls for k, _ in member]
        used.update(block)
        blocks.append(block)
    blocks.extend([k] for k in range(len(g.edges)) if k not in used)
    # single edges first so that small dense parts are settled before large twin blocks
    blocks.sort(key=lambda b: (len(b) > 1, -max(heaviness(k) for k in b)))
    return [k for b in blocks for k in b]


class _Search:
    """DFS over edge orientations with a sound envy-based cut.

    A branch is cut when some x surely violates EFX towards y: even if x
    received every still-undecided edge at x, x would value y's current bundle
    minus one of its items above its own.  Both sides only move monotonically
    as the search deepens, so the violation persists in every completion.
    """

    def __init__(self, g: GraphInstance, prune: bool, symmetry: bool = False):
        self.g = g
        self.inst = g.instance
        self.prune = prune
        classes = twin_classes(g) if symmetry else []
        self.order = _search_order(g, classes)
        # after deciding edge k, compare the member it completes with the previous one
        self.sym_check: dict[int, tuple] = {}
        for cls in classes:
            for prev, cur in zip(cls, cls[1:]):
                self.sym_check[cur[-1][0]] = (prev, cur)
        self.bundle = {v: set() for v in g.vertices}
        self.open_at = {v: {e.id for e in g.incident[v]} for v in g.vertices}
        self.bits = [0] * len(g.edges)
        # optimistic value: own bundle plus every undecided incident edge
        self.ub = {v: self.inst.value(v, self.open_at[v]) for v in g.vertices}
        self.nodes = 0
        self.pruned = 0

    def _violates(self, x: str, y: str) -> bool:
        by = self.bundle[y]
        if len(by) < 2 or not (by & self.inst.relevance[x]):
            return False
        ub = self.ub[x]
        fb = frozenset(by)
        return any(self.inst.value(x, fb - {b}) > ub for b in by)

    def _state(self, member) -> tuple[bool, ...]:
        edges = self.g.edges
        return tuple((edges[k].v if self.bits[k] else edges[k].u) == role for k, role in member)

    def run(self, on_leaf) -> None:
        edges = self.g.edges

        def rec(depth: int) -> bool:
            self.nodes += 1
            if depth == len(self.order):
                return on_leaf(tuple(self.bits))
            k = self.order[depth]
            e = edges[k]
            for bit, (r, o) in ((0, (e.u, e.v)), (1, (e.v, e.u))):
                self.bits[k] = bit
                self.bundle[r].add(e.id)
                self.open_at[r].discard(e.id)
                self.open_at[o].discard(e.id)
                old_ub = self.ub[o]
                self.ub[o] = self.inst.value(o, self.bundle[o] | self.open_at[o])
                cut = False
                if k in self.sym_check:
                    prev, cur = self.sym_check[k]
                    cut = self._state(cur) < self._state(prev)
                if self.prune and not cut:
                    adj = self.g.adjacency
                    cut = (len(self.bundle[r]) > 1 and any(self._violates(x, r) for x in adj[r])) \
                        or any(self._violates(o, y) for y in adj[o])
                    if cut:
                        self.pruned += 1
                stop = False if cut else rec(depth + 1)
                self.ub[o] = old_ub
                self.bundle[r].discard(e.id)
                self.open_at[r].add(e.id)
                self.open_at[o].add(e.id)
                self.bits[k] = 0
                if stop:
                    return True
            return False

        rec(0)


def _check_cap(g: GraphInstance, cap: int | None) -> None:
    if cap is not None and len(g.edges) > cap:
        raise CapExceeded(f"{len(g.edges)} edges exceed the cap of {cap}")


def brute_force_efx_orientation(g: GraphInstance, cap: int | None = DEFAULT_EDGE_CAP,
                                prune: bool = True, symmetry: bool = True) -> tuple[int, ...] | None:
    """An orientation vector whose allocation is EFX, or None if none exists.

    With ``symmetry`` the search skips orientations that differ from an
    already covered one by swapping interchangeable vertices or parallel edges.
    """
    _check_cap(g, cap)
    found: list[tuple[int, ...]] = []

    def leaf(bits):
        alloc = orientation_allocation(g, bits)
        if check_efx(g.instance, alloc).holds:
            found.append(bits)
            return True
        return False

    s = _Search(g, prune, symmetry)
    s.run(leaf)
    logger.debug("EFX search: %d nodes, %d cut branches, %s", s.nodes, s.pruned,
                 "found" if found else "exhausted")
    return found[0] if found else None


def count_efx_orientations(g: GraphInstance, cap: int | None = DEFAULT_EDGE_CAP,
                           prune: bool = True) -> int:
    _check_cap(g, cap)
    count = 0

    def leaf(bits):
        nonlocal count
        if check_efx(g.instance, orientation_allocation(g, bits)).holds:
            count += 1
        return False

    _Search(g, prune).run(leaf)
    return count


def brute_force_efx_allocation(inst, cap: int = ALLOCATION_CAP) -> Allocation | None:
    """First EFX allocation (items to any agents) in lexicographic order, or None."""
    inst = as_instance(inst)
    if inst.n == 0:
        return None if inst.m else Allocation.from_bundles(inst, {})
    if inst.n ** inst.m > cap:
        raise CapExceeded(f"{inst.n}^{inst.m} allocations exceed the cap of {cap}")
    for choice in product(range(inst.n), repeat=inst.m):
        bundles: dict[str, set[str]] = {ag: set() for ag in inst.agents}
        for a, k in zip(inst.items, choice):
            bundles[inst.agents[k]].add(a)
        alloc = Allocation.from_bundles(inst, bundles)
        if check_efx(inst, alloc).holds:
            return alloc
    return None


def brute_force_efx_orientation_allocation(inst) -> Allocation | None:
    """Like :func:`brute_force_efx_allocation` but only over orientations."""
    inst = as_instance(inst)
    lists = [inst.agent_lists[a] for a in inst.items]
    for choice in product(*lists):
        alloc = Allocation.from_bundles(inst, _group(inst, choice))
        if check_efx(inst, alloc).holds:
            assert check_orientation(inst, alloc)[0]
            return alloc
    return None


def _group(inst: Instance, choice) -> dict[str, set[str]]:
    bundles: dict[str, set[str]] = {ag: set() for ag in inst.agents}
    for a, ag in zip(inst.items, choice):
        bundles[ag].add(a)
    return bundles
