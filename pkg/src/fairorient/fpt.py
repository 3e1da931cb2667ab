"""Record-based dynamic program deciding EFX orientations on simple graphs.

A layout is a rooted spanning tree T of a supergraph H of G.  Each vertex v
of T gets a set of records (R, S): R orients the G-edges leaving the subtree
V_v, S lists boundary vertices that may be envied (and so must receive exactly
one edge).  Records are combined bottom-up; the instance is a yes-instance iff
the root ends up with the record (empty, empty).

Arcs are pairs (tail, head); the head receives the edge.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Mapping

from .instance import Allocation, GraphInstance, orientation_to_allocation

logger = logging.getLogger(__name__)

Arc = tuple[str, str]
Record = tuple[frozenset, frozenset]     # (R: arcs, S: vertices)
EMPTY_RECORD: Record = (frozenset(), frozenset())


class LayoutError(ValueError):
    """The supplied tree/supergraph does not form a valid layout."""


class LayoutInvariantError(AssertionError):
    """A structural bound on layouts failed (should be unreachable)."""


@dataclass
class TreeLayout:
    g: GraphInstance
    h_extra: tuple[tuple[str, str], ...]
    parent: dict[str, str | None]
    root: str
    children: dict[str, list[str]] = field(default_factory=dict)
    subtree: dict[str, frozenset] = field(default_factory=dict)
    closure: dict[str, frozenset] = field(default_factory=dict)
    boundary: dict[str, frozenset] = field(default_factory=dict)
    eloc: dict[str, frozenset] = field(default_factory=dict)
    closed: dict[str, list[str]] = field(default_factory=dict)
    open: dict[str, list[str]] = field(default_factory=dict)
    postorder: list[str] = field(default_factory=list)
    k: int = 1

    def to_json(self) -> dict:
        return {"h_extra_edges": [list(e) for e in self.h_extra],
                "tree_parent": {v: p for v, p in self.parent.items() if p is not None},
                "root": self.root}


def _h_pairs(g: GraphInstance, h_extra) -> set[frozenset]:
    pairs = {frozenset((e.u, e.v)) for e in g.edges}
    vs = set(g.vertices)
    for u, w in h_extra:
        if u not in vs or w not in vs or u == w:
            raise LayoutError(f"extra edge {u}-{w} is not a pair of distinct vertices")
        pairs.add(frozenset((u, w)))
    return pairs


def _check_tree(g: GraphInstance, parent: Mapping[str, str | None], root: str,
                hpairs: set[frozenset]) -> dict[str, str | None]:
    vs = set(g.vertices)
    if root not in vs:
        raise LayoutError(f"root {root!r} is not a vertex")
    par: dict[str, str | None] = {v: None for v in g.vertices}
    for v, p in parent.items():
        if v not in vs:
            raise LayoutError(f"tree mentions unknown vertex {v!r}")
        if v == root:
            if p is not None:
                raise LayoutError("the root cannot have a parent")
            continue
        if p not in vs:
            raise LayoutError(f"parent {p!r} of {v!r} is not a vertex")
        if frozenset((v, p)) not in hpairs:
            raise LayoutError(f"tree edge {v}-{p} is not an edge of H")
        par[v] = p
    for v in g.vertices:
        if v != root and par[v] is None:
            raise LayoutError(f"tree does not span H: {v!r} has no parent")
        seen, x = set(), v
        while x != root:
            if x in seen:
                raise LayoutError(f"tree has a cycle through {x!r}")
            seen.add(x)
            x = par[x]
    return par


def tree_path(parent: Mapping[str, str | None], u: str, w: str) -> list[str]:
    """Vertices of the tree path from u to w."""
    up = [u]
    while parent[up[-1]] is not None:
        up.append(parent[up[-1]])
    pos = {x: k for k, x in enumerate(up)}
    down = [w]
    while down[-1] not in pos:
        down.append(parent[down[-1]])
    meet = down[-1]
    return up[:pos[meet] + 1] + down[-2::-1]


def local_feedback_sets(vertices, pairs: Iterable[frozenset],
                        parent: Mapping[str, str | None]) -> dict[str, frozenset]:
    tree = {frozenset((v, p)) for v, p in parent.items() if p is not None}
    loc: dict[str, set] = {v: set() for v in vertices}
    for e in pairs:
        if e in tree:
            continue
        u, w = sorted(e)
        for x in tree_path(parent, u, w):
            loc[x].add(e)
    return {v: frozenset(s) for v, s in loc.items()}


def edge_cut_width(g: GraphInstance, parent, h_extra=()) -> int:
    loc = local_feedback_sets(g.vertices, _h_pairs(g, h_extra), parent)
    return 1 + max((len(s) for s in loc.values()), default=0)


def build_layout(g: GraphInstance, h_extra: Iterable = (), parent: Mapping | None = None,
                 root: str | None = None) -> TreeLayout:
    """Derive subtrees, boundaries, local feedback sets and k; checks the layout bounds."""
    if not g.vertices:
        raise LayoutError("empty graph has no layout")
    h_extra = tuple((str(u), str(w)) for u, w in h_extra)
    root = g.vertices[0] if root is None else root
    hpairs = _h_pairs(g, h_extra)
    par = _check_tree(g, parent or {}, root, hpairs)
    lay = TreeLayout(g, h_extra, par, root)
    idx = {v: k for k, v in enumerate(g.vertices)}
    lay.children = {v: [] for v in g.vertices}
    for v in g.vertices:
        if par[v] is not None:
            lay.children[par[v]].append(v)
    order, stack = [], [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(sorted(lay.children[v], key=idx.__getitem__, reverse=True))
    lay.postorder = order[::-1]
    adj = g.adjacency
    for v in lay.postorder:
        sub = {v}
        for c in lay.children[v]:
            sub |= lay.subtree[c]
        lay.subtree[v] = frozenset(sub)
        bd = set()
        for x in sub:
            for y in adj[x]:
                if y not in sub:
                    bd.update((x, y))
        lay.boundary[v] = frozenset(bd)
        lay.closure[v] = frozenset(sub | {y for x in sub for y in adj[x]})
    lay.eloc = local_feedback_sets(g.vertices, hpairs, par)
    lay.k = 1 + max((len(s) for s in lay.eloc.values()), default=0)
    for v in g.vertices:
        kids = sorted(lay.children[v], key=idx.__getitem__)
        # a child is closed for the DP when its only outside edge goes to v
        lay.closed[v] = [w for w in kids if lay.boundary[w] == frozenset((v, w))]
        lay.open[v] = [w for w in kids if w not in lay.closed[v]]
    _check_bounds(lay)
    return lay


def _check_bounds(lay: TreeLayout) -> None:
    k = lay.k
    for v in lay.g.vertices:
        b = len(lay.boundary[v])
        if b == 1:
            raise LayoutInvariantError(f"boundary of {v} has size 1")
        if b > 2 * k + 2:
            raise LayoutInvariantError(f"|boundary({v})| = {b} exceeds 2k+2 = {2 * k + 2}")
        wide = sum(1 for w in lay.children[v] if len(lay.boundary[w]) > 2)
        if wide > 2 * k:
            raise LayoutInvariantError(f"{v} has {wide} open children, more than 2k = {2 * k}")


# ---------------------------------------------------------------------------
# layout search
# ---------------------------------------------------------------------------


def _components(g: GraphInstance) -> list[list[str]]:
    seen, comps = set(), []
    adj = g.adjacency
    for s in g.vertices:
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        idx = {v: k for k, v in enumerate(g.vertices)}
        comps.append(sorted(comp, key=idx.__getitem__))
    return comps


def _parent_from_edges(vertices, tree_edges, root) -> dict[str, str | None]:
    nb: dict[str, list[str]] = {v: [] for v in vertices}
    for u, w in tree_edges:
        nb[u].append(w)
        nb[w].append(u)
    par = {root: None}
    queue = [root]
    for x in queue:
        for y in nb[x]:
            if y not in par:
                par[y] = x
                queue.append(y)
    return par


def _component_k(vertices, pairs, par) -> int:
    loc = local_feedback_sets(vertices, pairs, par)
    return 1 + max((len(s) for s in loc.values()), default=0)


def _exhaustive_tree(vertices, pairs, budget: int):
    """Best spanning tree by trying every (|V|-1)-subset of edges; None if over budget."""
    n = len(vertices)
    plist = [tuple(sorted(p)) for p in pairs]
    best, tried = None, 0
    for combo in combinations(range(len(plist)), n - 1):
        tried += 1
        if tried > budget:
            return None
        uf = {v: v for v in vertices}

        def find(x):
            while uf[x] != x:
                uf[x] = uf[uf[x]]
                x = uf[x]
            return x
        ok = True
        for k in combo:
            a, b = find(plist[k][0]), find(plist[k][1])
            if a == b:
                ok = False
                break
            uf[a] = b
        if not ok:
            continue
        par = _parent_from_edges(vertices, [plist[k] for k in combo], vertices[0])
        k = _component_k(vertices, pairs, par)
        if best is None or k < best[0]:
            best = (k, par)
            if k == 1:
                break
    return best


def _greedy_tree(vertices, pairs, adj, budget: int):
    deg = {v: len(adj[v]) for v in vertices}
    root = min(vertices, key=lambda v: deg[v])
    par = {root: None}
    queue = [root]
    for x in queue:
        for y in adj[x]:
            if y not in par:
                par[y] = x
                queue.append(y)
    best = _component_k(vertices, pairs, par)
    steps = 0
    improved = True
    while improved and steps < budget:
        improved = False
        tree = {frozenset((v, p)) for v, p in par.items() if p is not None}
        for e in sorted((p for p in pairs if p not in tree), key=sorted):
            u, w = sorted(e)
            path = tree_path(par, u, w)
            for a, b in zip(path, path[1:]):
                steps += 1
                cand = (tree - {frozenset((a, b))}) | {e}
                npar = _parent_from_edges(vertices, [tuple(t) for t in cand], vertices[0])
                nk = _component_k(vertices, pairs, npar)
                if nk < best:
                    best, par, improved = nk, npar, True
                    break
                if steps >= budget:
                    break
            if improved or steps >= budget:
                break
    return best, par


def search_layout(g: GraphInstance, budget: int = 20000, exhaustive_limit: int = 8) -> TreeLayout:
    """Heuristic low-width layout with H = G plus tree edges joining components."""
    if not g.vertices:
        raise LayoutError("empty graph has no layout")
    adj = g.adjacency
    # declaration order keeps the search independent of hash seeds
    allpairs = list(dict.fromkeys(frozenset((e.u, e.v)) for e in g.edges))
    parent: dict[str, str | None] = {}
    roots = []
    for comp in _components(g):
        cset = set(comp)
        pairs = [p for p in allpairs if p <= cset]
        found = None
        if len(comp) <= exhaustive_limit:
            found = _exhaustive_tree(comp, pairs, budget)
        if found is None:
            found = _greedy_tree(comp, pairs, adj, budget)
        _, par = found
        croot = next(v for v, p in par.items() if p is None)
        roots.append(croot)
        parent.update(par)
    root = roots[0]
    extra = []
    for r in roots[1:]:
        parent[r] = root
        extra.append((root, r))
    return build_layout(g, extra, parent, root)


def layout_from_json(g: GraphInstance, doc: Mapping) -> TreeLayout:
    try:
        extra = [tuple(p) for p in doc.get("h_extra_edges", [])]
        parent = dict(doc["tree_parent"])
        root = doc["root"]
    except (KeyError, TypeError, AttributeError) as exc:
        raise LayoutError(f"malformed layout document: {exc}") from exc
    if any(len(p) != 2 for p in extra):
        raise LayoutError("h_extra_edges entries must be vertex pairs")
    parent.pop(root, None)
    return build_layout(g, extra, parent, root)


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


class _Ctx:
    """Value helpers for one graph."""

    def __init__(self, g: GraphInstance):
        if not g.is_simple:
            raise ValueError("the record DP works on simple graphs only")
        self.g = g
        self.inst = g.instance
        self._eid = {frozenset((e.u, e.v)): e.id for e in g.edges}

    def eid(self, a: str, b: str) -> str:
        return self._eid[frozenset((a, b))]

    def val(self, v: str, arcs_or_nbrs: Iterable[str]) -> Fraction:
        """Value of v for the edges between v and the given neighbours."""
        return self.inst.value(v, {self.eid(v, w) for w in arcs_or_nbrs})


def _normalize_closed(rec: Record, v: str, w: str) -> Record:
    """Closed child w of v: with the edge going to v, w's membership in S is irrelevant above w."""
    R, S = rec
    if (w, v) in R:
        return (R, S - {w})
    return rec


def leaf_records(layout: TreeLayout, v: str, ctx: _Ctx | None = None,
                 provenance: dict | None = None) -> set[Record]:
    """Records at a leaf, by branching over orientations of its incident edges."""
    ctx = ctx or _Ctx(layout.g)
    nbrs = layout.g.adjacency[v]
    bd = layout.boundary[v]
    out: set[Record] = set()
    for bits in product((0, 1), repeat=len(nbrs)):
        mine = [w for w, b in zip(nbrs, bits) if b]      # edges v receives
        theirs = [w for w, b in zip(nbrs, bits) if not b]
        own = ctx.val(v, mine)
        R = frozenset([(w, v) for w in mine] + [(v, w) for w in theirs])
        envied = {w for w in theirs if ctx.val(v, [w]) > own}
        indeg1 = set(theirs) | ({v} if len(mine) == 1 else set())
        optional = sorted((indeg1 & bd) - envied)
        for k in range(len(optional) + 1):
            for extra in combinations(optional, k):
                rec = (R, frozenset(envied | set(extra)))
                if rec not in out:
                    out.add(rec)
                    if provenance is not None:
                        provenance[rec] = ("leaf", {ctx.eid(v, w): w for w in theirs} |
                                           {ctx.eid(v, w): v for w in mine})
    return out


def _has(recs: set[Record], arc: Arc, S: Iterable[str] = ()) -> bool:
    return (frozenset([arc]), frozenset(S)) in recs


def combine_records(layout: TreeLayout, v: str, child_sets: Mapping[str, set[Record]],
                    ctx: _Ctx | None = None, provenance: dict | None = None) -> set[Record]:
    """Records at an internal vertex from the record sets of its children."""
    ctx = ctx or _Ctx(layout.g)
    g = layout.g
    out: set[Record] = set()
    kids = layout.children[v]
    if any(not child_sets[c] for c in kids):
        return out
    closed = layout.closed[v]
    opened = layout.open[v]
    cset = set(closed)
    Vv = layout.subtree[v]
    bd = layout.boundary[v]
    child_vertices = set().union(*(layout.subtree[c] for c in kids)) if kids else set()
    V0 = ({v} | bd) - child_vertices
    outer = [w for w in g.adjacency[v] if w not in Vv]    # edges oriented by R_0
    nbr_not_c = [w for w in g.adjacency[v] if w not in cset]
    s_closed = {c: ctx.val(v, [c]) for c in closed}
    crec = {c: child_sets[c] for c in closed}

    def add(rec: Record, branch, closed_choice):
        if rec not in out:
            out.add(rec)
            if provenance is not None:
                provenance[rec] = ("combine", branch, dict(closed_choice))

    open_lists = [sorted(child_sets[c], key=_record_key) for c in opened]
    for open_choice in product(*open_lists):
        R_open = frozenset().union(*(r for r, _ in open_choice)) if open_choice else frozenset()
        for bits in product((0, 1), repeat=len(outer)):
            R0 = frozenset((w, v) if b else (v, w) for w, b in zip(outer, bits))
            Rp = R_open | R0
            if any((b, a) in Rp for a, b in Rp):
                continue
            indeg: dict[str, int] = {}
            for _, h in Rp:
                indeg[h] = indeg.get(h, 0) + 1
            cand0 = sorted((w for w in V0 - {v} if indeg.get(w, 0) == 1))
            S_open = frozenset().union(*(s for _, s in open_choice)) if open_choice else frozenset()
            for k in range(len(cand0) + 1):
                for S0 in combinations(cand0, k):
                    Sp = S_open | frozenset(S0)
                    if any(indeg.get(w, 0) > 1 for w in Sp):
                        continue
                    if any(layout.subtree[c] & Sp != layout.subtree[c] & s
                           for c, (_, s) in zip(opened, open_choice)):
                        continue
                    R = frozenset(a for a in Rp if (a[0] in Vv) != (a[1] in Vv))
                    S = Sp & bd
                    branch = (tuple(zip(opened, open_choice)), R0)
                    _cases(ctx, v, Rp, Sp, R, S, bd, closed, nbr_not_c, s_closed, crec,
                           branch, add)
    return out


def _cases(ctx, v, Rp, Sp, R, S, bd, closed, nbr_not_c, s_closed, crec, branch, add):
    in_arcs = [a for a in Rp if a[1] == v]
    SV = (S | {v}) & bd

    def outside_ok(s: Fraction) -> bool:
        # v must not envy a non-closed neighbour that is not allowed to be envied
        return all(ctx.val(v, [w]) <= s for w in nbr_not_c
                   if w not in Sp and (v, w) in Rp)

    # Case 0: v receives nothing
    if not in_arcs:
        choice, ok = {}, True
        for c in closed:
            want = (frozenset([(v, c)]), frozenset([c]) if s_closed[c] > 0 else frozenset())
            if want not in crec[c]:
                ok = False
                break
            choice[c] = want
        if ok and all(w in Sp for w in nbr_not_c if (v, w) in Rp and ctx.val(v, [w]) > 0):
            add((R, S), branch, choice)

    # Case 1: exactly one in-neighbour, from outside the closed children
    if len(in_arcs) == 1:
        s1 = ctx.val(v, [in_arcs[0][0]])
        choice, ok = {}, True
        for c in closed:
            if not _has(crec[c], (v, c)):
                ok = False
                break
            if s_closed[c] > s1:
                if not _has(crec[c], (v, c), [c]):
                    ok = False
                    break
                choice[c] = (frozenset([(v, c)]), frozenset([c]))
            else:
                choice[c] = (frozenset([(v, c)]), frozenset())
        if ok and outside_ok(s1):
            add((R, S), branch, choice)
            add((R, SV), branch, choice)

    # Case 1': the unique in-neighbour is a closed child
    if not in_arcs:
        for ci in closed:
            if not _has(crec[ci], (ci, v), [v]):
                continue
            si = s_closed[ci]
            choice, ok = {}, True
            for c in closed:
                if c == ci:
                    continue
                if not _has(crec[c], (v, c)):
                    ok = False
                    break
                if s_closed[c] > si:
                    if not _has(crec[c], (v, c), [c]):
                        ok = False
                        break
                    choice[c] = (frozenset([(v, c)]), frozenset([c]))
                else:
                    choice[c] = (frozenset([(v, c)]), frozenset())
            if not ok or not outside_ok(si):
                continue
            plain = _has(crec[ci], (ci, v))
            choice[ci] = (frozenset([(ci, v)]), frozenset() if plain else frozenset([v]))
            add((R, SV), branch, choice)
            if plain:
                add((R, S), branch, choice)

    # Case 2: v may receive several edges and is never envied
    if v not in Sp:
        toward = [c for c in closed if _has(crec[c], (c, v))]
        tset = set(toward)
        if all(_has(crec[c], (v, c)) for c in closed if c not in tset):
            s = ctx.val(v, [a[0] for a in in_arcs] + toward)
            choice, ok = {}, True
            for c in closed:
                if c in tset:
                    choice[c] = (frozenset([(c, v)]), frozenset())
                elif s < s_closed[c]:
                    if not _has(crec[c], (v, c), [c]):
                        ok = False
                        break
                    choice[c] = (frozenset([(v, c)]), frozenset([c]))
                else:
                    choice[c] = (frozenset([(v, c)]), frozenset())
            if ok and outside_ok(s):
                add((R, S), branch, choice)


def _record_key(rec: Record):
    R, S = rec
    return (sorted(R), sorted(S))


@dataclass
class DPResult:
    layout: TreeLayout
    records: dict[str, set[Record]]
    provenance: dict[str, dict] | None

    @property
    def decision(self) -> bool:
        return EMPTY_RECORD in self.records[self.layout.root]

    def witness(self) -> dict[str, str] | None:
        """Edge id -> receiving endpoint for an EFX orientation, or None."""
        if not self.decision:
            return None
        if self.provenance is None:
            raise ValueError("run the DP with provenance to reconstruct witnesses")
        recv: dict[str, str] = {}
        stack = [(self.layout.root, EMPTY_RECORD)]
        ctx = _Ctx(self.layout.g)
        while stack:
            v, rec = stack.pop()
            entry = self.provenance[v][rec]
            if entry[0] == "leaf":
                recv.update(entry[1])
                continue
            _, (open_choice, R0), closed_choice = entry
            for t, h in R0:
                recv[ctx.eid(t, h)] = h
            for c, r in open_choice:
                stack.append((c, r))
            for c, r in closed_choice.items():
                stack.append((c, r))
        return recv


def run_dp(layout: TreeLayout, provenance: bool = True) -> DPResult:
    ctx = _Ctx(layout.g)
    records: dict[str, set[Record]] = {}
    prov: dict[str, dict] | None = {} if provenance else None
    for v in layout.postorder:
        p = {} if provenance else None
        if layout.children[v]:
            recs = combine_records(layout, v, records, ctx, p)
        else:
            recs = leaf_records(layout, v, ctx, p)
        par = layout.parent[v]
        if par is not None and v in layout.closed[par]:
            norm: set[Record] = set()
            for rec in sorted(recs, key=_record_key):
                n = _normalize_closed(rec, par, v)
                if n not in norm:
                    norm.add(n)
                    if p is not None and n != rec:
                        p[n] = p[rec]
            recs = norm
        records[v] = recs
        if prov is not None:
            prov[v] = p
        logger.debug("records at %s: %d", v, len(recs))
    return DPResult(layout, records, prov)


def decide_efx(layout: TreeLayout, witness: bool = True) -> tuple[bool, Allocation | None]:
    """Whether an EFX orientation exists, plus one when ``witness`` is set."""
    res = run_dp(layout, provenance=witness)
    if not res.decision:
        return False, None
    if not witness:
        return True, None
    return True, orientation_to_allocation(layout.g, res.witness())


def fpt_efx_orientation(g: GraphInstance, layout: TreeLayout | None = None,
                        budget: int = 20000) -> tuple[bool, Allocation | None, TreeLayout]:
    if not g.vertices:
        empty = orientation_to_allocation(g, {})
        return True, empty, None
    layout = layout or search_layout(g, budget)
    ok, alloc = decide_efx(layout)
    return ok, alloc, layout


# ---------------------------------------------------------------------------
# oracle: records straight from the definition
# ---------------------------------------------------------------------------


def enumerate_records(layout: TreeLayout, v: str, normalize: bool = True) -> set[Record]:
    """All records at v by trying every orientation of the edges touching V_v."""
    g = layout.g
    inst = g.instance
    Vv = layout.subtree[v]
    bd = layout.boundary[v]
    edges = [e for e in g.edges if e.u in Vv or e.v in Vv]
    out: set[Record] = set()
    for bits in product((0, 1), repeat=len(edges)):
        bundle: dict[str, set[str]] = {}
        R = set()
        for e, b in zip(edges, bits):
            tail, head = (e.u, e.v) if b else (e.v, e.u)
            bundle.setdefault(head, set()).add(e.id)
            if (e.u in Vv) != (e.v in Vv):
                R.add((tail, head))
        ok = True
        envied = set()
        for u in Vv:
            own = inst.value(u, bundle.get(u, ()))
            for w, bw in bundle.items():
                if w == u or inst.value(u, bw) <= own:
                    continue
                if w in Vv:
                    if any(inst.value(u, bw - {b}) > own for b in bw):
                        ok = False
                        break
                if w in bd:
                    envied.add(w)
            if not ok:
                break
        if not ok:
            continue
        indeg1 = {w for w in bd if len(bundle.get(w, ())) == 1}
        if not envied <= indeg1:
            continue
        optional = sorted(indeg1 - envied)
        for k in range(len(optional) + 1):
            for extra in combinations(optional, k):
                out.add((frozenset(R), frozenset(envied | set(extra))))
    par = layout.parent[v]
    if normalize and par is not None and v in layout.closed[par]:
        out = {_normalize_closed(r, par, v) for r in out}
    return out
