"""EFXr orientations: decomposable instances, multigraphs, faces of planar maps."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Mapping

import networkx as nx

from .ef1 import solve_ef1
from .efx_exact import CapExceeded, brute_force_efx_allocation
from .instance import Allocation, GraphInstance, Instance, PlanarInstance, as_instance

logger = logging.getLogger(__name__)

MULTI_EDGE_CAP = 20


# ---------------------------------------------------------------------------
# decomposable instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ItemGroup:
    agents: tuple[str, ...]     # the shared agent list, declaration order
    items: tuple[str, ...]


@dataclass(frozen=True)
class NotDecomposable:
    witness: tuple[str, str]    # two items whose agent lists share two or more agents

    def __bool__(self):
        return False


class NoGroupSolution(RuntimeError):
    pass


def decompose_groups(inst) -> list[ItemGroup] | NotDecomposable:
    """Items grouped by agent list; groups may pairwise share at most one agent."""
    inst = as_instance(inst)
    groups: dict[tuple[str, ...], list[str]] = {}
    for a in inst.items:
        groups.setdefault(inst.agent_lists[a], []).append(a)
    out = [ItemGroup(k, tuple(v)) for k, v in groups.items()]
    for g1, g2 in combinations(out, 2):
        if len(set(g1.agents) & set(g2.agents)) > 1:
            return NotDecomposable((g1.items[0], g2.items[0]))
    return out


def group_instance(inst: Instance, group: ItemGroup) -> Instance:
    """The group's items shared among the group's agents only."""
    return inst.subinstance(group.items, group.agents)


def combine_group_allocations(inst, per_group: Mapping[ItemGroup, Allocation]) -> Allocation:
    """Union of per-group allocations."""
    inst = as_instance(inst)
    bundles: dict[str, set[str]] = {ag: set() for ag in inst.agents}
    for group, alloc in per_group.items():
        if alloc.unallocated or set().union(*alloc.bundles.values()) != set(group.items):
            raise ValueError(f"allocation for group {group.agents} does not cover exactly its items")
        for ag, b in alloc.bundles.items():
            if b and ag not in group.agents:
                raise ValueError(f"agent {ag!r} outside group {group.agents} received items")
            bundles[ag] |= b
    return Allocation.from_bundles(inst, bundles)


def _efx_group(sub: Instance, cap: int) -> Allocation:
    alloc = brute_force_efx_allocation(sub, cap=cap)
    if alloc is None:
        raise NoGroupSolution(f"group {sub.agents} has no EFX allocation")
    return alloc


def _ef1_group(sub: Instance, cap: int) -> Allocation:
    return solve_ef1(sub).allocation


GROUP_SOLVERS: dict[str, Callable[[Instance, int], Allocation]] = {
    "efx": _efx_group,
    "ef1": _ef1_group,
}


def solve_decomposable(inst, fairness: str = "efx", cap: int = 2 ** 20) -> Allocation:
    """Solve each item group on its own and glue the results.

    Per-group EFX gives an EFXr orientation, per-group EF1 an EF1 orientation.
    """
    inst = as_instance(inst)
    groups = decompose_groups(inst)
    if isinstance(groups, NotDecomposable):
        raise ValueError(f"instance is not decomposable: items {groups.witness}")
    solver = GROUP_SOLVERS[fairness]
    per_group = {grp: solver(group_instance(inst, grp), cap) for grp in groups}
    return combine_group_allocations(inst, per_group)


def multigraph_efxr(g: GraphInstance, cap: int = MULTI_EDGE_CAP) -> Allocation:
    """EFXr orientation of a (multi)graph from a two-agent EFX split of every multi-edge."""
    inst = g.instance
    for es in g.pair_edges.values():
        if len(es) > cap:
            raise CapExceeded(f"{len(es)} parallel edges exceed the cap of {cap}")
    return solve_decomposable(inst, "efx", cap=2 ** cap)


# ---------------------------------------------------------------------------
# faces of planar triangulated disks
# ---------------------------------------------------------------------------


class PlanarInputError(ValueError):
    pass


Faces = dict[str, frozenset]     # face id -> its three vertices


def _edges_of(faces: Faces) -> dict[frozenset, list[str]]:
    out: dict[frozenset, list[str]] = {}
    for fid, f in faces.items():
        for a, b in combinations(sorted(f), 2):
            out.setdefault(frozenset((a, b)), []).append(fid)
    return out


def _graph(faces: Faces) -> nx.Graph:
    g = nx.Graph()
    for e in _edges_of(faces):
        g.add_edge(*sorted(e))
    return g


def boundary_cycle(faces: Faces) -> list[str] | None:
    """Boundary walk of a triangulated disk, or None if the faces do not form one."""
    if not faces:
        return None
    if len(set(faces.values())) != len(faces):
        return None
    edges = _edges_of(faces)
    if any(len(fs) > 2 for fs in edges.values()):
        return None
    bd = [tuple(sorted(e)) for e, fs in edges.items() if len(fs) == 1]
    nb: dict[str, list[str]] = {}
    for a, b in bd:
        nb.setdefault(a, []).append(b)
        nb.setdefault(b, []).append(a)
    if not nb or any(len(x) != 2 for x in nb.values()):
        return None
    start = min(nb)
    cyc, prev, cur = [start], None, start
    while True:
        nxt = min(nb[cur]) if prev is None else next(x for x in nb[cur] if x != prev)
        if nxt == start:
            break
        cyc.append(nxt)
        prev, cur = cur, nxt
    if len(cyc) != len(nb):
        return None
    verts = set().union(*faces.values())
    if len(verts) - len(edges) + len(faces) != 1:
        return None
    # every vertex must see its faces as one fan
    for x in verts:
        around = [fid for fid, f in faces.items() if x in f]
        adj = nx.Graph()
        adj.add_nodes_from(around)
        for e, fs in edges.items():
            if x in e and len(fs) == 2:
                adj.add_edge(*fs)
        if not nx.is_connected(adj):
            return None
    g = _graph(faces)
    if not nx.is_biconnected(g):
        return None
    return cyc


def _same_cycle(a: list[str], b: list[str]) -> bool:
    if len(a) != len(b) or set(a) != set(b):
        return False
    k = b.index(a[0])
    rot = b[k:] + b[:k]
    return rot == a or [rot[0]] + rot[:0:-1] == a


def planar_faces(p: PlanarInstance) -> Faces:
    """Validated face map of a planar instance."""
    faces = {fid: frozenset(f) for fid, f in zip(p.face_ids, p.faces)}
    verts = set(p.vertices)
    if not faces:
        raise PlanarInputError("no inner faces")
    covered = set().union(*faces.values())
    if covered != verts:
        raise PlanarInputError(f"vertices {sorted(verts - covered)} lie on no inner face "
                               "(graph is not 2-connected)")
    cyc = boundary_cycle(faces)
    if cyc is None:
        g = _graph(faces)
        if not nx.is_biconnected(g):
            raise PlanarInputError("graph is not 2-connected")
        raise PlanarInputError("faces do not form a triangulated disk")
    if p.outer_boundary and not _same_cycle(list(p.outer_boundary), cyc):
        raise PlanarInputError("outer boundary does not match the faces")
    return faces


def is_proper(faces: Faces, owner: Mapping[str, str]) -> tuple[bool, list[str]]:
    """At most two faces per vertex; at most one allocated shared face per vertex and pair."""
    problems = []
    count: dict[str, int] = {}
    for fid, v in owner.items():
        count[v] = count.get(v, 0) + 1
    for v, c in sorted(count.items()):
        if c > 2:
            problems.append(f"{v} receives {c} faces")
    verts = sorted(set().union(*faces.values())) if faces else []
    for u, w in combinations(verts, 2):
        shared = [fid for fid, f in faces.items() if u in f and w in f]
        if len(shared) < 2:
            continue
        for x in (u, w):
            got = sum(1 for fid in shared if owner.get(fid) == x)
            if got > 1:
                problems.append(f"{x} receives {got} faces shared with {w if x == u else u}")
    return not problems, problems


def _search_proper(faces: Faces, order: Mapping[str, int]) -> dict[str, str] | None:
    """Exact backtracking for a proper allocation."""
    fids = sorted(faces)
    owner: dict[str, str] = {}
    count: dict[str, int] = {}
    pair_got: dict[tuple[str, str], int] = {}

    def rec(k: int) -> bool:
        if k == len(fids):
            return True
        fid = fids[k]
        f = faces[fid]
        for v in sorted(f, key=order.__getitem__):
            if count.get(v, 0) >= 2:
                continue
            keys = [(v, w) for w in f if w != v]
            if any(pair_got.get(key, 0) >= 1 and _shares_two(faces, *key) for key in keys):
                continue
            owner[fid] = v
            count[v] = count.get(v, 0) + 1
            for key in keys:
                pair_got[key] = pair_got.get(key, 0) + 1
            if rec(k + 1):
                return True
            del owner[fid]
            count[v] -= 1
            for key in keys:
                pair_got[key] -= 1
        return False

    return dict(owner) if rec(0) else None


def _shares_two(faces: Faces, u: str, w: str) -> bool:
    return sum(1 for f in faces.values() if u in f and w in f) >= 2


@dataclass
class PlanarStats:
    steps: int = 0
    ears: int = 0
    contractions: int = 0
    fallbacks: int = 0


def _reduction_step(faces: Faces, order: Mapping[str, int]):
    """First valid inductive step: ("ear", v, f) or ("contract", v, v', v'', f0, f1)."""
    cyc = boundary_cycle(faces)
    g = _graph(faces)
    pos = {x: k for k, x in enumerate(cyc)}
    for v in sorted(cyc, key=order.__getitem__):
        rest = g.copy()
        rest.remove_node(v)
        if not nx.is_biconnected(rest):
            continue
        at_v = [fid for fid, f in faces.items() if v in f]
        if g.degree(v) == 2:
            sub = {fid: f for fid, f in faces.items() if fid != at_v[0]}
            if boundary_cycle(sub) is not None:
                return ("ear", v, at_v[0]), sub
            continue
        k = pos[v]
        for vp in sorted({cyc[k - 1], cyc[(k + 1) % len(cyc)]}, key=order.__getitem__):
            f0 = next(fid for fid in at_v if vp in faces[fid])
            (vpp,) = faces[f0] - {v, vp}
            f1 = next((fid for fid in at_v if fid != f0 and vpp in faces[fid]), None)
            sub = {}
            for fid, f in faces.items():
                if fid == f0:
                    continue
                sub[fid] = (f - {v}) | {vp} if v in f else f
            if boundary_cycle(sub) is not None:
                return ("contract", v, vp, vpp, f0, f1), sub
    return None, None


def _lift(step, owner: dict[str, str], faces: Faces) -> dict[str, str]:
    if step[0] == "ear":
        _, v, f = step
        out = dict(owner)
        out[f] = v
        return out
    _, v, vp, vpp, f0, f1 = step
    out = {}
    for fid, f in faces.items():
        if fid == f0:
            continue
        w = owner[fid]
        out[fid] = v if (v in f and w == vp) else w
    got_v = sum(1 for w in out.values() if w == v)
    out[f0] = v if got_v < 2 and (f1 is None or out.get(f1) != v) else vp
    return out


def planar_faces_orientation(p: PlanarInstance, stats: PlanarStats | None = None) -> Allocation:
    """Proper (hence EFXr) allocation of the inner faces of a triangulated disk."""
    faces = planar_faces(p)
    order = {v: k for k, v in enumerate(p.vertices)}
    stats = stats if stats is not None else PlanarStats()
    stack: list[tuple[tuple, Faces]] = []
    cur = faces
    base: dict[str, str] | None = None
    while len(cur) > 1:
        step, sub = _reduction_step(cur, order)
        if step is None:
            logger.debug("no inductive step on %d faces; searching directly", len(cur))
            stats.fallbacks += 1
            base = _search_proper(cur, order)
            if base is None:
                raise RuntimeError("no proper allocation found")
            break
        stack.append((step, cur))
        cur = sub
    if base is None:
        (fid, f), = cur.items()
        base = {fid: min(f, key=order.__getitem__)}
    owner = base
    while stack:
        step, level = stack.pop()
        stats.steps += 1
        if step[0] == "ear":
            stats.ears += 1
        else:
            stats.contractions += 1
        lifted = _lift(step, owner, level)
        if not is_proper(level, lifted)[0]:
            stats.fallbacks += 1
            lifted = _search_proper(level, order)
            if lifted is None:
                raise RuntimeError("no proper allocation found")
        owner = lifted
    ok, problems = is_proper(faces, owner)
    if not ok:
        raise RuntimeError(f"construction produced an improper allocation: {problems}")
    inst = p.instance
    bundles: dict[str, set[str]] = {v: set() for v in p.vertices}
    for fid, v in owner.items():
        bundles[v].add(fid)
    return Allocation.from_bundles(inst, bundles)


def allocation_is_proper(p: PlanarInstance, alloc: Allocation) -> tuple[bool, list[str]]:
    faces = {fid: frozenset(f) for fid, f in zip(p.face_ids, p.faces)}
    owner = {fid: ag for ag, b in alloc.bundles.items() for fid in b}
    return is_proper(faces, owner)
