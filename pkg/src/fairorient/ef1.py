"""EF1 orientations under monotone valuations.

Envy-cycle elimination adapted to relevant sets: an unassigned item goes to
a source of the envy graph restricted to its agent list; after a cycle shift,
items that became irrelevant to their new owner go back to the pool.
"""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .instance import Allocation, IdenticalValuation, Instance, as_instance, range_size
from .verify import EnvyGraph, envy_graph

logger = logging.getLogger(__name__)


class SolverInvariantError(RuntimeError):
    """An internal invariant failed (should be unreachable)."""


class NoSourceError(SolverInvariantError):
    pass


@dataclass(frozen=True)
class NotLaminar:
    witness: tuple[str, str]

    def __bool__(self):
        return False


@dataclass(frozen=True)
class Policy:
    """Deterministic choices left open by the algorithm.

    item_order: "declaration", "laminar", or an explicit permutation of items.
    source_tiebreak: "lowest-index" or an explicit priority order of agents.
    """

    item_order: str | tuple[str, ...] = "declaration"
    source_tiebreak: str | tuple[str, ...] = "lowest-index"
    cycle_choice: str = "first-found-DFS"


@dataclass
class SolverState:
    inst: Instance
    bundles: dict[str, set[str]]
    pool: deque
    arcs: set[tuple[str, str]]
    priority: dict[str, int]
    trace: list[dict] = field(default_factory=list)
    potentials: list[tuple[Fraction, ...]] = field(default_factory=list)
    debug: bool = False

    @property
    def potential(self) -> tuple[Fraction, ...]:
        return tuple(self.inst.value(ag, self.bundles[ag]) for ag in self.inst.agents)

    @property
    def envy(self) -> EnvyGraph:
        return EnvyGraph(self.inst.agents, frozenset(self.arcs))

    def allocation(self) -> Allocation:
        return Allocation.from_bundles(self.inst, self.bundles)

    def record(self, event: dict) -> None:
        self.trace.append(event)
        self.potentials.append(self.potential)


@dataclass(frozen=True)
class EF1Result:
    allocation: Allocation
    trace: tuple[dict, ...]
    potentials: tuple[tuple[Fraction, ...], ...]

    @property
    def cycle_shifts(self) -> int:
        return sum(1 for e in self.trace if e["event"] == "cycle-shift")

    @property
    def pool_returns(self) -> int:
        return sum(len(e["returned"]) for e in self.trace if e["event"] == "cycle-shift")

    def trace_json(self) -> str:
        return json.dumps(list(self.trace))


def _full_arcs(inst: Instance, bundles) -> set[tuple[str, str]]:
    return set(envy_graph(inst, Allocation.from_bundles(inst, bundles)).arcs)


def _update_arcs(state: SolverState, i: str) -> None:
    """Recompute only the arcs into and out of ``i``."""
    inst, b = state.inst, state.bundles
    own_i = inst.value(i, b[i])
    for j in inst.agents:
        if j == i:
            continue
        if inst.value(j, b[i]) > inst.value(j, b[j]):
            state.arcs.add((j, i))
        else:
            state.arcs.discard((j, i))
        if inst.value(i, b[j]) > own_i:
            state.arcs.add((i, j))
        else:
            state.arcs.discard((i, j))


def pick_source(envy: EnvyGraph, candidates, priority: dict[str, int] | None = None) -> str:
    """A vertex of the envy graph induced on ``candidates`` with no incoming arc.

    Ties go to the lowest ``priority`` (declaration index by default).
    """
    cands = list(candidates)
    if priority is None:
        priority = {a: k for k, a in enumerate(envy.nodes)}
    cset = set(cands)
    for i in sorted(cands, key=priority.__getitem__):
        if not any((j, i) in envy.arcs for j in cset if j != i):
            return i
    raise NoSourceError(f"no source among {sorted(cands)}: envy graph has a cycle")


def find_cycle(arcs, order: Sequence[str]) -> list[str] | None:
    """First directed cycle met by DFS from agents in ``order``, as [i1, ..., il]."""
    succ = {a: [b for b in order if (a, b) in arcs] for a in order}
    color = {a: 0 for a in order}
    for root in order:
        if color[root]:
            continue
        path, pos = [root], {root: 0}
        color[root] = 1
        stack = [iter(succ[root])]
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                stack.pop()
                done = path.pop()
                del pos[done]
                color[done] = 2
                continue
            if color[nxt] == 1:
                return path[pos[nxt]:]
            if color[nxt] == 0:
                color[nxt] = 1
                pos[nxt] = len(path)
                path.append(nxt)
                stack.append(iter(succ[nxt]))
    return None


def eliminate_cycles(state: SolverState) -> SolverState:
    """Shift bundles backwards along envy cycles until the envy graph is acyclic.

    Agent i_j on a cycle (i_1 -> ... -> i_l -> i_1) takes the bundle of i_{j+1}
    (i_l takes that of i_1) intersected with its own relevant set; the
    remainder goes back to the pool.
    """
    inst = state.inst
    while True:
        cycle = find_cycle(state.arcs, sorted(inst.agents, key=state.priority.__getitem__))
        if cycle is None:
            return state
        before = {ag: inst.value(ag, state.bundles[ag]) for ag in cycle}
        old = {ag: set(state.bundles[ag]) for ag in cycle}
        returned: list[str] = []
        for k, ag in enumerate(cycle):
            nxt = cycle[(k + 1) % len(cycle)]
            keep = old[nxt] & inst.relevance[ag]
            returned.extend(inst.sort_items(old[nxt] - keep))
            state.bundles[ag] = keep
        state.pool.extend(returned)
        for ag in cycle:
            if not inst.value(ag, state.bundles[ag]) > before[ag]:
                raise SolverInvariantError(f"cycle shift did not increase the value of {ag}")
        state.arcs = _full_arcs(inst, state.bundles)
        state.record({"event": "cycle-shift", "cycle": list(cycle), "returned": returned})
        if state.debug:
            _check_state(state)


def _check_state(state: SolverState) -> None:
    inst = state.inst
    for ag, b in state.bundles.items():
        if not b <= inst.relevance[ag]:
            raise SolverInvariantError(f"bundle of {ag} has irrelevant items")
    fresh = _full_arcs(inst, state.bundles)
    if fresh != state.arcs:
        raise SolverInvariantError("incremental envy graph diverged from recomputation")
    for i in inst.agents:
        own = inst.value(i, state.bundles[i])
        for j in inst.agents:
            bj = state.bundles[j]
            if i != j and inst.value(i, bj) > own and \
                    all(inst.value(i, bj - {a}) > own for a in bj):
                raise SolverInvariantError(f"pair ({i}, {j}) lost the EF1 property")
    if len(state.potentials) >= 2:
        prev, cur = state.potentials[-2], state.potentials[-1]
        if any(c < p for c, p in zip(cur, prev)):
            raise SolverInvariantError("potential vector decreased")


def laminar_order(inst) -> list[str] | NotLaminar:
    """Items sorted by decreasing agent-list size (stable).

    Whenever j < k in the result, N_k is contained in N_j or disjoint from it;
    if the agent lists are not laminar the offending pair is returned instead.
    """
    inst = as_instance(inst)
    lists = {a: frozenset(inst.agent_lists[a]) for a in inst.items}
    order = sorted(inst.items, key=lambda a: -len(lists[a]))
    for x in range(len(order)):
        nx = lists[order[x]]
        for y in range(x + 1, len(order)):
            ny = lists[order[y]]
            if (nx & ny) and not ny <= nx:
                a, b = sorted((order[x], order[y]), key=inst.item_index.__getitem__)
                return NotLaminar((a, b))
    return order


def _priority(inst: Instance, policy: Policy) -> dict[str, int]:
    if policy.source_tiebreak == "lowest-index":
        return dict(inst.agent_index)
    order = list(policy.source_tiebreak)
    if sorted(order) != sorted(inst.agents):
        raise ValueError("source_tiebreak must be a permutation of the agents")
    return {a: k for k, a in enumerate(order)}


def _item_order(inst: Instance, policy: Policy) -> list[str]:
    if policy.item_order == "declaration":
        return list(inst.items)
    if policy.item_order == "laminar":
        order = laminar_order(inst)
        if isinstance(order, NotLaminar):
            raise ValueError(f"agent lists are not laminar: {order.witness}")
        return order
    order = list(policy.item_order)
    if sorted(order) != sorted(inst.items):
        raise ValueError("item_order must be a permutation of the items")
    return order


def iteration_guard(inst: Instance) -> int:
    widest = max((len(r) for r in inst.relevance.values()), default=0)
    return 4 * max(inst.n, 1) * max(inst.m, 1) * 2 ** min(widest, 24)


def solve_ef1(inst, policy: Policy = Policy(), debug: bool = False) -> EF1Result:
    """EF1 orientation for monotone valuations, with the full event trace."""
    inst = as_instance(inst)
    for a in inst.items:
        if not inst.agent_lists[a]:
            raise ValueError(f"item {a!r} has an empty agent list")
    state = SolverState(inst, {ag: set() for ag in inst.agents},
                        deque(_item_order(inst, policy)), set(), _priority(inst, policy),
                        debug=debug)
    state.potentials.append(state.potential)
    guard = iteration_guard(inst)
    steps = 0
    while state.pool:
        steps += 1
        if steps > guard:
            raise SolverInvariantError(f"iteration guard exceeded ({guard} steps)")
        a = state.pool.popleft()
        i = pick_source(state.envy, inst.agent_lists[a], state.priority)
        state.bundles[i].add(a)
        _update_arcs(state, i)
        state.record({"event": "assign", "item": a, "agent": i})
        if debug:
            _check_state(state)
        eliminate_cycles(state)
    return EF1Result(state.allocation(), tuple(state.trace), tuple(state.potentials))


def solve_ef1_identical(inst) -> EF1Result:
    """EF1 orientation for identical valuations without any cycle elimination.

    Each item goes to the agent of its agent list whose bundle has the smallest
    shared value; nobody can envy that agent, so the envy graph stays acyclic.
    """
    inst = as_instance(inst)
    if not isinstance(inst.valuation, IdenticalValuation):
        raise ValueError("solve_ef1_identical needs an identical valuation profile")
    shared = inst.valuation.shared
    bundles: dict[str, set[str]] = {ag: set() for ag in inst.agents}
    values = {ag: Fraction(0) for ag in inst.agents}
    trace, pots = [], [tuple(values[ag] for ag in inst.agents)]
    for a in inst.items:
        cands = inst.agent_lists[a]
        if not cands:
            raise ValueError(f"item {a!r} has an empty agent list")
        i = min(cands, key=lambda ag: (values[ag], inst.agent_index[ag]))
        bundles[i].add(a)
        values[i] = shared(frozenset(bundles[i]))
        trace.append({"event": "assign", "item": a, "agent": i})
        pots.append(tuple(values[ag] for ag in inst.agents))
    return EF1Result(Allocation.from_bundles(inst, bundles), tuple(trace), tuple(pots))


def max_range_size(inst, cap: int = 20) -> int | None:
    inst = as_instance(inst)
    sizes = [range_size(inst, ag, cap) for ag in inst.agents]
    if any(s is None for s in sizes):
        return None
    return max(sizes, default=1)
