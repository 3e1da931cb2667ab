import json
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import alloc, triangle
from fairorient import (AdditiveValuation, Allocation, Instance, check_ef, check_ef1, check_efx,
                        check_efxr, check_orientation, envy_graph, gadget_x)
from fairorient.efx_exact import orientation_allocation
from fairorient.generators import SplitMix64, random_instance


def test_orientation_intro(intro):
    ok, bad = check_orientation(intro, alloc(intro, X="a", Y="bc"))
    assert not ok and bad == [("Y", "c")]
    assert check_orientation(intro, alloc(intro, X="ac", Y="b")) == (True, [])
    assert check_orientation(intro, Allocation.empty(intro))[0]


def test_intro_classification(intro):
    a = alloc(intro, X="a", Y="bc")
    assert check_efx(intro, a).holds
    assert check_ef1(intro, a).holds
    assert check_efxr(intro, a).holds
    ef = check_ef(intro, a)
    assert not ef.holds and [(v.envier, v.envied) for v in ef.violations] == [("X", "Y")]


def test_ef1_fails_when_one_agent_has_all(intro):
    rep = check_ef1(intro, alloc(intro, Y="abc"))
    assert not rep.holds
    (v,) = rep.violations
    assert (v.envier, v.envied) == ("X", "Y")
    # best single removal drops a or b and still leaves 1 + 1/5
    assert v.value_after_removal == Fraction(6, 5) and v.own_value == 0


def test_single_agent_trivially_fair():
    inst = Instance(("1",), ("a", "b"), {"1": {"a", "b"}},
                    AdditiveValuation({"1": {"a": Fraction(1), "b": Fraction(2)}}))
    a = alloc(inst, **{"1": "ab"})
    assert check_ef1(inst, a) and check_efx(inst, a) and check_ef(inst, a)


def test_gadget_every_orientation_fails():
    g = gadget_x(3)
    for bits in product((0, 1), repeat=len(g.edges)):
        assert not check_efx(g, orientation_allocation(g, bits)).holds


def test_single_item_two_agents():
    inst = Instance(("1", "2"), ("a",), {"1": {"a"}, "2": {"a"}},
                    AdditiveValuation({"1": {"a": Fraction(1)}, "2": {"a": Fraction(1)}}))
    a = alloc(inst, **{"1": "a"})
    assert check_efx(inst, a).holds
    assert not check_ef(inst, a).holds


def test_efxr_triangle_cyclic():
    g = triangle()
    cyc = orientation_allocation(g, (1, 1, 0))     # uv->v, vw->w, uw->u
    assert sorted(len(b) for b in cyc.bundles.values()) == [1, 1, 1]
    assert check_efxr(g, cyc).holds and check_efx(g, cyc).holds


def test_efxr_ignores_irrelevant_items():
    # c is irrelevant to X, so EFXr may not remove it
    inst = Instance(("X", "Y"), ("a", "b", "c"), {"X": {"a", "b"}, "Y": {"b", "c"}},
                    AdditiveValuation({"X": {"a": Fraction(1), "b": Fraction(3)},
                                       "Y": {"b": Fraction(1), "c": Fraction(1)}}))
    a = alloc(inst, X="a", Y="bc")
    assert not check_efx(inst, a).holds     # removing c leaves b worth 3 > 1
    assert check_efxr(inst, a).holds        # only b may be removed, leaving 0
    a2 = alloc(inst, X="a", Y="b")
    assert check_efx(inst, a2).holds


def test_envy_graph_examples(intro):
    assert envy_graph(intro, alloc(intro, X="a", Y="bc")).arcs == {("X", "Y")}
    eg = envy_graph(intro, alloc(intro, Y="b"))
    assert eg.arcs == {("X", "Y")}
    assert eg.successors("X") == ["Y"] and eg.predecessors("X") == []
    assert envy_graph(intro, Allocation.empty(intro)).arcs == frozenset()


def test_envy_graph_intro_orientation(intro):
    # the orientation version (c to X) has no envy at all
    assert envy_graph(intro, alloc(intro, X="ac", Y="b")).arcs == frozenset()


def test_report_json(intro):
    doc = check_ef1(intro, alloc(intro, Y="abc")).to_json()
    assert doc["property"] == "EF1" and doc["holds"] is False
    assert doc["violations"][0]["envier"] == "X"
    json.dumps(doc)


# -- independent restatement of the definitions --------------------------------


def _naive(inst, a, kind):
    for i in inst.agents:
        own = inst.value(i, a.bundles[i])
        for j in inst.agents:
            bj = a.bundles[j]
            if i == j or inst.value(i, bj) <= own:
                continue
            if kind == "ef":
                return False
            removals = [inst.value(i, bj - {x}) for x in bj
                        if kind != "efxr" or x in inst.relevance[i]]
            if kind == "ef1" and not any(r <= own for r in removals):
                return False
            if kind in ("efx", "efxr") and not all(r <= own for r in removals):
                return False
    return True


def random_allocation(inst, rng):
    bundles = {ag: set() for ag in inst.agents}
    for a in inst.items:
        if rng.chance(0.9):
            if rng.chance(0.7):
                bundles[rng.choice(inst.agent_lists[a])].add(a)
            else:
                bundles[rng.choice(inst.agents)].add(a)
    return Allocation.from_bundles(inst, bundles)


@settings(max_examples=200, deadline=None)
@given(kind=st.sampled_from(["general", "table", "identical", "decomposable"]),
       seed=st.integers(0, 2 ** 32))
def test_checks_match_naive_and_implications(kind, seed):
    inst = random_instance(kind, {}, seed)
    a = random_allocation(inst, SplitMix64(seed))
    ef, ef1, efx, efxr = (c(inst, a).holds for c in (check_ef, check_ef1, check_efx, check_efxr))
    assert (ef, ef1, efx, efxr) == tuple(_naive(inst, a, k) for k in ("ef", "ef1", "efx", "efxr"))
    assert not ef or efx
    assert not efx or ef1
    assert not efx or efxr


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32), factor=st.fractions(min_value=Fraction(1, 7), max_value=9))
def test_scaling_one_agent(seed, factor):
    inst = random_instance("general", {}, seed)
    a = random_allocation(inst, SplitMix64(seed + 1))
    ag = inst.agents[seed % inst.n]
    w = {x: dict(r) for x, r in inst.valuation.weights.items()}
    w[ag] = {it: v * factor for it, v in w[ag].items()}
    scaled = Instance(inst.agents, inst.items, inst.relevance, AdditiveValuation(w))
    for c in (check_ef, check_ef1, check_efx, check_efxr):
        assert c(inst, a).holds == c(scaled, a).holds


@pytest.mark.parametrize("seed", range(40))
def test_efx_orientations_envied_indegree_one(seed):
    g = random_instance("graph", {"n": 5, "m": 6}, seed)
    for bits in product((0, 1), repeat=len(g.edges)):
        a = orientation_allocation(g, bits)
        if check_efx(g, a).holds:
            for (_, j) in envy_graph(g, a).arcs:
                assert len(a.bundles[j]) == 1
