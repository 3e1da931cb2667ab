import json
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import INTRO_DOC, graph, intro_instance
from fairorient import (AdditiveValuation, Instance, InstanceError, TableValuation, edge,
                        parse_instance, range_size, relevant_items, serialize_instance, value_of)
from fairorient.generators import random_instance
from fairorient.instance import GraphInstance, instance_from_dict, to_fraction


def test_parse_intro():
    inst = parse_instance(json.dumps(INTRO_DOC))
    assert inst.relevance["X"] == {"a", "b", "c"}
    assert inst.relevance["Y"] == {"b"}
    assert inst == intro_instance()


def test_empty_items():
    inst = parse_instance(json.dumps({"agents": ["1", "2"], "items": [], "relevance": {},
                                      "valuations": {"type": "additive", "weights": {}}}))
    assert inst.m == 0 and inst.n == 2


def test_non_monotone_table_rejected():
    doc = {"agents": ["1"], "items": ["a", "b"], "relevance": {"1": ["a", "b"]},
           "valuations": {"type": "table", "tables": {"1": [
               {"bundle": ["a"], "value": "2"}, {"bundle": ["b"], "value": "1"},
               {"bundle": ["a", "b"], "value": "1"}]}}}
    with pytest.raises(InstanceError, match="monoton"):
        instance_from_dict(doc)


@pytest.mark.parametrize("doc, msg", [
    ({"agents": ["1"], "items": ["a"], "relevance": {"1": ["a"]},
      "valuations": {"type": "additive", "weights": {"1": {"a": "-1"}}}}, "negative"),
    ({"agents": ["1"], "items": ["a", "b"], "relevance": {"1": ["a"]},
      "valuations": {"type": "additive", "weights": {"1": {"a": "1"}}}}, "empty agent list"),
    ({"agents": ["1"], "items": ["a"]}, "missing field"),
    ({"kind": "torus", "agents": []}, "unknown instance kind"),
])
def test_schema_errors(doc, msg):
    with pytest.raises(InstanceError, match=msg):
        instance_from_dict(doc)


def test_invalid_json():
    with pytest.raises(InstanceError):
        parse_instance("{not json")


def test_rationals():
    assert to_fraction("1/5") == Fraction(1, 5)
    assert to_fraction("0.2") == Fraction(1, 5)
    assert to_fraction(3) == 3


def test_value_of_intro(intro):
    assert value_of(intro, "X", {"b", "c"}) == Fraction(6, 5)
    assert value_of(intro, "Y", set()) == 0
    assert value_of(intro, "Y", {"a", "c"}) == 0
    with pytest.raises(InstanceError):
        value_of(intro, "Z", {"a"})
    with pytest.raises(InstanceError):
        value_of(intro, "X", {"zz"})


def test_relevant_items(intro):
    assert relevant_items(intro, "Y") == {"b"}
    assert relevant_items(intro, "X") == {"a", "b", "c"}


def test_declared_relevance_mismatch():
    doc = dict(INTRO_DOC, relevance={"X": ["a", "b", "c"], "Y": ["b", "c"]})
    with pytest.raises(InstanceError, match="inconsistent"):
        instance_from_dict(doc)


def test_zero_weight_agent_is_irrelevant():
    doc = {"agents": ["1", "2"], "items": ["a"], "relevance": {"1": ["a"], "2": []},
           "valuations": {"type": "additive", "weights": {"1": {"a": "1"}, "2": {"a": "0"}}}}
    inst = instance_from_dict(doc)
    assert relevant_items(inst, "2") == frozenset()


def test_table_relevance_witness():
    t = {frozenset(): Fraction(0), frozenset("a"): Fraction(0), frozenset("b"): Fraction(1),
         frozenset("ab"): Fraction(2)}
    inst = Instance(("1",), ("a", "b"), {"1": {"a", "b"}}, TableValuation({"1": t}))
    assert relevant_items(inst, "1") == {"a", "b"}


def test_range_sizes():
    two = Instance(("1", "2"), ("a", "b"), {"1": {"a", "b"}, "2": set()},
                   _additive({"1": {"a": 1, "b": 1}}))
    assert range_size(two, "1") == 3
    assert range_size(two, "2") == 1
    ones = Instance(("1",), tuple("abcde"), {"1": set("abcde")},
                    _additive({"1": {x: 1 for x in "abcde"}}))
    assert range_size(ones, "1") == 6


def _additive(w):
    return AdditiveValuation({ag: {a: Fraction(x) for a, x in row.items()} for ag, row in w.items()})


def test_graph_lowering():
    g = graph(4, [(0, 1), (1, 2), (2, 0), (2, 3)], [1, 2, 3, 0])
    inst = g.instance
    for v in g.vertices:
        assert relevant_items(inst, v) == {e.id for e in g.edges if v in (e.u, e.v)}
    assert inst.value("2", {"e1", "e2", "e3"}) == 5
    assert inst.value("3", {"e1"}) == 0


def test_graph_errors():
    with pytest.raises(InstanceError, match="self-loop"):
        GraphInstance(("a",), (edge("a", "a", "x"),))
    with pytest.raises(InstanceError, match="parallel"):
        GraphInstance(("a", "b"), (edge("a", "b", "x"), edge("a", "b", "y")))
    with pytest.raises(InstanceError, match="duplicate edge"):
        GraphInstance(("a", "b", "c"), (edge("a", "b", "x"), edge("b", "c", "x")))


ROUND_TRIP_KINDS = [("general", {}), ("table", {}), ("identical", {}),
                    ("identical", {"table": True}), ("graph", {"symmetric": False}),
                    ("graph", {"multi": True, "n": 3, "m": 6}), ("planar", {"n": 7}),
                    ("decomposable", {"table": True})]


@pytest.mark.parametrize("kind, params", ROUND_TRIP_KINDS)
@pytest.mark.parametrize("seed", range(3))
def test_round_trip(kind, params, seed):
    x = random_instance(kind, params, seed)
    y = parse_instance(serialize_instance(x))
    assert serialize_instance(y) == serialize_instance(x)
    assert type(y) is type(x)
    assert y.instance == x.instance if hasattr(x, "vertices") else y == x


@settings(max_examples=60, deadline=None)
@given(kind=st.sampled_from(["general", "table", "identical", "decomposable", "laminar"]),
       seed=st.integers(0, 10 ** 6), data=st.data())
def test_value_monotone(kind, seed, data):
    inst = random_instance(kind, {}, seed)
    if hasattr(inst, "instance"):
        inst = inst.instance
    ag = data.draw(st.sampled_from(inst.agents))
    big = data.draw(st.sets(st.sampled_from(inst.items))) if inst.items else set()
    small = data.draw(st.sets(st.sampled_from(sorted(big)))) if big else set()
    assert inst.value(ag, small) <= inst.value(ag, big)
    assert inst.value(ag, ()) == 0


@pytest.mark.parametrize("seed", range(5))
def test_table_monotone_exhaustive(seed):
    inst = random_instance("table", {"m": 5}, seed)
    for ag in inst.agents:
        rel = sorted(inst.relevance[ag])
        for r in range(len(rel) + 1):
            for c in combinations(rel, r):
                for a in c:
                    assert inst.value(ag, set(c) - {a}) < inst.value(ag, c)
