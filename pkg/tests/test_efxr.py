from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairorient import (AdditiveValuation, Allocation, Instance, ItemGroup, NotDecomposable,
                        PlanarInstance, check_ef, check_ef1, check_efx, check_efxr,
                        check_orientation, combine_group_allocations, decompose_groups, edge,
                        multigraph_efxr, partition_to_multigraph, planar_faces_orientation,
                        solve_decomposable)
from fairorient.efx_exact import CapExceeded, brute_force_efx_allocation
from fairorient.efxr import (PlanarInputError, PlanarStats, allocation_is_proper, boundary_cycle,
                             group_instance, is_proper, planar_faces)
from fairorient.generators import SplitMix64, random_instance, random_monotone_table
from fairorient.instance import GraphInstance, InstanceError, TableValuation


def _additive(agents, items, rel, w):
    return Instance(agents, items, rel,
                    AdditiveValuation({a: {i: Fraction(x) for i, x in r.items()}
                                       for a, r in w.items()}))


def test_multigraph_is_decomposable():
    g = partition_to_multigraph([2, 3, 3, 4])
    groups = decompose_groups(g)
    assert groups
    ij = [grp for grp in groups if set(grp.agents) == {"i", "j"}]
    assert len(ij) == 1 and ij[0].items == ("s1", "s2", "s3", "s4")
    assert all(len(grp.agents) == 2 for grp in groups)


def test_not_decomposable_witness():
    inst = _additive(("1", "2", "3", "4"), ("a", "b"),
                     {"1": {"a", "b"}, "2": {"a", "b"}, "3": {"a"}, "4": {"b"}},
                     {"1": {"a": 1, "b": 1}, "2": {"a": 1, "b": 1}, "3": {"a": 1}, "4": {"b": 1}})
    res = decompose_groups(inst)
    assert isinstance(res, NotDecomposable) and not res and res.witness == ("a", "b")
    with pytest.raises(ValueError):
        solve_decomposable(inst)


def test_single_group():
    inst = _additive(("1", "2", "3"), ("a", "b"), {ag: {"a", "b"} for ag in "123"},
                     {ag: {"a": 1, "b": 2} for ag in "123"})
    assert decompose_groups(inst) == [ItemGroup(("1", "2", "3"), ("a", "b"))]


def test_disjoint_groups_ef():
    inst = _additive(("1", "2", "3", "4"), ("a", "b", "c", "d"),
                     {"1": {"a", "b"}, "2": {"a", "b"}, "3": {"c", "d"}, "4": {"c", "d"}},
                     {"1": {"a": 1, "b": 1}, "2": {"a": 1, "b": 1},
                      "3": {"c": 2, "d": 2}, "4": {"c": 2, "d": 2}})
    g1, g2 = decompose_groups(inst)
    per = {g1: Allocation.from_bundles(group_instance(inst, g1), {"1": {"a"}, "2": {"b"}}),
           g2: Allocation.from_bundles(group_instance(inst, g2), {"3": {"d"}, "4": {"c"}})}
    union = combine_group_allocations(inst, per)
    assert check_ef(inst, union).holds


def test_combine_rejects_bad_groups():
    inst = _additive(("1", "2", "3"), ("a", "b"), {"1": {"a"}, "2": {"a", "b"}, "3": {"b"}},
                     {"1": {"a": 1}, "2": {"a": 1, "b": 1}, "3": {"b": 1}})
    ga, gb = decompose_groups(inst)
    partial = Allocation.from_bundles(group_instance(inst, ga), {})
    with pytest.raises(ValueError, match="cover"):
        combine_group_allocations(inst, {ga: partial})
    outside = Allocation({"3": frozenset({"a"})})
    with pytest.raises(ValueError, match="outside"):
        combine_group_allocations(inst, {ga: outside})


def test_three_parallel_unit_edges():
    g = GraphInstance(("u", "v"), tuple(edge("u", "v", f"p{k}") for k in range(3)), multi=True)
    a = multigraph_efxr(g)
    assert sorted(len(b) for b in a.bundles.values()) == [1, 2]
    assert check_efxr(g, a).holds


def test_simple_graph_efxr():
    for seed in range(10):
        g = random_instance("graph", {"n": 7, "m": 12}, seed)
        a = multigraph_efxr(g)
        assert check_efxr(g, a).holds and check_orientation(g, a)[0]


def test_reduction_multigraph_has_efxr():
    g = partition_to_multigraph([2, 3, 3, 4])
    a = multigraph_efxr(g)
    assert check_efxr(g, a).holds and check_orientation(g, a)[0]
    # EFXr is strictly weaker here: the gadgets block EFX altogether
    assert not check_efx(partition_to_multigraph([2, 2, 3, 5]),
                         multigraph_efxr(partition_to_multigraph([2, 2, 3, 5]))).holds


def test_multigraph_cap():
    g = GraphInstance(("u", "v"), tuple(edge("u", "v", f"p{k}") for k in range(6)), multi=True)
    with pytest.raises(CapExceeded):
        multigraph_efxr(g, cap=5)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2 ** 32), table=st.booleans())
def test_group_combination(seed, table):
    inst = random_instance("decomposable", {"table": table}, seed)
    for fairness, check in (("efx", check_efxr), ("ef1", check_ef1)):
        a = solve_decomposable(inst, fairness)
        assert a.is_total and check_orientation(inst, a)[0]
        assert check(inst, a).holds


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32))
def test_random_multigraphs(seed):
    rng = SplitMix64(seed)
    n = rng.randint(2, 5)
    g = random_instance("graph", {"n": n, "m": rng.randint(n - 1, 9), "multi": True,
                                  "symmetric": rng.chance(0.5)}, seed)
    a = multigraph_efxr(g)
    assert check_efxr(g, a).holds and check_orientation(g, a)[0]


def test_two_agent_groups_always_have_efx():
    for seed in range(40):
        inst = random_instance("general", {"n": 2, "m": 6, "density": 0.9}, seed)
        assert check_efx(inst, brute_force_efx_allocation(inst)).holds


# -- planar faces ------------------------------------------------------------


def _planar(vertices, faces, boundary, seed=0, table=True):
    rng = SplitMix64(seed)
    ids = [f"f{k}" for k in range(len(faces))]
    inc = {v: [fid for fid, f in zip(ids, faces) if v in f] for v in vertices}
    if table:
        val = TableValuation({v: random_monotone_table(rng, inc[v], 6) for v in vertices})
    else:
        val = AdditiveValuation({v: {fid: Fraction(1) for fid in inc[v]} for v in vertices})
    return PlanarInstance(tuple(vertices), tuple(faces), tuple(ids), val, tuple(boundary))


def _wheel(n):
    rim = [f"r{k}" for k in range(n)]
    faces = [("c", rim[k], rim[(k + 1) % n]) for k in range(n)]
    return _planar(["c"] + rim, faces, rim)


def test_single_triangle():
    p = _planar(["a", "b", "c"], [("a", "b", "c")], ["a", "b", "c"])
    a = planar_faces_orientation(p)
    assert a.bundles["a"] == {"f0"}


def test_two_triangles_sharing_edge():
    p = _planar(["a", "b", "c", "d"], [("a", "b", "c"), ("b", "c", "d")], ["a", "b", "d", "c"])
    stats = PlanarStats()
    a = planar_faces_orientation(p, stats)
    assert allocation_is_proper(p, a)[0] and check_efxr(p, a).holds
    assert stats.steps == 1 and stats.fallbacks == 0
    assert a.bundles["b"] != {"f0", "f1"} and a.bundles["c"] != {"f0", "f1"}


def test_hexagon_wheel():
    p = _wheel(6)
    a = planar_faces_orientation(p)
    assert all(len(b) <= 2 for b in a.bundles.values())
    assert allocation_is_proper(p, a)[0] and check_efxr(p, a).holds
    assert check_orientation(p, a)[0] and a.is_total


def test_boundary_cycle():
    p = _wheel(5)
    faces = planar_faces(p)
    cyc = boundary_cycle(faces)
    assert set(cyc) == {f"r{k}" for k in range(5)}
    # a closed surface has no boundary
    tet = {"f0": frozenset("abc"), "f1": frozenset("abd"), "f2": frozenset("acd"),
           "f3": frozenset("bcd")}
    assert boundary_cycle(tet) is None


def test_is_proper_detects_violations():
    faces = {"f0": frozenset("abc"), "f1": frozenset("bcd")}
    assert is_proper(faces, {"f0": "a", "f1": "d"})[0]
    ok, problems = is_proper(faces, {"f0": "b", "f1": "b"})
    assert not ok and "shared" in problems[0]
    wheel = planar_faces(_wheel(6))
    ok, problems = is_proper(wheel, {fid: "c" for fid in wheel})
    assert not ok and any("receives 6 faces" in x for x in problems)


def test_planar_input_errors():
    bowtie = _planar(list("abcde"), [("a", "b", "c"), ("c", "d", "e")], [])
    with pytest.raises(PlanarInputError, match="2-connected"):
        planar_faces_orientation(bowtie)
    p = _planar(["a", "b", "c", "d"], [("a", "b", "c"), ("b", "c", "d")], ["a", "b", "c", "d"])
    with pytest.raises(PlanarInputError, match="outer boundary"):
        planar_faces_orientation(p)
    with pytest.raises(InstanceError, match="triangle"):
        PlanarInstance(("a", "b", "c", "d"), (("a", "b", "c", "d"),), (), AdditiveValuation({}))


def test_fan_of_k4_needs_search():
    # outer triangle with one interior vertex: every contraction collapses two faces
    p = _planar(list("abcd"), [("a", "b", "d"), ("b", "c", "d"), ("a", "c", "d")], ["a", "b", "c"])
    stats = PlanarStats()
    a = planar_faces_orientation(p, stats)
    assert stats.fallbacks == 1
    assert allocation_is_proper(p, a)[0] and check_efxr(p, a).holds


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32), n=st.integers(3, 12), table=st.booleans())
def test_random_planar(seed, n, table):
    p = random_instance("planar", {"n": n, "table": table}, seed)
    a = planar_faces_orientation(p)
    assert allocation_is_proper(p, a)[0]
    assert check_efxr(p, a).holds and check_orientation(p, a)[0] and a.is_total
