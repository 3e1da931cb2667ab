from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairorient import (brute_force_efx_orientation, check_ef1, decompose_groups, gadget_x,
                        laminar_order, partition_to_multigraph, partition_to_vc_graph,
                        serialize_instance, solve_ef1)
from fairorient.generators import (RANDOM_KINDS, PartitionInput, SplitMix64, partition_multisets,
                                   random_instance, reduction_scale, subset_sum_yes,
                                   vertex_cover_size)


def test_splitmix_reference_vector():
    rng = SplitMix64(0)
    assert rng.next_u64() == 0xE220A8397B1DCDAF
    assert rng.next_u64() == 0x6E789E6AA1B965F4


def test_splitmix_helpers():
    rng = SplitMix64(7)
    xs = [rng.below(5) for _ in range(500)]
    assert set(xs) == set(range(5))
    assert all(0 <= rng.random() < 1 for _ in range(100))
    with pytest.raises(ValueError):
        rng.below(0)


def test_gadget_shape():
    g = gadget_x(3)
    assert len(g.vertices) == 4 and len(g.edges) == 6
    heavy = [e for e in g.edges if e.weight_u == 3]
    assert len(heavy) == 2
    assert not set(heavy[0].id.split("-")) & set(heavy[1].id.split("-"))
    assert all(e.weight_u == 1 for e in g.edges if e not in heavy)
    with pytest.raises(ValueError):
        gadget_x(Fraction(5, 2))


def test_partition_input():
    p = PartitionInput((2, 3, 3, 4))
    assert p.T == 4 and p.B == 6 and p.valid_for_reduction
    assert not PartitionInput((1, 7)).valid_for_reduction
    assert PartitionInput((1, 2)).B == Fraction(3, 2)
    with pytest.raises(ValueError):
        PartitionInput((0, 2))


def _dp_subset_sum(values):
    total = sum(values)
    if total % 2:
        return False
    reach = 1
    for x in values:
        reach |= reach << x
    return bool(reach >> (total // 2) & 1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=1, max_size=8))
def test_subset_sum_oracles_agree(values):
    assert subset_sum_yes(values) == _dp_subset_sum(values)


@pytest.mark.parametrize("build", [partition_to_vc_graph, partition_to_multigraph])
def test_reduction_examples(build):
    assert brute_force_efx_orientation(build([2, 3, 3, 4])) is not None
    assert brute_force_efx_orientation(build([2, 2, 3, 5])) is None


def test_vc_graph_structure():
    for S in ([2, 3, 3, 4], [1, 1, 1], [3, 3, 3, 3, 2]):
        g = partition_to_vc_graph(S)
        T = len(S)
        assert len(g.vertices) == T + 10 and len(g.edges) == 2 * T + 14
        assert g.is_simple
        assert vertex_cover_size(g) == 8
        cover = set(g.meta["vertex_cover"])
        assert len(cover) == 8 and all(e.u in cover or e.v in cover for e in g.edges)
        B = Fraction(g.meta["B"])
        assert sum(1 for e in g.edges if e.weight_u == B) == 6


def test_multigraph_structure():
    for S in ([2, 3, 3, 4], [1, 1, 1, 1, 1, 1, 2]):
        g = partition_to_multigraph(S)
        assert len(g.vertices) == 10 and g.multi
        assert len(g.pair_edges[frozenset("ij")]) == len(S)
        cover = set(g.meta["vertex_cover"])
        assert all(e.u in cover or e.v in cover for e in g.edges)


def test_reduction_scaling():
    p = PartitionInput((1, 1, 1))
    assert reduction_scale(p) == 2
    g = partition_to_vc_graph(p)
    assert g.meta["scale"] == 2 and g.meta["S"] == [1, 1, 1] and Fraction(g.meta["B"]) == 3
    assert reduction_scale(PartitionInput((2, 3, 3, 4))) == 1


def test_reduction_rejects_large_element():
    with pytest.raises(ValueError):
        partition_to_vc_graph([1, 1, 6])
    with pytest.raises(ValueError):
        partition_to_multigraph([])


def test_partition_multisets():
    ms = list(partition_multisets(4))
    assert (4,) in ms and (1, 1, 1, 1) in ms and (2, 1, 1) in ms
    assert len(ms) == len(set(ms)) == 1 + 2 + 3 + 5


@pytest.mark.parametrize("S", [(2, 3, 3, 4), (1, 1, 1), (2, 2, 3, 5), (1, 2, 3, 4, 6)])
def test_small_reduction_equivalence(S):
    yes = subset_sum_yes(S)
    for build in (partition_to_vc_graph, partition_to_multigraph):
        assert (brute_force_efx_orientation(build(S)) is not None) == yes


@pytest.mark.parametrize("B", [3, 4, Fraction(7, 2), 10])
def test_gadget_admits_ef1(B):
    g = gadget_x(B)
    assert check_ef1(g, solve_ef1(g).allocation).holds


def test_random_graph_deterministic():
    a = random_instance("graph", {"n": 6, "m": 9}, 42)
    b = random_instance("graph", {"n": 6, "m": 9}, 42)
    assert serialize_instance(a) == serialize_instance(b)
    assert len(a.vertices) == 6 and len(a.edges) == 9
    assert serialize_instance(random_instance("graph", {"n": 6, "m": 9}, 43)) != \
        serialize_instance(a)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32))
def test_structured_kinds(seed):
    assert laminar_order(random_instance("laminar", {}, seed))
    assert decompose_groups(random_instance("decomposable", {}, seed))


@pytest.mark.parametrize("kind", sorted(RANDOM_KINDS))
def test_every_kind_validates(kind):
    for seed in range(5):
        x = random_instance(kind, {}, seed)
        getattr(x, "instance", x)      # lowering runs instance validation


@pytest.mark.parametrize("kind, params", [("graph", {"n": 3, "m": 5}), ("graph", {"n": 5, "m": 2}),
                                          ("planar", {"n": 2}), ("general", {"bogus": 1}),
                                          ("nope", {})])
def test_infeasible_params(kind, params):
    with pytest.raises(ValueError):
        random_instance(kind, params, 0)
