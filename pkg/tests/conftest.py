from fractions import Fraction

import networkx as nx
import pytest
from networkx.generators.atlas import graph_atlas_g

from fairorient import AdditiveValuation, Allocation, Instance, edge
from fairorient.instance import GraphInstance

INTRO_DOC = {
    "kind": "general",
    "agents": ["X", "Y"],
    "items": ["a", "b", "c"],
    "relevance": {"X": ["a", "b", "c"], "Y": ["b"]},
    "valuations": {"type": "additive",
                   "weights": {"X": {"a": "1", "b": "1", "c": "1/5"}, "Y": {"b": "1"}}},
}


def intro_instance() -> Instance:
    w = {"X": {"a": Fraction(1), "b": Fraction(1), "c": Fraction(1, 5)}, "Y": {"b": Fraction(1)}}
    return Instance(("X", "Y"), ("a", "b", "c"), {"X": {"a", "b", "c"}, "Y": {"b"}},
                    AdditiveValuation(w))


def alloc(inst, **bundles) -> Allocation:
    return Allocation.from_bundles(inst, {k: set(v) for k, v in bundles.items()})


def triangle(w=1) -> GraphInstance:
    return GraphInstance(("u", "v", "w"), (edge("u", "v", "uv", w), edge("v", "w", "vw", w),
                                           edge("u", "w", "uw", w)))


def path(*weights) -> GraphInstance:
    vs = tuple(f"v{k + 1}" for k in range(len(weights) + 1))
    es = tuple(edge(vs[k], vs[k + 1], f"e{k + 1}{k + 2}", w) for k, w in enumerate(weights))
    return GraphInstance(vs, es)


def graph(n_or_vertices, pairs, weights=None, multi=False) -> GraphInstance:
    vs = tuple(n_or_vertices) if not isinstance(n_or_vertices, int) \
        else tuple(str(k) for k in range(n_or_vertices))
    ws = weights or [1] * len(pairs)
    es = tuple(edge(str(a), str(b), f"e{k}", w) for k, ((a, b), w) in enumerate(zip(pairs, ws)))
    return GraphInstance(vs, es, multi=multi)


@pytest.fixture
def intro():
    return intro_instance()


def small_connected_graphs(max_edges: int):
    """Unlabeled connected graphs with 1..max_edges edges, as (vertices, pairs)."""
    for h in graph_atlas_g():
        if 1 <= h.number_of_edges() <= max_edges and nx.is_connected(h):
            yield [str(v) for v in h.nodes], [(str(a), str(b)) for a, b in h.edges]
