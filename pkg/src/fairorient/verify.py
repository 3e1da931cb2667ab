"""Definitional fairness checks: EF, EF1, EFX, EFXr, orientation, envy graph.

These are deliberately naive (they follow the definitions pair by pair and
item by item) because every solver in the package is tested against them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .instance import Allocation, Instance, as_instance, fraction_str


@dataclass(frozen=True)
class Violation:
    envier: str
    envied: str
    own_value: Fraction
    envied_value: Fraction
    item: str | None = None          # removal witness (EF1: best removal, EFX/EFXr: failing one)
    value_after_removal: Fraction | None = None

    def to_json(self) -> dict:
        out = {"envier": self.envier, "envied": self.envied,
               "own_value": fraction_str(self.own_value),
               "envied_value": fraction_str(self.envied_value)}
        if self.item is not None:
            out["item"] = self.item
            out["value_after_removal"] = fraction_str(self.value_after_removal)
        return out


@dataclass(frozen=True)
class FairnessReport:
    property: str
    violations: tuple[Violation, ...] = ()

    @property
    def holds(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.holds

    def to_json(self) -> dict:
        return {"property": self.property, "holds": self.holds,
                "violations": [v.to_json() for v in self.violations]}


@dataclass(frozen=True)
class EnvyGraph:
    nodes: tuple[str, ...]
    arcs: frozenset = field(default_factory=frozenset)   # (i, j): i envies j

    def successors(self, i: str) -> list[str]:
        return [j for j in self.nodes if (i, j) in self.arcs]

    def predecessors(self, j: str) -> list[str]:
        return [i for i in self.nodes if (i, j) in self.arcs]


def _pairs(inst: Instance, alloc: Allocation) -> Iterator[tuple[str, str, Fraction, Fraction]]:
    """Ordered pairs (i, j) where i envies j, with both values."""
    for i in inst.agents:
        own = inst.value(i, alloc.bundles.get(i, frozenset()))
        for j in inst.agents:
            if i == j:
                continue
            other = inst.value(i, alloc.bundles.get(j, frozenset()))
            if other > own:
                yield i, j, own, other


def check_orientation(inst, alloc: Allocation) -> tuple[bool, list[tuple[str, str]]]:
    """True iff every bundle lies inside its owner's relevant set, plus offenders."""
    inst = as_instance(inst)
    bad = []
    for ag in inst.agents:
        for a in inst.sort_items(alloc.bundles.get(ag, ())):
            if a not in inst.relevance[ag]:
                bad.append((ag, a))
    return not bad, bad


def check_ef(inst, alloc: Allocation) -> FairnessReport:
    inst = as_instance(inst)
    return FairnessReport("EF", tuple(Violation(i, j, own, other)
                                      for i, j, own, other in _pairs(inst, alloc)))


def check_ef1(inst, alloc: Allocation) -> FairnessReport:
    inst = as_instance(inst)
    out = []
    for i, j, own, other in _pairs(inst, alloc):
        bundle = alloc.bundles[j]
        best_item, best = None, None
        for a in inst.sort_items(bundle):
            after = inst.value(i, bundle - {a})
            if best is None or after < best:
                best_item, best = a, after
        if best is None or best > own:
            out.append(Violation(i, j, own, other, best_item, best))
    return FairnessReport("EF1", tuple(out))


def _check_any(inst: Instance, alloc: Allocation, name: str, relevant_only: bool) -> FairnessReport:
    out = []
    for i, j, own, other in _pairs(inst, alloc):
        bundle = alloc.bundles[j]
        for a in inst.sort_items(bundle):
            if relevant_only and a not in inst.relevance[i]:
                continue
            after = inst.value(i, bundle - {a})
            if after > own:
                out.append(Violation(i, j, own, other, a, after))
                break
    return FairnessReport(name, tuple(out))


def check_efx(inst, alloc: Allocation) -> FairnessReport:
    return _check_any(as_instance(inst), alloc, "EFX", relevant_only=False)


def check_efxr(inst, alloc: Allocation) -> FairnessReport:
    return _check_any(as_instance(inst), alloc, "EFXr", relevant_only=True)


CHECKS = {"ef": check_ef, "ef1": check_ef1, "efx": check_efx, "efxr": check_efxr}


def envy_graph(inst, alloc: Allocation) -> EnvyGraph:
    inst = as_instance(inst)
    return EnvyGraph(inst.agents, frozenset((i, j) for i, j, _, _ in _pairs(inst, alloc)))
