"""
Checking fairness notions on a small instance
=============================================

Two agents share three goods.  Agent X cares about all of them, agent Y only
about ``b``.  We build the instance, hand out a few allocations and ask the
verifier which notions hold.
"""
from fractions import Fraction

from fairorient import (AdditiveValuation, Allocation, Instance, check_ef, check_ef1, check_efx,
                        check_efxr, check_orientation, envy_graph)

w = {"X": {"a": Fraction(1), "b": Fraction(1), "c": Fraction(1, 5)}, "Y": {"b": Fraction(1)}}
inst = Instance(("X", "Y"), ("a", "b", "c"), {"X": {"a", "b", "c"}, "Y": {"b"}},
                AdditiveValuation(w))


def show(bundles):
    alloc = Allocation.from_bundles(inst, bundles)
    flags = {name: fn(inst, alloc).holds
             for name, fn in [("EF", check_ef), ("EF1", check_ef1), ("EFX", check_efx),
                              ("EFXr", check_efxr)]}
    orient, offenders = check_orientation(inst, alloc)
    print(bundles, flags, "orientation:", orient, offenders)
    return alloc


# Y holds b and c.  X does not envy Y after dropping any single good, so the
# allocation is EFX, but c is irrelevant to Y: this is not an orientation.
show({"X": {"a"}, "Y": {"b", "c"}})

# Giving c to X fixes that and keeps every notion intact.
show({"X": {"a", "c"}, "Y": {"b"}})

# X with only c envies Y strongly; the envy graph has one arc.
bad = show({"X": {"c"}, "Y": {"a", "b"}})
print("envy arcs:", sorted(envy_graph(inst, bad).arcs))

# The report explains each violation.
print(check_ef1(inst, bad).to_json())
