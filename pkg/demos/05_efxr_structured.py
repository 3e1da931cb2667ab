"""
EFXr for multigraphs and decomposable instances
===============================================

EFXr only asks an envious agent to drop goods that are relevant to it.  When
goods split into groups whose agent lists share at most one agent, fair
allocations of the groups can be solved separately and glued together.
"""
from fairorient import (check_efx, check_efxr, decompose_groups, multigraph_efxr,
                        partition_to_multigraph, solve_decomposable)
from fairorient.generators import random_instance

# The multigraph from a NO instance of PARTITION has no EFX orientation, yet
# EFXr orientations exist.
g = partition_to_multigraph([2, 2, 3, 5])
alloc = multigraph_efxr(g)
print("EFXr:", check_efxr(g, alloc).holds, "| EFX:", check_efx(g, alloc).holds)

# Groups of a decomposable instance.
inst = random_instance("decomposable", {"n": 6, "groups": 4}, 3)
for grp in decompose_groups(inst):
    print("group agents", grp.agents, "goods", grp.items)

for fairness in ("efx", "ef1"):
    a = solve_decomposable(inst, fairness)
    print(fairness, "per group ->", {k: sorted(v) for k, v in a.bundles.items()})
