"""
EF1 orientations by envy-cycle elimination
==========================================

Every instance with monotone valuations admits an EF1 orientation.  The
solver hands goods to unenvied agents and rotates bundles along envy cycles,
returning goods that the new owner does not find relevant.
"""
from fairorient import Policy, check_ef1, gadget_x, solve_ef1, solve_ef1_identical
from fairorient.generators import random_instance

# A weighted clique on four agents with no EFX orientation still has an
# EF1 one.
g = gadget_x(3)
res = solve_ef1(g, debug=True)
print("gadget bundles:", {k: sorted(v) for k, v in res.allocation.bundles.items()})
print("EF1:", check_ef1(g, res.allocation).holds)

# The trace records each assignment and each cycle shift.
inst = random_instance("general", {"n": 5, "m": 10, "density": 0.8}, 4)
res = solve_ef1(inst)
for ev in res.trace:
    if ev["event"] == "cycle-shift":
        print(ev)
print("cycle shifts:", res.cycle_shifts, "pool returns:", res.pool_returns)

# The potential vector (each agent's own value) never decreases.
for before, after in zip(res.potentials, res.potentials[1:]):
    assert all(b <= a for b, a in zip(before, after))
print("final potential:", [str(x) for x in res.potentials[-1]])

# Identical valuations need no cycle shifts at all.
ident = random_instance("identical", {"n": 4, "m": 8}, 1)
print("identical shifts:", solve_ef1_identical(ident).cycle_shifts)

# Laminar agent lists: ordering the goods suitably avoids pool returns.
lam = random_instance("laminar", {"n": 6, "m": 10}, 2)
print("laminar pool returns:", solve_ef1(lam, Policy(item_order="laminar")).pool_returns)
