"""
Deciding EFX with a tree layout
===============================

For simple graphs, EFX orientations can be decided by a dynamic program over
a spanning tree of a supergraph.  Its running time depends on the edge-cut
width of the layout rather than on the number of edges.
"""
from fairorient import brute_force_efx_orientation, build_layout, decide_efx, search_layout
from fairorient.fpt import run_dp
from fairorient.generators import random_instance

g = random_instance("graph", {"n": 8, "m": 11}, 7)
lay = search_layout(g)
print("width k =", lay.k, "root =", lay.root)
for v in lay.postorder:
    print(f"  {v}: parent={lay.parent[v]} boundary={sorted(lay.boundary[v])} "
          f"open={lay.open[v]} closed={lay.closed[v]}")

# Records summarise, per subtree, which boundary arcs and envy states can
# be realised.
res = run_dp(lay)
print("records at root:", len(res.records[lay.root]))
ok, alloc = decide_efx(lay)
print("EFX orientation exists:", ok, "| brute force agrees:",
      ok == (brute_force_efx_orientation(g) is not None))
if ok:
    print({k: sorted(v) for k, v in alloc.bundles.items()})

# Any spanning tree is a valid layout; a DFS tree is usually wider.
order = list(g.vertices)
parent = {}
seen = {order[0]}
stack = [order[0]]
adj = {v: [e.v if e.u == v else e.u for e in g.incident[v]] for v in g.vertices}
while stack:
    v = stack.pop()
    for w in adj[v]:
        if w not in seen:
            seen.add(w)
            parent[w] = v
            stack.append(w)
dfs = build_layout(g, (), parent, order[0])
print("DFS tree width:", dfs.k, "decision:", decide_efx(dfs, witness=False)[0])
