"""
Orienting the faces of a triangulated disk
==========================================

Vertices are agents and triangular faces are goods, each relevant to its three
corners.  A proper orientation gives each vertex at most two faces, never two
faces sharing an edge with it.  Such orientations are EFXr for any monotone
valuations.
"""
from fairorient import check_efxr, planar_faces_orientation
from fairorient.efxr import PlanarStats, allocation_is_proper
from fairorient.generators import random_instance

p = random_instance("planar", {"n": 10}, 11)
print("vertices:", len(p.vertices), "faces:", len(p.faces))
print("outer boundary:", p.outer_boundary)

stats = PlanarStats()
alloc = planar_faces_orientation(p, stats)
for v in p.vertices:
    print(f"  {v}: {sorted(alloc.bundles[v])}")
print("proper:", allocation_is_proper(p, alloc)[0], "| EFXr:", check_efxr(p, alloc).holds)
print(f"steps={stats.steps} ears={stats.ears} contractions={stats.contractions} "
      f"exact searches={stats.fallbacks}")
