"""
EFX orientations: an obstruction and a reduction
================================================

Unlike EF1, EFX orientations may fail to exist.  A four-vertex clique with
two heavy disjoint edges is the basic obstruction; attaching copies of it to
a PARTITION instance shows that deciding existence is hard.
"""
from fairorient import (brute_force_efx_orientation, count_efx_orientations, gadget_x,
                        partition_to_multigraph, partition_to_vc_graph)
from fairorient.generators import subset_sum_yes, vertex_cover_size

g = gadget_x(3)
print("gadget edges:", [(e.u, e.v, str(e.weight_u)) for e in g.edges])
print("EFX orientations of the gadget:", count_efx_orientations(g))

for S in ([2, 3, 3, 4], [2, 2, 3, 5]):
    vc = partition_to_vc_graph(S)
    mg = partition_to_multigraph(S)
    print(f"S={S}: subset sum {'YES' if subset_sum_yes(S) else 'NO'}",
          "| simple graph EFX:", brute_force_efx_orientation(vc) is not None,
          "| multigraph EFX:", brute_force_efx_orientation(mg) is not None)

# The simple-graph instance has a small vertex cover.
vc = partition_to_vc_graph([2, 3, 3, 4])
print("vertices:", len(vc.vertices), "minimum vertex cover:", vertex_cover_size(vc))
print("reported cover:", vc.meta["vertex_cover"])
