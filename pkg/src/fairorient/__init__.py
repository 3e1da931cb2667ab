"""Fair orientations of indivisible goods: EF1, EFX and EFXr solvers with exact verifiers."""
from .ef1 import EF1Result, NotLaminar, Policy, laminar_order, solve_ef1, solve_ef1_identical
from .efx_exact import (CapExceeded, brute_force_efx_allocation, brute_force_efx_orientation,
                        count_efx_orientations)
from .efxr import (ItemGroup, NotDecomposable, combine_group_allocations, decompose_groups,
                   multigraph_efxr, planar_faces_orientation, solve_decomposable)
from .fpt import TreeLayout, build_layout, decide_efx, search_layout
from .generators import (PartitionInput, SplitMix64, gadget_x, partition_to_multigraph,
                         partition_to_vc_graph, random_instance)
from .instance import (AdditiveValuation, Allocation, GraphInstance, IdenticalValuation, Instance,
                       InstanceError, PlanarInstance, TableValuation, edge, parse_instance,
                       range_size, relevant_items, serialize_instance, value_of)
from .verify import check_ef, check_ef1, check_efx, check_efxr, check_orientation, envy_graph

__version__ = "0.1.0"
