"""
Lifetimes, the stem and what slicing costs
==========================================

A small eight-tensor network, one contraction order, and the exact price
of slicing a single index.
"""

from tnslicer.network import network_from_indices, build_tree
from tnslicer.lifetime import lifetime_of, extract_stem
from tnslicer.cost import tree_cost, sliced_cost, node_multiples, overhead_fraction

# Each tensor is a list of index names; every index has dimension 2.
tensors = [list("ab"), list("bc"), list("ade"), list("cef"),
           list("dgh"), list("fhj"), list("gi"), list("ij")]
net = network_from_indices(tensors)

# SSA path: leaves are 0..7, contraction k creates tensor 8+k.
path = [(6, 7), (5, 3), (9, 1), (10, 0), (11, 2), (12, 4), (13, 8)]
tree = build_tree(net, path)
print(tree)

# An index lives on a simple path through the tree.
lf = lifetime_of(tree, "e")
print("lifetime of e:", lf.tree_edges)
for e in lf.tree_edges:
    print(f"  tensor {e:2d}  rank {tree.rank(e)}  {sorted(tree.edge_indices[e])}")

# The stem is the most expensive leaf-to-root path.
stem = extract_stem(tree)
print("stem tensors:", stem.tensors, "branches:", stem.branches)

# Unsliced cost, then the cost of slicing e.
base = tree_cost(tree)
print("flops", base.flops, "peak rank", base.log2_memory_peak)
sl = sliced_cost(tree, ["e"])
print("sliced flops", sl.flops, "peak rank", sl.log2_memory_peak)

# Contractions that carry e pay nothing extra; the rest run twice.
print("per-contraction multiples:", node_multiples(tree, ["e"]))
print("overhead:", overhead_fraction(tree, ["e"]))
