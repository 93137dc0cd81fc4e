"""
Fusing stem steps into one scratchpad group
===========================================

A stem of constant rank 8 whose five open indices survive every step.
With a scratchpad of rank 3 the planner slices those five away, keeps
the rest resident, and moves each subtask in and out once.
"""

import numpy as np

from tnslicer.network import network_from_indices, build_tree
from tnslicer.lifetime import extract_stem, restrict_lifetimes
from tnslicer.fusion import plan_fusion, fused_cost_model, plan_from_perm, reduced_map
from tnslicer.cost import MemoryLevel, MemoryLevelModel
from tnslicer.executor import random_inputs, stem_operands, execute_fused, execute_stem

# Leaf: p1..p5 plus a window w0 w1 w2; branch k swaps w_k for w_{k+3}.
n_steps = 6
full = [f"p{k + 1}" for k in range(5)]
w = [f"w{k}" for k in range(n_steps + 3)]
tensors = [full + w[:3]] + [[w[k], w[k + 3]] for k in range(n_steps)]
path = [(0, 1)] + [(n_steps + k, k + 1) for k in range(1, n_steps)]
net = network_from_indices(tensors)
tree = build_tree(net, path)

stem = extract_stem(tree)
plan = plan_fusion(tree, stem, restrict_lifetimes(tree, stem), 3)
for g in plan.groups:
    print(g.to_dict())
print("dma transfers saved:", plan.dma_saved)

# Run it both ways.
start, branches = stem_operands(tree, stem, random_inputs(net, 0))
fused, ledger = execute_fused(plan, start, branches)
ref, base = execute_stem(start, branches)
print("max abs diff", np.max(np.abs(fused.transpose_to(ref.indices).data - ref.data)))
print("fused loads/stores", ledger.loads, ledger.stores, "unfused transfers", base.transfers)

# A two-level machine: large main memory and a 128 KiB scratchpad.
model = MemoryLevelModel((MemoryLevel("main", 1e12, 1e9), MemoryLevel("ldm", 2**17, 3e10)), 1e12)
print(fused_cost_model(plan, model).to_dict())

# Transposes that keep a run of axes in place need a smaller offset map.
p = plan_from_perm((0, 1, 2, 4, 5, 7, 8, 3, 6), "leading")
print("fixed run", p.fixed_run, "map entries", len(reduced_map(p)), "of", 2 ** p.rank)
