"""
Finding and refining slices on random networks
==============================================

Compare a cost-greedy slicer with the lifetime-based finder followed by
annealing, then check one answer by brute-force contraction.
"""

import numpy as np

from tnslicer.baselines import random_instance, greedy_slicer, exhaustive_slicer, candidate_pool
from tnslicer.slicing import find_tree_slices
from tnslicer.refine import anneal, AnnealConfig
from tnslicer.cost import overhead
from tnslicer.executor import random_inputs, contract_full, contract_sliced

rows = []
for seed in range(20):
    inst = random_instance(seed)
    tree, t = inst.tree, inst.t
    g = greedy_slicer(tree, t)
    f = find_tree_slices(tree, t)
    r = anneal(tree, f, AnnealConfig(seed=seed))
    line = [seed, t, len(g), len(f), overhead(tree, g), overhead(tree, r.slices)]
    # the exhaustive optimum is affordable when few indices are candidates
    if len(candidate_pool(tree, t)) <= 12:
        best, _ = exhaustive_slicer(tree, t, 12)
        line.append(overhead(tree, best))
    rows.append(line)

print("seed  t  |greedy| |finder|  greedy   refined  optimum")
for row in rows:
    seed, t, ng, nf, og, orf = row[:6]
    opt = f"{row[6]:.3f}" if len(row) > 6 else "  -"
    print(f"{seed:4d} {t:2d} {ng:6d} {nf:8d}  {og:7.3f}  {orf:7.3f}  {opt}")

# Slicing never changes the answer, only how the work is split.
inst = random_instance(3)
tree = inst.tree
S = find_tree_slices(tree, inst.t)
inputs = random_inputs(tree.network, 0)
full, c_full = contract_full(tree.network, tree, inputs)
part, c_part = contract_sliced(tree.network, tree, S, inputs)
print("sliced", list(S), "max abs diff", np.max(np.abs(full.data - part.data)))
print("measured overhead", c_part.scalar_multiplies / c_full.scalar_multiplies,
      "predicted", overhead(tree, S))
