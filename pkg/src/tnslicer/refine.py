"""Simulated-annealing refinement of a slice set at fixed size.

Moves replace one sliced index by an unsliced index that is carried by
every critical tensor (residual rank exactly at the target) in the
lifetime of the replaced index. Moves that break the memory target are
rejected outright.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .cost import SliceSet, is_valid_slicing, residual_ranks, sliced_cost
from .errors import ValidationError
from .lifetime import Lifetime, lifetime_of
from .network import ContractionTree


@dataclass(frozen=True)
class AnnealConfig:
    t_initial: float = 1.0
    t_final: float = 1e-3
    alpha: float = 0.95
    seed: int = 0
    max_outer_iters: int = 10_000

    def __post_init__(self):
        if not (0 < self.t_final < self.t_initial):
            raise ValidationError("need 0 < t_final < t_initial")
        if not (0 < self.alpha < 1):
            raise ValidationError("alpha must lie in (0, 1)")


def acceptance_probability(c_ori: float, c_new: float, temperature: float) -> float:
    """``exp((c_ori - c_new) / c_ori / T)``; improving moves give 1."""
    if c_new <= c_ori:
        return 1.0
    return math.exp((c_ori - c_new) / c_ori / temperature)


def find_critical_tensors(tree: ContractionTree, lf: Lifetime | Iterable[int], t: int,
                          S: Iterable[str]) -> list[int]:
    """Tensors in the lifetime whose residual rank sits exactly at ``t``."""
    res = residual_ranks(tree, S)
    edges = lf.tree_edges if isinstance(lf, Lifetime) else tuple(lf)
    return [e for e in edges if res[e] == t]


def find_candidate_indices(tree: ContractionTree, critical: Sequence[int],
                           S: Iterable[str], chosen: str) -> set[str]:
    """Unsliced unit-weight indices carried by every critical tensor."""
    if not critical:
        return set()
    cand = set(tree.edge_indices[critical[0]])
    for e in critical[1:]:
        cand &= tree.edge_indices[e]
    cand -= set(S)
    cand.discard(chosen)
    return {ix for ix in cand if tree.network.weight(ix) == 1}


def remove_redundant(tree: ContractionTree, S: SliceSet) -> SliceSet:
    """Drop sliced indices whose lifetime holds no critical tensor.

    Removal is one index at a time, re-evaluating critical tensors after
    each drop, so the result always stays within the target.
    """
    current = list(S)
    changed = True
    while changed:
        changed = False
        for ix in list(current):
            if not find_critical_tensors(tree, lifetime_of(tree, ix), S.target_rank, current):
                current.remove(ix)
                changed = True
                break
    return SliceSet(tuple(current), S.target_rank, S.provenance)


@dataclass
class RefineResult:
    slices: SliceSet
    flops: int
    initial_flops: int
    evaluations: int = 0
    best_at: int = 0
    outer_iters: int = 0
    history: list[int] = field(default_factory=list, repr=False)


def anneal(tree: ContractionTree, S0: SliceSet, cfg: AnnealConfig = AnnealConfig(),
           sweep: bool = True, record: bool = False) -> RefineResult:
    """Run one annealing chain and return the best slice set seen.

    One outer iteration makes ``|S|`` moves; the temperature is then
    multiplied by ``alpha`` until it drops below ``t_final``. Index choice
    and acceptance draw from two independent streams seeded by
    ``cfg.seed``. ``evaluations`` counts cost evaluations and ``best_at``
    is the evaluation at which the returned set was first reached.
    """
    t = S0.target_rank
    if not is_valid_slicing(tree, S0, t):
        raise ValidationError("initial slice set violates the memory target")
    initial_flops = sliced_cost(tree, S0).flops
    S = remove_redundant(tree, S0) if sweep else S0
    S = SliceSet(S.indices, t, "refiner")

    choose_ss, accept_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    rng_choose = np.random.Generator(np.random.PCG64(choose_ss))
    rng_accept = np.random.Generator(np.random.PCG64(accept_ss))
    lifetimes = {ix: lifetime_of(tree, ix) for ix in tree.network.edges}

    c_cur = sliced_cost(tree, S).flops
    best, c_best = S, c_cur
    result = RefineResult(best, c_best, initial_flops)
    temperature = cfg.t_initial
    while temperature >= cfg.t_final and result.outer_iters < cfg.max_outer_iters and len(S):
        for _ in range(len(S)):
            index = S.indices[int(rng_choose.integers(len(S)))]
            crit = find_critical_tensors(tree, lifetimes[index], t, S)
            for can in sorted(find_candidate_indices(tree, crit, S, index)):
                trial = S.replaced(index, can)
                if not is_valid_slicing(tree, trial, t):
                    continue
                c_new = sliced_cost(tree, trial).flops
                result.evaluations += 1
                if record:
                    result.history.append(c_new)
                if c_new < c_cur:
                    accept = True
                else:
                    p = acceptance_probability(c_cur, c_new, temperature)
                    accept = rng_accept.random() < p
                if accept:
                    S, c_cur, index = trial, c_new, can
                    if (c_cur, sorted(S)) < (c_best, sorted(best)):
                        best, c_best = S, c_cur
                        result.best_at = result.evaluations
        temperature *= cfg.alpha
        result.outer_iters += 1
    result.slices, result.flops = best, c_best
    return result


def refine(tree: ContractionTree, S0: SliceSet, cfg: AnnealConfig = AnnealConfig()) -> SliceSet:
    return anneal(tree, S0, cfg).slices


def refine_chains(tree: ContractionTree, S0: SliceSet, cfg: AnnealConfig = AnnealConfig(),
                  chains: int = 1, workers: int = 1) -> SliceSet:
    """Best of ``chains`` independent chains seeded ``cfg.seed + k``.

    Ties on cost go to the lexicographically smallest sorted index list,
    so the answer does not depend on ``workers``.
    """
    cfgs = [AnnealConfig(cfg.t_initial, cfg.t_final, cfg.alpha, cfg.seed + k,
                         cfg.max_outer_iters) for k in range(chains)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda c: anneal(tree, S0, c), cfgs))
    else:
        results = [anneal(tree, S0, c) for c in cfgs]
    best = min(results, key=lambda r: (r.flops, sorted(r.slices)))
    return best.slices
