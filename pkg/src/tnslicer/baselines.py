"""Comparison baselines and brute-force oracles for slicing."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .cost import SliceSet, residual_ranks, sliced_cost
from .errors import InfeasibleError, ValidationError
from .network import ContractionTree, build_tree, greedy_test_path, random_network


def greedy_slicer(tree: ContractionTree, t: int) -> SliceSet:
    """Repeatedly slice the index giving the lowest total sliced cost.

    Only indices carried by a tensor that still exceeds the target are
    considered; ties go to the smaller index id.
    """
    net = tree.network
    S: list[str] = []
    while True:
        res = residual_ranks(tree, S)
        over = [e for e, r in enumerate(res) if r > t]
        if not over:
            return SliceSet(tuple(S), t, "greedy")
        pool = sorted({ix for e in over for ix in tree.edge_indices[e]
                       if ix not in S and net.weight(ix) == 1})
        if not pool:
            raise InfeasibleError("no sliceable index left on an oversized tensor")
        best = min(pool, key=lambda ix: (sliced_cost(tree, S + [ix]).flops, ix))
        S.append(best)


def candidate_pool(tree: ContractionTree, t: int) -> list[str]:
    """Unit-weight indices of tensors whose rank exceeds ``t``.

    Any valid slice set that uses other indices stays valid, and no more
    expensive, without them.
    """
    net = tree.network
    return sorted({ix for e in range(tree.n_edges) if tree.rank(e) > t
                   for ix in tree.edge_indices[e] if net.weight(ix) == 1})


@dataclass
class Landscape:
    pool: list[str]
    flops: dict[frozenset, int] = field(default_factory=dict)  # valid subsets only
    base_flops: int = 1

    def by_size(self) -> dict[int, dict[frozenset, int]]:
        out: dict[int, dict[frozenset, int]] = {}
        for s, f in self.flops.items():
            out.setdefault(len(s), {})[s] = f
        return out


def exhaustive_slicer(tree: ContractionTree, t: int,
                      max_pool: int = 14) -> tuple[SliceSet, Landscape]:
    """Cost every valid subset of the candidate pool.

    Returns the cheapest valid set (smallest size, then index order on
    ties) and the full landscape of valid subsets.
    """
    pool = candidate_pool(tree, t)
    if len(pool) > max_pool:
        raise ValidationError(f"candidate pool has {len(pool)} indices, limit is {max_pool}")
    ranks = [tree.rank(e) for e in range(tree.n_edges)]
    over = [(e, ranks[e] - t, tree.edge_indices[e]) for e in range(tree.n_edges) if ranks[e] > t]
    land = Landscape(pool, base_flops=sliced_cost(tree, ()).flops)
    best = None
    for n in range(len(pool) + 1):
        for combo in itertools.combinations(pool, n):
            s = frozenset(combo)
            if any(len(s & ixs) < need for _, need, ixs in over):
                continue
            f = sliced_cost(tree, combo).flops
            land.flops[s] = f
            key = (f, n, combo)
            if best is None or key < best:
                best = key
    if best is None:
        raise InfeasibleError("no valid slice set within the candidate pool")
    return SliceSet(best[2], t, "exhaustive"), land


@dataclass
class SmallerSetAudit:
    checked: int = 0
    counterexamples: list[tuple[frozenset, int]] = field(default_factory=list)
    ties: int = 0


def audit_smaller_sets(land: Landscape) -> SmallerSetAudit:
    """Check that a cheaper valid (n-1)-set exists for every qualifying n-set.

    An n-set ``S1`` qualifies when some valid (n-1)-set ``S2`` intersects
    it. A failure is recorded when no valid (n-1)-set is strictly cheaper;
    ``ties`` counts the cases where the best one costs exactly the same.
    """
    audit = SmallerSetAudit()
    sizes = land.by_size()
    for n, sets in sorted(sizes.items()):
        smaller = sizes.get(n - 1)
        if not smaller:
            continue
        cheapest = min(smaller.values())
        for s1, f1 in sorted(sets.items(), key=lambda kv: sorted(kv[0])):
            if not any(s1 & s2 for s2 in smaller):
                continue
            audit.checked += 1
            if cheapest > f1:
                audit.counterexamples.append((s1, n))
            elif cheapest == f1:
                audit.ties += 1
    return audit


@dataclass
class Instance:
    seed: int
    tree: ContractionTree
    t: int


def random_instance(seed: int, n_vertices: tuple[int, int] = (8, 16),
                    degree: tuple[float, float] = (3.0, 4.0), max_open: int = 2,
                    depth: tuple[int, int] = (1, 3)) -> Instance:
    """A random network, greedy path and a target a few ranks below the peak."""
    rng = random.Random(seed)
    n = rng.randint(*n_vertices)
    net = random_network(n, seed=seed, degree=rng.uniform(*degree),
                         n_open=rng.randint(0, max_open))
    tree = build_tree(net, greedy_test_path(net, seed=seed))
    peak = max(tree.rank(e) for e in range(tree.n_edges))
    t = max(1, peak - rng.randint(*depth))
    return Instance(seed, tree, t)
