"""Lifetime-guided slice finder.

Works inward from the two ends of the stem. The end tensor with the
smaller residual rank is satisfied by slicing its indices with the longest
lifetimes on the live stem, satisfied tensors drop out, and the process
repeats until every stem tensor fits the target.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from .cost import SliceSet, residual_rank
from .errors import InfeasibleError, ValidationError
from .lifetime import Stem, all_lifetimes, extract_stem, restrict_lifetimes
from .network import ContractionTree
from .refine import remove_redundant

POOLS = ("local", "global")


def find_slices(tree: ContractionTree, stem: Stem, intervals: Mapping[str, tuple[int, int]],
                t: int, initial: Iterable[str] = (), pool: str = "local") -> SliceSet:
    """Slice until every tensor on ``stem`` has residual rank ``<= t``.

    ``intervals`` maps indices to their stem interval (see
    ``restrict_lifetimes``). Lifetime length is counted over the live stem
    tensors for ``pool="local"`` and over the whole stem for
    ``pool="global"``. Indices already in ``initial`` are kept.
    """
    if t < 1:
        raise ValidationError(f"target rank must be >= 1, got {t}")
    if pool not in POOLS:
        raise ValidationError(f"unknown finder pool {pool!r}")
    S = list(initial)
    net = tree.network
    res = [residual_rank(tree, e, S) for e in stem.tensors]
    live = [p for p in range(len(stem)) if res[p] > t]

    while live:
        first, last = live[0], live[-1]
        pos = first if res[first] <= res[last] else last
        need = res[pos] - t
        cands = [ix for ix in sorted(tree.edge_indices[stem.tensors[pos]])
                 if ix not in S and net.weight(ix) == 1]
        if len(cands) < need:
            raise InfeasibleError(
                f"stem tensor {stem.tensors[pos]} needs {need} more sliced indices, "
                f"only {len(cands)} unit-weight indices remain")
        top = max(res[p] for p in live)

        def score(ix):
            lo, hi = intervals[ix]
            covered = [p for p in live if lo <= p <= hi]
            length = len(covered) if pool == "local" else hi - lo + 1
            at_max = sum(1 for p in covered if res[p] == top)
            return (-length, -at_max, ix)

        picked = sorted(cands, key=score)[:need]
        S.extend(picked)
        for p in range(len(stem)):
            s = tree.edge_indices[stem.tensors[p]]
            res[p] -= sum(1 for ix in picked if ix in s)
        live = [p for p in live if res[p] > t]
    return SliceSet(tuple(S), t, "finder")


def find_tree_slices(tree: ContractionTree, t: int, pool: str = "local") -> SliceSet:
    """Run the finder on the stem, then on the stems of violating branches.

    Branch subtrees rarely exceed the target; when one does, its own stem
    is processed with the slices found so far. Indices that no longer
    cover any tensor sitting exactly at the target are dropped at the end.
    """
    if not tree.nodes:
        return SliceSet((), t, "finder")
    S: list[str] = []
    lifetimes = all_lifetimes(tree)
    todo = [tree.root]
    while todo:
        top = todo.pop()
        below = tree.subtree_edges(top)
        if all(residual_rank(tree, e, S) <= t for e in below):
            continue
        stem = extract_stem(tree, top)
        S = list(find_slices(tree, stem, restrict_lifetimes(tree, stem, lifetimes),
                             t, S, pool))
        todo.extend(sorted(stem.branches, reverse=True))
    # later stems can make early picks unnecessary
    return remove_redundant(tree, SliceSet(tuple(S), t, "finder"))
