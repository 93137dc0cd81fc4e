"""Index lifetimes, the stem, and lifetimes restricted to the stem.

The lifetime of an index is the set of tree edges (tensors) carrying it.
On a valid tree it is always a simple path: leaf to leaf for a closed
index, leaf to root for an open one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .cost import node_cost
from .errors import ValidationError
from .network import ContractionTree


@dataclass(frozen=True)
class Lifetime:
    index: str
    tree_edges: tuple[int, ...]  # ordered along the path
    endpoints: tuple[str, str]  # ("leaf", "leaf") or ("leaf", "root")

    def __len__(self):
        return len(self.tree_edges)

    def __contains__(self, edge):
        return edge in self.tree_edges


def _order_as_path(tree: ContractionTree, index: str, members: set[int]) -> list[int]:
    """Order ``members`` as a simple tree path or raise."""
    # Adjacent tree edges are those meeting at a node (parent-child or siblings).
    adj: dict[int, list[int]] = {e: [] for e in members}
    for node in tree.nodes:
        here = [e for e in (node.left, node.right, node.out) if e in members]
        for a in here:
            for b in here:
                if a != b:
                    adj[a].append(b)
    if any(len(v) > 2 for v in adj.values()):
        raise ValidationError(f"lifetime of {index!r} branches; tree is malformed")
    ends = sorted(e for e, v in adj.items() if len(v) <= 1)
    if len(members) > 1 and len(ends) != 2:
        raise ValidationError(f"lifetime of {index!r} is not a simple path")
    start = ends[0] if ends else min(members)
    order, prev = [start], None
    while len(order) < len(members):
        nxt = [e for e in adj[order[-1]] if e != prev]
        if not nxt:
            raise ValidationError(f"lifetime of {index!r} is disconnected")
        prev = order[-1]
        order.append(nxt[0])
    return order


def lifetime_of(tree: ContractionTree, index: str) -> Lifetime:
    if index not in tree.network.edges:
        raise ValidationError(f"unknown index {index!r}")
    members = {e for e, s in enumerate(tree.edge_indices) if index in s}
    order = _order_as_path(tree, index, members)

    leaves = [e for e in members if tree.is_leaf(e)]
    is_open = tree.network.edges[index].is_open
    if is_open:
        ok = len(leaves) == 1 and tree.root in members
        if ok and order[0] == tree.root:
            order.reverse()
        endpoints = ("leaf", "root")
    else:
        ok = len(leaves) == 2 and {order[0], order[-1]} == set(leaves)
        endpoints = ("leaf", "leaf")
    if not ok:
        raise ValidationError(f"lifetime of {index!r} has wrong endpoints")
    return Lifetime(index, tuple(order), endpoints)


def all_lifetimes(tree: ContractionTree) -> dict[str, Lifetime]:
    return {ix: lifetime_of(tree, ix) for ix in sorted(tree.network.edges)}


def correlated_nodes(tree: ContractionTree, index: str) -> list[int]:
    """Indices of the nodes whose three tensors involve ``index``."""
    return [k for k, node in enumerate(tree.nodes) if index in tree.node_indices(node)]


@dataclass(frozen=True)
class Stem:
    """A leaf-to-root path of the contraction tree.

    ``tensors[0]`` is the leaf end and ``tensors[-1]`` the root. Step ``k``
    contracts ``tensors[k]`` with ``branches[k]`` (the off-stem child) at
    node ``nodes[k]`` to produce ``tensors[k + 1]``.
    """
    tensors: tuple[int, ...]
    nodes: tuple[int, ...]
    branches: tuple[int, ...]
    node_costs: tuple[int, ...]

    def __len__(self):
        return len(self.tensors)

    @property
    def branch_map(self) -> dict[int, int]:
        return dict(enumerate(self.branches))


def _best_costs(tree: ContractionTree) -> list[int]:
    """Max total node cost over paths from each tree edge down to a leaf."""
    best = [0] * tree.n_edges
    for k, node in enumerate(tree.nodes):
        best[node.out] = node_cost(tree, node) + max(best[node.left], best[node.right])
    return best


def extract_stem(tree: ContractionTree, top: int | None = None) -> Stem:
    """Maximum-cost leaf-to-root path, ties broken by the smaller tree edge.

    With ``top`` given, the path runs from a leaf up to that tree edge
    instead of the root, i.e. the stem of the subtree below ``top``.
    """
    if not tree.nodes:
        raise ValidationError("tree has no contractions")
    best = _best_costs(tree)
    down = [tree.root if top is None else top]
    nodes, branches, costs = [], [], []
    while True:
        node = tree.producer(down[-1])
        if node is None:
            break
        a, b = sorted((node.left, node.right))
        pick, other = (a, b) if best[a] >= best[b] else (b, a)
        nodes.append(node.out - tree.n_leaves)
        branches.append(other)
        costs.append(node_cost(tree, node))
        down.append(pick)
    return Stem(tuple(reversed(down)), tuple(reversed(nodes)),
                tuple(reversed(branches)), tuple(reversed(costs)))


def restrict_lifetimes(tree: ContractionTree, stem: Stem,
                       lifetimes: Mapping[str, Lifetime] | None = None
                       ) -> dict[str, tuple[int, int]]:
    """Map each index carried by some stem tensor to its stem interval."""
    if lifetimes is None:
        lifetimes = all_lifetimes(tree)
    position = {e: p for p, e in enumerate(stem.tensors)}
    out = {}
    for ix in sorted(lifetimes):
        where = sorted(position[e] for e in lifetimes[ix].tree_edges if e in position)
        if not where:
            continue
        if where[-1] - where[0] + 1 != len(where):
            raise ValidationError(f"index {ix!r} is not contiguous on the stem")
        out[ix] = (where[0], where[-1])
    return out
