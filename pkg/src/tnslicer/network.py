"""Tensor-network and contraction-tree data model.

Networks are simple graphs: every index joins one vertex (open) or two
vertices (closed). Contraction paths use SSA numbering, i.e. leaf ``i`` is
vertex ``i`` and the ``k``-th contraction creates tensor ``n_leaves + k``.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .errors import ValidationError

FORMAT = "tn-slicer/v1"


@dataclass(frozen=True)
class Vertex:
    id: int
    indices: tuple[str, ...]


@dataclass(frozen=True)
class Edge:
    id: str
    log2_weight: int
    endpoints: tuple[int, ...]

    @property
    def is_open(self) -> bool:
        return len(self.endpoints) == 1


class TensorNetwork:
    """Undirected graph of tensors (vertices) joined by indices (edges)."""

    def __init__(self, vertices: Sequence[Vertex], weights: Mapping[str, int]):
        if not vertices:
            raise ValidationError("empty network")
        ids = [v.id for v in vertices]
        if sorted(ids) != list(range(len(ids))):
            raise ValidationError(
                f"vertex ids must be exactly 0..{len(ids) - 1}, got {sorted(ids)}")
        self.vertices: tuple[Vertex, ...] = tuple(sorted(vertices, key=lambda v: v.id))

        endpoints: dict[str, list[int]] = {ix: [] for ix in weights}
        for v in self.vertices:
            if len(set(v.indices)) != len(v.indices):
                raise ValidationError(f"vertex {v.id} repeats an index: {list(v.indices)}")
            for ix in v.indices:
                if ix not in endpoints:
                    raise ValidationError(f"vertex {v.id} references unknown index {ix!r}")
                endpoints[ix].append(v.id)

        edges = {}
        for ix, w in weights.items():
            if not isinstance(w, int) or isinstance(w, bool) or w < 1:
                raise ValidationError(f"index {ix!r}: log2_weight must be an integer >= 1, got {w!r}")
            ends = endpoints[ix]
            if len(ends) == 0:
                raise ValidationError(f"index {ix!r} has no endpoints")
            if len(ends) > 2:
                raise ValidationError(
                    f"index {ix!r} has {len(ends)} endpoints; hyperedges are not supported")
            edges[ix] = Edge(ix, w, tuple(ends))
        self.edges: dict[str, Edge] = edges

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def open_edges(self) -> tuple[str, ...]:
        return tuple(sorted(ix for ix, e in self.edges.items() if e.is_open))

    def weight(self, ix: str) -> int:
        return self.edges[ix].log2_weight

    def rank(self, indices: Iterable[str]) -> int:
        """Sum of log2 weights, i.e. log2 of the element count."""
        return sum(self.edges[ix].log2_weight for ix in indices)

    def is_connected(self) -> bool:
        adj = defaultdict(set)
        for e in self.edges.values():
            if len(e.endpoints) == 2:
                a, b = e.endpoints
                adj[a].add(b)
                adj[b].add(a)
        seen = {0}
        stack = [0]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "edges": [{"id": ix, "log2_weight": self.edges[ix].log2_weight}
                      for ix in sorted(self.edges)],
            "vertices": [{"id": v.id, "indices": list(v.indices)} for v in self.vertices],
        }

    def __eq__(self, other):
        if not isinstance(other, TensorNetwork):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"TensorNetwork(n_vertices={self.n_vertices}, n_edges={len(self.edges)})"


def network_from_dict(doc: Mapping) -> TensorNetwork:
    if not isinstance(doc, Mapping):
        raise ValidationError("network document must be a JSON object")
    fmt = doc.get("format", FORMAT)
    if fmt != FORMAT:
        raise ValidationError(f"unsupported format {fmt!r}, expected {FORMAT!r}")
    for key in ("edges", "vertices"):
        if key not in doc or not isinstance(doc[key], list):
            raise ValidationError(f"field {key!r}: expected a list")

    weights: dict[str, int] = {}
    for n, e in enumerate(doc["edges"]):
        if not isinstance(e, Mapping) or "id" not in e:
            raise ValidationError(f"edges[{n}]: expected an object with an 'id'")
        ix = str(e["id"])
        if ix in weights:
            raise ValidationError(f"edges[{n}]: duplicate index id {ix!r}")
        weights[ix] = e.get("log2_weight", 1)

    vertices = []
    seen = set()
    for n, v in enumerate(doc["vertices"]):
        if not isinstance(v, Mapping) or "id" not in v or "indices" not in v:
            raise ValidationError(f"vertices[{n}]: expected an object with 'id' and 'indices'")
        if v["id"] in seen:
            raise ValidationError(f"vertices[{n}]: duplicate vertex id {v['id']!r}")
        seen.add(v["id"])
        if not isinstance(v["id"], int):
            raise ValidationError(f"vertices[{n}]: vertex id must be an integer")
        vertices.append(Vertex(v["id"], tuple(str(ix) for ix in v["indices"])))
    return TensorNetwork(vertices, weights)


def parse_network(document: str) -> TensorNetwork:
    """Parse a JSON network document and validate it."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return network_from_dict(doc)


def serialize_network(net: TensorNetwork) -> str:
    return json.dumps(net.to_dict(), indent=1, sort_keys=True)


def network_from_indices(tensors: Sequence[Sequence[str]],
                         weights: Mapping[str, int] | None = None) -> TensorNetwork:
    """Build a network from a list of index lists; unit weights by default."""
    weights = dict(weights or {})
    for t in tensors:
        for ix in t:
            weights.setdefault(ix, 1)
    return TensorNetwork([Vertex(i, tuple(t)) for i, t in enumerate(tensors)], weights)


def parse_path(document: str) -> list[tuple[int, int]]:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, Mapping) or not isinstance(doc.get("ssa_path"), list):
        raise ValidationError("path document must contain an 'ssa_path' list")
    fmt = doc.get("format", FORMAT)
    if fmt != FORMAT:
        raise ValidationError(f"unsupported format {fmt!r}, expected {FORMAT!r}")
    path = []
    for n, step in enumerate(doc["ssa_path"]):
        if (not isinstance(step, list) or len(step) != 2
                or not all(isinstance(x, int) for x in step)):
            raise ValidationError(f"ssa_path[{n}]: expected a pair of integers")
        path.append((step[0], step[1]))
    return path


def serialize_path(path: Sequence[tuple[int, int]]) -> str:
    return json.dumps({"format": FORMAT, "ssa_path": [list(p) for p in path]})


@dataclass(frozen=True)
class Node:
    """A pairwise contraction ``left x right -> out`` (tree-edge ids)."""
    left: int
    right: int
    out: int


class ContractionTree:
    """Rooted binary contraction tree.

    Tree edges are tensors and are numbered in SSA order: ``0..n-1`` are the
    leaves, ``n + k`` is the output of ``nodes[k]``. ``root`` is the final
    tensor, which hangs off an implicit read-out node that costs nothing.
    """

    def __init__(self, net: TensorNetwork, nodes: Sequence[Node],
                 edge_indices: Sequence[frozenset[str]]):
        self.network = net
        self.n_leaves = net.n_vertices
        self.nodes: tuple[Node, ...] = tuple(nodes)
        self.edge_indices: tuple[frozenset[str], ...] = tuple(edge_indices)
        self.root = len(self.edge_indices) - 1
        self.parent: dict[int, int] = {}
        for k, node in enumerate(self.nodes):
            self.parent[node.left] = k
            self.parent[node.right] = k

    @property
    def n_edges(self) -> int:
        return len(self.edge_indices)

    def is_leaf(self, edge: int) -> bool:
        return edge < self.n_leaves

    def producer(self, edge: int) -> Node | None:
        """The node whose output is ``edge``; ``None`` for leaves."""
        if edge < self.n_leaves:
            return None
        return self.nodes[edge - self.n_leaves]

    @cached_property
    def edge_ranks(self) -> tuple[int, ...]:
        return tuple(self.network.rank(s) for s in self.edge_indices)

    @cached_property
    def node_sets(self) -> tuple[frozenset[str], ...]:
        e = self.edge_indices
        return tuple(e[n.left] | e[n.right] | e[n.out] for n in self.nodes)

    @cached_property
    def node_ranks(self) -> tuple[int, ...]:
        return tuple(self.network.rank(s) for s in self.node_sets)

    def rank(self, edge: int) -> int:
        return self.edge_ranks[edge]

    def node_indices(self, node: Node) -> frozenset[str]:
        """Union of the index sets on the three tree edges of ``node``."""
        return self.node_sets[node.out - self.n_leaves]

    def subtree_edges(self, edge: int) -> list[int]:
        """All tree edges at or below ``edge``, in ascending order."""
        out, stack = [], [edge]
        while stack:
            x = stack.pop()
            out.append(x)
            node = self.producer(x)
            if node is not None:
                stack.extend((node.left, node.right))
        return sorted(out)

    def path(self) -> list[tuple[int, int]]:
        return [(n.left, n.right) for n in self.nodes]

    def __repr__(self):
        return f"ContractionTree(n_leaves={self.n_leaves}, root_rank={self.rank(self.root)})"


def build_tree(net: TensorNetwork, path: Sequence[tuple[int, int]]) -> ContractionTree:
    """Replay an SSA path over ``net`` and return the contraction tree."""
    n = net.n_vertices
    edge_indices = [frozenset(v.indices) for v in net.vertices]
    live = set(range(n))
    nodes = []
    for k, (a, b) in enumerate(path):
        for x in (a, b):
            if x not in live:
                state = "consumed" if x < len(edge_indices) else "unknown"
                raise ValidationError(f"path step {k}: tensor {x} is {state}")
        if a == b:
            raise ValidationError(f"path step {k}: contracts tensor {a} with itself")
        live -= {a, b}
        out = n + k
        # simple graph: a shared index has both endpoints here, so it is contracted
        edge_indices.append(edge_indices[a] ^ edge_indices[b])
        nodes.append(Node(a, b, out))
        live.add(out)
    if len(live) != 1:
        raise ValidationError(
            f"path leaves {len(live)} tensors uncontracted; expected {n - 1} steps, got {len(path)}")
    return ContractionTree(net, nodes, edge_indices)


def check_conservation(tree: ContractionTree) -> None:
    """Assert that at every node each index follows an allowed pattern.

    Allowed memberships over (left, right, out): carried from one child,
    contracted between both children, or absent.
    """
    allowed = {(True, False, True), (False, True, True), (True, True, False)}
    e = tree.edge_indices
    for k, node in enumerate(tree.nodes):
        for ix in tree.node_indices(node):
            pattern = (ix in e[node.left], ix in e[node.right], ix in e[node.out])
            if pattern not in allowed:
                raise ValidationError(f"node {k}: index {ix!r} violates conservation {pattern}")
    if set(e[tree.root]) != set(tree.network.open_edges):
        raise ValidationError("root index set differs from the open indices")


def greedy_test_path(net: TensorNetwork, seed: int = 0,
                     temperature: float = 1.0) -> list[tuple[int, int]]:
    """A randomized greedy path for building test fixtures.

    At each step contracts the pair of connected tensors with the smallest
    output rank plus uniform noise of width ``temperature``.
    """
    if not net.is_connected():
        raise ValidationError("network is disconnected")
    rng = random.Random(seed)
    n = net.n_vertices
    tensors = {i: frozenset(v.indices) for i, v in enumerate(net.vertices)}
    owners: dict[str, set[int]] = defaultdict(set)
    for i, ixs in tensors.items():
        for ix in ixs:
            owners[ix].add(i)

    path = []
    nxt = n
    while len(tensors) > 1:
        pairs = set()
        for ix, own in owners.items():
            if len(own) == 2:
                pairs.add(tuple(sorted(own)))
        best = None
        for a, b in sorted(pairs):
            score = net.rank(tensors[a] ^ tensors[b]) + temperature * rng.random()
            if best is None or score < best[0]:
                best = (score, a, b)
        _, a, b = best
        out = tensors[a] ^ tensors[b]
        for x in (a, b):
            for ix in tensors.pop(x):
                owners[ix].discard(x)
        tensors[nxt] = out
        for ix in out:
            owners[ix].add(nxt)
        path.append((a, b))
        nxt += 1
    return path


def random_network(n_vertices: int, seed: int = 0, degree: float = 3.0,
                   n_open: int = 0) -> TensorNetwork:
    """A random connected multigraph network with unit weights.

    A random spanning tree is topped up with extra edges until the mean
    degree reaches ``degree``; ``n_open`` dangling indices are attached to
    random vertices.
    """
    if n_vertices < 2:
        raise ValueError("need at least two vertices")
    rng = random.Random(seed)
    order = list(range(n_vertices))
    rng.shuffle(order)
    pairs = [(order[i], order[rng.randrange(i)]) for i in range(1, n_vertices)]
    target = max(len(pairs), round(degree * n_vertices / 2))
    while len(pairs) < target:
        a, b = rng.sample(range(n_vertices), 2)
        pairs.append((a, b))
    incident: list[list[str]] = [[] for _ in range(n_vertices)]
    n_ix = 0
    for a, b in pairs:
        name = f"i{n_ix:03d}"
        incident[a].append(name)
        incident[b].append(name)
        n_ix += 1
    for _ in range(n_open):
        incident[rng.randrange(n_vertices)].append(f"o{n_ix:03d}")
        n_ix += 1
    return network_from_indices(incident)


def random_regular_network(n_vertices: int, degree: int = 3, seed: int = 0,
                           n_open: int = 0) -> TensorNetwork:
    """A connected random ``degree``-regular network with unit weights.

    Graphs are redrawn from the seeded stream until one is connected.
    """
    import networkx as nx

    if n_vertices * degree % 2 or degree >= n_vertices:
        raise ValidationError(f"no {degree}-regular graph on {n_vertices} vertices")
    rng = random.Random(seed)
    while True:
        g = nx.random_regular_graph(degree, n_vertices, seed=rng.randrange(2**32))
        if nx.is_connected(g):
            break
    incident: list[list[str]] = [[] for _ in range(n_vertices)]
    for k, (a, b) in enumerate(sorted(tuple(sorted(e)) for e in g.edges())):
        incident[a].append(f"i{k:03d}")
        incident[b].append(f"i{k:03d}")
    for j in range(n_open):
        incident[rng.randrange(n_vertices)].append(f"o{j:03d}")
    return network_from_indices(incident)
