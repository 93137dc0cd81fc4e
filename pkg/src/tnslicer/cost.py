"""Time and memory cost of (sliced) contraction trees.

All per-node exponents are integers, so totals are accumulated exactly as
Python integers and only converted to ``log2`` at the end. Pseudo-nodes
for reading leaves and the final read-out cost nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ValidationError
from .network import ContractionTree, Node


@dataclass(frozen=True)
class CostReport:
    flops: int
    log2_memory_peak: int
    per_node_log2: tuple[int, ...]

    @property
    def log2_time_total(self) -> float:
        return math.log2(self.flops) if self.flops else float("-inf")

    def to_dict(self) -> dict:
        return {
            "log2_flops": self.log2_time_total,
            "log2_peak_rank": self.log2_memory_peak,
            "flops": str(self.flops),
        }


@dataclass(frozen=True)
class SliceSet:
    """Sliced indices, in insertion order, for memory target ``target_rank``."""
    indices: tuple[str, ...]
    target_rank: int
    provenance: str = "manual"

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValidationError(f"duplicate sliced index in {list(self.indices)}")

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, ix):
        return ix in self.indices

    def replaced(self, old: str, new: str, provenance: str | None = None) -> "SliceSet":
        ixs = tuple(new if ix == old else ix for ix in self.indices)
        return SliceSet(ixs, self.target_rank, provenance or self.provenance)

    def to_dict(self) -> dict:
        return {"target_rank": self.target_rank, "indices": list(self.indices),
                "provenance": self.provenance}


@dataclass(frozen=True)
class MemoryLevel:
    name: str
    capacity_bytes: float
    bandwidth_bytes_per_s: float


@dataclass(frozen=True)
class MemoryLevelModel:
    """Storage levels from outermost to innermost.

    A level's bandwidth is the rate at which data moves into it from the
    level above.
    """
    levels: tuple[MemoryLevel, ...]
    peak_flops: float
    element_bytes: int = 16

    def __post_init__(self):
        if not self.levels:
            raise ValidationError("memory model needs at least one level")
        if self.peak_flops <= 0 or self.element_bytes <= 0:
            raise ValidationError("peak_flops and element_bytes must be positive")
        for lvl in self.levels:
            if lvl.capacity_bytes <= 0 or lvl.bandwidth_bytes_per_s <= 0:
                raise ValidationError(f"level {lvl.name!r}: values must be positive")
        caps = [lvl.capacity_bytes for lvl in self.levels]
        if any(a <= b for a, b in zip(caps, caps[1:])):
            raise ValidationError("capacities must strictly decrease from outer to inner")


def _sliced_weights(tree: ContractionTree, S: Iterable[str]) -> dict[str, int]:
    weights = {}
    for ix in S:
        if ix not in tree.network.edges:
            raise ValidationError(f"unknown sliced index {ix!r}")
        w = tree.network.weight(ix)
        if w != 1:
            raise ValidationError(f"cannot slice index {ix!r} with log2_weight {w}")
        weights[ix] = w
    return weights


def node_cost(tree: ContractionTree, node: Node) -> int:
    """log2 of the scalar multiplications performed by ``node``."""
    return tree.network.rank(tree.node_indices(node))


def residual_rank(tree: ContractionTree, edge: int, S: Iterable[str]) -> int:
    s = tree.edge_indices[edge]
    return tree.rank(edge) - sum(1 for ix in S if ix in s)


def residual_ranks(tree: ContractionTree, S: Iterable[str]) -> list[int]:
    S = set(S)
    return [r - len(S & s) for r, s in zip(tree.edge_ranks, tree.edge_indices)]


def is_valid_slicing(tree: ContractionTree, S: Iterable[str], t: int) -> bool:
    return max(residual_ranks(tree, S)) <= t


def tree_cost(tree: ContractionTree) -> CostReport:
    per_node = tree.node_ranks
    flops = sum(1 << p for p in per_node)
    peak = max(tree.edge_ranks)
    return CostReport(flops, peak, per_node)


def sliced_cost(tree: ContractionTree, S: SliceSet | Sequence[str]) -> CostReport:
    """Total cost over all ``2**|S|`` subtasks.

    Each node costs ``2**(rank(node) + |S| - |S & node|)``.
    """
    indices = tuple(S)
    if len(set(indices)) != len(indices):
        raise ValidationError("duplicate sliced index")
    _sliced_weights(tree, indices)
    Sset = set(indices)
    n = len(Sset)
    per_node = tuple(r + n - len(Sset & s) for r, s in zip(tree.node_ranks, tree.node_sets))
    flops = sum(1 << p for p in per_node)
    peak = max(residual_ranks(tree, Sset))
    return CostReport(flops, peak, per_node)


def overhead_fraction(tree: ContractionTree, S) -> Fraction:
    return Fraction(sliced_cost(tree, S).flops, tree_cost(tree).flops)


def overhead(tree: ContractionTree, S) -> float:
    """Sliced flops over unsliced flops (>= 1)."""
    return float(overhead_fraction(tree, S))


def node_multiples(tree: ContractionTree, S) -> list[int]:
    """Per-node factor by which slicing ``S`` multiplies the work."""
    Sset = set(S)
    return [1 << (len(Sset) - len(Sset & tree.node_indices(node))) for node in tree.nodes]


@dataclass
class LevelAdvice:
    outer: str
    inner: str
    stacking_overhead: float
    slicing_overhead: float
    recommendation: str
    bytes_moved: float = field(default=0.0)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def advise_strategy(model: MemoryLevelModel, tree: ContractionTree,
                    candidates: Sequence[SliceSet]) -> list[LevelAdvice]:
    """Choose slicing or stacking at each adjacent pair of memory levels.

    Stacking is priced as recomputation-free but moving every tensor that
    does not fit in the inner level once in and once out; the movement time
    is converted to an equivalent overhead against the unsliced compute
    time. Slicing is priced by the best candidate whose target fits.
    """
    if not candidates:
        raise ValidationError("no slicing candidates given")
    base = tree_cost(tree).flops
    t_compute = base / model.peak_flops
    sizes = [model.element_bytes * 2.0 ** tree.rank(e) for e in range(tree.n_edges)]
    out = []
    for outer, inner in zip(model.levels, model.levels[1:]):
        moved = sum(2 * b for b in sizes if b > inner.capacity_bytes)
        t_move = moved / inner.bandwidth_bytes_per_s if moved else 0.0
        stack = 1.0 + t_move / t_compute
        fitting = [S for S in candidates
                   if model.element_bytes * 2.0 ** S.target_rank <= inner.capacity_bytes]
        slice_ovh = min((overhead(tree, S) for S in fitting), default=math.inf)
        rec = "stack" if stack <= slice_ovh else "slice"
        out.append(LevelAdvice(outer.name, inner.name, stack, slice_ovh, rec, moved))
    return out
