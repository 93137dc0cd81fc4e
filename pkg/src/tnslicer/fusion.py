"""Fused multi-step kernels via secondary slicing, and permutation maps.

A fused group runs stem steps ``start..stop`` inside the scratchpad. Its
secondary slices are indices that stay alive across the whole group, so
slicing them costs no recomputation: each of the ``2**m`` subtasks loads
its piece of the group's input once and stores its piece of the output
once.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .cost import MemoryLevelModel
from .errors import InfeasibleError, ValidationError
from .lifetime import Stem
from .network import ContractionTree

DEFAULT_CAPACITY = 13


@dataclass(frozen=True)
class FusedGroup:
    start: int  # first stem step
    stop: int  # last stem step, inclusive
    secondary_slices: tuple[str, ...]
    resident_rank: int
    stem_ranks: tuple[int, ...]  # tensors start..stop+1
    branch_ranks: tuple[int, ...]
    node_log2: tuple[int, ...]

    @property
    def n_steps(self) -> int:
        return self.stop - self.start + 1

    @property
    def n_subtasks(self) -> int:
        return 1 << len(self.secondary_slices)

    @property
    def transfers_in(self) -> int:
        return self.n_subtasks

    @property
    def transfers_out(self) -> int:
        return self.n_subtasks

    @property
    def in_rank(self) -> int:
        return self.stem_ranks[0]

    @property
    def out_rank(self) -> int:
        return self.stem_ranks[-1]

    @property
    def elements_in(self) -> int:
        return 1 << self.in_rank

    @property
    def elements_out(self) -> int:
        return 1 << self.out_rank

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(steps=[self.start, self.stop], subtasks=self.n_subtasks,
                 transfers_in=self.transfers_in, transfers_out=self.transfers_out)
        return d


@dataclass(frozen=True)
class FusedPlan:
    groups: tuple[FusedGroup, ...]
    c: int
    stem_tensors: tuple[int, ...]
    process_slices: tuple[str, ...] = ()

    @property
    def n_steps(self) -> int:
        return len(self.stem_tensors) - 1

    @property
    def dma_saved(self) -> int:
        return sum(2 * (g.n_steps - 1) for g in self.groups)

    @property
    def subtask_counts(self) -> list[int]:
        return [g.n_subtasks for g in self.groups]

    def to_dict(self) -> dict:
        return {"c": self.c, "dma_saved": self.dma_saved,
                "process_slices": list(self.process_slices),
                "subtask_counts": self.subtask_counts,
                "groups": [g.to_dict() for g in self.groups]}


def plan_fusion(tree: ContractionTree, stem: Stem, intervals: Mapping[str, tuple[int, int]],
                c: int = DEFAULT_CAPACITY, process_slices: Iterable[str] = ()) -> FusedPlan:
    """Greedy left-to-right grouping of stem steps.

    At each group start, the fewest secondary slices that make the first
    step fit are taken from the live indices with the longest remaining
    lifetime; the group then grows while every slice stays alive and the
    next tensor fits. Ranks are residual with respect to ``process_slices``.
    """
    if c < 1:
        raise ValidationError(f"scratchpad capacity must be >= 1, got {c}")
    sliced = set(process_slices)
    net = tree.network

    def rank(e):
        s = tree.edge_indices[e]
        return net.rank(s) - len(s & sliced)

    M = stem.tensors
    n_steps = len(M) - 1
    groups = []
    i = 0
    while i < n_steps:
        m = max(0, max(rank(M[i]), rank(M[i + 1])) - c)
        cands = [ix for ix in tree.edge_indices[M[i]]
                 if ix not in sliced and net.weight(ix) == 1 and intervals[ix][1] >= i + 1]
        cands.sort(key=lambda ix: (-intervals[ix][1], ix))
        if len(cands) < m:
            raise InfeasibleError(
                f"stem step {i} (tensor {M[i]}) cannot fit rank {c}: needs {m} "
                f"secondary slices, only {len(cands)} indices survive the step")
        chosen = tuple(cands[:m])
        end = min((intervals[ix][1] for ix in chosen), default=n_steps)
        j = i
        while j + 1 < n_steps and end >= j + 2 and rank(M[j + 2]) - m <= c:
            j += 1
        steps = range(i, j + 1)
        nodes = [tree.nodes[stem.nodes[k]] for k in steps]
        groups.append(FusedGroup(
            start=i, stop=j, secondary_slices=chosen,
            resident_rank=max(rank(M[k]) for k in range(i, j + 2)) - m,
            stem_ranks=tuple(rank(M[k]) for k in range(i, j + 2)),
            branch_ranks=tuple(rank(stem.branches[k]) for k in steps),
            node_log2=tuple(net.rank(tree.node_indices(nd) - sliced) for nd in nodes)))
        i = j + 1
    return FusedPlan(tuple(groups), c, tuple(M), tuple(sorted(sliced)))


@dataclass(frozen=True)
class FusedCostReport:
    flops: int
    bytes_moved: float
    arithmetic_intensity: float
    baseline_bytes: float
    baseline_intensity: float
    machine_balance: float
    compute_bound: bool
    degenerate: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flops"] = str(self.flops)
        return d


def fused_cost_model(plan: FusedPlan, model: MemoryLevelModel,
                     granularity_bytes: int = 0) -> FusedCostReport:
    """Bytes moved between the two innermost levels and arithmetic intensity.

    Per group, every subtask loads its share of the input tensor and
    stores its share of the output once; branch tensors are loaded once
    per group. A transfer never moves less than ``granularity_bytes``.
    The baseline runs each step as its own unsliced group.
    """
    eb = model.element_bytes

    def xfer(elements, pieces=1):
        return pieces * max(elements * eb / pieces, granularity_bytes)

    flops = 0
    moved = 0.0
    base = 0.0
    for g in plan.groups:
        flops += sum(1 << p for p in g.node_log2)
        moved += xfer(g.elements_in, g.n_subtasks) + xfer(g.elements_out, g.n_subtasks)
        moved += sum(xfer(1 << r) for r in g.branch_ranks)
        base += sum(xfer(1 << r) for r in g.branch_ranks)
        # step by step, every stem tensor is loaded and stored around each step
        base += sum(xfer(1 << a) + xfer(1 << b)
                    for a, b in zip(g.stem_ranks, g.stem_ranks[1:]))
    balance = model.peak_flops / model.levels[-1].bandwidth_bytes_per_s
    degenerate = flops == 0 or moved == 0
    ai = 0.0 if degenerate else flops / moved
    base_ai = 0.0 if degenerate or base == 0 else flops / base
    return FusedCostReport(flops, moved, ai, base, base_ai, balance,
                           (not degenerate) and ai >= balance, degenerate)


@dataclass(frozen=True)
class PermutationPlan:
    """Transpose of a rank-``r`` tensor with all extents 2, via a reduced map.

    ``perm[p]`` is the input axis that becomes output axis ``p``. Only
    ``2**r / map_size_divisor`` map entries are stored; the rest follow
    from ``map[i + k*step] = map[i] + k*offset`` for ``k < stride``.
    """
    perm: tuple[int, ...]
    anchor: str  # "leading" or "trailing"
    fixed_run: int
    offset: int
    step: int

    @property
    def rank(self) -> int:
        return len(self.perm)

    @property
    def map_size_divisor(self) -> int:
        return 1 << self.fixed_run

    @property
    def stride(self) -> int:
        return 1 << self.fixed_run

    def to_dict(self) -> dict:
        return {"perm": list(self.perm), "anchor": self.anchor, "fixed_run": self.fixed_run,
                "map_size_divisor": self.map_size_divisor, "stride": self.stride,
                "offset": self.offset, "step": self.step}


def plan_from_perm(perm: Sequence[int], anchor: str) -> PermutationPlan:
    r = len(perm)
    if r == 0:
        raise ValidationError("empty permutation")
    if sorted(perm) != list(range(r)):
        raise ValidationError(f"not a permutation: {list(perm)}")
    if anchor == "leading":
        m = 0
        while m < r and perm[m] == m:
            m += 1
        return PermutationPlan(tuple(perm), anchor, m, 1 << (r - m), 1 << (r - m))
    if anchor == "trailing":
        m = 1
        while m < r and perm[r - m - 1] + 1 == perm[r - m]:
            m += 1
        offset = 1 << (r - 1 - perm[-1])
        return PermutationPlan(tuple(perm), anchor, m, offset, 1)
    raise ValidationError(f"unknown anchor {anchor!r}")


def plan_permutation(input_order: Sequence[str], absorbed: Iterable[str],
                     side: str) -> tuple[list[str], PermutationPlan]:
    """Move ``absorbed`` indices to the back (``side="back"``) or front.

    Returns the target index order and its reduced-map plan, anchored on
    the untouched run opposite the moved indices.
    """
    if not input_order:
        raise ValidationError("empty index order")
    absorbed = set(absorbed)
    if not absorbed <= set(input_order):
        raise ValidationError("absorbed indices must come from the input order")
    kept = [ix for ix in input_order if ix not in absorbed]
    moved = [ix for ix in input_order if ix in absorbed]
    if side == "back":
        target, anchor = kept + moved, "leading"
    elif side == "front":
        target, anchor = moved + kept, "trailing"
    else:
        raise ValidationError(f"side must be 'front' or 'back', got {side!r}")
    pos = {ix: p for p, ix in enumerate(input_order)}
    return target, plan_from_perm([pos[ix] for ix in target], anchor)


def _input_offsets(perm: Sequence[int], outputs: np.ndarray) -> np.ndarray:
    """Input linear index for each output linear index, decoded bit by bit."""
    r = len(perm)
    result = np.zeros_like(outputs)
    for p, axis in enumerate(perm):
        bit = (outputs >> (r - 1 - p)) & 1
        result += bit << (r - 1 - axis)
    return result


def reduced_map(plan: PermutationPlan) -> np.ndarray:
    r, m = plan.rank, plan.fixed_run
    n = 1 << (r - m)
    if plan.anchor == "leading":
        outputs = np.arange(n, dtype=np.int64)
    else:
        outputs = np.arange(n, dtype=np.int64) << m
    return _input_offsets(plan.perm, outputs)


def expand_map(plan: PermutationPlan, reduced: np.ndarray) -> np.ndarray:
    k = np.arange(plan.stride, dtype=np.int64)
    if plan.anchor == "leading":
        return (reduced[None, :] + plan.offset * k[:, None]).ravel()
    return (reduced[:, None] + plan.offset * k[None, :]).ravel()


def naive_map(perm: Sequence[int]) -> np.ndarray:
    r = len(perm)
    return np.arange(1 << r, dtype=np.int64).reshape((2,) * r).transpose(perm).ravel()


def apply_permutation(data: np.ndarray, plan: PermutationPlan) -> np.ndarray:
    """Transpose ``data`` (shape ``(2,)*r``) through the reduced map."""
    flat = data.reshape(-1)
    out = flat[expand_map(plan, reduced_map(plan))]
    return out.reshape((2,) * plan.rank)
