"""Dense reference executor with flop instrumentation.

This is a verification oracle, not a fast simulator. Every pairwise
contraction is permute-then-GEMM and counts ``M * N * K`` scalar
multiplications from the actual matrix shapes, so flop totals can be
checked against the cost model independently.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .cost import SliceSet, sliced_cost
from .errors import InfeasibleError, ValidationError
from .fusion import FusedPlan, apply_permutation, plan_from_perm, plan_permutation
from .lifetime import Stem
from .network import ContractionTree, TensorNetwork

MAX_FLOPS = 2 ** 34
MAX_FLOPS_ENV = "TN_SLICER_MAX_FLOPS"


@dataclass
class DenseTensor:
    indices: tuple[str, ...]
    data: np.ndarray  # shape = extents in ``indices`` order

    def __post_init__(self):
        self.indices = tuple(self.indices)
        if len(set(self.indices)) != len(self.indices):
            raise ValidationError(f"duplicate index in {self.indices}")
        if self.data.ndim != len(self.indices):
            raise ValidationError(
                f"data has {self.data.ndim} axes for {len(self.indices)} indices")

    @property
    def rank(self) -> int:
        return len(self.indices)

    def transpose_to(self, order: Sequence[str]) -> "DenseTensor":
        axes = [self.indices.index(ix) for ix in order]
        return DenseTensor(tuple(order), self.data.transpose(axes))

    def fix(self, values: Mapping[str, int]) -> "DenseTensor":
        """Take the slice where the given indices have the given values."""
        sel = tuple(values.get(ix, slice(None)) for ix in self.indices)
        kept = tuple(ix for ix in self.indices if ix not in values)
        return DenseTensor(kept, self.data[sel])


@dataclass
class FlopCounter:
    per_node: dict[int, int] = field(default_factory=dict)

    @property
    def scalar_multiplies(self) -> int:
        return sum(self.per_node.values())

    def add(self, node: int, count: int) -> None:
        self.per_node[node] = self.per_node.get(node, 0) + count


def max_flops() -> int:
    env = os.environ.get(MAX_FLOPS_ENV)
    return int(env) if env else MAX_FLOPS


def random_inputs(net: TensorNetwork, seed: int = 0) -> dict[int, DenseTensor]:
    rng = np.random.default_rng(seed)
    out = {}
    for v in net.vertices:
        shape = tuple(1 << net.weight(ix) for ix in v.indices)
        data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        out[v.id] = DenseTensor(v.indices, data / np.sqrt(2))
    return out


def check_inputs(net: TensorNetwork, inputs: Mapping[int, DenseTensor]) -> None:
    for v in net.vertices:
        if v.id not in inputs:
            raise ValidationError(f"missing input for vertex {v.id}")
        t = inputs[v.id]
        if set(t.indices) != set(v.indices):
            raise ValidationError(f"vertex {v.id}: indices {t.indices} != {v.indices}")
        for ix, n in zip(t.indices, t.data.shape):
            if n != 1 << net.weight(ix):
                raise ValidationError(f"vertex {v.id}: index {ix!r} has extent {n}")


def contract_pair(a: DenseTensor, b: DenseTensor) -> tuple[DenseTensor, int]:
    """Contract shared indices by transposing to matrices and multiplying.

    Output order is a's kept indices followed by b's kept indices.
    """
    shared = [ix for ix in a.indices if ix in b.indices]
    keep_a = [ix for ix in a.indices if ix not in shared]
    keep_b = [ix for ix in b.indices if ix not in shared]
    A = a.transpose_to(keep_a + shared).data
    B = b.transpose_to(shared + keep_b).data
    shape_a, shape_b = A.shape[:len(keep_a)], B.shape[len(shared):]
    m, n = int(np.prod(shape_a)), int(np.prod(shape_b))
    k = int(np.prod(A.shape[len(keep_a):]))
    C = A.reshape(m, k) @ B.reshape(k, n)
    return DenseTensor(tuple(keep_a + keep_b), C.reshape(shape_a + shape_b)), m * n * k


def naive_contract_pair(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Nested-loop kernel; an oracle for ``contract_pair`` on tiny tensors."""
    extent = dict(zip(a.indices, a.data.shape)) | dict(zip(b.indices, b.data.shape))
    shared = [ix for ix in a.indices if ix in b.indices]
    out_ix = [ix for ix in a.indices if ix not in shared] + \
             [ix for ix in b.indices if ix not in shared]
    out = np.zeros(tuple(extent[ix] for ix in out_ix), dtype=complex)
    for o in itertools.product(*(range(extent[ix]) for ix in out_ix)):
        vals = dict(zip(out_ix, o))
        total = 0j
        for s in itertools.product(*(range(extent[ix]) for ix in shared)):
            vals.update(zip(shared, s))
            total += a.data[tuple(vals[ix] for ix in a.indices)] * \
                b.data[tuple(vals[ix] for ix in b.indices)]
        out[o] = total
    return DenseTensor(tuple(out_ix), out)


def _run_tree(tree: ContractionTree, tensors: dict[int, DenseTensor],
              counter: FlopCounter, top: int | None = None) -> DenseTensor:
    """Contract the subtree below ``top`` (default: root) in SSA order."""
    wanted = set(tree.subtree_edges(tree.root if top is None else top))
    for k, node in enumerate(tree.nodes):
        if node.out not in wanted:
            continue
        out, flops = contract_pair(tensors.pop(node.left), tensors.pop(node.right))
        counter.add(k, flops)
        tensors[node.out] = out
    return tensors[tree.root if top is None else top]


def _guard(tree: ContractionTree, S, force: bool) -> None:
    predicted = sliced_cost(tree, S).flops
    if predicted > max_flops() and not force:
        raise InfeasibleError(
            f"predicted {predicted} flops exceeds the desk-scale limit {max_flops()} "
            f"(set {MAX_FLOPS_ENV} or pass force=True)")


def contract_full(net: TensorNetwork, tree: ContractionTree,
                  inputs: Mapping[int, DenseTensor],
                  force: bool = False) -> tuple[DenseTensor, FlopCounter]:
    """Contract the whole tree; the result is ordered like ``net.open_edges``."""
    check_inputs(net, inputs)
    _guard(tree, (), force)
    counter = FlopCounter()
    out = _run_tree(tree, dict(inputs), counter)
    return out.transpose_to(net.open_edges), counter


def _subtask(tree, inputs, values):
    tensors = {v: t.fix(values) for v, t in inputs.items()}
    counter = FlopCounter()
    return _run_tree(tree, tensors, counter), counter


def contract_sliced(net: TensorNetwork, tree: ContractionTree, S: SliceSet | Sequence[str],
                    inputs: Mapping[int, DenseTensor], workers: int = 1,
                    force: bool = False) -> tuple[DenseTensor, FlopCounter]:
    """Contract every one of the ``2**|S|`` subtasks and combine them.

    Closed sliced indices are summed over; open ones are written into their
    slot of the output. Subtasks are folded in ascending order whatever
    ``workers`` is, so results are reproducible.
    """
    check_inputs(net, inputs)
    S = tuple(S)
    _guard(tree, S, force)
    open_edges = net.open_edges
    assignments = [dict(zip(S, bits)) for bits in itertools.product((0, 1), repeat=len(S))]
    if workers > 1 and len(assignments) > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda a: _subtask(tree, inputs, a), assignments))
    else:
        results = [_subtask(tree, inputs, a) for a in assignments]

    shape = tuple(1 << net.weight(ix) for ix in open_edges)
    out = np.zeros(shape, dtype=complex)
    total = FlopCounter()
    for values, (part, counter) in zip(assignments, results):
        kept = [ix for ix in open_edges if ix not in values]
        sel = tuple(values.get(ix, slice(None)) for ix in open_edges)
        out[sel] += part.transpose_to(kept).data
        for k, n in counter.per_node.items():
            total.add(k, n)
    return DenseTensor(open_edges, out), total


def brute_force_contract(net: TensorNetwork, inputs: Mapping[int, DenseTensor]) -> DenseTensor:
    """One giant sum over every index assignment (no intermediates)."""
    check_inputs(net, inputs)
    names = {ix: n for n, ix in enumerate(sorted(net.edges))}
    operands = []
    for v in net.vertices:
        t = inputs[v.id]
        operands += [t.data, [names[ix] for ix in t.indices]]
    out_ix = list(net.open_edges)
    data = np.einsum(*operands, [names[ix] for ix in out_ix], optimize=False)
    return DenseTensor(tuple(out_ix), np.asarray(data))


def stem_operands(tree: ContractionTree, stem: Stem, inputs: Mapping[int, DenseTensor]
                  ) -> tuple[DenseTensor, list[DenseTensor]]:
    """The stem's leaf tensor and every branch contracted to one tensor."""
    tensors = dict(inputs)
    counter = FlopCounter()
    start = tensors[stem.tensors[0]]
    branches = [_run_tree(tree, tensors, counter, top=b) for b in stem.branches]
    return start, branches


@dataclass
class TransferLedger:
    loads: int = 0
    stores: int = 0
    elements_in: int = 0
    elements_out: int = 0
    per_group: list[tuple[int, int]] = field(default_factory=list)

    @property
    def transfers(self) -> int:
        return self.loads + self.stores


def execute_stem(start: DenseTensor, branches: Sequence[DenseTensor]
                 ) -> tuple[DenseTensor, TransferLedger]:
    """Step-by-step baseline: load and store the stem tensor around each step."""
    ledger = TransferLedger()
    x = start
    for b in branches:
        ledger.loads += 1
        ledger.elements_in += x.data.size
        x, _ = contract_pair(x, b)
        ledger.stores += 1
        ledger.elements_out += x.data.size
        ledger.per_group.append((1, 1))
    return x, ledger


def _fused_step(x: DenseTensor, b: DenseTensor) -> DenseTensor:
    """One GEMM with both operands permuted through reduced maps."""
    shared = [ix for ix in x.indices if ix in b.indices]
    a_order, a_plan = plan_permutation(x.indices, shared, "back")
    # b's shared axes must come in the same order as a's
    b_order = shared + [ix for ix in b.indices if ix not in shared]
    b_plan = plan_from_perm([b.indices.index(ix) for ix in b_order], "trailing")
    A = apply_permutation(x.data, a_plan)
    B = apply_permutation(b.data, b_plan)
    k = 1 << len(shared)
    m, n = A.size // k, B.size // k
    C = A.reshape(m, k) @ B.reshape(k, n)
    out_ix = tuple(a_order[:len(a_order) - len(shared)] + b_order[len(shared):])
    return DenseTensor(out_ix, C.reshape((2,) * len(out_ix)))


def execute_fused(plan: FusedPlan, start: DenseTensor, branches: Sequence[DenseTensor],
                  c: int | None = None) -> tuple[DenseTensor, TransferLedger]:
    """Run each fused group subtask by subtask.

    Per subtask the group input is sliced and loaded once, all group steps
    run on the resident piece, and the result is stored once into its slot.
    The resident rank is checked against ``c`` after every step. All
    extents must be 2.
    """
    c = plan.c if c is None else c
    if len(branches) != plan.n_steps:
        raise ValidationError(f"plan has {plan.n_steps} steps, got {len(branches)} branches")
    ledger = TransferLedger()
    x = start
    for g in plan.groups:
        slices = g.secondary_slices
        parts = {}
        for bits in itertools.product((0, 1), repeat=len(slices)):
            values = dict(zip(slices, bits))
            piece = x.fix(values)
            ledger.loads += 1
            ledger.elements_in += piece.data.size
            for k in range(g.start, g.stop + 1):
                if piece.rank > c:
                    raise AssertionError(f"resident rank {piece.rank} exceeds {c} at step {k}")
                piece = _fused_step(piece, branches[k])
            if piece.rank > c:
                raise AssertionError(f"resident rank {piece.rank} exceeds {c} after group")
            ledger.stores += 1
            ledger.elements_out += piece.data.size
            parts[bits] = piece
        order = next(iter(parts.values())).indices
        data = np.stack([parts[b].transpose_to(order).data
                         for b in itertools.product((0, 1), repeat=len(slices))])
        data = data.reshape((2,) * len(slices) + data.shape[1:])
        x = DenseTensor(tuple(slices) + order, data)
        ledger.per_group.append((len(parts), len(parts)))
    return x, ledger
