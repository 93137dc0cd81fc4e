import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fixtures import caterpillar, eight, stem_network
from tnslicer.baselines import random_instance
from tnslicer.cost import MemoryLevel, MemoryLevelModel
from tnslicer.errors import InfeasibleError, ValidationError
from tnslicer.fusion import (FusedGroup, FusedPlan, apply_permutation, expand_map, fused_cost_model,
                             naive_map, plan_from_perm, plan_fusion, plan_permutation, reduced_map)
from tnslicer.lifetime import extract_stem, restrict_lifetimes

MODEL = MemoryLevelModel((MemoryLevel("main", 1e12, 1e9), MemoryLevel("ldm", 2**17, 1e10)), 1e12)


def _plan(tree, c, process=()):
    stem = extract_stem(tree)
    return stem, plan_fusion(tree, stem, restrict_lifetimes(tree, stem), c, process)


def test_everything_fits_gives_one_group():
    _, tree = eight()
    stem, plan = _plan(tree, 13)
    assert len(plan.groups) == 1
    g = plan.groups[0]
    assert (g.start, g.stop) == (0, len(stem) - 2)
    assert g.secondary_slices == () and g.n_subtasks == 1


def test_caterpillar_scenario():
    _, tree = caterpillar()
    _, plan = _plan(tree, 3)
    (g,) = plan.groups
    assert g.secondary_slices == ("p1", "p2", "p3", "p4", "p5")
    assert g.resident_rank == 3 and g.n_subtasks == 32
    assert max(g.stem_ranks) == 8


def test_ten_step_group_saves_18():
    _, tree = caterpillar(n_steps=10)
    _, plan = _plan(tree, 3)
    assert [g.n_steps for g in plan.groups] == [10]
    assert plan.dma_saved == 18


def test_unfittable_step_names_it():
    _, tree = stem_network(["abcd", "aef", "f"])
    with pytest.raises(InfeasibleError, match="step 0"):
        _plan(tree, 1)
    with pytest.raises(ValidationError):
        _plan(tree, 0)


def test_process_slices_lower_ranks():
    _, tree = caterpillar()
    _, plan = _plan(tree, 3, process=["p1", "p2"])
    (g,) = plan.groups
    assert len(g.secondary_slices) == 3 and "p1" not in g.secondary_slices
    assert plan.process_slices == ("p1", "p2")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_plan_invariants(seed, c):
    tree = random_instance(seed).tree
    stem = extract_stem(tree)
    iv = restrict_lifetimes(tree, stem)
    try:
        plan = plan_fusion(tree, stem, iv, c)
    except InfeasibleError:
        return
    steps = [k for g in plan.groups for k in range(g.start, g.stop + 1)]
    assert steps == list(range(len(stem) - 1))
    for g in plan.groups:
        for ix in g.secondary_slices:
            lo, hi = iv[ix]
            assert lo <= g.start and hi >= g.stop + 1  # never contracted inside the group
        for k in range(g.start, g.stop + 2):
            s = tree.edge_indices[stem.tensors[k]]
            assert len(s) - len(s & set(g.secondary_slices)) <= c
    assert plan.dma_saved == 2 * (len(stem) - 1 - len(plan.groups))


def test_single_step_groups_match_baseline():
    groups = tuple(FusedGroup(k, k, (), 8, (8, 8), (2,), (9,)) for k in range(4))
    rep = fused_cost_model(FusedPlan(groups, 13, tuple(range(5))), MODEL)
    assert rep.bytes_moved == rep.baseline_bytes
    assert rep.arithmetic_intensity == rep.baseline_intensity


def test_ten_step_fusion_intensity():
    _, tree = caterpillar(n_steps=10, n_full=5, window=3)
    _, plan = _plan(tree, 13)
    rep = fused_cost_model(plan, MODEL)
    ratio = rep.arithmetic_intensity / rep.baseline_intensity
    # 10 loads and stores of the stem tensor collapse into one each
    assert ratio == pytest.approx((40 + 10 * 512) / (40 + 512))
    assert 9 < ratio < 10
    assert rep.machine_balance == 100.0


def test_granularity_floor():
    _, tree = caterpillar()
    _, plan = _plan(tree, 3)
    plain = fused_cost_model(plan, MODEL)
    floored = fused_cost_model(plan, MODEL, granularity_bytes=512)
    # 32 pieces of 8 elements (128 bytes) each way, and six 64-byte branches
    assert floored.bytes_moved - plain.bytes_moved == 2 * 32 * (512 - 128) + 6 * (512 - 64)


def test_degenerate_plan():
    rep = fused_cost_model(FusedPlan((), 13, (0,)), MODEL)
    assert rep.degenerate and rep.arithmetic_intensity == 0.0 and not rep.compute_bound


def test_rank9_permutations():
    p = plan_from_perm((0, 1, 2, 4, 5, 7, 8, 3, 6), "leading")
    assert p.fixed_run == 3 and p.map_size_divisor == 8
    q = plan_from_perm((3, 8, 0, 1, 2, 4, 5, 6, 7), "trailing")
    assert q.fixed_run == 4 and q.map_size_divisor == 16
    for plan in (p, q):
        assert len(reduced_map(plan)) == 512 // plan.map_size_divisor
        assert np.array_equal(expand_map(plan, reduced_map(plan)), naive_map(plan.perm))


def test_identity_needs_one_entry():
    for anchor in ("leading", "trailing"):
        plan = plan_from_perm(tuple(range(6)), anchor)
        assert plan.fixed_run == 6 and len(reduced_map(plan)) == 1
        assert np.array_equal(expand_map(plan, reduced_map(plan)), np.arange(64))


def test_plan_permutation_sides():
    order, plan = plan_permutation(list("abcdefghi"), {"d", "g"}, "back")
    assert order == list("abcefhidg") and plan.anchor == "leading"
    assert plan.perm == (0, 1, 2, 4, 5, 7, 8, 3, 6)
    order, plan = plan_permutation(list("abcdefghi"), {"d", "i"}, "front")
    assert order == list("diabcefgh") and plan.map_size_divisor == 16
    with pytest.raises(ValidationError):
        plan_permutation([], set(), "back")
    with pytest.raises(ValidationError):
        plan_permutation(list("ab"), {"z"}, "back")
    with pytest.raises(ValidationError):
        plan_from_perm((0, 0, 1), "leading")


def test_exhaustive_rank4():
    for perm in itertools.permutations(range(4)):
        for anchor in ("leading", "trailing"):
            plan = plan_from_perm(perm, anchor)
            assert np.array_equal(expand_map(plan, reduced_map(plan)), naive_map(perm))


def test_apply_permutation_matches_transpose():
    rng = random.Random(3)
    data = np.random.default_rng(0).standard_normal((2,) * 7)
    for _ in range(30):
        perm = list(range(7))
        rng.shuffle(perm)
        plan = plan_from_perm(perm, rng.choice(["leading", "trailing"]))
        assert np.array_equal(apply_permutation(data, plan), data.transpose(perm))
