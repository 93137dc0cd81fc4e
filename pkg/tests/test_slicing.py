import pytest
from hypothesis import given, settings, strategies as st

from fixtures import PLATEAU_TARGET, caterpillar, eight, plateau, stem_network
from tnslicer.baselines import greedy_slicer, random_instance
from tnslicer.cost import is_valid_slicing, residual_ranks
from tnslicer.errors import InfeasibleError, ValidationError
from tnslicer.lifetime import extract_stem, restrict_lifetimes
from tnslicer.network import build_tree, network_from_indices
from tnslicer.slicing import find_slices, find_tree_slices


def _stem_args(tree):
    stem = extract_stem(tree)
    return stem, restrict_lifetimes(tree, stem)


def test_already_fits():
    _, tree = eight()
    assert find_tree_slices(tree, 4).indices == ()
    stem, iv = _stem_args(tree)
    assert find_slices(tree, stem, iv, 4).indices == ()


def test_single_oversized_tensor():
    # only the second stem tensor exceeds t=2, by two
    _, tree = stem_network(["ab", "abcd", "ad", "d"])
    stem, iv = _stem_args(tree)
    S = find_slices(tree, stem, iv, 2, pool="global")
    assert sorted(S) == ["a", "d"]  # the two longest stem intervals
    S = find_slices(tree, stem, iv, 2)
    assert len(S) == 2 and set(S) <= set("abcd")


def test_plateau_single_full_span_index():
    _, tree = plateau()
    stem, iv = _stem_args(tree)
    assert [tree.rank(e) for e in stem.tensors].count(PLATEAU_TARGET + 1) == 5
    assert iv["x"] == (1, 5)
    S = find_slices(tree, stem, iv, PLATEAU_TARGET)
    assert S.indices == ("x",)
    assert max(residual_ranks(tree, S)) == PLATEAU_TARGET
    assert len(greedy_slicer(tree, PLATEAU_TARGET)) == 2


def test_initial_slices_kept():
    _, tree = plateau()
    stem, iv = _stem_args(tree)
    S = find_slices(tree, stem, iv, PLATEAU_TARGET, initial=["y"])
    assert S.indices[0] == "y"


def test_errors():
    _, tree = plateau()
    stem, iv = _stem_args(tree)
    with pytest.raises(ValidationError):
        find_slices(tree, stem, iv, 0)
    with pytest.raises(ValidationError):
        find_slices(tree, stem, iv, 3, pool="nearby")
    net = network_from_indices([["a", "b"], ["b", "c"]], {"a": 3})
    tree = build_tree(net, [(0, 1)])
    with pytest.raises(InfeasibleError):
        find_tree_slices(tree, 1)


def test_full_span_on_caterpillar():
    _, tree = caterpillar()
    S = find_tree_slices(tree, 3)
    assert sorted(S) == ["p1", "p2", "p3", "p4", "p5"]


def test_deterministic():
    inst = random_instance(17)
    assert find_tree_slices(inst.tree, inst.t) == find_tree_slices(inst.tree, inst.t)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["local", "global"]))
def test_output_is_valid(seed, pool):
    inst = random_instance(seed)
    S = find_tree_slices(inst.tree, inst.t, pool)
    assert is_valid_slicing(inst.tree, S, inst.t)
    stem, iv = _stem_args(inst.tree)
    S = find_slices(inst.tree, stem, iv, inst.t, pool=pool)
    assert all(residual_ranks(inst.tree, S)[e] <= inst.t for e in stem.tensors)
