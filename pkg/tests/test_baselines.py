import pytest
from hypothesis import given, settings, strategies as st

from fixtures import CHAIN_TARGET, PLATEAU_TARGET, chain, eight, matmul, plateau
from tnslicer.baselines import (Landscape, audit_smaller_sets, candidate_pool, exhaustive_slicer,
                                greedy_slicer, random_instance)
from tnslicer.cost import is_valid_slicing, sliced_cost
from tnslicer.errors import InfeasibleError, ValidationError
from tnslicer.network import build_tree, network_from_indices


def test_greedy_already_fits():
    _, tree = eight()
    assert greedy_slicer(tree, 4).indices == ()


def test_greedy_takes_two_on_plateau():
    _, tree = plateau()
    assert greedy_slicer(tree, PLATEAU_TARGET).indices == ("y", "x")


def test_greedy_pool_exhausted():
    net = network_from_indices([["a", "b"], ["b", "c"]], {"a": 3})
    with pytest.raises(InfeasibleError):
        greedy_slicer(build_tree(net, [(0, 1)]), 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_greedy_always_valid(seed):
    inst = random_instance(seed)
    assert is_valid_slicing(inst.tree, greedy_slicer(inst.tree, inst.t), inst.t)


def test_exhaustive_matmul():
    _, tree = matmul()
    best, land = exhaustive_slicer(tree, 2)
    assert best.indices == () and land.flops[frozenset()] == land.base_flops


def test_exhaustive_chain_prefers_c():
    _, tree = chain()
    best, land = exhaustive_slicer(tree, CHAIN_TARGET)
    assert land.flops[frozenset("c")] < land.flops[frozenset("ab")]
    assert land.flops[frozenset(best)] == min(land.flops.values()) <= land.flops[frozenset("c")]


def test_exhaustive_landscape_is_complete():
    _, tree = plateau()
    pool = candidate_pool(tree, PLATEAU_TARGET)
    best, land = exhaustive_slicer(tree, PLATEAU_TARGET)
    n_valid = 0
    for mask in range(1 << len(pool)):
        S = [ix for k, ix in enumerate(pool) if mask >> k & 1]
        if is_valid_slicing(tree, S, PLATEAU_TARGET):
            n_valid += 1
            assert land.flops[frozenset(S)] == sliced_cost(tree, S).flops
    assert n_valid == len(land.flops)
    assert land.flops[frozenset(best)] == min(land.flops.values())


def test_exhaustive_pool_limit():
    inst = random_instance(3)
    with pytest.raises(ValidationError, match="limit"):
        exhaustive_slicer(inst.tree, 1, max_pool=2)


def test_audit_counts():
    land = Landscape(["a", "b", "c"], {frozenset("a"): 10, frozenset("b"): 12,
                                       frozenset("ab"): 11, frozenset("bc"): 10, frozenset("ac"): 20})
    audit = audit_smaller_sets(land)
    assert audit.checked == 3
    assert audit.counterexamples == []  # a single index at cost 10 is never beaten
    assert audit.ties == 1  # {b, c} ties with {a}
    land.flops[frozenset("bc")] = 9
    assert [sorted(s) for s, _ in audit_smaller_sets(land).counterexamples] == [["b", "c"]]


def test_random_instance_is_reproducible():
    a, b = random_instance(12), random_instance(12)
    assert a.t == b.t and a.tree.path() == b.tree.path()
    assert max(a.tree.edge_ranks) > a.t
