import random

import pytest
from hypothesis import given, settings, strategies as st

from fixtures import caterpillar, chain, eight, matmul, ring4
from tnslicer.cost import node_cost
from tnslicer.errors import ValidationError
from tnslicer.lifetime import (all_lifetimes, correlated_nodes, extract_stem, lifetime_of,
                               restrict_lifetimes)
from tnslicer.network import ContractionTree, build_tree, greedy_test_path, random_network


def test_matmul_lifetimes():
    _, tree = matmul()
    b = lifetime_of(tree, "b")
    assert set(b.tree_edges) == {0, 1} and b.endpoints == ("leaf", "leaf")
    a = lifetime_of(tree, "a")
    assert a.tree_edges == (0, 2) and a.endpoints == ("leaf", "root")
    assert sorted(all_lifetimes(tree)) == ["a", "b", "c"]


def test_unknown_index():
    _, tree = matmul()
    with pytest.raises(ValidationError):
        lifetime_of(tree, "zz")


def test_ring_lifetimes_match_membership_scan():
    _, tree = ring4()
    for ix, lf in all_lifetimes(tree).items():
        scan = {e for e, s in enumerate(tree.edge_indices) if ix in s}
        assert set(lf.tree_edges) == scan
        assert lf.endpoints == ("leaf", "leaf")
        assert all(tree.is_leaf(e) for e in (lf.tree_edges[0], lf.tree_edges[-1]))


def test_edge_e_has_four_contractions():
    _, tree = eight()
    lf = lifetime_of(tree, "e")
    assert len(lf) == 5  # two leaves and three intermediates
    assert len(correlated_nodes(tree, "e")) == 4
    # [f,h,j] x [c,e,f] -> [c,e,h,j] is the first of them
    first = tree.nodes[correlated_nodes(tree, "e")[0]]
    assert tree.edge_indices[first.out] == frozenset("cehj")


def test_membership_count_identity():
    net = random_network(10, seed=4, degree=3.2)
    tree = build_tree(net, greedy_test_path(net, 4))
    total = sum(len(lf) for lf in all_lifetimes(tree).values())
    assert total == sum(len(s) for s in tree.edge_indices)


def test_malformed_tree_detected():
    net, tree = matmul()
    # claim the root lost index a while the leaf still has it
    bad = ContractionTree(net, tree.nodes, [tree.edge_indices[0], tree.edge_indices[1], frozenset("c")])
    with pytest.raises(ValidationError):
        lifetime_of(bad, "a")


def test_caterpillar_stem_is_the_chain():
    _, tree = caterpillar()
    stem = extract_stem(tree)
    assert stem.tensors == (0, 7, 8, 9, 10, 11, 12)
    assert stem.branches == (1, 2, 3, 4, 5, 6)
    assert stem.branch_map[0] == 1


def test_balanced_tie_prefers_smaller_edges():
    from tnslicer.network import network_from_indices
    net = network_from_indices([["a", "x"], ["a", "y"], ["b", "x"], ["b", "y"]])
    tree = build_tree(net, [(0, 1), (2, 3), (4, 5)])
    stem = extract_stem(tree)
    assert stem.tensors == (0, 4, 6)
    assert extract_stem(tree) == stem


def test_stem_beats_random_paths():
    net = random_network(20, seed=11, degree=3.0)
    tree = build_tree(net, greedy_test_path(net, 11))
    stem = extract_stem(tree)
    stem_total = sum(stem.node_costs)
    rng = random.Random(0)
    for _ in range(1000):
        e = rng.randrange(tree.n_leaves)
        total = 0
        while e != tree.root:
            node = tree.nodes[tree.parent[e]]
            total += node_cost(tree, node)
            e = node.out
        assert total <= stem_total


def test_restrict_intervals():
    _, tree = caterpillar()
    stem = extract_stem(tree)
    iv = restrict_lifetimes(tree, stem)
    assert iv["p1"] == (0, 6)
    assert iv["w0"] == (0, 0) and iv["w3"] == (1, 3)


def test_chain_intervals_overlap_on_one_part():
    _, tree = chain()
    iv = restrict_lifetimes(tree, extract_stem(tree))
    assert iv["a"] == (0, 2) and iv["c"] == (2, 3)
    assert max(iv["a"][0], iv["c"][0]) == min(iv["a"][1], iv["c"][1])
    assert "b" in iv and iv["q"] == (1, 1)


def test_branch_only_index_dropped():
    _, tree = eight()
    stem = extract_stem(tree)
    iv = restrict_lifetimes(tree, stem)
    on_stem = set().union(*(tree.edge_indices[e] for e in stem.tensors))
    assert set(iv) == on_stem


@settings(max_examples=60, deadline=None)
@given(st.integers(6, 20), st.integers(0, 10**6), st.integers(0, 3))
def test_linearity(n, seed, n_open):
    net = random_network(n, seed=seed, degree=3.0, n_open=n_open)
    tree = build_tree(net, greedy_test_path(net, seed, temperature=4.0))
    for ix, lf in all_lifetimes(tree).items():
        ends = {lf.tree_edges[0], lf.tree_edges[-1]}
        if net.edges[ix].is_open:
            assert tree.root in ends and len(ends & set(range(tree.n_leaves))) == 1
        else:
            assert all(tree.is_leaf(e) for e in ends) and len(ends) == 2
    restrict_lifetimes(tree, extract_stem(tree))
