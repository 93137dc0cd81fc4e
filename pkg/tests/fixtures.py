"""Hand-built networks shared by the unit and acceptance tests."""

import json
from pathlib import Path

from tnslicer.network import build_tree, network_from_dict, network_from_indices

DATA = Path(__file__).parent / "data"


def matmul():
    net = network_from_indices([["a", "b"], ["b", "c"]])
    return net, build_tree(net, [(0, 1)])


def ring4():
    net = network_from_indices([["a", "b"], ["b", "c"], ["c", "d"], ["d", "a"]])
    return net, build_tree(net, [(0, 1), (2, 3), (4, 5)])


# Eight tensors over a..j; the first contractions reproduce the list
# [f,h,j]x[c,e,f]->[c,e,h,j] and the rest of the edge-e chain.
EIGHT_TENSORS = [list("ab"), list("bc"), list("ade"), list("cef"),
                list("dgh"), list("fhj"), list("gi"), list("ij")]
EIGHT_PATH = [(6, 7), (5, 3), (9, 1), (10, 0), (11, 2), (12, 4), (13, 8)]


def eight():
    net = network_from_indices(EIGHT_TENSORS)
    return net, build_tree(net, EIGHT_PATH)


# Five-part chain: X0 absorbs B1..B5 in order, one contraction per part.
# Target 3 is met by slicing {a, b} or {c}.
CHAIN_TENSORS = [["a", "p", "z"], ["p", "q"], ["q", "c", "r"], ["a", "b"],
                 ["c", "r", "z"], ["b"]]
CHAIN_PATH = [(0, 1), (6, 2), (7, 3), (8, 4), (9, 5)]
CHAIN_TARGET = 3


def chain():
    net = network_from_indices(CHAIN_TENSORS)
    return net, build_tree(net, CHAIN_PATH)


def caterpillar(n_steps=6, n_full=5, window=3):
    """Stem of constant rank ``n_full + window``.

    The leaf holds ``n_full`` open indices p1.. that survive to the root,
    plus a sliding window of ``window`` indices; branch k swaps the oldest window
    index for a new one.
    """
    full = [f"p{k + 1}" for k in range(n_full)]
    w = [f"w{k}" for k in range(n_steps + window)]
    tensors = [full + w[:window]]
    tensors += [[w[k], w[k + window]] for k in range(n_steps)]
    path = [(0, 1)] + [(n_steps + k, k + 1) for k in range(1, n_steps)]
    net = network_from_indices(tensors)
    return net, build_tree(net, path)


def planted():
    """Twelve-index network where the finder's 2-set is a strict local minimum.

    Returns the tree, target, finder set and the unique exhaustive optimum.
    """
    doc = json.loads((DATA / "planted_refiner.json").read_text())
    path = [tuple(p) for p in doc.pop("ssa_path")]
    t = doc.pop("target_rank")
    finder, optimum = doc.pop("finder"), doc.pop("optimum")
    net = network_from_dict(doc)
    return build_tree(net, path), t, finder, optimum


# Eight-step caterpillar. Stem tensors 1..5 have rank 4 (one above the
# target 3) and x spans exactly that plateau. y runs from tensor 2 to the
# root and misses only the cheap first contraction, so a cost-greedy slicer
# takes y first and then still needs a second index for tensor 1.
PLATEAU_STEM = ["abc", "abcx", "bcxy", "cxyd", "xyde", "xyef", "yef", "yfg", "ygh"]
PLATEAU_TARGET = 3


def stem_network(stem_sets):
    """Caterpillar whose stem tensors are exactly ``stem_sets``.

    Branch k is the symmetric difference of stem tensors k and k+1.
    """
    stem = [set(s) for s in stem_sets]
    tensors = [sorted(stem[0])] + [sorted(a ^ b) for a, b in zip(stem, stem[1:])]
    n = len(tensors)
    path = [(0, 1)] + [(n + k - 1, k + 1) for k in range(1, n - 1)]
    net = network_from_indices(tensors)
    return net, build_tree(net, path)


def plateau():
    return stem_network(PLATEAU_STEM)
