import itertools
import math
from collections import Counter

import pytest

from treetrace.instances import (
    buffer_length,
    encode_string_as_tree,
    encoded_leaf_id,
    encoded_parent_id,
    enumerate_fuzzy_trees,
    forked_tree,
    fuzzy_degree,
    path_tree,
    random_fuzzy_tree,
    random_labels,
    random_tree,
    read_encoded_string,
)
from treetrace.trees import SymbolString, format_tree, is_fuzzy, preorder
from conftest import make_rng


def test_buffer_length_examples():
    # ceil((ln 100 + ln 1000) / ln 2) = ceil(16.61) = 17
    assert buffer_length(0.01, 1000, 0.5) == 17
    assert buffer_length(1 / math.e, 1, 1 / math.e) == 1
    assert buffer_length(0.1, 10, 0.0) == 1


def test_buffer_length_monotone():
    base = buffer_length(0.05, 100, 0.5)
    assert buffer_length(0.05, 200, 0.5) >= base
    assert buffer_length(0.05, 100, 0.3) <= base


def test_encode_single_zero_bit():
    # Path of 3 (root, carrier, tail buffer) with a left leaf at position 2.
    inst = encode_string_as_tree(SymbolString("0"), 1)
    assert format_tree(inst.tree) == "0(0(0,0))"
    assert inst.tree.n == 4


def test_encode_two_bits():
    # Path of 4; left leaf at position 2, right leaf at position 3.
    inst = encode_string_as_tree(SymbolString("01"), 1)
    assert format_tree(inst.tree) == "0(0(0,0(0,0)))"
    assert inst.tree.n == 6


def test_encode_readback_exhaustive_short():
    for L in range(1, 9):
        for bits in itertools.product("01", repeat=L):
            s = SymbolString("".join(bits))
            inst = encode_string_as_tree(s, 2)
            assert str(read_encoded_string(inst)) == str(s)


def test_encoded_id_layout():
    inst = encode_string_as_tree(SymbolString("10"), 2)
    s_len, ell = 2, 2
    for i in (1, 2):
        leaf = encoded_leaf_id(s_len, ell, i)
        parent = encoded_parent_id(s_len, ell, i)
        assert inst.tree.parent_of(leaf) == parent
        assert inst.tree.is_leaf(leaf)


def test_path_and_fork_shapes():
    assert format_tree(path_tree(1)) == "0(0)"
    assert format_tree(forked_tree(3)) == "0(0(0,0))"
    for n in range(2, 12):
        assert path_tree(n).n == n + 1
        assert forked_tree(n).n == n + 1


def test_path_fork_agree_until_fork():
    # Identical structure until node n-2: both are chains above the fork point.
    n = 8
    b = forked_tree(n)
    chain = [v for v in preorder(b) if len(b.children_of(v)) == 1]
    assert len(chain) == n - 2


def test_fuzzy_degree_examples():
    assert fuzzy_degree(30, 100, 0.01, 0.2) == 8
    assert fuzzy_degree(30, 100, 0.01, 0.0) == 2
    base = fuzzy_degree(30, 100, 0.01, 0.2)
    doubled = fuzzy_degree(30, 200, 0.01, 0.2)
    assert base <= doubled <= base + math.ceil(math.log(2) / math.log(5))


def test_minimal_fuzzy_tree():
    rng = make_rng("fuzzy-min")
    t = random_fuzzy_tree(3, 2, rng)
    assert format_tree(t) == "0(0,0)"


def test_random_fuzzy_tree_invariant_audit():
    rng = make_rng("fuzzy-audit")
    for _ in range(200):
        m = int(rng.integers(2, 5))
        n = int(rng.integers(m + 1, 40))
        try:
            t = random_fuzzy_tree(n, m, rng)
        except ValueError:
            continue
        assert t.n == n
        assert is_fuzzy(t, m)
        # Stronger generator postcondition: every leaf block has size m.
        for v in t.nodes:
            kids = t.children_of(v)
            if kids and all(t.is_leaf(c) for c in kids):
                assert len(kids) == m


def test_random_fuzzy_tree_incompatible():
    rng = make_rng("fuzzy-bad")
    with pytest.raises(ValueError):
        random_fuzzy_tree(2, 2, rng)
    with pytest.raises(ValueError):
        random_fuzzy_tree(5, 1, rng)


def test_enumerate_fuzzy_trees_counts():
    # n=30, m=8 decomposes into skeletons (22,1), (14,2), (6,3):
    # 1 path + Narayana(13,2)=78 + Narayana(5,3)=20 shapes.
    fam = enumerate_fuzzy_trees(30, 8)
    assert len(fam) == 99
    assert all(t.n == 30 and is_fuzzy(t, 8) for t in fam)
    assert len({t.canonical() for t in fam}) == 99


def test_enumerate_fuzzy_trees_small_complete():
    # For n<=8, every all-leaves-terminal fuzzy tree appears in the family.
    from treetrace.trees import enumerate_trees

    for m in (2, 3):
        for n in range(m + 1, 9):
            family = {t.canonical() for t in enumerate_fuzzy_trees(n, m)}
            expected = set()
            for t in enumerate_trees(n):
                if not is_fuzzy(t, m):
                    continue
                leaves = [v for v in t.nodes if t.is_leaf(v)]
                terminal = [
                    v for v in leaves
                    if all(t.is_leaf(c) for c in t.children_of(t.parent_of(v)))
                ]
                if len(terminal) == len(leaves):
                    expected.add(t.canonical())
            assert family == expected


def test_random_tree_uniform_n4():
    rng = make_rng("uniform4")
    n_samples = 100_000
    counts = Counter(random_tree(4, rng).canonical() for _ in range(n_samples))
    assert len(counts) == 5  # Catalan(3)
    sigma = math.sqrt(0.2 * 0.8 / n_samples)
    for c in counts.values():
        assert abs(c / n_samples - 0.2) <= 3 * sigma


def test_random_labels_are_fair_bits():
    rng = make_rng("labels")
    t = path_tree(9)
    ones = 0
    for _ in range(2000):
        lt = random_labels(t, rng)
        ones += sum(lt.label_of(v) for v in lt.nodes)
    freq = ones / (2000 * 10)
    assert abs(freq - 0.5) < 0.02
