"""Generators for the studied tree families.

Families: the string-encoding caterpillar (a long path with one oriented leaf
per encoded bit, padded by protective buffers), the path/forked pair that is
indistinguishable under left propagation, fuzzy trees whose terminal leaves
come in blocks of m, and uniform random ordered trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .trees import Node, SymbolString, Tree, preorder, tree_from_dyck

FAMILIES = ("path", "forked", "encoded", "fuzzy", "random")


def buffer_length(delta: float, planned_traces: int, q: float) -> int:
    """Buffer size that keeps both path ends alive in all planned trials.

    ceil((ln(1/delta) + ln N) / ln(1/q)), at least 1; q = 0 needs no buffer
    beyond the minimum.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if planned_traces < 1:
        raise ValueError("planned trace count must be >= 1")
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must lie in [0, 1), got {q}")
    if q == 0.0:
        return 1
    ell = math.ceil((math.log(1.0 / delta) + math.log(planned_traces)) / math.log(1.0 / q))
    return max(ell, 1)


@dataclass(frozen=True)
class EncodedInstance:
    """A bit string hidden in tree topology: backbone path plus oriented leaves."""

    source_string: SymbolString
    buffer_len: int
    tree: Tree

    @property
    def backbone_len(self) -> int:
        return len(self.source_string) + 2 * self.buffer_len


# Identifier layout of encode_string_as_tree: backbone position i (1-based,
# the root is position 1) has id i-1; the leaf for bit i has id P + i - 1
# where P is the backbone length.  Decoders rely on this layout as their
# family knowledge.


def encoded_parent_id(s_len: int, ell: int, bit_index: int) -> int:
    """Id of the backbone node carrying encoded bit `bit_index` (1-based)."""
    return ell + bit_index - 1


def encoded_leaf_id(s_len: int, ell: int, bit_index: int) -> int:
    """Id of the leaf encoding bit `bit_index` (1-based)."""
    return s_len + 2 * ell + bit_index - 1


def encode_string_as_tree(source: SymbolString, ell: int) -> EncodedInstance:
    """Hide a bit string in an unlabeled caterpillar tree.

    The backbone is a path of |S| + 2*ell nodes whose first node is the root.
    Bit i hangs a leaf off backbone position ell + i: on the left (before the
    path continuation) for 0, on the right for 1.
    """
    s = str(source)
    if len(s) < 1:
        raise ValueError("source string must be nonempty")
    if ell < 1:
        raise ValueError("buffer length must be >= 1")
    s_len = len(s)
    P = s_len + 2 * ell
    nodes: dict[int, Node] = {}
    for pos in range(1, P + 1):
        v = pos - 1
        nxt = [pos] if pos < P else []
        if ell + 1 <= pos <= ell + s_len:
            i = pos - ell
            leaf = encoded_leaf_id(s_len, ell, i)
            kids = [leaf] + nxt if s[i - 1] == "0" else nxt + [leaf]
            nodes[leaf] = Node(0, (), v)
        else:
            kids = nxt
        nodes[v] = Node(0, tuple(kids), v - 1 if v > 0 else None)
    return EncodedInstance(SymbolString(s, "01"), ell, Tree(nodes, 0))


def read_encoded_string(inst: EncodedInstance) -> SymbolString:
    """Recover the source string from leaf orientations (construction inverse)."""
    s_len = len(inst.source_string)
    bits = []
    for i in range(1, s_len + 1):
        parent = encoded_parent_id(s_len, inst.buffer_len, i)
        leaf = encoded_leaf_id(s_len, inst.buffer_len, i)
        kids = inst.tree.children_of(parent)
        bits.append("0" if kids[0] == leaf else "1")
    return SymbolString("".join(bits), "01")


def path_tree(n: int) -> Tree:
    """A_n: the root plus a chain of n nodes (n non-root nodes)."""
    if n < 1:
        raise ValueError("need n >= 1")
    nodes = {
        v: Node(0, (v + 1,) if v < n else (), v - 1 if v > 0 else None)
        for v in range(n + 1)
    }
    return Tree(nodes, 0)


def forked_tree(n: int) -> Tree:
    """B_n: A_{n-1} with a sibling added to its single leaf (n non-root nodes)."""
    if n < 2:
        raise ValueError("need n >= 2")
    nodes = {
        v: Node(0, (v + 1,) if v < n - 1 else (), v - 1 if v > 0 else None)
        for v in range(n)
    }
    fork = n - 2  # parent of the former single leaf
    nodes[fork] = Node(0, (n - 1, n), fork - 1 if fork > 0 else None)
    nodes[n - 1] = Node(0, (), fork)
    nodes[n] = Node(0, (), fork)
    return Tree(nodes, 0)


def fuzzy_degree(n: int, planned_traces: int, delta: float, q: float) -> int:
    """Smallest sibling-block size m with n * N * q^m <= delta, at least 2."""
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must lie in [0, 1), got {q}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if q == 0.0:
        return 2
    budget = n * planned_traces
    m = max(1, math.ceil(math.log(budget / delta) / math.log(1.0 / q)))
    while m > 1 and budget * q ** (m - 1) <= delta:
        m -= 1
    while budget * q ** m > delta:
        m += 1
    return max(m, 2)


def _feasible_leaf_counts(n: int, m: int) -> list[int]:
    """Skeleton leaf counts lam with a valid skeleton of n - m*lam nodes."""
    out = list(range(1, (n - 1) // (m + 1) + 1))
    if n == m + 1:
        out = [1]
    return out


def random_fuzzy_tree(n: int, m: int, rng) -> Tree:
    """Random tree on n nodes where every leaf sits in a block of m siblings.

    Built by growing a random skeleton with a chosen number of leaves, then
    replacing each skeleton leaf by a node with m leaf children.  The output
    always satisfies the degree-m invariant exactly; the distribution over
    shapes is not uniform.
    """
    if m < 2:
        raise ValueError("fuzzy degree m must be >= 2")
    feasible = _feasible_leaf_counts(n, m)
    if n < m + 1 or not feasible:
        raise ValueError(f"no fuzzy tree with n={n}, m={m}")
    lam = int(feasible[rng.integers(len(feasible))])
    k = n - m * lam
    labels = {0: 0}
    children: dict[int, list[int]] = {0: []}
    parent: dict[int, int | None] = {0: None}
    nxt = 1

    def add_child(u: int, slot: int) -> int:
        nonlocal nxt
        v = nxt
        nxt += 1
        labels[v] = 0
        children[v] = []
        parent[v] = u
        children[u].insert(slot, v)
        return v

    if k > 1:
        # Grow the skeleton: a move onto a leaf keeps the leaf count, a move
        # onto an internal node raises it by one.  First move must hit a leaf.
        moves = ["L"] * (k - 1 - (lam - 1)) + ["I"] * (lam - 1)
        body = moves[1:]
        rng.shuffle(body)
        moves = ["L"] + body
        leaves_now = [0]
        internal_now: list[int] = []
        for mv in moves:
            if mv == "L":
                i = int(rng.integers(len(leaves_now)))
                u = leaves_now.pop(i)
                internal_now.append(u)
                leaves_now.append(add_child(u, 0))
            else:
                u = internal_now[int(rng.integers(len(internal_now)))]
                slot = int(rng.integers(len(children[u]) + 1))
                leaves_now.append(add_child(u, slot))
    skeleton_leaves = [v for v in labels if not children[v]]
    for u in skeleton_leaves:
        for j in range(m):
            add_child(u, j)
    nodes = {v: Node(labels[v], tuple(children[v]), parent[v]) for v in labels}
    tree = Tree(nodes, 0)
    assert tree.n == n
    return tree


@lru_cache(maxsize=None)
def _shapes_with_leaves(k: int, lam: int) -> tuple:
    """All ordered tree shapes (nested child tuples) with k nodes, lam leaves."""
    if k < 1 or lam < 1:
        return ()
    if k == 1:
        return ((),) if lam == 1 else ()
    return tuple(forest for forest in _forests_with_leaves(k - 1, lam))


@lru_cache(maxsize=None)
def _forests_with_leaves(k: int, lam: int) -> tuple:
    out = []
    for k1 in range(1, k + 1):
        for lam1 in range(1, lam + 1):
            for first in _shapes_with_leaves(k1, lam1):
                if k1 == k:
                    if lam1 == lam:
                        out.append((first,))
                else:
                    for rest in _forests_with_leaves(k - k1, lam - lam1):
                        out.append((first,) + rest)
    return tuple(out)


def _shape_to_tree(shape) -> Tree:
    nodes: dict[int, Node] = {}
    counter = 0

    def alloc(sh, par) -> int:
        nonlocal counter
        v = counter
        counter += 1
        kids = []
        for child in sh:
            kids.append(alloc(child, v))
        nodes[v] = Node(0, tuple(kids), par)
        return v

    root = alloc(shape, None)
    return Tree(nodes, root, validate=False)


def enumerate_fuzzy_trees(n: int, m: int) -> list[Tree]:
    """The random_fuzzy_tree family: every leaf terminal, in blocks of m.

    Enumerates skeletons by exact (node count, leaf count) and replaces each
    skeleton leaf with an m-leaf block.  This is the candidate class the
    fuzzy reconstruction pipeline searches.
    """
    if m < 2:
        raise ValueError("fuzzy degree m must be >= 2")
    out = []
    for lam in _feasible_leaf_counts(n, m):
        k = n - m * lam
        for shape in _shapes_with_leaves(k, lam):
            skel = _shape_to_tree(shape)
            labels = {v: 0 for v in skel.nodes}
            children = {v: list(skel.nodes[v].children) for v in skel.nodes}
            parent = {v: skel.nodes[v].parent for v in skel.nodes}
            nxt = skel.n
            for u in list(labels):
                if not children[u]:
                    for _ in range(m):
                        labels[nxt] = 0
                        children[nxt] = []
                        parent[nxt] = u
                        children[u].append(nxt)
                        nxt += 1
            nodes = {v: Node(0, tuple(children[v]), parent[v]) for v in labels}
            out.append(Tree(nodes, skel.root, validate=False))
    return out


def random_tree(n: int, rng) -> Tree:
    """Uniform ordered rooted tree on n nodes via the cycle lemma.

    A uniform arrangement of n ups and n-1 downs has exactly one rotation
    whose partial sums stay positive; dropping its leading up gives a uniform
    Dyck word, hence a uniform tree.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if n == 1:
        return Tree({0: Node(0)}, 0)
    m = n - 1
    steps = rng.permutation([1] * (m + 1) + [-1] * m)
    prefix = steps.cumsum()
    # Start right after the last position attaining the minimum prefix sum.
    last_min = 2 * m - int(prefix[::-1].argmin())
    start = (last_min + 1) % (2 * m + 1)
    rotated = list(steps[start:]) + list(steps[:start])
    word = "".join("1" if x > 0 else "0" for x in rotated[1:])
    return tree_from_dyck(word)


def random_labels(t: Tree, rng) -> Tree:
    """Copy of t with independent fair-bit labels."""
    order = preorder(t)
    bits = rng.integers(0, 2, size=len(order))
    return t.with_labels({v: int(b) for v, b in zip(order, bits)})
