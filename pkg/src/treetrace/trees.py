"""Ordered labeled rooted trees: traversal, Dyck encoding, text format, equality.

Child order is significant throughout.  Node identifiers are arbitrary ints
and stay stable when a tree passes through a deletion channel, so deletions
can be tracked; equality and hashing look only at shape and labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

ALPHABETS = ("01", "02", "12")


class TreeTextError(ValueError):
    """Malformed tree text; carries the offending position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class DyckStringError(ValueError):
    """Input is not a balanced Dyck word over {0,1}."""


@dataclass(frozen=True)
class SymbolString:
    """Finite sequence over one of the two-letter alphabets 01, 02, 12."""

    symbols: str
    alphabet: str = "01"

    def __post_init__(self):
        if self.alphabet not in ALPHABETS:
            raise ValueError(f"unknown alphabet {self.alphabet!r}")
        bad = set(self.symbols) - set(self.alphabet)
        if bad:
            raise ValueError(f"symbols {sorted(bad)} outside alphabet {self.alphabet!r}")

    def __len__(self) -> int:
        return len(self.symbols)

    def __getitem__(self, i) -> str:
        return self.symbols[i]

    def __iter__(self) -> Iterator[str]:
        return iter(self.symbols)

    def __str__(self) -> str:
        return self.symbols


@dataclass(frozen=True)
class Node:
    label: int
    children: tuple[int, ...] = ()
    parent: int | None = None


class Tree:
    """Ordered rooted tree with one bit label per node.

    ``nodes`` maps identifier -> Node; an unlabeled tree is one whose labels
    are all zero.  Instances are immutable after construction.
    """

    __slots__ = ("nodes", "root", "_canon")

    def __init__(self, nodes: Mapping[int, Node], root: int, validate: bool = True):
        self.nodes = dict(nodes)
        self.root = root
        self._canon: str | None = None
        if validate:
            self._validate()

    def _validate(self):
        if self.root not in self.nodes:
            raise ValueError("root identifier missing from node table")
        if self.nodes[self.root].parent is not None:
            raise ValueError("root must have no parent")
        seen = set()
        stack = [self.root]
        while stack:
            v = stack.pop()
            if v in seen:
                raise ValueError(f"node {v} reached twice (cycle or shared child)")
            seen.add(v)
            node = self.nodes[v]
            if node.label not in (0, 1):
                raise ValueError(f"label of node {v} must be a bit, got {node.label}")
            for c in node.children:
                if c not in self.nodes:
                    raise ValueError(f"child {c} of node {v} missing from node table")
                if self.nodes[c].parent != v:
                    raise ValueError(f"parent pointer of {c} inconsistent with child list of {v}")
                stack.append(c)
        if seen != set(self.nodes):
            raise ValueError("unreachable nodes present")

    @property
    def n(self) -> int:
        return len(self.nodes)

    def label_of(self, v: int) -> int:
        return self.nodes[v].label

    def children_of(self, v: int) -> tuple[int, ...]:
        return self.nodes[v].children

    def parent_of(self, v: int) -> int | None:
        return self.nodes[v].parent

    def is_leaf(self, v: int) -> bool:
        return not self.nodes[v].children

    def leaves(self) -> list[int]:
        return [v for v in preorder(self) if self.is_leaf(v)]

    def with_labels(self, labels: Mapping[int, int]) -> "Tree":
        """Copy of this tree with labels replaced where the mapping says so."""
        nodes = {
            v: Node(labels.get(v, nd.label), nd.children, nd.parent)
            for v, nd in self.nodes.items()
        }
        return Tree(nodes, self.root, validate=False)

    def canonical(self) -> str:
        if self._canon is None:
            self._canon = format_tree(self)
        return self._canon

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __hash__(self) -> int:
        return hash(self.canonical())

    def __repr__(self) -> str:
        return f"Tree({self.canonical()!r})"


def build_tree(spec) -> Tree:
    """Build a tree from nested (label, [children...]) pairs; ids follow preorder."""
    nodes: dict[int, Node] = {}
    counter = 0

    def alloc(item, parent) -> int:
        nonlocal counter
        if isinstance(item, int):
            label, kids = item, []
        else:
            label, kids = item
        v = counter
        counter += 1
        child_ids = []
        nodes[v] = None  # reserve slot so ids follow preorder
        for kid in kids:
            child_ids.append(alloc(kid, v))
        nodes[v] = Node(label, tuple(child_ids), parent)
        return v

    root = alloc(spec, None)
    return Tree(nodes, root)


def preorder(t: Tree) -> list[int]:
    """Root first, then each subtree left to right."""
    out = []
    stack = [t.root]
    while stack:
        v = stack.pop()
        out.append(v)
        stack.extend(reversed(t.nodes[v].children))
    return out


def preorder_label_string(t: Tree) -> SymbolString:
    """Labels read off in preorder; length equals the node count."""
    return SymbolString("".join(str(t.nodes[v].label) for v in preorder(t)), "01")


def _euler_walk(t: Tree) -> Iterator[tuple[str, int]]:
    """Depth-first edge walk: ('1', v) descending into v, ('0', v) ascending out."""
    # Explicit stack of (node, next-child-index) to keep deep chains safe.
    stack = [(t.root, 0)]
    while stack:
        v, i = stack.pop()
        kids = t.nodes[v].children
        if i < len(kids):
            stack.append((v, i + 1))
            c = kids[i]
            yield "1", c
            stack.append((c, 0))
        elif v != t.root:
            yield "0", v


def dyck_string(t: Tree) -> SymbolString:
    """Balanced word of the edge walk: 1 per descent, 0 per ascent; length 2(n-1)."""
    return SymbolString("".join(sym for sym, _ in _euler_walk(t)), "01")


def tree_from_dyck(s: SymbolString | str) -> Tree:
    """Inverse of dyck_string; all labels zero.  Raises DyckStringError if unbalanced."""
    word = str(s)
    if set(word) - {"0", "1"}:
        raise DyckStringError(f"non-binary symbol in {word!r}")
    children: dict[int, list[int]] = {0: []}
    parent: dict[int, int | None] = {0: None}
    stack = [0]
    nxt = 1
    for i, ch in enumerate(word):
        if ch == "1":
            v = nxt
            nxt += 1
            children[v] = []
            parent[v] = stack[-1]
            children[stack[-1]].append(v)
            stack.append(v)
        else:
            stack.pop()
            if not stack:
                raise DyckStringError(f"unmatched 0 at position {i}")
    if len(stack) != 1:
        raise DyckStringError("unmatched 1s remain at end of input")
    nodes = {v: Node(0, tuple(children[v]), parent[v]) for v in children}
    return Tree(nodes, 0, validate=False)


def trees_equal(a: Tree, b: Tree) -> bool:
    """Shape and labels match from the roots; node identifiers are ignored."""
    return a.canonical() == b.canonical()


def format_tree(t: Tree) -> str:
    """Canonical text per the grammar node := LABEL ["(" node ("," node)* ")"]."""
    out = []
    # Work items are node ids or literal separator strings.
    stack: list[object] = [t.root]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        node = t.nodes[item]
        out.append(str(node.label))
        if node.children:
            stack.append(")")
            for c in reversed(node.children):
                stack.append(c)
                stack.append(",")
            # Drop the comma before the first child, replace with "(".
            stack[-1] = "("
    return "".join(out)


def parse_tree(text: str) -> Tree:
    """Parse the tree grammar; whitespace between tokens is ignored."""
    nodes: dict[int, Node] = {}
    counter = 0
    i = 0
    n = len(text)

    def skip_ws():
        nonlocal i
        while i < n and text[i].isspace():
            i += 1

    def parse_node(parent) -> int:
        nonlocal i, counter
        skip_ws()
        if i >= n or text[i] not in "01":
            raise TreeTextError("expected label 0 or 1", i)
        label = int(text[i])
        i += 1
        v = counter
        counter += 1
        nodes[v] = None
        kids: list[int] = []
        skip_ws()
        if i < n and text[i] == "(":
            i += 1
            kids.append(parse_node(v))
            skip_ws()
            while i < n and text[i] == ",":
                i += 1
                kids.append(parse_node(v))
                skip_ws()
            if i >= n or text[i] != ")":
                raise TreeTextError("expected ',' or ')'", i)
            i += 1
        nodes[v] = Node(label, tuple(kids), parent)
        return v

    root = parse_node(None)
    skip_ws()
    if i != n:
        raise TreeTextError("trailing input after tree", i)
    return Tree(nodes, root, validate=False)


def enumerate_trees(n: int) -> Iterator[Tree]:
    """All ordered rooted trees with n nodes (Catalan(n-1) many), labels zero."""
    if n < 1:
        raise ValueError("need n >= 1")

    def words(ones_left: int, open_count: int) -> Iterator[str]:
        if ones_left == 0:
            yield "0" * open_count
            return
        for w in words(ones_left - 1, open_count + 1):
            yield "1" + w
        if open_count > 0:
            for w in words(ones_left, open_count - 1):
                yield "0" + w

    for word in words(n - 1, 0):
        yield tree_from_dyck(word)


def enumerate_labelings(t: Tree) -> Iterator[Tree]:
    """All 2^n bit labelings of a topology."""
    order = preorder(t)
    for mask in range(1 << t.n):
        yield t.with_labels({v: (mask >> i) & 1 for i, v in enumerate(order)})


def is_fuzzy(t: Tree, m: int) -> bool:
    """True when every terminal leaf has exactly m-1 siblings.

    A leaf is terminal when all of its siblings are leaves, i.e. its parent's
    children are all leaves; such a parent must then have exactly m children.
    """
    for v in t.nodes:
        kids = t.nodes[v].children
        if kids and all(t.is_leaf(c) for c in kids) and len(kids) != m:
            return False
    return True
