"""Reconstruction pipelines: known-topology labels, fuzzy topology, encoded strings.

Each pipeline turns tree traces into strings, hands them to a pluggable
string reconstructor (max-likelihood over an explicit candidate class by
default), and maps the result back to a tree or bit string.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .instances import (
    _feasible_leaf_counts,
    encoded_leaf_id,
    encoded_parent_id,
    enumerate_fuzzy_trees,
)
from .string_recon import Reconstructor, ml_reconstruct
from .trees import SymbolString, Tree, preorder, preorder_label_string, tree_from_dyck
from .trees import DyckStringError


class MergeError(ValueError):
    """The dual strings do not assemble into a realizable tree."""


class ReconstructionFailedError(ValueError):
    """Recovered dual strings could not be merged; carries both strings."""

    def __init__(self, s0: SymbolString, s1: SymbolString):
        super().__init__(f"dual strings do not merge: S0={s0!s} S1={s1!s}")
        self.s0 = s0
        self.s1 = s1


class UndecidedPositionsError(ValueError):
    """Encoded positions with no usable observation in any trace."""

    def __init__(self, positions: list[int]):
        super().__init__(f"no surviving observation for positions {positions}")
        self.positions = positions


class ReconstructorProtocolError(ValueError):
    """A plugged string reconstructor returned the wrong length."""


@dataclass
class ReconstructionReport:
    """Outcome of one pipeline run, with named diagnostic measurements."""

    result: object
    traces_used: int
    success: bool | None = None
    diagnostics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.traces_used < 1:
            raise ValueError("traces_used must be >= 1")


def reconstruct_labels_known_topology(
    topology: Tree,
    traces: Sequence[Tree],
    q: float,
    reconstructor: Reconstructor | None = None,
) -> Tree:
    """Recover node labels of a known topology from tree traces.

    Traces serialise to their preorder label strings, a string reconstructor
    recovers the full-length string, and bit i goes to the i-th preorder node.
    """
    if not traces:
        raise ValueError("empty trace list")
    n = topology.n
    strings = [preorder_label_string(tr) for tr in traces]
    rec = reconstructor if reconstructor is not None else ml_reconstruct
    s = rec(strings, n, q)
    if len(s) != n:
        raise ReconstructorProtocolError(
            f"reconstructor returned length {len(s)}, topology has {n} nodes"
        )
    order = preorder(topology)
    return topology.with_labels({v: int(str(s)[i]) for i, v in enumerate(order)})


def _dual_events(t: Tree):
    """Chronological DFS events: ('down', v), ('leaf', v), ('up', v)."""
    if t.n == 1:
        yield ("leaf", t.root)
        return
    stack = [(t.root, 0)]
    while stack:
        v, i = stack.pop()
        kids = t.children_of(v)
        if i < len(kids):
            stack.append((v, i + 1))
            c = kids[i]
            yield ("down", c)
            if t.is_leaf(c):
                yield ("leaf", c)
            stack.append((c, 0))
        elif v != t.root:
            yield ("up", v)


def dual_strings_with_owners(t: Tree):
    """Dual strings plus, per symbol, the node that owns it.

    A non-root node owns the 1 written when the walk descends into it and the
    0 written when the walk leaves it; a leaf additionally owns its 2 in both
    strings.  A lone root counts as a leaf so the leaf anchors stay total.
    """
    s0: list[str] = []
    s1: list[str] = []
    own0: list[int] = []
    own1: list[int] = []
    for kind, v in _dual_events(t):
        if kind == "down":
            s1.append("1")
            own1.append(v)
        elif kind == "leaf":
            s0.append("2")
            own0.append(v)
            s1.append("2")
            own1.append(v)
        else:
            s0.append("0")
            own0.append(v)
    return SymbolString("".join(s0), "02"), own0, SymbolString("".join(s1), "12"), own1


def dual_strings(t: Tree) -> tuple[SymbolString, SymbolString]:
    """(S0 over {0,2}, S1 over {1,2}): ascents/descents with leaf markers."""
    s0, _, s1, _ = dual_strings_with_owners(t)
    return s0, s1


def merge_dual_strings(s0: SymbolString | str, s1: SymbolString | str) -> Tree:
    """Rebuild the tree whose dual strings are (s0, s1).

    The 2-markers anchor the leaves; descent runs from s1 and ascent runs
    from s0 interleave between consecutive leaves into the full edge walk.
    Raises MergeError when the pair is not realizable.
    """
    t0, t1 = str(s0), str(s1)
    if set(t0) - {"0", "2"} or set(t1) - {"1", "2"}:
        raise MergeError("dual strings must use alphabets {0,2} and {1,2}")
    downs = t1.split("2")
    ups = t0.split("2")
    if len(downs) != len(ups):
        raise MergeError(
            f"leaf marker counts differ: {len(downs) - 1} in S1, {len(ups) - 1} in S0"
        )
    if len(downs) < 2:
        raise MergeError("no leaf markers present")
    if downs[-1] != "":
        raise MergeError("S1 must end at a leaf")
    if ups[0] != "":
        raise MergeError("S0 must start at a leaf")
    walk = "".join(d + u for d, u in zip(downs[:-1], ups[1:]))
    try:
        tree = tree_from_dyck(walk)
    except DyckStringError as exc:
        raise MergeError(f"interleaved walk is not balanced: {exc}") from exc
    back0, back1 = dual_strings(tree)
    if str(back0) != t0 or str(back1) != t1:
        raise MergeError("pair is not the dual encoding of any tree")
    return tree


_TO_BINARY = str.maketrans({"2": "0", "1": "1", "0": "1"})


def _fuzzy_to_binary(s: SymbolString | str) -> str:
    """Map the non-2 symbol to 1 and the leaf marker 2 to 0."""
    return str(s).translate(_TO_BINARY)


def _binary_to_fuzzy(s: str, alphabet: str) -> SymbolString:
    other = alphabet.replace("2", "")
    return SymbolString(s.translate(str.maketrans({"1": other, "0": "2"})), alphabet)


def _fuzzy_family_candidates(n: int, m: int) -> tuple[dict[int, list[str]], dict[int, list[str]]]:
    """Binary-mapped dual strings of the fuzzy candidate class, keyed by length."""
    by_len0: dict[int, list[str]] = {}
    by_len1: dict[int, list[str]] = {}
    seen0: set[str] = set()
    seen1: set[str] = set()
    for cand in enumerate_fuzzy_trees(n, m):
        c0, c1 = dual_strings(cand)
        b0, b1 = _fuzzy_to_binary(c0), _fuzzy_to_binary(c1)
        if b0 not in seen0:
            seen0.add(b0)
            by_len0.setdefault(len(b0), []).append(b0)
        if b1 not in seen1:
            seen1.add(b1)
            by_len1.setdefault(len(b1), []).append(b1)
    return by_len0, by_len1


def reconstruct_fuzzy(
    traces: Sequence[Tree],
    n: int,
    m: int,
    q: float,
    reconstructor: Reconstructor | None = None,
) -> Tree:
    """Recover the topology of a degree-m fuzzy tree from TED traces.

    Builds both dual strings per trace, maps each family to binary, runs the
    string reconstructor on the two families independently, maps back, and
    merges.  The default reconstructor is max-likelihood over the fuzzy
    candidate class of matching string length, inferred from the average
    surviving leaf count.
    """
    if not traces:
        raise ValueError("empty trace list")
    pairs = [dual_strings(tr) for tr in traces]
    tr0 = [str(a) for a, _ in pairs]
    tr1 = [str(b) for _, b in pairs]
    mean_leaves = sum(t.count("2") for t in tr1) / len(tr1)
    p = 1.0 - q
    lam_est = mean_leaves / p / m
    feasible = _feasible_leaf_counts(n, m)
    lam = min(feasible, key=lambda x: abs(x - lam_est))
    width = (n - 1) + m * lam
    bin0 = [_fuzzy_to_binary(t) for t in tr0]
    bin1 = [_fuzzy_to_binary(t) for t in tr1]
    if reconstructor is None:
        by_len0, by_len1 = _fuzzy_family_candidates(n, m)
        got0 = ml_reconstruct(bin0, width, q, candidates=sorted(by_len0[width]))
        got1 = ml_reconstruct(bin1, width, q, candidates=sorted(by_len1[width]))
    else:
        got0 = reconstructor(bin0, width, q)
        got1 = reconstructor(bin1, width, q)
    s0 = _binary_to_fuzzy(str(got0), "02")
    s1 = _binary_to_fuzzy(str(got1), "12")
    try:
        return merge_dual_strings(s0, s1)
    except MergeError:
        raise ReconstructionFailedError(s0, s1) from None


def reconstruct_encoded(
    traces: Sequence[Tree], s_len: int, ell: int, q: float
) -> SymbolString:
    """Decode the bit string hidden in an encoding tree from TED traces.

    Family knowledge is the fixed identifier layout of the generator (the
    stand-in for an oracle that replaces partially deleted structure).  Each
    encoded position is decided by majority over traces in which the leaf and
    its backbone parent both survive and the path continuation below the
    parent is still visible; q plays no role in the vote itself.
    """
    if not traces:
        raise ValueError("empty trace list")
    bits: list[str] = []
    undecided: list[int] = []
    for i in range(1, s_len + 1):
        leaf = encoded_leaf_id(s_len, ell, i)
        par = encoded_parent_id(s_len, ell, i)
        zeros = ones = 0
        for tr in traces:
            if leaf not in tr.nodes or par not in tr.nodes:
                continue
            kids = tr.children_of(par)
            if len(kids) < 2:
                continue  # continuation gone; orientation unreadable
            if kids[0] == leaf:
                zeros += 1
            elif kids[-1] == leaf:
                ones += 1
        if zeros == 0 and ones == 0:
            undecided.append(i)
        else:
            bits.append("1" if ones > zeros else "0")
    if undecided:
        raise UndecidedPositionsError(undecided)
    return SymbolString("".join(bits), "01")


def encoded_removal_stats(traces: Sequence[Tree], s_len: int, ell: int) -> dict[str, float]:
    """Leaf survival statistics across traces for the encoding family.

    complete_removal counts (trace, position) pairs where the leaf and its
    parent are both gone, the event that erases all positional evidence.
    """
    complete = both_alive = leaf_only = parent_only = 0
    for tr in traces:
        present = tr.nodes
        for i in range(1, s_len + 1):
            leaf_in = encoded_leaf_id(s_len, ell, i) in present
            par_in = encoded_parent_id(s_len, ell, i) in present
            if leaf_in and par_in:
                both_alive += 1
            elif leaf_in:
                leaf_only += 1
            elif par_in:
                parent_only += 1
            else:
                complete += 1
    total = len(traces) * s_len
    return {
        "trials": float(total),
        "complete_removal": float(complete),
        "complete_removal_rate": complete / total if total else 0.0,
        "both_alive": float(both_alive),
        "leaf_only": float(leaf_only),
        "parent_only": float(parent_only),
    }
