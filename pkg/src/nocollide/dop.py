"""Doubly-ordered partitions (DOPs) and the virtual tree of top-m decisions.

A DOP ``[S_1 >_{s1} S_2 >_{s2} ... S_j]`` is an ordered set partition of the
arms ``1..K`` whose inequality signs carry the order in which they were
introduced.  Nodes of the tree are plain immutable values; parents and
children are computed on demand.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable, Iterator, Sequence

from .errors import InvalidParameter, NoParent, ParseError, TooLarge

DEFAULT_NODE_CAP = 10**6


@dataclass(frozen=True)
class Dop:
    arm_count: int
    parts: tuple[frozenset[int], ...]
    sign_order: tuple[int, ...]

    def __post_init__(self):
        K = self.arm_count
        if K < 1:
            raise InvalidParameter(f"arm_count must be >= 1, got {K}")
        seen: set[int] = set()
        for part in self.parts:
            if not part:
                raise InvalidParameter("empty part")
            if seen & part:
                raise InvalidParameter("parts overlap")
            seen |= part
        if seen != set(range(1, K + 1)):
            raise InvalidParameter(f"parts do not cover arms 1..{K}")
        if sorted(self.sign_order) != list(range(1, len(self.parts))):
            raise InvalidParameter("sign_order is not a permutation of 1..j-1")

    @property
    def depth(self) -> int:
        return len(self.sign_order)

    @property
    def is_root(self) -> bool:
        return not self.sign_order

    def __str__(self) -> str:
        return format_dop(self)


@dataclass(frozen=True)
class DecidedSets:
    i_p: int
    a_set: frozenset[int]
    b_set: frozenset[int]
    is_leaf: bool


def _check_m(K: int, m: int) -> None:
    if not 1 <= m <= K:
        raise InvalidParameter(f"need 1 <= m <= K, got m={m}, K={K}")


def make_root(K: int) -> Dop:
    if K < 1:
        raise InvalidParameter(f"K must be >= 1, got {K}")
    return Dop(K, (frozenset(range(1, K + 1)),), ())


def format_dop(d: Dop) -> str:
    out = ["["]
    for idx, part in enumerate(d.parts):
        if idx:
            out.append(f">_{d.sign_order[idx - 1]}")
        out.append("{" + ",".join(str(a) for a in sorted(part)) + "}")
    out.append("]")
    return "".join(out)


_INT = re.compile(r"[0-9]+")


def parse_dop(text: str, K: int) -> Dop:
    """Parse ``[{1,3,5}>_1{2,6,7}>_2{4}]``; arms within a part may be unordered."""
    pos = 0

    def expect(tok: str) -> None:
        nonlocal pos
        if not text.startswith(tok, pos):
            raise ParseError(f"expected {tok!r}", pos)
        pos += len(tok)

    def integer() -> int:
        nonlocal pos
        match = _INT.match(text, pos)
        if match is None:
            raise ParseError("expected integer", pos)
        value = int(match.group())
        if value < 1:
            raise ParseError("integers must be >= 1", pos)
        pos = match.end()
        return value

    def part() -> frozenset[int]:
        nonlocal pos
        start = pos
        expect("{")
        arms = [integer()]
        while text.startswith(",", pos):
            pos += 1
            arms.append(integer())
        expect("}")
        for a in arms:
            if a > K:
                raise ParseError(f"arm {a} exceeds K={K}", start)
        if len(set(arms)) != len(arms):
            raise ParseError("repeated arm inside a part", start)
        return frozenset(arms)

    expect("[")
    parts = [part()]
    labels: list[int] = []
    label_pos: list[int] = []
    while text.startswith(">_", pos):
        pos += 2
        label_pos.append(pos)
        labels.append(integer())
        parts.append(part())
    expect("]")
    if pos != len(text):
        raise ParseError("trailing characters", pos)

    seen: set[int] = set()
    for p in parts:
        if seen & p:
            raise ParseError("arm appears in two parts", 0)
        seen |= p
    if seen != set(range(1, K + 1)):
        raise ParseError(f"parts do not cover arms 1..{K}", 0)
    used: set[int] = set()
    for lab, lp in zip(labels, label_pos):
        if lab > len(labels) or lab in used:
            raise ParseError(
                f"sign labels must be a permutation of 1..{len(labels)}", lp
            )
        used.add(lab)
    return Dop(K, tuple(parts), tuple(labels))


def decided_sets(d: Dop, m: int) -> DecidedSets:
    _check_m(d.arm_count, m)
    total = 0
    i_p = 0
    for part in d.parts:
        if total + len(part) > m:
            break
        total += len(part)
        i_p += 1
    a_set = frozenset().union(*d.parts[:i_p])
    if len(a_set) == m:
        return DecidedSets(i_p, a_set, frozenset(), True)
    return DecidedSets(i_p, a_set, d.parts[i_p], False)


def is_leaf(d: Dop, m: int) -> bool:
    return decided_sets(d, m).is_leaf


def parent(d: Dop) -> Dop:
    if d.is_root:
        raise NoParent(f"{format_dop(d)} is the root")
    k = d.sign_order.index(max(d.sign_order))
    parts = d.parts[:k] + (d.parts[k] | d.parts[k + 1],) + d.parts[k + 2 :]
    return Dop(d.arm_count, parts, d.sign_order[:k] + d.sign_order[k + 1 :])


def split(d: Dop, index: int, upper: Iterable[int]) -> Dop:
    """Split part ``index`` into ``upper > rest`` with the next sign label."""
    upper = frozenset(upper)
    lower = d.parts[index] - upper
    if not upper or not lower or not upper <= d.parts[index]:
        raise InvalidParameter("split must cut the part into two nonempty sets")
    parts = d.parts[:index] + (upper, lower) + d.parts[index + 1 :]
    signs = d.sign_order[:index] + (d.depth + 1,) + d.sign_order[index:]
    return Dop(d.arm_count, parts, signs)


def children(d: Dop, m: int) -> list[Dop]:
    ds = decided_sets(d, m)
    if ds.is_leaf:
        return []
    block = sorted(ds.b_set)
    out = []
    for size in range(1, len(block)):
        for upper in itertools.combinations(block, size):
            out.append(split(d, ds.i_p, upper))
    return out


def ancestors(d: Dop) -> list[Dop]:
    """Root-to-``d`` chain, both ends included."""
    chain = [d]
    while not chain[-1].is_root:
        chain.append(parent(chain[-1]))
    chain.reverse()
    return chain


def depth(d: Dop) -> int:
    return d.depth


def is_adjacent(p: Dop, q: Dop, m: int | None = None) -> bool:
    """Tree distance at most one.  ``m`` is accepted for interface symmetry."""
    if p == q:
        return True
    if p.depth == q.depth + 1:
        return parent(p) == q
    if q.depth == p.depth + 1:
        return parent(q) == p
    return False


def feas(d: Dop, m: int) -> set[frozenset[int]]:
    ds = decided_sets(d, m)
    if ds.is_leaf:
        return {ds.a_set}
    need = m - len(ds.a_set)
    return {ds.a_set | frozenset(s) for s in itertools.combinations(sorted(ds.b_set), need)}


def validate_membership(d: Dop, m: int) -> bool:
    _check_m(d.arm_count, m)
    node = d
    while not node.is_root:
        k = node.sign_order.index(max(node.sign_order))
        up = parent(node)
        ds = decided_sets(up, m)
        if ds.is_leaf or ds.i_p != k or ds.b_set != node.parts[k] | node.parts[k + 1]:
            return False
        node = up
    return True


def splits_of(d: Dop) -> tuple[frozenset[int], ...]:
    """Upper sets of the successive splits from the root down to ``d``."""
    out = []
    node = d
    while not node.is_root:
        k = node.sign_order.index(max(node.sign_order))
        out.append(node.parts[k])
        node = parent(node)
    out.reverse()
    return tuple(out)


def from_splits(K: int, m: int, uppers: Sequence[Iterable[int]]) -> Dop:
    """Inverse of :func:`splits_of` for nodes of the top-m tree."""
    node = make_root(K)
    for upper in uppers:
        ds = decided_sets(node, m)
        if ds.is_leaf:
            raise InvalidParameter("cannot split below a leaf")
        node = split(node, ds.i_p, upper)
    return node


def relabel(d: Dop, perm: dict[int, int]) -> Dop:
    """Apply the arm bijection ``perm`` to every part."""
    parts = tuple(frozenset(perm[a] for a in part) for part in d.parts)
    return Dop(d.arm_count, parts, d.sign_order)


@lru_cache(maxsize=None)
def _count(a: int, b: int, m: int) -> tuple[int, int]:
    # subtree sizes for a node with |A| = a and |B| = b
    if b == 0:
        return 1, 1
    nodes, leaves = 1, 0
    for u in range(1, b):
        if a + u <= m:
            na, nb = a + u, (0 if a + u == m else b - u)
        else:
            na, nb = a, u
        n, lv = _count(na, nb, m)
        nodes += comb(b, u) * n
        leaves += comb(b, u) * lv
    return nodes, leaves


def tree_size(K: int, m: int) -> tuple[int, int]:
    """(nodes, leaves) of the top-m tree, computed without enumeration."""
    _check_m(K, m)
    return _count(m, 0, m) if K == m else _count(0, K, m)


def enumerate_tree(K: int, m: int, cap: int = DEFAULT_NODE_CAP) -> Iterator[Dop]:
    """Breadth-first traversal of every node; rejects trees larger than ``cap``."""
    nodes, _ = tree_size(K, m)
    if nodes > cap:
        raise TooLarge(f"tree for K={K}, m={m} has {nodes} nodes (cap {cap})")
    queue = deque([make_root(K)])
    while queue:
        node = queue.popleft()
        yield node
        queue.extend(children(node, m))
