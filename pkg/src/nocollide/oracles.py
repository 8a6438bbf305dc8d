"""Brute-force references, independent of the fast paths they check."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from . import dop as D
from .dop import Dop
from .errors import InvalidParameter, TooLarge


@dataclass(frozen=True)
class OracleBudget:
    max_permutations: int = math.factorial(8)
    max_nodes: int = 10**6

    def __post_init__(self):
        if self.max_permutations < 1 or self.max_nodes < 1:
            raise InvalidParameter("oracle budgets must be positive")


def feas_by_enumeration(d: Dop, m: int, budget: OracleBudget = OracleBudget()) -> set[frozenset[int]]:
    """Top-m sets of every total order of the arms that obeys all of ``d``'s parts."""
    K = d.arm_count
    if math.factorial(K) > budget.max_permutations:
        raise TooLarge(f"{K}! total orders exceed the budget")
    where = {a: i for i, part in enumerate(d.parts) for a in part}
    out = set()
    for order in itertools.permutations(range(1, K + 1)):
        if all(where[a] <= where[b] for a, b in zip(order, order[1:])):
            out.add(frozenset(order[:m]))
    return out


def top_m_bruteforce(p: Sequence[float], m: int, budget: OracleBudget = OracleBudget()) -> float:
    if math.comb(len(p), m) > budget.max_nodes:
        raise TooLarge("too many m-subsets")
    return max(sum(p[i] for i in s) for s in itertools.combinations(range(len(p)), m))


def count_tree(K: int, m: int, budget: OracleBudget = OracleBudget()) -> tuple[int, int]:
    """(nodes, leaves) by walking every node."""
    nodes = leaves = 0
    for node in D.enumerate_tree(K, m, cap=budget.max_nodes):
        nodes += 1
        leaves += D.is_leaf(node, m)
    return nodes, leaves
