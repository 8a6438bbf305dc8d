"""Collision-robust m-coloring of the top-m tree.

Each node gets an m-tuple of distinct arms (slot i is what player i+1
plays).  The tuple at a child keeps every parent slot whose arm is still
selected, so tree-adjacent nodes never hand one arm to two players.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import dop as D
from .dop import Dop
from .errors import InvalidParameter


@dataclass(frozen=True)
class ArmOrder:
    """Bijection arm -> rank in 1..K; the lexicographic order used for coloring."""

    rank: tuple[int, ...]  # rank[a - 1] is the rank of arm a

    def __post_init__(self):
        object.__setattr__(self, "rank", tuple(int(r) for r in self.rank))
        if sorted(self.rank) != list(range(1, len(self.rank) + 1)):
            raise InvalidParameter(f"rank {self.rank} is not a bijection onto 1..K")

    @classmethod
    def identity(cls, K: int) -> "ArmOrder":
        return cls(tuple(range(1, K + 1)))

    @classmethod
    def from_sequence(cls, arms: Sequence[int]) -> "ArmOrder":
        """``arms`` lists the arms from smallest to largest rank."""
        rank = [0] * len(arms)
        for r, a in enumerate(arms, start=1):
            rank[a - 1] = r
        return cls(tuple(rank))

    @classmethod
    def random(cls, K: int, rng: np.random.Generator) -> "ArmOrder":
        return cls.from_sequence([int(a) + 1 for a in rng.permutation(K)])

    def key(self, arm: int) -> int:
        return self.rank[arm - 1]

    def sort(self, arms) -> list[int]:
        return sorted(arms, key=self.key)


def feas_first(d: Dop, m: int, order: ArmOrder) -> frozenset[int]:
    ds = D.decided_sets(d, m)
    need = m - len(ds.a_set)
    return ds.a_set | frozenset(order.sort(ds.b_set)[:need])


def _next_color(prev: tuple[int, ...], chosen: frozenset[int], order: ArmOrder) -> tuple[int, ...]:
    kept = [a if a in chosen else None for a in prev]
    fill = iter(order.sort(chosen - set(prev)))
    return tuple(a if a is not None else next(fill) for a in kept)


def color_of(d: Dop, m: int, order: ArmOrder | None = None) -> tuple[int, ...]:
    if order is None:
        order = ArmOrder.identity(d.arm_count)
    chain = D.ancestors(d)
    color = tuple(order.sort(feas_first(chain[0], m, order)))
    for node in chain[1:]:
        color = _next_color(color, feas_first(node, m, order), order)
    return color


def check_robust(p: Dop, q: Dop, m: int, order: ArmOrder | None = None) -> bool:
    fp, fq = color_of(p, m, order), color_of(q, m, order)
    return all(i == j for i, a in enumerate(fp) for j, b in enumerate(fq) if a == b)
