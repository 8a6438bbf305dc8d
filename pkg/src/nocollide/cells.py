"""Range/gap statistics and the stable partition map from [0,1]^K to tree nodes."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

from . import dop as D
from .dop import Dop
from .errors import InvalidParameter, UndefinedStatistic


@dataclass(frozen=True)
class Thresholds:
    """Per-depth cut fractions C(0..K-1); a node of depth h uses ``values[h]``."""

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        K = len(self.values)
        for v in self.values:
            if not 0.0 <= v <= 1.0 / K:
                raise InvalidParameter(f"threshold {v} outside [0, 1/{K}]")

    @classmethod
    def constant(cls, value: float, K: int) -> "Thresholds":
        return cls((float(value),) * K)

    def at(self, node: Dop) -> float:
        return self.values[node.depth]


@dataclass(frozen=True)
class CellQuery:
    x: tuple[float, ...]
    eps: float
    m: int

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if any(not 0.0 <= v <= 1.0 for v in self.x):
            raise InvalidParameter("coordinates must lie in [0, 1]")
        if not self.eps > 0:
            raise InvalidParameter(f"eps must be > 0, got {self.eps}")
        if not 1 <= self.m <= len(self.x):
            raise InvalidParameter(f"need 1 <= m <= K, got m={self.m}")


def _val(x: Sequence[float], arm: int) -> float:
    return x[arm - 1]


def sorted_block(d: Dop, x: Sequence[float], m: int) -> tuple[int, ...]:
    """Arms of B(d) by decreasing x; ties go to the smaller arm index."""
    ds = D.decided_sets(d, m)
    if ds.is_leaf:
        raise UndefinedStatistic(f"{d} is a leaf")
    return tuple(sorted(ds.b_set, key=lambda a: (-_val(x, a), a)))


def range_of(d: Dop, x: Sequence[float], m: int) -> float:
    ds = D.decided_sets(d, m)
    if ds.is_leaf:
        raise UndefinedStatistic(f"range undefined at leaf {d}")
    vals = [_val(x, a) for a in ds.b_set]
    return max(vals) - min(vals)


def gap_of(d: Dop, x: Sequence[float]) -> float:
    if d.is_root:
        raise UndefinedStatistic("gap undefined at the root")
    k = d.sign_order.index(max(d.sign_order))
    return min(_val(x, a) for a in d.parts[k]) - max(_val(x, a) for a in d.parts[k + 1])


def best_cut_child(d: Dop, x: Sequence[float], m: int) -> tuple[Dop, float]:
    """First prefix split of the sorted block with the largest gap."""
    block = sorted_block(d, x, m)
    i_p = D.decided_sets(d, m).i_p
    best_j, best_gap = 0, -math.inf
    for j in range(len(block) - 1):
        gap = _val(x, block[j]) - _val(x, block[j + 1])
        if gap > best_gap:
            best_j, best_gap = j, gap
    return D.split(d, i_p, block[: best_j + 1]), best_gap


def assign_cell(q: CellQuery, c: Thresholds) -> Dop:
    """Map ``q.x`` to a node of the top-m tree (interfaces stop at inner nodes)."""
    x, eps, m = q.x, q.eps, q.m
    K = len(x)
    if len(c.values) != K:
        raise InvalidParameter("thresholds length must equal K")
    P = D.make_root(K)
    while not D.is_leaf(P, m):
        for Q in D.ancestors(P):
            block = sorted_block(Q, x, m)
            thr = c.at(Q) * range_of(Q, x, m)
            bound = 6.0 * (P.depth - Q.depth + 1) * eps
            for j in range(len(block) - 1):
                gap = _val(x, block[j]) - _val(x, block[j + 1])
                if abs(gap - thr) <= bound:
                    return P
        block = sorted_block(P, x, m)
        thr = c.at(P) * range_of(P, x, m)
        i_p = D.decided_sets(P, m).i_p
        for j in range(len(block) - 1):
            if _val(x, block[j]) - _val(x, block[j + 1]) >= thr:
                P = D.split(P, i_p, block[: j + 1])
                break
        else:
            # unreachable for c <= 1/K except through rounding; take the widest cut
            P = best_cut_child(P, x, m)[0]
    return P


# --- 2-simplex slice for K = 3 -------------------------------------------


@dataclass(frozen=True)
class SlicePoint:
    weights: tuple[int, int, int]  # barycentric numerators over 3*grid_n
    x: tuple[float, float, float]
    label: Dop


def slice_triangle(level: float) -> tuple[tuple[float, ...], ...]:
    """Largest equilateral triangle of the plane sum(x)=level inside [0,1]^3
    whose corners point along the arm axes."""
    if not 0.0 < level < 3.0:
        raise InvalidParameter(f"level must lie in (0, 3), got {level}")
    centre = level / 3.0
    r = min(3.0 * (1.0 - centre) / 2.0, 3.0 * centre)
    corners = []
    for k in range(3):
        corners.append(
            tuple(
                min(1.0, max(0.0, centre + (r * 2.0 / 3.0 if i == k else -r / 3.0)))
                for i in range(3)
            )
        )
    return tuple(corners)


def slice_weights(grid_n: int) -> list[tuple[int, int, int]]:
    """Centroids of the grid_n**2 congruent sub-triangles, as numerators over 3*grid_n."""
    if grid_n < 2:
        raise InvalidParameter(f"grid_n must be >= 2, got {grid_n}")
    total = 3 * grid_n
    out = []
    for a in range(1, total):
        for b in range(1, total - a):
            c = total - a - b
            if a % 3 == b % 3 == c % 3 and a % 3 != 0:
                out.append((a, b, c))
    return out


def slice_neighbours(w: tuple[int, int, int]) -> list[tuple[int, int, int]]:
    """Edge-sharing sub-triangles.  Upward centroids (numerators = 1 mod 3) move
    by permutations of (-2, 1, 1), downward ones by permutations of (2, -1, -1)."""
    s = -1 if w[0] % 3 == 1 else 1
    cand = []
    for k in range(3):
        cand.append(tuple(v + (2 * s if i == k else -s) for i, v in enumerate(w)))
    return [v for v in cand if min(v) > 0]


def sample_slice(
    m: int, c: Thresholds, eps: float, level: float, grid_n: int
) -> list[SlicePoint]:
    corners = slice_triangle(level)
    total = 3 * grid_n
    points = []
    for w in slice_weights(grid_n):
        x = tuple(
            min(1.0, max(0.0, sum(w[k] * corners[k][i] for k in range(3)) / total))
            for i in range(3)
        )
        points.append(SlicePoint(w, x, assign_cell(CellQuery(x, eps, m), c)))
    return points


def slice_csv(points: Sequence[SlicePoint]) -> str:
    # labels contain commas, so the csv module quotes them
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x1", "x2", "x3", "label"])
    for pt in points:
        writer.writerow([f"{v:.6f}" for v in pt.x] + [D.format_dop(pt.label)])
    return buf.getvalue()
