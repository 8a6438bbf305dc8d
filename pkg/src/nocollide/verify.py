"""Named verification suites shared by the CLI ``verify`` command and the tests.

Each suite returns a :class:`SuiteReport`; ``violations == 0`` means pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dop as D
from .cells import CellQuery, Thresholds, assign_cell, best_cut_child, range_of
from .coloring import ArmOrder, check_robust, color_of, feas_first
from .oracles import feas_by_enumeration

FEAS_PAIRS = ((3, 2), (4, 2), (5, 2), (5, 3))
COLORING_PAIRS = ((3, 2), (4, 2), (4, 3), (5, 3))


@dataclass
class SuiteReport:
    name: str
    checked: int = 0
    violations: int = 0
    examples: list[str] = field(default_factory=list)

    def fail(self, detail: str) -> None:
        self.violations += 1
        if len(self.examples) < 5:
            self.examples.append(detail)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def random_point(K: int, rng: np.random.Generator) -> tuple[float, ...]:
    """Uniform half the time; otherwise clustered around a few levels so that
    near-ties and interfaces actually get exercised."""
    if rng.random() < 0.5:
        return tuple(rng.random(K))
    levels = rng.random(int(rng.integers(1, K + 1)))
    x = levels[rng.integers(0, levels.size, K)] + rng.normal(0, 10 ** rng.uniform(-4, -1), K)
    return tuple(np.clip(x, 0.0, 1.0))


def random_thresholds(K: int, rng: np.random.Generator) -> Thresholds:
    return Thresholds(tuple(rng.random(K) / K))


def random_inner_node(K: int, m: int, rng: np.random.Generator) -> D.Dop:
    node = D.make_root(K)
    stop = int(rng.integers(0, K))
    while node.depth < stop:
        kids = D.children(node, m)
        nxt = kids[int(rng.integers(len(kids)))]
        if D.is_leaf(nxt, m):
            break
        node = nxt
    return node


def _perturb(x, eps, rng, coords=None):
    K = len(x)
    y = np.array(x)
    idx = range(K) if coords is None else coords
    for i in idx:
        y[i] = min(1.0, max(0.0, x[i] + rng.uniform(-eps, eps)))
    return tuple(y)


def suite_feas(pairs=FEAS_PAIRS) -> SuiteReport:
    rep = SuiteReport("feas")
    for K, m in pairs:
        for node in D.enumerate_tree(K, m):
            rep.checked += 1
            if D.feas(node, m) != feas_by_enumeration(node, m):
                rep.fail(f"K={K} m={m} {node}")
    return rep


def suite_coloring(pairs=COLORING_PAIRS, n_orders: int = 100, seed: int = 0) -> SuiteReport:
    rep = SuiteReport("coloring")
    rng = np.random.default_rng(seed)
    for K, m in pairs:
        nodes = list(D.enumerate_tree(K, m))
        orders = [ArmOrder.identity(K)] + [ArmOrder.random(K, rng) for _ in range(n_orders)]
        for order in orders:
            colors = {node: color_of(node, m, order) for node in nodes}
            for node in nodes:
                rep.checked += 1
                col = colors[node]
                if len(set(col)) != m or set(col) != feas_first(node, m, order):
                    rep.fail(f"K={K} m={m} {node}: {col} is not a permutation of G")
                if node.is_root:
                    continue
                par = D.parent(node)
                if not check_robust(par, node, m, order):
                    rep.fail(f"K={K} m={m} edge {par} -> {node} rank={order.rank}")
                for i, a in enumerate(colors[par]):
                    if a in col and col[i] != a:
                        rep.fail(f"K={K} m={m} {node}: slot {i + 1} dropped arm {a}")
    return rep


def suite_cut_lemma(trials: int = 10_000, seed: int = 1, max_k: int = 6) -> SuiteReport:
    rep = SuiteReport("cut-lemma")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        K = int(rng.integers(2, max_k + 1))
        m = int(rng.integers(1, K))
        node = random_inner_node(K, m, rng)
        x = random_point(K, rng)
        _, gap = best_cut_child(node, x, m)
        rep.checked += 1
        if not gap >= range_of(node, x, m) / K:
            rep.fail(f"{node} x={x} gap={gap}")
    return rep


def _trial_params(rng, max_k=5, max_m=3):
    K = int(rng.integers(2, max_k + 1))
    m = int(rng.integers(1, min(max_m, K) + 1))
    eps = float(10 ** rng.uniform(-3, -1))
    return K, m, eps, random_thresholds(K, rng)


def suite_stability(trials: int = 10_000, seed: int = 2) -> SuiteReport:
    """Inputs within eps in sup-norm land on tree-adjacent nodes."""
    rep = SuiteReport("stability")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        K, m, eps, c = _trial_params(rng)
        x = random_point(K, rng)
        y = _perturb(x, eps, rng)
        px = assign_cell(CellQuery(x, eps, m), c)
        py = assign_cell(CellQuery(y, eps, m), c)
        rep.checked += 1
        if not D.is_adjacent(px, py, m):
            rep.fail(f"x={x} y={y} eps={eps} c={c.values}: {px} vs {py}")
    return rep


def suite_consistency(trials: int = 10_000, seed: int = 3) -> SuiteReport:
    """Agreement within eps on A(P) u B(P) never sends the outputs (run at eps
    and eps' <= eps) below two different children of P."""
    rep = SuiteReport("consistency")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        K, m, eps, c = _trial_params(rng)
        eps2 = eps * float(rng.uniform(0.05, 1.0))
        x = random_point(K, rng)
        px = assign_cell(CellQuery(x, eps, m), c)
        chain = D.ancestors(px)
        P = chain[int(rng.integers(len(chain)))]
        ds = D.decided_sets(P, m)
        keep = sorted(a - 1 for a in ds.a_set | ds.b_set)
        y = list(rng.random(K))
        for i in keep:
            y[i] = x[i]
        y = _perturb(tuple(y), eps, rng, keep)
        py = assign_cell(CellQuery(y, eps2, m), c)
        rep.checked += 1
        sx, sy, h = D.splits_of(px), D.splits_of(py), P.depth
        prefix = D.splits_of(P)
        if (len(sx) > h and len(sy) > h and sx[:h] == prefix and sy[:h] == prefix
                and sx[h] != sy[h]):
            rep.fail(f"x={x} y={y} P={P}: {px} vs {py}")
    return rep


def suite_self_consistency(trials: int = 10_000, seed: int = 4) -> SuiteReport:
    """x weakly obeys every inequality of its own cell."""
    rep = SuiteReport("self-consistency")
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        K, m, eps, c = _trial_params(rng)
        x = random_point(K, rng)
        node = assign_cell(CellQuery(x, eps, m), c)
        rep.checked += 1
        for hi, lo in zip(node.parts, node.parts[1:]):
            if min(x[a - 1] for a in hi) < max(x[a - 1] for a in lo):
                rep.fail(f"x={x} violates {node}")
                break
    return rep


SUITES = {
    "feas": suite_feas,
    "coloring": suite_coloring,
    "cut-lemma": suite_cut_lemma,
    "stability": suite_stability,
    "consistency": suite_consistency,
    "self-consistency": suite_self_consistency,
}


def run_suite(name: str, **kwargs) -> SuiteReport:
    return SUITES[name](**kwargs)
