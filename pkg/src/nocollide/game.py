"""Bernoulli environment, the m-player round loop, pseudo-regret and diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from . import dop as D
from .errors import ConfigError
from .players import (
    PlayerState,
    Pull,
    Schedule,
    SharedBeacon,
    act_bandit,
    act_full,
    draw_thresholds,
    eps_bandit,
    eps_full,
    observe,
    substream,
    t0,
)

MODES = ("full", "bandit")
BLOCK = 8192


@dataclass(frozen=True)
class Instance:
    p: tuple[float, ...]
    m: int
    T: int

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if not self.p:
            raise ConfigError("p must be nonempty")
        if any(not 0.0 <= v <= 1.0 for v in self.p):
            raise ConfigError("mean rewards must lie in [0, 1]")
        if not 1 <= self.m <= self.K:
            raise ConfigError(f"need 1 <= m <= K, got m={self.m}, K={self.K}")
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")

    @property
    def K(self) -> int:
        return len(self.p)


def top_m_value(p: Sequence[float], m: int) -> float:
    if not 1 <= m <= len(p):
        raise ConfigError(f"need 1 <= m <= K, got m={m}")
    # sum the chosen arms in index order so the result matches a subset sum bit for bit
    top = sorted(sorted(range(len(p)), key=lambda i: -p[i])[:m])
    return float(sum(p[i] for i in top))


def pseudo_regret_step(p: Sequence[float], arms_played: Sequence[int]) -> float:
    """Top-m value minus the summed means of the pulled arms.  Duplicated arms
    (collisions) are summed as written, so the value can be negative."""
    return top_m_value(p, len(arms_played)) - sum(p[a - 1] for a in arms_played)


@dataclass
class RunResult:
    instance: Instance
    mode: str
    schedule: Schedule
    master_seed: int
    replicate: int
    explore_rounds: int
    shared_thresholds: bool
    arms: np.ndarray  # (T, m), 1-based
    depths: np.ndarray  # (T, m), -1 while exploring
    leaves: np.ndarray  # (T, m) bool
    paths: np.ndarray  # (T, m, K-1) split bitmasks
    rewards: np.ndarray  # (T, m) realised rewards
    min_counts: np.ndarray  # (T, m) min pulls over A(P) u B(P), -1 while exploring
    inst_regret: np.ndarray = field(init=False)
    cum_regret: np.ndarray = field(init=False)
    collided: np.ndarray = field(init=False)
    cum_collisions: np.ndarray = field(init=False)

    def __post_init__(self):
        p = np.asarray(self.instance.p)
        best = top_m_value(self.instance.p, self.instance.m)
        # same summation order as top_m_value, so playing the top set costs exactly 0
        vals = p[np.sort(self.arms, axis=1) - 1]
        played = vals[:, 0].copy()
        for j in range(1, vals.shape[1]):
            played += vals[:, j]
        self.inst_regret = best - played
        self.cum_regret = np.cumsum(self.inst_regret)
        srt = np.sort(self.arms, axis=1)
        self.collided = (srt[:, 1:] == srt[:, :-1]).any(axis=1)
        self.cum_collisions = np.cumsum(self.collided)

    @property
    def T(self) -> int:
        return self.instance.T

    def node(self, t: int, X: int) -> D.Dop | None:
        """The tree node player ``X`` (1-based) used at round ``t``."""
        d = int(self.depths[t - 1, X - 1])
        if d < 0:
            return None
        K = self.instance.K
        uppers = [
            [a + 1 for a in range(K) if (int(mask) >> a) & 1]
            for mask in self.paths[t - 1, X - 1, :d]
        ]
        return D.from_splits(K, self.instance.m, uppers)

    def first_leaf(self) -> list[int | None]:
        out = []
        for X in range(self.instance.m):
            hits = np.flatnonzero(self.leaves[:, X])
            out.append(int(hits[0]) + 1 if hits.size else None)
        return out

    def summary(self) -> dict:
        lo, hi = slope_window(self.T)
        return {
            "config": {
                "p": list(self.instance.p),
                "K": self.instance.K,
                "m": self.instance.m,
                "T": self.T,
                "mode": self.mode,
                "eps_scale": self.schedule.eps_scale,
                "t0_scale": self.schedule.t0_scale,
                "master_seed": self.master_seed,
                "replicate": self.replicate,
                "shared_thresholds": self.shared_thresholds,
            },
            "explore_rounds": self.explore_rounds,
            "total_regret": float(self.cum_regret[-1]),
            "total_realised_reward": int(self.rewards.sum()),
            "total_collisions": int(self.cum_collisions[-1]),
            "first_leaf_round": self.first_leaf(),
            "slope_fit": {"t_lo": lo, "t_hi": hi, "slope": loglog_slope(self.cum_regret, lo, hi)},
        }


def slope_window(T: int, t_lo: int = 1000, t_hi: int = 100_000) -> tuple[int, int]:
    hi = min(t_hi, T)
    return min(t_lo, max(1, hi // 10)), hi


def loglog_slope(cum: np.ndarray, t_lo: int, t_hi: int, points: int = 50) -> float | None:
    """Least-squares slope of log(cum[t]) against log(t) on log-spaced rounds in
    [t_lo, t_hi]; None when the window is degenerate or the curve touches zero."""
    if t_hi <= t_lo or t_hi > len(cum):
        return None
    ts = np.unique(np.round(np.geomspace(t_lo, t_hi, points)).astype(np.int64))
    ys = cum[ts - 1]
    if np.any(ys <= 0):
        return None
    return float(np.polyfit(np.log(ts), np.log(ys), 1)[0])


# --- running ------------------------------------------------------------------


def _env_blocks(inst: Instance, mode: str, rng: np.random.Generator) -> Iterator[tuple[int, np.ndarray]]:
    t = 1
    while t <= inst.T:
        n = min(BLOCK, inst.T - t + 1)
        shape = (n, inst.m, inst.K) if mode == "full" else (n, inst.K)
        yield t, rng.random(shape)
        t += n


def _player_thresholds(master_seed, inst, replicate, shared):
    if shared:
        c = draw_thresholds(master_seed, inst.K, replicate)
        return [c] * inst.m
    return draw_thresholds(master_seed, inst.K, replicate, rows=inst.m)


def run_game(
    instance: Instance,
    mode: str,
    sched: Schedule,
    master_seed: int,
    *,
    replicate: int = 0,
    shared_thresholds: bool = True,
    engine: str = "fast",
) -> RunResult:
    """Play ``instance.T`` rounds.  ``shared_thresholds=False`` hands every player
    a private threshold vector (a deliberately broken beacon for diagnostics)."""
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if sched.horizon != instance.T:
        raise ConfigError("schedule horizon differs from instance T")
    if engine not in ("fast", "reference"):
        raise ConfigError(f"unknown engine {engine!r}")
    K, m, T = instance.K, instance.m, instance.T
    beacon = SharedBeacon.from_seed(master_seed, K, T, replicate)
    per_player = _player_thresholds(master_seed, instance, replicate, shared_thresholds)
    explore = t0(K, sched) if mode == "bandit" else 0
    out = dict(
        arms=np.zeros((T, m), np.int64),
        depths=np.zeros((T, m), np.int64),
        leaves=np.zeros((T, m), np.bool_),
        paths=np.zeros((T, m, max(K - 1, 1)), np.int64),
        rewards=np.zeros((T, m), np.int64),
        min_counts=np.zeros((T, m), np.int64),
    )
    env = substream(master_seed, "env", replicate)
    run = _run_fast if engine == "fast" else _run_reference
    run(instance, mode, sched, beacon, per_player, explore, env, out)
    if mode == "full":
        out["min_counts"][:] = np.arange(T)[:, None]
    return RunResult(instance, mode, sched, master_seed, replicate, explore,
                     shared_thresholds, **out)


def _run_fast(inst, mode, sched, beacon, per_player, explore, env, out):
    K, m = inst.K, inst.m
    p = np.asarray(inst.p)
    c = np.array([th.values for th in per_player])
    counts = np.zeros((m, K), np.int64)
    sums = np.zeros((m, K), np.int64)
    for t_start, u in _env_blocks(inst, mode, env):
        n = u.shape[0]
        sl = slice(t_start - 1, t_start - 1 + n)
        ts = range(t_start, t_start + n)
        arm = np.empty((n, m), np.int64)
        path = np.zeros((n, m, out["paths"].shape[2]), np.int64)
        views = (arm, out["depths"][sl], out["leaves"][sl], path, out["rewards"][sl])
        if mode == "full":
            eps = np.array([eps_full(t, m, K, sched) for t in ts])
            _kernels.full_block(t_start, u, p, c, eps, K, m, sums, *views)
        else:
            eps = np.array([eps_bandit(t, K, sched) if t > explore else 1.0 for t in ts])
            ranks = np.ascontiguousarray(beacon.ranks[sl], dtype=np.int64)
            _kernels.bandit_block(t_start, explore, u, p, c, eps, ranks, K, m, counts, sums,
                                  *views, out["min_counts"][sl])
        out["arms"][sl] = arm + 1
        out["paths"][sl] = path


def _run_reference(inst, mode, sched, beacon, per_player, explore, env, out):
    K, m = inst.K, inst.m
    players = [PlayerState(X, K, m) for X in range(1, m + 1)]
    beacons = [beacon.with_thresholds(c) for c in per_player]
    act = act_full if mode == "full" else act_bandit
    for t_start, u in _env_blocks(inst, mode, env):
        for s in range(u.shape[0]):
            t = t_start + s
            arms = []
            for X, state in enumerate(players):
                arm, node = act(state, t, beacons[X], sched)
                arms.append(arm)
                out["arms"][t - 1, X] = arm
                if node is None:
                    out["depths"][t - 1, X] = -1
                    out["min_counts"][t - 1, X] = -1
                    continue
                ds = D.decided_sets(node, m)
                out["depths"][t - 1, X] = node.depth
                out["leaves"][t - 1, X] = ds.is_leaf
                for d, upper in enumerate(D.splits_of(node)):
                    out["paths"][t - 1, X, d] = sum(1 << (a - 1) for a in upper)
                out["min_counts"][t - 1, X] = min(state.counts[a - 1] for a in ds.a_set | ds.b_set)
            if mode == "full":
                for X, state in enumerate(players):
                    rewards = [int(u[s, X, i] < inst.p[i]) for i in range(K)]
                    observe(state, t, rewards)
                    out["rewards"][t - 1, X] = rewards[arms[X] - 1]
            else:
                shared = [int(u[s, i] < inst.p[i]) for i in range(K)]
                for X, state in enumerate(players):
                    observe(state, t, Pull(arms[X], shared[arms[X] - 1]))
                    out["rewards"][t - 1, X] = shared[arms[X] - 1]


# --- diagnostics ----------------------------------------------------------------


def adjacency_matrix(run: RunResult) -> np.ndarray:
    """(T,) bool: every pair of players sits on tree-adjacent nodes.  Rounds in
    which some player is still exploring count as adjacent."""
    ok = np.ones(run.T, np.bool_)
    K1 = run.paths.shape[2]
    idx = np.arange(K1)[None, :]
    for X, Y in combinations(range(run.instance.m), 2):
        dx, dy = run.depths[:, X], run.depths[:, Y]
        live = (dx >= 0) & (dy >= 0)
        dmin = np.minimum(dx, dy)
        same_prefix = ((run.paths[:, X] == run.paths[:, Y]) | (idx >= dmin[:, None])).all(axis=1)
        adj = same_prefix & (np.abs(dx - dy) <= 1)
        ok &= adj | ~live
    return ok


def diagnostics(run: RunResult) -> dict:
    T, K, m = run.T, run.instance.K, run.instance.m
    adjacent = adjacency_matrix(run)
    bad = np.flatnonzero(~adjacent)
    ts = np.arange(1, T + 1)
    floor = ts // (2 * K)
    live = run.min_counts >= 0
    short = live & (run.min_counts < floor[:, None])
    ratio = None
    pos = live & (floor[:, None] > 0)
    if pos.any():
        ratio = float((run.min_counts[pos] / np.broadcast_to(floor[:, None], run.min_counts.shape)[pos]).min())
    pairs = {}
    for X, Y in combinations(range(m), 2):
        pairs[f"{X + 1}-{Y + 1}"] = int((run.arms[:, X] == run.arms[:, Y]).sum())
    hits = np.flatnonzero(run.collided)
    return {
        "adjacency_violations": int(bad.size),
        "first_adjacency_violation": int(bad[0]) + 1 if bad.size else None,
        "exploration_shortfalls": int(short.sum()),
        "min_count_ratio": ratio,
        "collision_rounds": int(hits.size),
        "first_collision": int(hits[0]) + 1 if hits.size else None,
        "collisions_by_pair": pairs,
        "collisions_during_exploration": int(run.collided[: run.explore_rounds].sum()),
    }
