"""Per-player decision rules, shared randomness and the epsilon / exploration schedules."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .cells import CellQuery, Thresholds, assign_cell
from .coloring import ArmOrder, color_of
from .dop import Dop
from .errors import InvalidFeedback, InvalidParameter

DEFAULT_ESTIMATE = 0.5


def substream(master_seed: int, name: str, replicate: int = 0) -> np.random.Generator:
    """Independent generator for a named consumer of randomness."""
    seq = np.random.SeedSequence([int(master_seed), int(replicate), zlib.crc32(name.encode())])
    return np.random.default_rng(seq)


@dataclass(frozen=True)
class Schedule:
    horizon: int
    eps_scale: float = 1.0
    t0_scale: float = 1.0

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidParameter(f"horizon must be >= 1, got {self.horizon}")
        if not self.eps_scale > 0:
            raise InvalidParameter("eps_scale must be > 0")
        if not self.t0_scale >= 0:
            raise InvalidParameter("t0_scale must be >= 0")


def eps_full(t: int, m: int, K: int, sched: Schedule) -> float:
    return sched.eps_scale * 10.0 * math.sqrt(math.log(m * K * sched.horizon) / t)


def eps_bandit(t: int, K: int, sched: Schedule) -> float:
    return sched.eps_scale * 10000.0 * math.sqrt(K**3 * math.log(K * sched.horizon) / t)


def t0(K: int, sched: Schedule) -> int:
    """Length of the round-robin exploration phase."""
    return max(0, math.ceil(sched.t0_scale * 1e9 * K * math.log(K * sched.horizon)))


def explore_arm(X: int, t: int, K: int) -> int:
    return (X + t - 1) % K + 1


@dataclass(frozen=True)
class SharedBeacon:
    """Public randomness read identically by every player."""

    thresholds: Thresholds
    ranks: np.ndarray  # (horizon, K); ranks[t - 1, a - 1] is the rank of arm a under pi_t
    master_seed: int
    replicate: int = 0

    @classmethod
    def from_seed(cls, master_seed: int, K: int, horizon: int, replicate: int = 0) -> "SharedBeacon":
        return cls(
            draw_thresholds(master_seed, K, replicate),
            draw_ranks(master_seed, K, horizon, replicate),
            master_seed,
            replicate,
        )

    def with_thresholds(self, thresholds: Thresholds) -> "SharedBeacon":
        return SharedBeacon(thresholds, self.ranks, self.master_seed, self.replicate)

    def perm(self, t: int) -> ArmOrder:
        return ArmOrder(tuple(self.ranks[t - 1]))


def draw_thresholds(master_seed: int, K: int, replicate: int = 0, rows: int = 1):
    """C(0..K-1) i.i.d. uniform on [0, 1/K].  ``rows > 1`` gives one vector per
    player (fault injection); row 0 always equals the shared draw."""
    u = substream(master_seed, "beacon-c", replicate).random((rows, K)) / K
    if rows == 1:
        return Thresholds(tuple(u[0]))
    return [Thresholds(tuple(r)) for r in u]


def draw_ranks(master_seed: int, K: int, horizon: int, replicate: int = 0) -> np.ndarray:
    keys = substream(master_seed, "beacon-perm", replicate).random((horizon, K))
    order = np.argsort(keys, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(1, K + 1)[None, :].repeat(horizon, 0), axis=1)
    return ranks.astype(np.int16)


@dataclass
class PlayerState:
    player_id: int
    K: int
    m: int
    counts: list[int] = field(default_factory=list)
    reward_sums: list[int] = field(default_factory=list)
    mode: str = "partition"

    def __post_init__(self):
        if not 1 <= self.player_id <= self.m <= self.K:
            raise InvalidParameter("need 1 <= player_id <= m <= K")
        if not self.counts:
            self.counts = [0] * self.K
            self.reward_sums = [0] * self.K

    def estimates(self) -> tuple[float, ...]:
        return tuple(
            r / n if n else DEFAULT_ESTIMATE for r, n in zip(self.reward_sums, self.counts)
        )


def act_full(state: PlayerState, t: int, beacon: SharedBeacon, sched: Schedule) -> tuple[int, Dop]:
    eps = eps_full(t, state.m, state.K, sched)
    node = assign_cell(CellQuery(state.estimates(), eps, state.m), beacon.thresholds)
    return color_of(node, state.m)[state.player_id - 1], node


def act_bandit(
    state: PlayerState, t: int, beacon: SharedBeacon, sched: Schedule
) -> tuple[int, Dop | None]:
    if t <= t0(state.K, sched):
        state.mode = "explore"
        return explore_arm(state.player_id, t, state.K), None
    state.mode = "partition"
    eps = eps_bandit(t, state.K, sched)
    node = assign_cell(CellQuery(state.estimates(), eps, state.m), beacon.thresholds)
    return color_of(node, state.m, beacon.perm(t))[state.player_id - 1], node


class Pull(NamedTuple):
    """Bandit feedback: the pulled arm and its reward."""

    arm: int
    reward: int


def observe(state: PlayerState, t: int, feedback) -> PlayerState:
    """Record feedback: a :class:`Pull` (bandit) or a length-K reward vector
    (full information)."""
    if isinstance(feedback, Pull):
        _check_reward(feedback.reward)
        if not 1 <= feedback.arm <= state.K:
            raise InvalidFeedback(f"arm {feedback.arm} outside 1..{state.K}")
        state.counts[feedback.arm - 1] += 1
        state.reward_sums[feedback.arm - 1] += int(feedback.reward)
        return state
    rewards: Sequence = list(feedback)
    if len(rewards) != state.K:
        raise InvalidFeedback(f"expected {state.K} rewards, got {len(rewards)}")
    for r in rewards:
        _check_reward(r)
    for i, r in enumerate(rewards):
        state.counts[i] += 1
        state.reward_sums[i] += int(r)
    return state


def _check_reward(r) -> None:
    if r not in (0, 1):
        raise InvalidFeedback(f"reward {r!r} is not in {{0, 1}}")
