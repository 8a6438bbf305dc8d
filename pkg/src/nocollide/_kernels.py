"""Compiled round loops for the game simulator.

Nodes are encoded by their split path: ``splits[d]`` is the bitmask
(bit a-1 for arm a) of the upper set chosen at depth d.  Every floating
point expression mirrors the reference code in :mod:`nocollide.cells` so
both engines pick identical arms.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _sort_block(x, bmask, K, buf):
    ell = 0
    for a in range(K):
        if (bmask >> a) & 1:
            pos = ell
            while pos > 0 and x[buf[pos - 1]] < x[a]:
                buf[pos] = buf[pos - 1]
                pos -= 1
            buf[pos] = a
            ell += 1
    return ell


@njit(cache=True)
def _descend(amask, na, bmask, nb, upper, nu, m):
    if na + nu <= m:
        amask |= upper
        na += nu
        if na == m:
            return amask, na, 0, 0
        return amask, na, bmask & ~upper, nb - nu
    return amask, na, upper, nu


@njit(cache=True)
def _root(K, m):
    full = (1 << K) - 1
    if K <= m:
        return full, K, 0, 0
    return 0, 0, full, K


@njit(cache=True)
def assign_path(x, c, eps, K, m, splits, delta, buf):
    """Returns (depth, A mask, B mask); writes the split path into ``splits``."""
    amask, na, bmask, nb = _root(K, m)
    depth = 0
    while bmask != 0:
        ell = _sort_block(x, bmask, K, buf)
        thr = c[depth] * (x[buf[0]] - x[buf[ell - 1]])
        best = np.inf
        for j in range(ell - 1):
            v = abs((x[buf[j]] - x[buf[j + 1]]) - thr)
            if v < best:
                best = v
        delta[depth] = best
        for g in range(depth + 1):
            if delta[g] <= 6.0 * (depth - g + 1) * eps:
                return depth, amask, bmask
        upper = 0
        nu = 0
        found = False
        for j in range(ell - 1):
            upper |= 1 << buf[j]
            nu += 1
            if x[buf[j]] - x[buf[j + 1]] >= thr:
                found = True
                break
        if not found:
            best_gap = -np.inf
            best_j = 0
            for j in range(ell - 1):
                gap = x[buf[j]] - x[buf[j + 1]]
                if gap > best_gap:
                    best_gap = gap
                    best_j = j
            upper = 0
            for j in range(best_j + 1):
                upper |= 1 << buf[j]
            nu = best_j + 1
        splits[depth] = upper
        amask, na, bmask, nb = _descend(amask, na, bmask, nb, upper, nu, m)
        depth += 1
    return depth, amask, bmask


@njit(cache=True)
def _feas_first(amask, na, bmask, by_rank, m, K):
    g = amask
    need = m - na
    for r in range(K):
        if need == 0:
            break
        a = by_rank[r]
        if (bmask >> a) & 1:
            g |= 1 << a
            need -= 1
    return g


@njit(cache=True)
def color_path(splits, depth, by_rank, K, m, slots):
    """Fill ``slots`` with the collision-robust color (0-based arms).
    ``by_rank`` lists arms from smallest to largest rank."""
    amask, na, bmask, nb = _root(K, m)
    g = _feas_first(amask, na, bmask, by_rank, m, K)
    s = 0
    for r in range(K):
        a = by_rank[r]
        if (g >> a) & 1:
            slots[s] = a
            s += 1
    for d in range(depth):
        upper = splits[d]
        nu = 0
        for a in range(K):
            nu += (upper >> a) & 1
        amask, na, bmask, nb = _descend(amask, na, bmask, nb, upper, nu, m)
        g = _feas_first(amask, na, bmask, by_rank, m, K)
        kept = 0
        for i in range(m):
            if (g >> slots[i]) & 1:
                kept |= 1 << slots[i]
            else:
                slots[i] = -1
        free = g & ~kept
        i = 0
        for r in range(K):
            a = by_rank[r]
            if (free >> a) & 1:
                while slots[i] != -1:
                    i += 1
                slots[i] = a
                i += 1


@njit(cache=True)
def _record_node(s, X, depth, amask, bmask, splits, depth_out, leaf_out, path_out):
    depth_out[s, X] = depth
    leaf_out[s, X] = bmask == 0
    for d in range(depth):
        path_out[s, X, d] = splits[d]
    return amask | bmask


@njit(cache=True)
def full_block(t_start, u, p, c, eps, K, m, sums,
               arm_out, depth_out, leaf_out, path_out, reward_out):
    """Full information: each player sees an independent reward for every arm.
    ``sums`` (m, K) carries reward totals between blocks."""
    x = np.empty(K)
    splits = np.zeros(K, np.int64)
    delta = np.empty(K)
    buf = np.empty(K, np.int64)
    slots = np.empty(m, np.int64)
    by_rank = np.arange(K)
    for s in range(u.shape[0]):
        t = t_start + s
        for X in range(m):
            for i in range(K):
                x[i] = 0.5 if t == 1 else sums[X, i] / (t - 1)
            depth, amask, bmask = assign_path(x, c[X], eps[s], K, m, splits, delta, buf)
            _record_node(s, X, depth, amask, bmask, splits, depth_out, leaf_out, path_out)
            color_path(splits, depth, by_rank, K, m, slots)
            arm_out[s, X] = slots[X]
        for X in range(m):
            for i in range(K):
                r = 1 if u[s, X, i] < p[i] else 0
                sums[X, i] += r
                if i == arm_out[s, X]:
                    reward_out[s, X] = r


@njit(cache=True)
def bandit_block(t_start, t0, u, p, c, eps, ranks, K, m, counts, sums,
                 arm_out, depth_out, leaf_out, path_out, reward_out, mincount_out):
    """Bandit feedback: one shared realisation per arm and round; players see
    only the arm they pulled.  ``ranks`` (block, K) holds 1-based ranks of pi_t."""
    x = np.empty(K)
    splits = np.zeros(K, np.int64)
    delta = np.empty(K)
    buf = np.empty(K, np.int64)
    slots = np.empty(m, np.int64)
    by_rank = np.empty(K, np.int64)
    for s in range(u.shape[0]):
        t = t_start + s
        if t > t0:
            for a in range(K):
                by_rank[ranks[s, a] - 1] = a
        for X in range(m):
            if t <= t0:
                arm_out[s, X] = (X + 1 + t - 1) % K
                depth_out[s, X] = -1
                leaf_out[s, X] = False
                mincount_out[s, X] = -1
                continue
            for i in range(K):
                n = counts[X, i]
                x[i] = sums[X, i] / n if n > 0 else 0.5
            depth, amask, bmask = assign_path(x, c[X], eps[s], K, m, splits, delta, buf)
            live = _record_node(s, X, depth, amask, bmask, splits, depth_out, leaf_out, path_out)
            low = -1
            for i in range(K):
                if (live >> i) & 1 and (low < 0 or counts[X, i] < low):
                    low = counts[X, i]
            mincount_out[s, X] = low
            color_path(splits, depth, by_rank, K, m, slots)
            arm_out[s, X] = slots[X]
        for X in range(m):
            a = arm_out[s, X]
            r = 1 if u[s, a] < p[a] else 0
            counts[X, a] += 1
            sums[X, a] += r
            reward_out[s, X] = r
