"""Exact solvers: dynamic programming over coalition masks and Sandholm et
al.'s anytime search of the coalition structure graph."""

from __future__ import annotations

import math
import time
from typing import NamedTuple

import numpy as np
from numba import njit

from ._dd import dd_add, dd_add_float, dd_gt
from .core import AnytimeTrace, CharacteristicFunction, CoalitionStructure, cs_value

#: Largest ``n`` accepted by :func:`dp_solve` unless overridden (O(3**n) time).
DP_MAX_AGENTS = 22

BOUND_NOTE = "bound held at n from phase-1 completion until the whole graph is searched"


class DpTables(NamedTuple):
    """``t2[m]``: best value of partitioning mask ``m``; ``t1[m]``: first part
    of the best split, or ``m`` itself when keeping ``m`` whole is best."""

    t1: np.ndarray
    t2: np.ndarray


@njit(cache=True, nogil=True)
def _dp_kernel(values, n, t2_hi, t2_lo, t1):
    full = (np.int64(1) << n) - 1
    for m in range(1, full + 1):
        bh = values[m]
        bl = 0.0
        arg = m
        low = m & -m
        rest = m ^ low
        if rest:
            # proper submasks of rest; each unordered split seen once via `low`
            sub = (rest - 1) & rest
            while True:
                part = low | sub
                other = m ^ part
                ch, cl = dd_add(t2_hi[part], t2_lo[part], t2_hi[other], t2_lo[other])
                if dd_gt(ch, cl, bh, bl):
                    bh = ch
                    bl = cl
                    arg = part
                if sub == 0:
                    break
                sub = (sub - 1) & rest
        t2_hi[m] = bh
        t2_lo[m] = bl
        t1[m] = arg


def _reconstruct(t1: np.ndarray, full: int) -> list[int]:
    blocks, stack = [], [full]
    while stack:
        m = stack.pop()
        part = int(t1[m])
        if part == m:
            blocks.append(m)
        else:
            stack += [part, m ^ part]
    return blocks


def dp_solve(cf: CharacteristicFunction, *, max_agents: int = DP_MAX_AGENTS):
    """Optimal structure by DP over all masks in increasing order.

    Returns ``(structure, value, DpTables)``.  Table sums are carried in
    double-double precision, so ``t2`` holds correctly rounded values and
    agrees with :func:`~csfkit.core.cs_value` of the reconstruction.
    """
    n = cf.n
    if n > max_agents:
        raise ValueError(f"dynamic programming is limited to {max_agents} agents, got {n}")
    size = 1 << n
    t2_hi = np.zeros(size)
    t2_lo = np.zeros(size)
    t1 = np.zeros(size, dtype=np.int64)
    _dp_kernel(cf.values, n, t2_hi, t2_lo, t1)
    cs = CoalitionStructure.from_blocks(_reconstruct(t1, size - 1), n)
    return cs, cs_value(cs, cf), DpTables(t1, t2_hi + t2_lo)


class BoundedResult(NamedTuple):
    best: CoalitionStructure
    value: float
    bound_k: float
    nodes_searched: int
    trace: AnytimeTrace
    meta: dict


@njit(cache=True, nogil=True)
def _phase1_chunk(values, n, start, stop, best_hl, best_blocks, best_k):
    """Index 0 is the grand coalition; index t >= 1 pairs the t-th mask
    containing agent 1 (other than the grand coalition) with its complement."""
    full = (np.int64(1) << n) - 1
    top = np.int64(1) << (n - 1)
    for t in range(start, stop):
        if t == 0:
            hi = values[full]
            lo = 0.0
            a = full
            b = np.int64(0)
        else:
            a = top | (t - 1)
            b = full ^ a
            hi, lo = dd_add_float(values[a], 0.0, values[b])
        if dd_gt(hi, lo, best_hl[0], best_hl[1]):
            best_hl[0] = hi
            best_hl[1] = lo
            best_blocks[0] = a
            best_blocks[1] = b
            best_k[0] = 1 if t == 0 else 2


@njit(cache=True)
def _level_first(a, n, level):
    for i in range(n - level + 1):
        a[i] = 0
    for t in range(1, level):
        a[n - level + t] = t


@njit(cache=True)
def _level_next(a, n, level, top):
    """Advance ``a`` to the next restricted growth string with exactly
    ``level`` blocks in lexicographic order; False when exhausted."""
    top[0] = a[0]
    for i in range(1, n):
        top[i] = max(top[i - 1], a[i])
    for i in range(n - 1, 0, -1):
        v = a[i] + 1
        if v > top[i - 1] + 1 or v > level - 1:
            continue
        newmax = max(top[i - 1], v)
        need = level - 1 - newmax
        if need > n - 1 - i:
            continue
        a[i] = v
        for j in range(i + 1, n - need):
            a[j] = 0
        for t in range(need):
            a[n - need + t] = newmax + 1 + t
        return True
    return False


@njit(cache=True, nogil=True)
def _level_chunk(values, n, level, a, max_count, best_hl, best_blocks, best_k):
    top = np.empty(n, np.int64)
    masks = np.zeros(n, np.int64)
    count = 0
    while count < max_count:
        for b in range(level):
            masks[b] = 0
        for i in range(n):
            masks[a[i]] |= np.int64(1) << (n - 1 - i)
        hi = 0.0
        lo = 0.0
        for b in range(level):
            hi, lo = dd_add_float(hi, lo, values[masks[b]])
        if dd_gt(hi, lo, best_hl[0], best_hl[1]):
            best_hl[0] = hi
            best_hl[1] = lo
            best_blocks[:level] = masks[:level]
            best_k[0] = level
        count += 1
        if not _level_next(a, n, level, top):
            return count, True
    return count, False


def level_strings(n: int, level: int) -> list[tuple[int, ...]]:
    """All label vectors with exactly ``level`` blocks, in the order the
    anytime search visits them (1-based labels)."""
    a = np.zeros(n, dtype=np.int64)
    top = np.zeros(n, dtype=np.int64)
    _level_first(a, n, level)
    out = [tuple(int(x) + 1 for x in a)]
    while _level_next(a, n, level, top):
        out.append(tuple(int(x) + 1 for x in a))
    return out


def sandholm_anytime(cf: CharacteristicFunction, deadline: float | None = None, *,
                     phase1_only: bool = False, chunk: int = 4096) -> BoundedResult:
    """Anytime search with a worst-case bound.

    Phase 1 evaluates the grand coalition and every two-block structure
    (``2**(n-1)`` nodes), after which the optimum is at most ``n`` times the
    incumbent.  Phase 2 then sweeps levels ``n, n-1, ..., 3`` while time
    remains.  ``bound_k`` is ``inf`` if phase 1 was cut short, ``n`` after it,
    and ``1`` once every structure has been seen.  The deadline is polled
    every ``chunk`` structures.
    """
    if deadline is not None and deadline <= 0:
        raise ValueError("deadline must be positive")
    n = cf.n
    values = cf.values
    start = time.perf_counter()
    stop_at = None if deadline is None else start + deadline
    best_hl = np.array([-1.0, 0.0])
    best_blocks = np.zeros(n, dtype=np.int64)
    best_k = np.zeros(1, dtype=np.int64)
    trace = AnytimeTrace()
    nodes = 0
    levels_done: list[int] = []

    def out_of_time():
        return stop_at is not None and time.perf_counter() >= stop_at

    def incumbent():
        cs = CoalitionStructure.from_blocks(best_blocks[:best_k[0]].tolist(), n)
        return cs, cs_value(cs, cf)

    def record():
        cs, val = incumbent()
        trace.append(nodes, time.perf_counter() - start, val, cs)

    total1 = 1 << (n - 1)
    finished = True
    while nodes < total1:
        stop = min(nodes + chunk, total1)
        _phase1_chunk(values, n, nodes, stop, best_hl, best_blocks, best_k)
        nodes = stop
        if nodes < total1 and out_of_time():
            finished = False
            break
    if finished:
        levels_done += [1, 2] if n >= 2 else [1]
    record()

    if finished and not phase1_only:
        a = np.zeros(n, dtype=np.int64)
        for level in range(n, 2, -1):
            if out_of_time():
                finished = False
                break
            _level_first(a, n, level)
            while True:
                cnt, done = _level_chunk(values, n, level, a, chunk, best_hl, best_blocks, best_k)
                nodes += int(cnt)
                if done:
                    break
                if out_of_time():
                    finished = False
                    break
            if not finished:
                record()
                break
            levels_done.append(level)
            record()

    complete = finished and len(levels_done) == n
    if complete:
        bound = 1.0
    elif {1, 2} <= set(levels_done) or n == 1:
        bound = float(n)
    else:
        bound = math.inf
    cs, val = incumbent()
    meta = {"levels_completed": levels_done, "complete": complete, "bound_note": BOUND_NOTE}
    return BoundedResult(cs, val, bound, nodes, trace, meta)
