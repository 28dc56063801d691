"""GRASP for coalition structure formation.

Each iteration draws a greediness ``alpha``, builds a structure agent by agent
from a restricted candidate list, improves it by local search over the
five-operator neighbourhood and keeps it if it strictly beats the incumbent.

Random stream
-------------
A run owns one ``numpy.random.Generator`` (PCG64).  Per iteration it is
consumed in this order:

1. ``alpha`` (one uniform), unless a fixed value is configured;
2. ``n`` uniforms, one per construction step, each picking the RCL member;
3. blocks of ``LS_CHUNK`` uniforms for local search, one per step; a uniform
   breaks ties between equally good improving moves.

The compiled kernels receive these draws as arrays and hold no RNG state.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .core import AnytimeTrace, CharacteristicFunction, CoalitionStructure, cs_value
from .neighborhood import (EXCHANGE, SPLIT, apply_move, block_sizes, blocks_array,
                           count_moves, decode_move, is_redundant, move_delta)

RNG_FAMILY = "numpy.PCG64"
LS_CHUNK = 32
PIVOT_RULES = ("best", "first")


@dataclass(frozen=True)
class GraspParams:
    """Run configuration.

    ``alpha=None`` draws a fresh greediness from U(0, 1) every iteration;
    a float in [0, 1] fixes it.  ``deadline`` is a wall-clock budget in
    seconds; ``target`` stops the run once the incumbent reaches it.
    """

    maxiter: int = 20
    alpha: float | None = None
    pivot_rule: str = "best"
    seed: int = 0
    deadline: float | None = None
    target: float | None = None

    def __post_init__(self):
        if self.maxiter < 1:
            raise ValueError(f"maxiter must be >= 1, got {self.maxiter}")
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.pivot_rule not in PIVOT_RULES:
            raise ValueError(f"pivot_rule must be one of {PIVOT_RULES}, got {self.pivot_rule!r}")
        if self.deadline is not None and self.deadline <= 0:
            raise ValueError("deadline must be positive")


class SolverResult(NamedTuple):
    structure: CoalitionStructure
    value: float
    trace: AnytimeTrace
    meta: dict


@njit(cache=True)
def _construct_kernel(values, n, alpha, draws, blocks, steps):
    cap = n * (n + 1)
    cand_val = np.empty(cap)
    cand_bit = np.empty(cap, np.int64)
    cand_blk = np.empty(cap, np.int64)
    k = 0
    assigned = 0
    cur = 0.0
    for step in range(n):
        c = 0
        for ai in range(n):
            bit = np.int64(1) << (n - 1 - ai)
            if assigned & bit:
                continue
            for b in range(k):
                cand_val[c] = cur + (values[blocks[b] | bit] - values[blocks[b]])
                cand_bit[c] = bit
                cand_blk[c] = b
                c += 1
            cand_val[c] = cur + values[bit]
            cand_bit[c] = bit
            cand_blk[c] = k
            c += 1
        lo = cand_val[0]
        hi = cand_val[0]
        for t in range(1, c):
            lo = min(lo, cand_val[t])
            hi = max(hi, cand_val[t])
        if alpha >= 1.0:
            thr = hi
        else:
            thr = min(lo + alpha * (hi - lo), hi)
        size = 0
        for t in range(c):
            if cand_val[t] >= thr:
                size += 1
        pick = min(int(draws[step] * size), size - 1)
        chosen = -1
        for t in range(c):
            if cand_val[t] >= thr:
                if pick == 0:
                    chosen = t
                    break
                pick -= 1
        b = cand_blk[chosen]
        if b == k:
            blocks[k] = cand_bit[chosen]
            k += 1
        else:
            blocks[b] |= cand_bit[chosen]
        assigned |= cand_bit[chosen]
        cur = cand_val[chosen]
        steps[step, 0] = lo
        steps[step, 1] = hi
        steps[step, 2] = thr
        steps[step, 3] = cur
    return k


@njit(cache=True)
def _local_search_kernel(values, blocks, k, first_improvement, draws):
    """Run up to ``len(draws)`` improving moves in place.

    Returns ``(k, steps_taken, converged)``.
    """
    n = blocks.shape[0]
    sizes = np.zeros(n, np.int64)
    counts = np.zeros(5, np.int64)
    for step in range(draws.shape[0]):
        block_sizes(blocks, k, sizes)
        count_moves(sizes, k, counts)
        best = 0.0
        ties = 0
        bk = -1
        br = -1
        for kind in range(SPLIT, EXCHANGE + 1):
            for r in range(counts[kind]):
                i, j, x, y = decode_move(blocks, sizes, k, kind, r)
                if is_redundant(sizes, kind, i, j):
                    continue
                d = move_delta(values, blocks, kind, i, j, x, y)
                if d > best:
                    best = d
                    ties = 1
                    bk = kind
                    br = r
                elif d == best and ties > 0:
                    ties += 1
                if first_improvement and ties > 0:
                    break
            if first_improvement and ties > 0:
                break
        if ties == 0:
            return k, step, True
        if ties > 1:
            # second pass to locate the chosen tie
            pick = min(int(draws[step] * ties), ties - 1)
            found = False
            for kind in range(SPLIT, EXCHANGE + 1):
                for r in range(counts[kind]):
                    i, j, x, y = decode_move(blocks, sizes, k, kind, r)
                    if is_redundant(sizes, kind, i, j):
                        continue
                    if move_delta(values, blocks, kind, i, j, x, y) == best:
                        if pick == 0:
                            bk = kind
                            br = r
                            found = True
                            break
                        pick -= 1
                if found:
                    break
        i, j, x, y = decode_move(blocks, sizes, k, bk, br)
        k = apply_move(blocks, k, bk, i, j, x, y)
    return k, draws.shape[0], False


def _structure(blocks: np.ndarray, k: int, n: int) -> CoalitionStructure:
    return CoalitionStructure.from_blocks(blocks[:k].tolist(), n)


def _generator(rng, seed) -> np.random.Generator:
    if rng is None:
        return np.random.Generator(np.random.PCG64(seed))
    return rng


def construct(cf: CharacteristicFunction, alpha: float, rng: np.random.Generator,
              *, return_steps: bool = False):
    """Randomised greedy construction.

    At every step all placements of every unassigned agent are scored by the
    partial structure value; a candidate enters the RCL when its value is at
    least ``min + alpha * (max - min)``.  With ``return_steps`` the per-step
    ``(min, max, threshold, chosen value)`` rows are returned as well.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    n = cf.n
    blocks = np.zeros(n, dtype=np.int64)
    steps = np.zeros((n, 4))
    k = _construct_kernel(cf.values, n, float(alpha), rng.random(n), blocks, steps)
    cs = _structure(blocks, k, n)
    return (cs, steps) if return_steps else cs


def _search_from(cf, blocks, k, first, rng, stop_at=None):
    """Local search on ``blocks`` in place; returns ``(k, converged)``."""
    while True:
        k, _, done = _local_search_kernel(cf.values, blocks, k, first, rng.random(LS_CHUNK))
        if done:
            return k, True
        if stop_at is not None and time.perf_counter() >= stop_at:
            return k, False


def local_search(start: CoalitionStructure, cf: CharacteristicFunction,
                 pivot_rule: str = "best", rng: np.random.Generator | None = None) -> CoalitionStructure:
    """Climb by strictly improving neighbours until none is left.

    ``"best"`` takes a best neighbour (ties uniformly at random), ``"first"``
    the first improving one in split, merge, shift, exchange order.
    """
    if start.n != cf.n:
        raise ValueError("structure and characteristic function disagree on n")
    if pivot_rule not in PIVOT_RULES:
        raise ValueError(f"pivot_rule must be one of {PIVOT_RULES}, got {pivot_rule!r}")
    rng = _generator(rng, 0)
    blocks = blocks_array(start)
    k, _ = _search_from(cf, blocks, start.k, pivot_rule == "first", rng)
    return _structure(blocks, k, cf.n)


def grasp_csf(cf: CharacteristicFunction, params: GraspParams = GraspParams(),
              rng: np.random.Generator | None = None) -> SolverResult:
    """Run GRASP and return the incumbent, its value and a per-iteration trace.

    The deadline is checked between iterations and between local-search
    chunks.  When it expires mid-search the partially improved structure is
    still a feasible candidate and is offered to the incumbent before
    stopping.
    """
    rng = _generator(rng, params.seed)
    n = cf.n
    first = params.pivot_rule == "first"
    trace = AnytimeTrace()
    best_cs = None
    best_val = -np.inf
    start = time.perf_counter()
    stop_at = None if params.deadline is None else start + params.deadline
    blocks = np.zeros(n, dtype=np.int64)
    steps = np.zeros((n, 4))
    completed = 0
    for it in range(1, params.maxiter + 1):
        alpha = rng.random() if params.alpha is None else params.alpha
        blocks[:] = 0
        k = _construct_kernel(cf.values, n, float(alpha), rng.random(n), blocks, steps)
        k, converged = _search_from(cf, blocks, k, first, rng, stop_at)
        cs = _structure(blocks, k, n)
        val = cs_value(cs, cf)
        if val > best_val:
            best_cs, best_val = cs, val
        completed = it
        trace.append(it, time.perf_counter() - start, best_val, best_cs)
        if not converged:
            break
        if params.target is not None and best_val >= params.target:
            break
        if stop_at is not None and time.perf_counter() >= stop_at:
            break
    meta = {
        "rng": RNG_FAMILY,
        "seed": params.seed,
        "maxiter": params.maxiter,
        "alpha": "uniform(0,1) per iteration" if params.alpha is None else params.alpha,
        "pivot_rule": params.pivot_rule,
        "iterations": completed,
    }
    return SolverResult(best_cs, best_val, trace, meta)
