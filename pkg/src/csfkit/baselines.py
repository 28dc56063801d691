"""Simulated annealing over coalition structures."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._dd import dd_add_float, dd_gt
from .core import AnytimeTrace, CharacteristicFunction, CoalitionStructure, cs_value
from .neighborhood import (ALL_KINDS, OperatorKind, apply_move, block_sizes, blocks_array,
                           count_moves, decode_move, move_delta)
from .search import RNG_FAMILY, SolverResult

PROPOSALS = ("per-operator", "uniform")


@dataclass(frozen=True)
class SaParams:
    """Annealing configuration.

    ``initial_temp=None`` uses the spread of the coalition values (1.0 for a
    constant table).  ``proposal="per-operator"`` first picks an operator
    uniformly among those with at least one move, then a move of it;
    ``"uniform"`` picks uniformly among all moves of the enabled operators.
    """

    initial_temp: float | None = None
    cooling_alpha: float = 0.95
    steps: int = 10_000
    operators: tuple[OperatorKind, ...] = field(default=ALL_KINDS)
    proposal: str = "per-operator"
    seed: int = 0
    deadline: float | None = None
    trace_every: int = 100

    def __post_init__(self):
        if self.initial_temp is not None and not self.initial_temp > 0:
            raise ValueError("initial_temp must be positive")
        if not 0.0 < self.cooling_alpha < 1.0:
            raise ValueError("cooling_alpha must lie in (0, 1)")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.operators:
            raise ValueError("at least one operator is required")
        object.__setattr__(self, "operators", tuple(OperatorKind(k) for k in self.operators))
        if self.proposal not in PROPOSALS:
            raise ValueError(f"proposal must be one of {PROPOSALS}")
        if self.deadline is not None and self.deadline <= 0:
            raise ValueError("deadline must be positive")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")


def acceptance_probability(delta: float, t: float) -> float:
    if delta >= 0:
        return 1.0
    return math.exp(delta / t) if t > 0 else 0.0


@njit(cache=True, inline="always")
def _accept(delta, t, u):
    if delta >= 0.0:
        return True
    if t <= 0.0:
        return False
    return u < math.exp(delta / t)


@njit(cache=True)
def _acceptance_count(delta, t, draws):
    c = 0
    for u in draws:
        if _accept(delta, t, u):
            c += 1
    return c


def acceptance_trials(delta: float, t: float, trials: int, seed: int = 0) -> float:
    """Empirical acceptance frequency of the annealing rule at fixed ``delta``, ``t``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return _acceptance_count(float(delta), float(t), rng.random(trials)) / trials


@njit(cache=True)
def _dd_value(values, blocks, k):
    hi = 0.0
    lo = 0.0
    for b in range(k):
        hi, lo = dd_add_float(hi, lo, values[blocks[b]])
    return hi, lo


@njit(cache=True, nogil=True)
def _sa_chunk(values, blocks, k, t, cooling, enabled, uniform, draws,
              best_hl, best_blocks, best_k):
    n = blocks.shape[0]
    sizes = np.zeros(n, np.int64)
    counts = np.zeros(5, np.int64)
    for s in range(draws.shape[0]):
        block_sizes(blocks, k, sizes)
        count_moves(sizes, k, counts)
        kind = -1
        r = 0
        if uniform:
            total = 0
            for q in range(5):
                if enabled[q]:
                    total += counts[q]
            if total > 0:
                g = min(np.int64(draws[s, 0] * total), total - 1)
                for q in range(5):
                    if enabled[q]:
                        if g < counts[q]:
                            kind = q
                            r = g
                            break
                        g -= counts[q]
        else:
            avail = 0
            for q in range(5):
                if enabled[q] and counts[q] > 0:
                    avail += 1
            if avail > 0:
                pick = min(int(draws[s, 0] * avail), avail - 1)
                for q in range(5):
                    if enabled[q] and counts[q] > 0:
                        if pick == 0:
                            kind = q
                            break
                        pick -= 1
                r = min(np.int64(draws[s, 1] * counts[kind]), counts[kind] - 1)
        if kind >= 0:
            i, j, x, y = decode_move(blocks, sizes, k, kind, r)
            delta = move_delta(values, blocks, kind, i, j, x, y)
            if _accept(delta, t, draws[s, 2]):
                k = apply_move(blocks, k, kind, i, j, x, y)
                hi, lo = _dd_value(values, blocks, k)
                if dd_gt(hi, lo, best_hl[0], best_hl[1]):
                    best_hl[0] = hi
                    best_hl[1] = lo
                    best_blocks[:k] = blocks[:k]
                    best_k[0] = k
        t *= cooling
    return k, t


def random_structure(n: int, rng: np.random.Generator) -> CoalitionStructure:
    """Restricted growth string with each digit uniform over its allowed range."""
    labels = [1]
    top = 1
    for _ in range(1, n):
        d = int(rng.integers(1, top + 2))
        labels.append(d)
        top = max(top, d)
    return CoalitionStructure(tuple(labels))


def default_temperature(cf: CharacteristicFunction) -> float:
    body = cf.values[1:]
    spread = float(body.max() - body.min())
    return spread if spread > 0 else 1.0


def simulated_annealing(cf: CharacteristicFunction, params: SaParams = SaParams(),
                        rng: np.random.Generator | None = None) -> SolverResult:
    """Anneal from a random structure, returning the best structure visited.

    Each step consumes three uniforms (operator, move, acceptance); the
    temperature is multiplied by ``cooling_alpha`` after every step.  The
    trace gets a record every ``trace_every`` steps and at the end; the
    deadline is checked at the same points.
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(params.seed))
    n = cf.n
    t0 = default_temperature(cf) if params.initial_temp is None else params.initial_temp
    enabled = np.zeros(5, dtype=np.bool_)
    for kind in params.operators:
        enabled[int(kind)] = True

    start = time.perf_counter()
    stop_at = None if params.deadline is None else start + params.deadline
    cs0 = random_structure(n, rng)
    blocks = blocks_array(cs0)
    k = cs0.k
    best_blocks = blocks.copy()
    best_k = np.array([k], dtype=np.int64)
    best_hl = np.array(_dd_value(cf.values, blocks, k))
    t = float(t0)
    trace = AnytimeTrace()
    done = 0
    while done < params.steps:
        m = min(params.trace_every, params.steps - done)
        k, t = _sa_chunk(cf.values, blocks, k, t, params.cooling_alpha, enabled,
                         params.proposal == "uniform", rng.random((m, 3)),
                         best_hl, best_blocks, best_k)
        done += m
        best = CoalitionStructure.from_blocks(best_blocks[:best_k[0]].tolist(), n)
        trace.append(done, time.perf_counter() - start, cs_value(best, cf), best)
        if stop_at is not None and time.perf_counter() >= stop_at:
            break
    best = trace[-1].best_structure
    meta = {
        "rng": RNG_FAMILY,
        "seed": params.seed,
        "initial_temp": t0,
        "cooling_alpha": params.cooling_alpha,
        "steps": done,
        "operators": [kind.name.lower() for kind in params.operators],
        "proposal": params.proposal,
        "final_temp": t,
    }
    return SolverResult(best, trace[-1].best_value, trace, meta)
