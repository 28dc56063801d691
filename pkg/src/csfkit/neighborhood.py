"""Structure-transforming operators and the construction-phase refinement.

Two layers live here.  The public functions work on
:class:`~csfkit.core.CoalitionStructure` objects and return deduplicated
sets; they are written for clarity and serve as the reference for the
compiled move primitives below, which the search kernels use.

Compiled move model
-------------------
A structure is an ``int64`` array of block masks plus a block count ``k``.
Each operator kind owns a contiguous range of move indices.  Within a kind
every index yields a distinct structure:

* split: block ``B`` with ``s >= 2`` members has ``2**(s-1) - 1`` moves; the
  part containing the lowest bit of ``B`` is ``low | deposit(r, B ^ low)``.
* merge: unordered block pairs.
* shift: agent of a block with ``s >= 2`` members into any other block.
* exchange: one agent each way between two blocks; pairs of singletons are
  skipped (identity) and for two 2-blocks only swaps of the first block's
  lowest agent are kept (the other two swaps repeat them).
* extract: agent of a block with ``s >= 2`` members into a new singleton;
  a 2-block has a single extract.

Across kinds two overlaps remain: every extract equals the split that peels
off the same agent, and an exchange between a 2-block and a singleton equals
a shift.  :func:`is_redundant` flags those moves so a scan over the rest sees
each distinct neighbour exactly once.
"""

from __future__ import annotations

import enum
from itertools import combinations
from typing import Iterator

import numpy as np
from numba import njit

from .core import CoalitionStructure, PartialStructure


class OperatorKind(enum.IntEnum):
    SPLIT = 0
    MERGE = 1
    SHIFT = 2
    EXCHANGE = 3
    EXTRACT = 4


ALL_KINDS = tuple(OperatorKind)


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low)
        mask ^= low
    return out


def _raw_moves(cs: CoalitionStructure, kind: OperatorKind) -> Iterator[list[int]]:
    blocks = list(cs.blocks)
    k = len(blocks)
    if kind is OperatorKind.SPLIT:
        for i, b in enumerate(blocks):
            members = _bits(b)
            rest = blocks[:i] + blocks[i + 1:]
            for r in range(1, len(members)):
                for part in combinations(members, r):
                    p = sum(part)
                    yield rest + [p, b ^ p]
    elif kind is OperatorKind.MERGE:
        for i, j in combinations(range(k), 2):
            rest = [b for t, b in enumerate(blocks) if t not in (i, j)]
            yield rest + [blocks[i] | blocks[j]]
    elif kind is OperatorKind.SHIFT:
        for i in range(k):
            if len(_bits(blocks[i])) < 2:
                continue
            for a in _bits(blocks[i]):
                for j in range(k):
                    if j != i:
                        new = list(blocks)
                        new[i] ^= a
                        new[j] |= a
                        yield new
    elif kind is OperatorKind.EXCHANGE:
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                for a in _bits(blocks[i]):
                    for b in _bits(blocks[j]):
                        new = list(blocks)
                        new[i] = new[i] ^ a | b
                        new[j] = new[j] ^ b | a
                        yield new
    elif kind is OperatorKind.EXTRACT:
        for i in range(k):
            if len(_bits(blocks[i])) < 2:
                continue
            for a in _bits(blocks[i]):
                new = list(blocks)
                new[i] ^= a
                yield new + [a]
    else:  # pragma: no cover
        raise ValueError(kind)


def apply_operator(cs: CoalitionStructure, kind: OperatorKind) -> set[CoalitionStructure]:
    """All distinct structures one application of ``kind`` reaches from ``cs``."""
    kind = OperatorKind(kind)
    out = {CoalitionStructure.from_blocks(b, cs.n) for b in _raw_moves(cs, kind)}
    out.discard(cs)
    return out


def iter_neighborhood(cs: CoalitionStructure) -> Iterator[CoalitionStructure]:
    """Lazily yield each distinct neighbour of ``cs`` once."""
    seen = {cs}
    for kind in ALL_KINDS:
        for blocks in _raw_moves(cs, kind):
            s = CoalitionStructure.from_blocks(blocks, cs.n)
            if s not in seen:
                seen.add(s)
                yield s


def neighborhood(cs: CoalitionStructure) -> set[CoalitionStructure]:
    return set(iter_neighborhood(cs))


def refinements(p: PartialStructure, n: int | None = None) -> set[PartialStructure]:
    """Every way to place one more agent: into an existing block or alone.

    All unassigned agents are considered, giving ``u * (b + 1)`` results.
    Blocks of the results are ordered by their first member.
    """
    n = p.n if n is None else n
    full = (1 << n) - 1
    free = full & ~p.assigned
    if not free:
        raise ValueError("partial structure already covers every agent")
    out = set()
    for a in _bits(free):
        for i in range(len(p.blocks)):
            blocks = list(p.blocks)
            blocks[i] |= a
            out.add(PartialStructure(n, p.assigned | a, tuple(sorted(blocks, reverse=True))))
        out.add(PartialStructure(n, p.assigned | a, tuple(sorted(p.blocks + (a,), reverse=True))))
    return out


# ---------------------------------------------------------------------------
# compiled move primitives

SPLIT, MERGE, SHIFT, EXCHANGE, EXTRACT = range(5)


@njit(cache=True, inline="always")
def popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True, inline="always")
def nth_bit(mask, t):
    for _ in range(t):
        mask &= mask - 1
    return mask & -mask


@njit(cache=True, inline="always")
def deposit(p, mask):
    # scatter the low bits of p onto the set bits of mask
    out = 0
    while mask:
        low = mask & -mask
        if p & 1:
            out |= low
        p >>= 1
        mask ^= low
    return out


@njit(cache=True)
def block_sizes(blocks, k, sizes):
    for i in range(k):
        sizes[i] = popcount(blocks[i])


@njit(cache=True)
def count_moves(sizes, k, counts):
    """Fill ``counts[kind]`` with the number of distinct moves per kind."""
    counts[:] = 0
    for i in range(k):
        s = sizes[i]
        if s >= 2:
            counts[SPLIT] += (np.int64(1) << (s - 1)) - 1
            counts[SHIFT] += s * (k - 1)
            counts[EXTRACT] += 1 if s == 2 else s
    counts[MERGE] = k * (k - 1) // 2
    for i in range(k):
        for j in range(i + 1, k):
            counts[EXCHANGE] += _exchange_weight(sizes[i], sizes[j])


@njit(cache=True, inline="always")
def _exchange_weight(si, sj):
    if si == 1 and sj == 1:
        return 0
    if si == 2 and sj == 2:
        return 2
    return si * sj


@njit(cache=True)
def decode_move(blocks, sizes, k, kind, r):
    """Return ``(i, j, x, y)`` for move ``r`` of ``kind``; unused slots are -1/0."""
    if kind == SPLIT:
        for i in range(k):
            s = sizes[i]
            if s < 2:
                continue
            c = (np.int64(1) << (s - 1)) - 1
            if r < c:
                b = blocks[i]
                low = b & -b
                return i, -1, low | deposit(r, b ^ low), 0
            r -= c
    elif kind == MERGE:
        for i in range(k):
            c = k - 1 - i
            if r < c:
                return i, i + 1 + r, 0, 0
            r -= c
    elif kind == SHIFT:
        for i in range(k):
            s = sizes[i]
            if s < 2:
                continue
            c = s * (k - 1)
            if r < c:
                t = r // (k - 1)
                j = r % (k - 1)
                if j >= i:
                    j += 1
                return i, j, nth_bit(blocks[i], t), 0
            r -= c
    elif kind == EXCHANGE:
        for i in range(k):
            for j in range(i + 1, k):
                c = _exchange_weight(sizes[i], sizes[j])
                if r < c:
                    if sizes[i] == 2 and sizes[j] == 2:
                        return i, j, nth_bit(blocks[i], 0), nth_bit(blocks[j], r)
                    return i, j, nth_bit(blocks[i], r // sizes[j]), nth_bit(blocks[j], r % sizes[j])
                r -= c
    elif kind == EXTRACT:
        for i in range(k):
            s = sizes[i]
            if s < 2:
                continue
            c = 1 if s == 2 else s
            if r < c:
                return i, -1, nth_bit(blocks[i], r), 0
            r -= c
    return -1, -1, 0, 0


@njit(cache=True, inline="always")
def is_redundant(sizes, kind, i, j):
    if kind == EXTRACT:
        return True
    return kind == EXCHANGE and sizes[i] + sizes[j] == 3


@njit(cache=True)
def move_delta(values, blocks, kind, i, j, x, y):
    """Value change of a decoded move: new block values minus replaced ones."""
    bi = blocks[i]
    if kind == SPLIT:
        return (values[x] + values[bi ^ x]) - values[bi]
    if kind == EXTRACT:
        return (values[bi ^ x] + values[x]) - values[bi]
    bj = blocks[j]
    old = values[bi] + values[bj]
    if kind == MERGE:
        return values[bi | bj] - old
    if kind == SHIFT:
        return (values[bi ^ x] + values[bj | x]) - old
    return (values[(bi ^ x) | y] + values[(bj ^ y) | x]) - old


@njit(cache=True)
def apply_move(blocks, k, kind, i, j, x, y):
    """Apply a decoded move in place and return the new block count."""
    if kind == SPLIT or kind == EXTRACT:
        blocks[i] ^= x
        blocks[k] = x
        return k + 1
    if kind == MERGE:
        blocks[i] |= blocks[j]
        blocks[j] = blocks[k - 1]
        return k - 1
    if kind == SHIFT:
        blocks[i] ^= x
        blocks[j] |= x
        return k
    blocks[i] = (blocks[i] ^ x) | y
    blocks[j] = (blocks[j] ^ y) | x
    return k


def blocks_array(cs: CoalitionStructure) -> np.ndarray:
    """Block masks of ``cs`` in an array with room for ``n`` blocks."""
    arr = np.zeros(cs.n, dtype=np.int64)
    arr[:cs.k] = cs.blocks
    return arr


def compiled_moves(cs: CoalitionStructure, kind: OperatorKind) -> list[CoalitionStructure]:
    """Structures produced by the compiled move list of ``kind``, in index order."""
    blocks = blocks_array(cs)
    sizes = np.zeros(cs.n, dtype=np.int64)
    counts = np.zeros(5, dtype=np.int64)
    block_sizes(blocks, cs.k, sizes)
    count_moves(sizes, cs.k, counts)
    out = []
    for r in range(int(counts[kind])):
        i, j, x, y = decode_move(blocks, sizes, cs.k, int(kind), r)
        work = blocks.copy()
        k2 = apply_move(work, cs.k, int(kind), i, j, x, y)
        out.append(CoalitionStructure.from_blocks(work[:k2].tolist(), cs.n))
    return out
