"""Coalitions, characteristic functions and coalition structures.

Encodings
---------
Agents are numbered ``1..n``.  A coalition is an ``n``-bit mask written
MSB-first: agent ``a_i`` owns bit ``n - i``, so for ``n = 4`` the coalition
``{a2, a3}`` is ``0b0110 == 6``.  The characteristic function is a dense
table indexed directly by that mask.

A coalition structure is stored as its label vector ``[d_1, ..., d_n]``
(``d_i`` is the 1-based block of agent ``a_i``) in canonical form:
labels appear in first-occurrence order, i.e. a restricted growth string
shifted by one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np
from numba import njit

from ._dd import dd_add_float, dd_gt

#: Default cap on the number of agents: 2**26 doubles is a 512 MiB table.
MAX_AGENTS = 26

#: Largest ``n`` accepted by :func:`brute_force_optimum` unless overridden.
BRUTE_FORCE_MAX_AGENTS = 14


def _check_n(n: int, cap: int) -> None:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise TypeError(f"agent count must be an integer, got {n!r}")
    if n < 1:
        raise ValueError(f"agent count must be >= 1, got {n}")
    if n > cap:
        raise ValueError(f"agent count {n} exceeds the configured cap of {cap}")


def coalition_index(members: Iterable[int], n: int) -> int:
    """Return the table index of the coalition formed by ``members``.

    >>> coalition_index({2, 3}, 4)
    6
    """
    members = list(members)
    if not members:
        raise ValueError("a coalition must have at least one member")
    if len(set(members)) != len(members):
        raise ValueError(f"duplicate agent ids in {members}")
    mask = 0
    for i in members:
        if not 1 <= i <= n:
            raise ValueError(f"agent id {i} out of range 1..{n}")
        mask |= 1 << (n - i)
    return mask


def coalition_members(mask: int, n: int) -> tuple[int, ...]:
    """Inverse of :func:`coalition_index`; members in ascending order."""
    if not 0 < mask < (1 << n):
        raise ValueError(f"mask {mask} is not a nonempty coalition of {n} agents")
    return tuple(i for i in range(1, n + 1) if mask >> (n - i) & 1)


@dataclass(frozen=True)
class Coalition:
    mask: int
    n: int

    def __post_init__(self):
        if not 0 < self.mask < (1 << self.n):
            raise ValueError(f"mask {self.mask} is not a nonempty coalition of {self.n} agents")

    @classmethod
    def from_members(cls, members: Iterable[int], n: int) -> "Coalition":
        return cls(coalition_index(members, n), n)

    @property
    def members(self) -> tuple[int, ...]:
        return coalition_members(self.mask, self.n)

    def __len__(self) -> int:
        return bin(self.mask).count("1")


class CharacteristicFunction:
    """Dense table of coalition values.

    ``values[m]`` is the value of the coalition with mask ``m``.  Entry 0
    exists only so that index equals mask; it is pinned to zero.  Values must
    be finite and nonnegative; negative entries are rejected, not clamped.

    The table is read-only once constructed, so one instance can be shared
    between concurrent solver runs.
    """

    def __init__(self, values, n: int | None = None, *, cap: int = MAX_AGENTS,
                 meta: dict | None = None):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.ndim != 1:
            raise ValueError("characteristic function table must be one-dimensional")
        size = arr.shape[0]
        if n is None:
            n = size.bit_length() - 1
        _check_n(n, cap)
        if size != 1 << n:
            raise ValueError(f"table for {n} agents needs {1 << n} entries, got {size}")
        body = arr[1:]
        bad = ~np.isfinite(body) | (body < 0)
        if bad.any():
            m = int(np.flatnonzero(bad)[0]) + 1
            raise ValueError(f"coalition value at mask {m} must be finite and >= 0, got {arr[m]!r}")
        arr[0] = 0.0
        arr.flags.writeable = False
        self.n = int(n)
        self.values = arr
        self.meta = dict(meta) if meta else {}

    @property
    def grand_mask(self) -> int:
        return (1 << self.n) - 1

    def __call__(self, mask: int) -> float:
        return float(self.values[mask])

    def __eq__(self, other):
        if not isinstance(other, CharacteristicFunction):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self):
        return f"CharacteristicFunction(n={self.n})"


def _labels_to_masks(labels: Sequence[int], n: int) -> tuple[int, ...]:
    k = max(labels)
    masks = [0] * k
    for idx, lab in enumerate(labels):
        masks[lab - 1] |= 1 << (n - 1 - idx)
    return tuple(masks)


@dataclass(frozen=True)
class CoalitionStructure:
    """A partition of agents ``1..n`` as a canonical label vector.

    Construct through :func:`canonicalize` (or :meth:`from_blocks`) unless the
    labels are already canonical; the constructor rejects anything else.
    """

    labels: tuple[int, ...]
    blocks: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        if not labels:
            raise ValueError("a coalition structure needs at least one agent")
        top = 0
        for lab in labels:
            if lab < 1 or lab > top + 1:
                raise ValueError(f"labels {list(labels)} are not in canonical first-occurrence form")
            top = max(top, lab)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "blocks", _labels_to_masks(labels, len(labels)))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def k(self) -> int:
        return len(self.blocks)

    @classmethod
    def from_blocks(cls, blocks: Iterable[int], n: int) -> "CoalitionStructure":
        """Build from coalition masks that partition the grand coalition."""
        labels = [0] * n
        seen = 0
        for j, mask in enumerate(blocks, start=1):
            if mask <= 0 or mask >> n:
                raise ValueError(f"mask {mask} is not a nonempty coalition of {n} agents")
            if seen & mask:
                raise ValueError("blocks overlap")
            seen |= mask
            for i in range(n):
                if mask >> (n - 1 - i) & 1:
                    labels[i] = j
        if seen != (1 << n) - 1:
            raise ValueError("blocks do not cover every agent")
        return canonicalize(labels)

    @classmethod
    def parse(cls, text: str) -> "CoalitionStructure":
        """Parse bracket notation such as ``"[12][3][4]"``.

        Blocks containing a comma are split on it, which allows agent ids
        above 9 (``"[1,10][2,3]"``).  Agents must cover ``1..n`` exactly.
        """
        groups = []
        for chunk in text.replace(" ", "").strip("[]").split("]["):
            if "," in chunk:
                groups.append([int(x) for x in chunk.split(",")])
            else:
                groups.append([int(ch) for ch in chunk])
        n = sum(len(g) for g in groups)
        return cls.from_blocks((coalition_index(g, n) for g in groups), n)

    def coalitions(self) -> list[tuple[int, ...]]:
        return [coalition_members(m, self.n) for m in self.blocks]

    def __str__(self):
        sep = "," if self.n >= 10 else ""
        return "".join("[" + sep.join(map(str, c)) + "]" for c in self.coalitions())


class PartialStructure(NamedTuple):
    """Disjoint coalitions over a subset ``assigned`` of the agents."""

    n: int
    assigned: int
    blocks: tuple[int, ...]

    @classmethod
    def empty(cls, n: int) -> "PartialStructure":
        return cls(n, 0, ())

    @property
    def complete(self) -> bool:
        return self.assigned == (1 << self.n) - 1

    def value(self, cf: CharacteristicFunction) -> float:
        return math.fsum(cf.values[m] for m in self.blocks)

    def to_structure(self) -> CoalitionStructure:
        return CoalitionStructure.from_blocks(self.blocks, self.n)


def canonicalize(labels: Sequence[int]) -> CoalitionStructure:
    """Relabel blocks in first-occurrence order.

    >>> canonicalize([2, 2, 1, 3]).labels
    (1, 1, 2, 3)
    """
    relabel: dict[int, int] = {}
    out = []
    for lab in labels:
        if lab not in relabel:
            relabel[lab] = len(relabel) + 1
        out.append(relabel[lab])
    return CoalitionStructure(tuple(out))


def cs_value(cs: CoalitionStructure, cf: CharacteristicFunction) -> float:
    """Sum of the block values (correctly rounded, independent of block order)."""
    if cs.n != cf.n:
        raise ValueError(f"structure has {cs.n} agents but the characteristic function has {cf.n}")
    vals = cf.values
    return math.fsum(vals[m] for m in cs.blocks)


def stirling(n: int, i: int) -> int:
    """Stirling number of the second kind, via ``Z(n,i) = i Z(n-1,i) + Z(n-1,i-1)``.

    Computed exactly with Python integers, so there is no overflow to detect.
    """
    if n < 1 or not 1 <= i <= n:
        raise ValueError(f"need 1 <= i <= n, got n={n}, i={i}")
    # row[j] holds Z(m, j) for the current m; only columns 1..i are needed
    row = [0] * (i + 1)
    row[1] = 1
    for m in range(2, n + 1):
        for j in range(min(m, i), 1, -1):
            row[j] = 1 if j == m else j * row[j] + row[j - 1]
    return row[i]


def bell(n: int) -> int:
    """Number of coalition structures of ``n`` agents."""
    return sum(stirling(n, i) for i in range(1, n + 1))


def enumerate_structures(n: int, *, cap: int = MAX_AGENTS) -> Iterator[CoalitionStructure]:
    """Yield every partition of ``n`` agents once, in restricted-growth order."""
    _check_n(n, cap)
    a = [0] * n
    top = [0] * n  # top[i] = max(a[0..i])
    while True:
        yield CoalitionStructure(tuple(x + 1 for x in a))
        i = n - 1
        while i >= 1 and a[i] > top[i - 1]:
            i -= 1
        if i < 1:
            return
        a[i] += 1
        top[i] = max(top[i - 1], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            top[j] = top[i]


@njit(cache=True)
def _brute_force_kernel(values, n):
    a = np.zeros(n, np.int64)
    top = np.zeros(n, np.int64)
    masks = np.zeros(n, np.int64)
    best = a.copy()
    best_hi = -1.0
    best_lo = 0.0
    while True:
        k = top[n - 1] + 1
        for b in range(k):
            masks[b] = 0
        for i in range(n):
            masks[a[i]] |= np.int64(1) << (n - 1 - i)
        hi = 0.0
        lo = 0.0
        for b in range(k):
            hi, lo = dd_add_float(hi, lo, values[masks[b]])
        if dd_gt(hi, lo, best_hi, best_lo):
            best_hi = hi
            best_lo = lo
            best[:] = a
        i = n - 1
        while i >= 1 and a[i] > top[i - 1]:
            i -= 1
        if i < 1:
            break
        a[i] += 1
        top[i] = max(top[i - 1], a[i])
        for j in range(i + 1, n):
            a[j] = 0
            top[j] = top[i]
    return best


def brute_force_optimum(cf: CharacteristicFunction, *,
                        max_agents: int = BRUTE_FORCE_MAX_AGENTS) -> tuple[CoalitionStructure, float]:
    """Exhaustive maximiser of :func:`cs_value`.

    Ties go to the first maximiser in restricted-growth order.
    """
    if cf.n > max_agents:
        raise ValueError(f"brute force is limited to {max_agents} agents, got {cf.n}")
    best = _brute_force_kernel(cf.values, cf.n)
    cs = CoalitionStructure(tuple(int(x) + 1 for x in best))
    return cs, cs_value(cs, cf)


class TraceRecord(NamedTuple):
    iteration: int
    elapsed: float
    best_value: float
    best_structure: CoalitionStructure


class AnytimeTrace:
    """Best-so-far records of an anytime run.

    :meth:`append` enforces that both ``elapsed`` and ``best_value`` never
    decrease.
    """

    def __init__(self, records: Iterable[TraceRecord] = ()):
        self.records: list[TraceRecord] = []
        for r in records:
            self.append(*r)

    def append(self, iteration: int, elapsed: float, best_value: float,
               best_structure: CoalitionStructure) -> None:
        if self.records:
            last = self.records[-1]
            if best_value < last.best_value:
                raise ValueError("best value decreased along the trace")
            if elapsed < last.elapsed:
                raise ValueError("elapsed time decreased along the trace")
        self.records.append(TraceRecord(iteration, elapsed, best_value, best_structure))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    @property
    def best_values(self) -> list[float]:
        return [r.best_value for r in self.records]
