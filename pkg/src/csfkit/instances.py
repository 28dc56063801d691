"""Random characteristic functions and the instance text format.

File layout: the first line holds ``n``; then come exactly ``2**n - 1`` lines
``<mask> <value>`` with masks ascending from 1.  Values are written as the
shortest decimal string that round-trips to the same double.  A sidecar at
``<path>.meta`` carries generation metadata as ``key=value`` lines.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

import numpy as np

from .core import MAX_AGENTS, CharacteristicFunction, _check_n

UNIFORM_METHOD = "numpy.PCG64/Generator.random"
NORMAL_METHOD = "numpy.PCG64/Generator.normal(ziggurat)"


class InstanceFormatError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gen_uniform(n: int, seed: int, *, a: float = 0.0, b: float = 1.0,
                cap: int = MAX_AGENTS) -> CharacteristicFunction:
    """Values drawn i.i.d. from U(a, b), one per nonempty coalition."""
    _check_n(n, cap)
    if not 0 <= a < b:
        raise ValueError("need 0 <= a < b")
    values = np.zeros(1 << n)
    values[1:] = a + (b - a) * _rng(seed).random((1 << n) - 1)
    meta = {"distribution": "uniform", "n": n, "a": a, "b": b, "seed": seed,
            "generator": UNIFORM_METHOD, "clamped": 0}
    return CharacteristicFunction(values, n, cap=cap, meta=meta)


def gen_normal(n: int, seed: int, mu: float = 1.0, sigma: float = 0.1, *,
               cap: int = MAX_AGENTS) -> CharacteristicFunction:
    """Values drawn i.i.d. from N(mu, sigma**2) and clamped below at 0."""
    _check_n(n, cap)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    values = np.zeros(1 << n)
    draws = _rng(seed).normal(mu, sigma, (1 << n) - 1)
    clamped = int(np.count_nonzero(draws < 0))
    values[1:] = np.maximum(draws, 0.0)
    meta = {"distribution": "normal", "n": n, "mu": mu, "sigma": sigma, "seed": seed,
            "generator": NORMAL_METHOD, "clamped": clamped}
    return CharacteristicFunction(values, n, cap=cap, meta=meta)


GENERATORS = {"uniform": gen_uniform, "normal": gen_normal}


def write_instance(cf: CharacteristicFunction, path, *, meta: bool = True) -> None:
    path = Path(path)
    lines = [str(cf.n)]
    lines += [f"{m} {float(v)!r}" for m, v in enumerate(cf.values.tolist()) if m]
    path.write_text("\n".join(lines) + "\n")
    if meta and cf.meta:
        write_meta(cf.meta, str(path) + ".meta")


def read_instance(path, *, cap: int = MAX_AGENTS) -> CharacteristicFunction:
    """Parse an instance file; every defect is reported with its line number."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline()
        try:
            n = int(header.strip())
        except ValueError:
            raise InstanceFormatError(path, 1, f"header must be the agent count, got {header.strip()!r}") from None
        if not 1 <= n <= cap:
            raise InstanceFormatError(path, 1, f"agent count {n} outside 1..{cap}")
        size = 1 << n
        values = np.zeros(size)
        expected = 1
        lineno = 1
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InstanceFormatError(path, lineno, "expected '<mask> <value>'")
            try:
                mask = int(parts[0])
            except ValueError:
                raise InstanceFormatError(path, lineno, f"unparsable mask {parts[0]!r}") from None
            if mask >= size:
                raise InstanceFormatError(path, lineno, f"extra line: mask {mask} exceeds {size - 1}")
            if mask != expected:
                if mask < expected:
                    raise InstanceFormatError(path, lineno, f"duplicate or out-of-order mask {mask}")
                raise InstanceFormatError(path, lineno, f"missing mask {expected} (found {mask})")
            try:
                # a typographic minus still reads as a sign, so it hits the negativity check
                v = float(parts[1].replace("\u2212", "-"))
            except ValueError:
                raise InstanceFormatError(path, lineno, f"unparsable value {parts[1]!r}") from None
            if not math.isfinite(v):
                raise InstanceFormatError(path, lineno, f"non-finite value {parts[1]!r}")
            if v < 0:
                raise InstanceFormatError(path, lineno, f"negative value {parts[1]!r}")
            values[mask] = v
            expected += 1
        if expected != size:
            raise InstanceFormatError(path, lineno + 1, f"file ends after mask {expected - 1}; "
                                      f"expected {size - 1} lines")
    meta_path = str(path) + ".meta"
    meta = read_meta(meta_path) if os.path.exists(meta_path) else {}
    return CharacteristicFunction(values, n, cap=cap, meta=meta)


def write_meta(meta: dict, path) -> None:
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in meta.items()))


def read_meta(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.startswith("#"):
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out
