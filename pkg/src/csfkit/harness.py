"""Instance generation, single solver runs and benchmark matrices.

Bench config format
-------------------
Line-oriented ``key=value``; ``#`` starts a comment.  Keys before the first
``run=`` line are global:

``instance``  path or glob, relative to the config file; repeatable
``seeds``     comma list of run seeds (default ``0``)
``oracle``    ``dp`` (default), ``brute`` or ``none``

Each ``run=<algorithm>`` line opens a block whose keys are solver
parameters plus ``label``, ``seeds`` (overrides the global list),
``time_limit`` (comma list; one matrix entry per budget) and ``trace``
(``1`` emits one row per trace record instead of one final row).
When a block lists several budgets, its label gains an ``@<budget>s`` suffix.
"""

from __future__ import annotations

import csv
import glob
import io
import json
import math
import os
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .baselines import SaParams, simulated_annealing
from .core import MAX_AGENTS, CharacteristicFunction, bell, brute_force_optimum
from .exact import DP_MAX_AGENTS, dp_solve, sandholm_anytime
from .instances import GENERATORS, read_instance, write_instance
from .neighborhood import OperatorKind
from .search import RNG_FAMILY, GraspParams, grasp_csf

ALGORITHMS = ("grasp", "dp", "sandholm", "sa", "brute")

CSV_COLUMNS = ("instance_id", "algorithm", "n", "distribution", "seed", "wall_time_seconds",
               "iterations", "best_value", "optimum_value", "relative_quality",
               "relative_error", "bound_k")

# parameter name -> parser, per algorithm
_PARAMS = {
    "grasp": {"maxiter": int, "alpha": lambda s: None if s in ("", "random") else float(s),
              "pivot_rule": str, "target": float},
    "sa": {"steps": int, "initial_temp": float, "cooling_alpha": float, "proposal": str,
           "trace_every": int,
           "operators": lambda s: tuple(OperatorKind[x.strip().upper()] for x in s.split(",") if x.strip())},
    "sandholm": {"phase1_only": lambda s: s.lower() in ("1", "true", "yes"), "chunk": int},
    "dp": {},
    "brute": {},
}


class HarnessError(Exception):
    pass


def relative_quality(best: float, optimum: float) -> float:
    if optimum == 0:
        return 1.0 if best == 0 else math.nan
    return best / optimum


@dataclass
class RunRecord:
    instance_id: str
    algorithm: str
    n: int
    seed: int | None
    distribution: str
    wall_time_seconds: float | None
    iterations: int | None
    best_value: float | None
    optimum_value: float | None = None
    relative_quality: float | None = None
    relative_error: float | None = None
    bound_k: float | None = None
    metadata: dict = field(default_factory=dict)

    def attach_optimum(self, optimum: float | None) -> None:
        self.optimum_value = optimum
        if optimum is None or self.best_value is None:
            self.relative_quality = self.relative_error = None
        else:
            self.relative_quality = relative_quality(self.best_value, optimum)
            self.relative_error = 1.0 - self.relative_quality

    def row(self) -> list[str]:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]

    def to_json(self) -> str:
        d = {c: getattr(self, c) for c in CSV_COLUMNS}
        d["metadata"] = self.metadata
        for key, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[key] = repr(v)
        return json.dumps(d, default=str)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_params(algorithm: str, raw: dict[str, str]) -> dict:
    if algorithm not in _PARAMS:
        raise HarnessError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    spec = _PARAMS[algorithm]
    out = {}
    for key, value in raw.items():
        if key not in spec:
            raise HarnessError(f"parameter {key!r} does not apply to {algorithm}")
        try:
            out[key] = spec[key](value)
        except (KeyError, ValueError) as exc:
            raise HarnessError(f"bad value {value!r} for {key}: {exc}") from None
    return out


_warmed: set[str] = set()


def warm_up(algorithm: str) -> None:
    """Load or compile the kernels of ``algorithm`` so timings exclude JIT cost."""
    if algorithm in _warmed:
        return
    cf = CharacteristicFunction([0.0, 0.3, 0.2, 0.4, 0.1, 0.5, 0.2, 0.6])
    _run(cf, algorithm, {}, None, 0)
    _warmed.add(algorithm)


def run_solver(cf: CharacteristicFunction, algorithm: str, params: dict | None = None,
               time_limit: float | None = None, seed: int = 0):
    """Run one solver; returns ``(structure, value, trace, iterations, bound_k, meta, wall)``.

    ``wall`` covers the solver call only; kernels are warmed up beforehand.
    ``dp`` and ``brute`` are not interruptible and ignore ``time_limit``.
    """
    params = dict(params or {})
    if time_limit is not None and not time_limit > 0:
        raise HarnessError("time_limit must be positive")
    if algorithm not in ALGORITHMS:
        raise HarnessError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    warm_up(algorithm)
    return _run(cf, algorithm, params, time_limit, seed)


def _run(cf, algorithm, params, time_limit, seed):
    trace, bound = None, None
    t0 = time.perf_counter()
    if algorithm == "grasp":
        p = GraspParams(seed=seed, deadline=time_limit, **params)
        cs, value, trace, meta = grasp_csf(cf, p)
        iterations = meta["iterations"]
    elif algorithm == "sa":
        p = SaParams(seed=seed, deadline=time_limit, **params)
        cs, value, trace, meta = simulated_annealing(cf, p)
        iterations = meta["steps"]
    elif algorithm == "sandholm":
        res = sandholm_anytime(cf, time_limit, **params)
        cs, value, trace, bound = res.best, res.value, res.trace, res.bound_k
        iterations = res.nodes_searched
        meta = dict(res.meta)
    elif algorithm == "dp":
        if cf.n > DP_MAX_AGENTS:
            raise HarnessError(f"dp is limited to {DP_MAX_AGENTS} agents")
        cs, value, _ = dp_solve(cf)
        iterations = (1 << cf.n) - 1
        meta = {}
    elif algorithm == "brute":
        cs, value = brute_force_optimum(cf)
        iterations = bell(cf.n)
        meta = {}
    else:
        raise HarnessError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
    wall = time.perf_counter() - t0
    meta.setdefault("rng", RNG_FAMILY)
    meta["params"] = {k: (v if not isinstance(v, tuple) else [str(x) for x in v]) for k, v in params.items()}
    return cs, value, trace, iterations, bound, meta, wall


def oracle_value(cf: CharacteristicFunction, oracle: str = "dp") -> float | None:
    if oracle == "dp" and cf.n <= DP_MAX_AGENTS:
        return dp_solve(cf)[1]
    if oracle == "brute":
        return brute_force_optimum(cf)[1]
    return None


def cmd_gen(n: int, distribution: str, count: int, seed: int, out_dir, *,
            cap: int = MAX_AGENTS) -> list[Path]:
    """Write ``count`` instances (seeds ``seed + i``) with ``.meta`` sidecars."""
    if distribution not in GENERATORS:
        raise HarnessError(f"unknown distribution {distribution!r}; choose from {sorted(GENERATORS)}")
    if count < 0:
        raise HarnessError("count must be >= 0")
    if not 1 <= n <= cap:
        raise HarnessError(f"agent count {n} outside 1..{cap}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        cf = GENERATORS[distribution](n, seed + i, cap=cap)
        path = out_dir / f"{distribution}_n{n}_s{seed + i}.txt"
        write_instance(cf, path)
        paths.append(path)
    return paths


def _instance_id(path) -> str:
    return Path(path).stem


def cmd_solve(instance_path, algorithm: str, params: dict | None = None,
              time_limit: float | None = None, seed: int = 0, *, oracle: str = "dp",
              trace_path=None) -> RunRecord:
    cf = read_instance(instance_path)
    cs, value, trace, iters, bound, meta, wall = run_solver(cf, algorithm, params, time_limit, seed)
    meta["structure"] = str(cs)
    rec = RunRecord(_instance_id(instance_path), algorithm, cf.n, seed,
                    cf.meta.get("distribution", ""), wall, iters, value, bound_k=bound, metadata=meta)
    opt = value if algorithm in ("dp", "brute") and oracle != "none" else oracle_value(cf, oracle)
    rec.attach_optimum(opt)
    if trace_path is not None:
        write_trace(trace, trace_path, opt)
    return rec


def write_trace(trace, path, optimum: float | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "elapsed_seconds", "best_value", "relative_quality", "structure"])
        for r in trace or ():
            q = "" if optimum is None else _fmt(relative_quality(r.best_value, optimum))
            w.writerow([r.iteration, _fmt(r.elapsed), _fmt(r.best_value), q, str(r.best_structure)])


@dataclass
class RunBlock:
    algorithm: str
    label: str
    params: dict
    time_limits: list
    seeds: list
    trace: bool


@dataclass
class BenchConfig:
    instances: list
    runs: list
    oracle: str = "dp"


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def parse_bench_config(path) -> BenchConfig:
    path = Path(path)
    base = path.parent
    instances, runs = [], []
    seeds, oracle = [0], "dp"
    block = None

    def close():
        if block is None:
            return
        raw = dict(block["raw"])
        label = raw.pop("label", block["algorithm"])
        limits = [float(x) for x in raw.pop("time_limit", "").split(",") if x.strip()] or [None]
        bseeds = _ints(raw.pop("seeds")) if "seeds" in raw else None
        trace = raw.pop("trace", "0").lower() in ("1", "true", "yes")
        runs.append(RunBlock(block["algorithm"], label, parse_params(block["algorithm"], raw),
                             limits, bseeds, trace))

    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise HarnessError(f"{path}:{lineno}: expected key=value")
        if key == "run":
            close()
            if value not in ALGORITHMS:
                raise HarnessError(f"{path}:{lineno}: unknown algorithm {value!r}")
            block = {"algorithm": value, "raw": {}}
        elif block is not None:
            block["raw"][key] = value
        elif key == "instance":
            pattern = value if os.path.isabs(value) else str(base / value)
            found = sorted(glob.glob(pattern))
            if not found:
                raise HarnessError(f"{path}:{lineno}: no instance matches {value!r}")
            instances += found
        elif key == "seeds":
            seeds = _ints(value)
        elif key == "oracle":
            if value not in ("dp", "brute", "none"):
                raise HarnessError(f"{path}:{lineno}: oracle must be dp, brute or none")
            oracle = value
        else:
            raise HarnessError(f"{path}:{lineno}: unknown global key {key!r}")
    close()
    for r in runs:
        if r.seeds is None:
            r.seeds = list(seeds)
        if len(r.time_limits) > 1:
            r.label = None  # resolved per budget
    return BenchConfig(instances, runs, oracle)


def _label(block: RunBlock, limit) -> str:
    if block.label is not None:
        return block.label
    return f"{block.algorithm}@{limit:g}s"


def _bench_one(cf, inst_id, block, limit, seed, optimum):
    label = _label(block, limit)
    dist = cf.meta.get("distribution", "")
    try:
        cs, value, trace, iters, bound, meta, wall = run_solver(cf, block.algorithm, block.params, limit, seed)
    except Exception as exc:  # reported per row, the matrix continues
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "instance": inst_id,
                          "algorithm": label, "seed": seed}), file=sys.stderr)
        return [RunRecord(inst_id, label, cf.n, seed, dist, None, None, None)], False
    if block.trace and trace is not None and len(trace):
        recs = []
        for r in trace:
            rec = RunRecord(inst_id, label, cf.n, seed, dist, r.elapsed, r.iteration, r.best_value,
                            bound_k=bound)
            rec.attach_optimum(optimum)
            recs.append(rec)
        return recs, True
    rec = RunRecord(inst_id, label, cf.n, seed, dist, wall, iters, value, bound_k=bound, metadata=meta)
    rec.attach_optimum(optimum)
    return [rec], False


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return statistics.fmean(xs) if xs else None


def aggregate(rows: list[tuple[RunRecord, bool]]) -> list[RunRecord]:
    """Mean rows per (algorithm label, n, distribution[, trace iteration])."""
    groups: dict[tuple, list[RunRecord]] = {}
    for rec, is_trace in rows:
        key = (rec.algorithm, rec.n, rec.distribution, rec.iterations if is_trace else None)
        groups.setdefault(key, []).append(rec)
    out = []
    for (label, n, dist, it), recs in groups.items():
        out.append(RunRecord(
            "mean", label, n, None, dist,
            _mean(r.wall_time_seconds for r in recs),
            it if it is not None else _mean(r.iterations for r in recs),
            _mean(r.best_value for r in recs),
            _mean(r.optimum_value for r in recs),
            _mean(r.relative_quality for r in recs),
            _mean(r.relative_error for r in recs),
            _mean(r.bound_k for r in recs),
        ))
    return out


def cmd_bench(config_path, out=None, jobs: int = 1) -> str:
    """Execute a bench matrix and return (and optionally write) the CSV text.

    Rows follow config order: instance, then run block, budget and seed;
    aggregate rows come last.
    """
    cfg = parse_bench_config(config_path)
    tasks = []
    optima = {}
    for path in cfg.instances:
        cf = read_instance(path)
        inst_id = _instance_id(path)
        if path not in optima:
            optima[path] = oracle_value(cf, cfg.oracle)
        for block in cfg.runs:
            for limit in block.time_limits:
                for seed in block.seeds:
                    tasks.append((cf, inst_id, block, limit, seed, optima[path]))
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(lambda t: _bench_one(*t), tasks))
    else:
        results = [_bench_one(*t) for t in tasks]
    rows = [(rec, is_trace) for recs, is_trace in results for rec in recs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec, _ in rows:
        w.writerow(rec.row())
    for rec in aggregate([(r, t) for r, t in rows if r.best_value is not None]):
        w.writerow(rec.row())
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text
