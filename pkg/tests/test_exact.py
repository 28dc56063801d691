import math
from functools import lru_cache

import numpy as np
import pytest

from csfkit.core import (CharacteristicFunction, CoalitionStructure, bell,
                         brute_force_optimum, cs_value, stirling)
from csfkit.exact import dp_solve, level_strings, sandholm_anytime
from csfkit.instances import gen_normal, gen_uniform

from conftest import random_cf


def partition_oracle(values, mask):
    """Best partition value of ``mask`` by plain recursion on its lowest agent."""
    @lru_cache(None)
    def best(m):
        if m == 0:
            return 0.0
        low = m & -m
        rest = m ^ low
        out = -math.inf
        sub = rest
        while True:
            out = max(out, values[low | sub] + best(rest ^ sub))
            if sub == 0:
                break
            sub = (sub - 1) & rest
        return out
    return best(mask)


class TestDp:
    def test_single_agent(self):
        cs, v, _ = dp_solve(CharacteristicFunction([0, 0.3]))
        assert cs.labels == (1,) and v == 0.3

    def test_two_agents(self):
        assert dp_solve(CharacteristicFunction([0, 0.4, 0.4, 1.0]))[0].labels == (1, 1)
        cs, v, _ = dp_solve(CharacteristicFunction([0, 0.6, 0.6, 1.0]))
        assert cs.labels == (1, 2) and v == 1.2

    def test_superadditive_gives_grand(self):
        n = 5
        values = np.array([bin(m).count("1") ** 2 for m in range(1 << n)], float)
        assert dp_solve(CharacteristicFunction(values))[0] == CoalitionStructure((1,) * n)

    def test_additive_values_are_exact(self):
        # every structure sums to the same total
        values = np.array([bin(m).count("1") for m in range(1 << 6)], float)
        assert dp_solve(CharacteristicFunction(values))[1] == 6.0

    @pytest.mark.parametrize("gen", [gen_uniform, gen_normal])
    @pytest.mark.parametrize("n", range(1, 13))
    def test_matches_brute_force(self, gen, n):
        cf = gen(n, 10 + n)
        cs, v, tables = dp_solve(cf)
        bcs, bv = brute_force_optimum(cf)
        assert v == bv == cs_value(cs, cf)
        assert tables.t2[-1] == v

    @pytest.mark.parametrize("n,seed", [(n, s) for n in range(1, 9) for s in range(3)])
    def test_tables(self, n, seed):
        cf = random_cf(n, seed)
        _, _, tables = dp_solve(cf)
        vals = cf.values.tolist()
        for m in range(1, 1 << n):
            assert tables.t2[m] >= cf.values[m]
            assert tables.t2[m] == pytest.approx(partition_oracle(vals, m), rel=1e-13)
            part = int(tables.t1[m])
            assert part & m == part and part

    def test_agent_cap(self):
        with pytest.raises(ValueError):
            dp_solve(random_cf(9), max_agents=8)


class TestLevels:
    @pytest.mark.parametrize("n", range(1, 10))
    def test_counts_and_order(self, n):
        total = 0
        for level in range(1, n + 1):
            rows = level_strings(n, level)
            assert len(rows) == len(set(rows)) == stirling(n, level)
            assert rows == sorted(rows)
            for r in rows:
                cs = CoalitionStructure(r)
                assert cs.k == level
            total += len(rows)
        assert total == bell(n)

    def test_small_listing(self):
        assert level_strings(4, 3) == [(1, 1, 2, 3), (1, 2, 1, 3), (1, 2, 2, 3),
                                       (1, 2, 3, 1), (1, 2, 3, 2), (1, 2, 3, 3)]


class TestSandholm:
    @pytest.mark.parametrize("n", range(1, 11))
    def test_phase1_nodes_and_bound(self, n):
        cf = random_cf(n, n)
        r = sandholm_anytime(cf, phase1_only=True)
        assert r.nodes_searched == 2 ** (n - 1)
        # up to two agents phase 1 already covers the whole graph
        assert r.bound_k == (1.0 if n <= 2 else float(n))
        opt = brute_force_optimum(cf)[1]
        assert opt <= n * r.value
        full = (1 << n) - 1
        best_two = max([cf.values[full]] + [cf.values[m] + cf.values[full ^ m] for m in range(1, full)])
        assert r.value == pytest.approx(best_two, rel=1e-15)

    @pytest.mark.parametrize("n", range(1, 10))
    def test_complete(self, n):
        cf = random_cf(n, 50 + n)
        r = sandholm_anytime(cf)
        assert r.bound_k == 1.0 and r.meta["complete"]
        assert r.nodes_searched == bell(n)
        assert r.value == brute_force_optimum(cf)[1]
        vals = r.trace.best_values
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_deadline_mid_phase2(self):
        cf = random_cf(16, 1)
        r = sandholm_anytime(cf, deadline=0.02, chunk=256)
        assert r.bound_k == 16.0 and not r.meta["complete"]
        assert 2 ** 15 <= r.nodes_searched < bell(16)

    def test_deadline_during_phase1(self):
        cf = random_cf(22, 1)
        r = sandholm_anytime(cf, deadline=1e-4, chunk=16)
        assert r.bound_k == math.inf
        assert r.nodes_searched < 2 ** 21

    def test_bound_never_violated(self):
        for seed in range(20):
            cf = gen_uniform(8, seed)
            opt = dp_solve(cf)[1]
            r = sandholm_anytime(cf, phase1_only=True)
            assert opt / r.value <= r.bound_k
