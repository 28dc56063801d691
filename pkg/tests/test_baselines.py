import math
from collections import Counter

import numpy as np
import pytest

from csfkit.baselines import (SaParams, acceptance_probability, acceptance_trials,
                              default_temperature, random_structure, simulated_annealing)
from csfkit.core import CharacteristicFunction, bell, brute_force_optimum, cs_value
from csfkit.neighborhood import OperatorKind

from conftest import random_cf


class TestAcceptance:
    def test_rule(self):
        assert acceptance_probability(0.0, 1.0) == 1.0
        assert acceptance_probability(0.3, 0.0) == 1.0
        assert acceptance_probability(-1.0, 1.0) == pytest.approx(math.exp(-1))
        assert acceptance_probability(-1e-9, 0.0) == 0.0

    def test_empirical_frequency(self):
        assert abs(acceptance_trials(-1.0, 1.0, 10_000, seed=3) - math.exp(-1)) <= 0.02

    def test_zero_delta_always(self):
        assert acceptance_trials(0.0, 1e-12, 1000) == 1.0

    def test_cold_limit(self):
        assert acceptance_trials(-0.5, 1e-6, 10_000) == 0.0
        assert acceptance_trials(-0.5, 0.0, 100) == 0.0


class TestRandomStructure:
    def test_valid_and_spread(self):
        rng = np.random.Generator(np.random.PCG64(0))
        seen = Counter(random_structure(4, rng).labels for _ in range(3000))
        assert len(seen) == bell(4)


class TestAnnealing:
    @pytest.mark.parametrize("n", range(1, 11))
    def test_never_beats_brute_force(self, n):
        cf = random_cf(n, 300 + n)
        opt = brute_force_optimum(cf)[1]
        r = simulated_annealing(cf, SaParams(steps=2000, seed=n))
        assert r.value <= opt
        assert r.value == cs_value(r.structure, cf)

    def test_finds_small_optimum(self):
        cf = random_cf(6, 8)
        opt = brute_force_optimum(cf)[1]
        assert simulated_annealing(cf, SaParams(steps=5000)).value == opt

    def test_deterministic(self):
        cf = random_cf(10, 1)
        p = SaParams(steps=3000, seed=11)
        a, b = simulated_annealing(cf, p), simulated_annealing(cf, p)
        assert a.structure == b.structure
        assert a.trace.best_values == b.trace.best_values

    def test_trace_and_meta(self):
        cf = random_cf(8, 2)
        r = simulated_annealing(cf, SaParams(steps=1000, trace_every=100, cooling_alpha=0.9,
                                             initial_temp=2.0))
        assert [rec.iteration for rec in r.trace] == list(range(100, 1001, 100))
        vals = r.trace.best_values
        assert all(a <= b for a, b in zip(vals, vals[1:]))
        assert r.meta["final_temp"] == pytest.approx(2.0 * 0.9 ** 1000)

    @pytest.mark.parametrize("proposal", ["per-operator", "uniform"])
    def test_operator_subsets(self, proposal):
        cf = random_cf(9, 4)
        for ops in [(OperatorKind.SPLIT, OperatorKind.MERGE), (OperatorKind.SHIFT,),
                    (OperatorKind.EXCHANGE, OperatorKind.EXTRACT)]:
            r = simulated_annealing(cf, SaParams(steps=500, operators=ops, proposal=proposal))
            assert r.meta["operators"] == [k.name.lower() for k in ops]
            assert r.value <= brute_force_optimum(cf)[1]

    def test_shift_only_keeps_block_count_at_most_start(self):
        # shift can empty a block but never open one
        cf = random_cf(8, 6)
        start = random_structure(8, np.random.Generator(np.random.PCG64(5)))
        r = simulated_annealing(cf, SaParams(steps=400, operators=(OperatorKind.SHIFT,), seed=5))
        assert r.structure.k <= start.k

    def test_deadline(self):
        cf = random_cf(16, 0)
        r = simulated_annealing(cf, SaParams(steps=10**9, deadline=0.02))
        assert r.meta["steps"] < 10**9

    def test_default_temperature(self):
        assert default_temperature(CharacteristicFunction([0, 1, 1, 1])) == 1.0
        assert default_temperature(CharacteristicFunction([0, 0.2, 0.5, 0.9])) == pytest.approx(0.7)

    @pytest.mark.parametrize("kwargs", [dict(cooling_alpha=1.0), dict(steps=0), dict(operators=()),
                                        dict(proposal="x"), dict(initial_temp=0.0)])
    def test_param_validation(self, kwargs):
        with pytest.raises(ValueError):
            SaParams(**kwargs)
