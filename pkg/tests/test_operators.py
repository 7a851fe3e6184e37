from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qemcq import operators
from qemcq.operators import (
    LevyParams,
    Population,
    discretize,
    global_pollination,
    jaya,
    lanczos_gamma,
    levy_flight_perturbation,
    levy_step,
    levy_steps,
    local_pollination,
    mantegna_sigma_u,
)

ALL_OPS = [levy_flight_perturbation, local_pollination, global_pollination, jaya]


class ScriptedRng:
    """Stand-in generator that replays fixed draws in request order."""

    def __init__(self, integers=(), random=()):
        self._int = list(integers)
        self._rand = list(random)

    def integers(self, *args, size=None):
        return np.asarray(self._int.pop(0))

    def random(self, size=None):
        return np.asarray(self._rand.pop(0), dtype=float)


def _pop(X, fitness, lo, hi):
    X = np.asarray(X, dtype=np.int64)
    d = X.shape[1]
    return Population(X.copy(), np.array([fitness(x) for x in X], dtype=float),
                      np.full(d, lo, dtype=np.int64), np.full(d, hi, dtype=np.int64))


def _excess_kurtosis(x):
    x = np.asarray(x, dtype=float)
    c = x - x.mean()
    return float((c ** 4).mean() / (c ** 2).mean() ** 2 - 3.0)


class TestGamma:
    @pytest.mark.parametrize("x", [0.3, 0.5, 1.0, 1.25, 2.5, 3.7, 7.0, 12.5])
    def test_against_math_gamma(self, x):
        assert lanczos_gamma(x) == pytest.approx(math.gamma(x), rel=1e-12)

    def test_known_value(self):
        assert abs(lanczos_gamma(2.5) - 0.75 * math.sqrt(math.pi)) < 1e-10
        assert abs(lanczos_gamma(2.5) - 1.329340388) < 1e-9


class TestLevy:
    def test_sigma_u_beta_15(self):
        b = 1.5
        ref = (math.gamma(1 + b) * math.sin(math.pi * b / 2)
               / (math.gamma((1 + b) / 2) * b * 2 ** ((b - 1) / 2))) ** (1 / b)
        assert abs(mantegna_sigma_u(b) - ref) < 1e-12
        assert abs(LevyParams().sigma_u - 0.6965745025576967) < 1e-12

    @pytest.mark.parametrize("beta", [1.0, 0.5, 2.5])
    def test_beta_range(self, beta):
        with pytest.raises(ValueError):
            LevyParams(beta=beta)

    def test_beta_two_allowed(self):
        assert LevyParams(beta=2.0).sigma_u > 0

    def test_deterministic(self):
        p = LevyParams()
        assert levy_step(p, np.random.default_rng(9)) == levy_step(p, np.random.default_rng(9))
        assert np.array_equal(levy_steps(p, np.random.default_rng(9), 50),
                              levy_steps(p, np.random.default_rng(9), 50))

    def test_heavy_tail(self):
        rng = np.random.default_rng(123)
        steps = levy_steps(LevyParams(), rng, 100_000)
        gauss = np.random.default_rng(123).standard_normal(100_000)
        assert _excess_kurtosis(steps) > 0
        assert _excess_kurtosis(steps) > _excess_kurtosis(gauss) + 1.0

    def test_scalar_matches_formula(self):
        p = LevyParams()
        rng = np.random.default_rng(4)
        u, v = np.random.default_rng(4).standard_normal(2)
        assert levy_step(p, rng) == pytest.approx(u * p.sigma_u / abs(v) ** (1 / 1.5))


class TestDiscretize:
    @pytest.mark.parametrize("value, lo, hi, expected", [
        (2.6, 0, 2, 2), (-0.4, 0, 4, 0), (1.5, 0, 3, 2), (2.5, 0, 9, 3),
        (-1.5, -5, 5, -2), (0.49, 0, 1, 0), (-7.0, 0, 3, 0), (1e9, 0, 3, 3),
    ])
    def test_examples(self, value, lo, hi, expected):
        assert discretize(value, lo, hi) == expected

    def test_array(self):
        out = discretize(np.array([2.6, -0.4, 1.5, -1.5]), np.array([0, 0, 0, -3]), np.array([2, 4, 3, 3]))
        assert out.tolist() == [2, 0, 2, -2]

    @given(st.floats(-1e6, 1e6), st.integers(-10, 10), st.integers(0, 10))
    def test_scalar_and_array_agree(self, value, lo, width):
        hi = lo + width
        s = discretize(value, lo, hi)
        a = discretize(np.array([value]), np.array([lo]), np.array([hi]))
        assert lo <= s <= hi
        assert s == int(a[0])


class TestLevyPerturbation:
    def test_one_coordinate_changes(self):
        rng = np.random.default_rng(0)
        f = lambda x: float(x.sum())
        for _ in range(200):
            pop = _pop(rng.integers(0, 10, (6, 5)), f, 0, 9)
            before = pop.X.copy()
            levy_flight_perturbation(pop, f, rng)
            assert ((pop.X != before).sum(axis=1) <= 1).all()

    def test_improving_variant_replaces(self):
        f = lambda x: float(x.sum())
        pop = _pop([[0, 0, 0]], f, 0, 5)
        for seed in range(50):
            out = levy_flight_perturbation(pop, f, np.random.default_rng(seed))
            if out.improved:
                assert np.array_equal(out.best, pop.X[0])
                assert out.best_fitness == f(pop.X[0]) > 0
                return
        pytest.fail("no improving Levy move in 50 seeds")

    def test_worse_variant_rejected(self):
        f = lambda x: -float(x.sum())
        pop = _pop([[0, 0, 0]], f, 0, 5)
        out = levy_flight_perturbation(pop, f, np.random.default_rng(1))
        assert pop.X[0].tolist() == [0, 0, 0]
        assert out.best.tolist() == [0, 0, 0]
        assert not out.improved


class TestLocalPollination:
    def test_hand_example(self):
        f = lambda x: float(x.sum())
        pop = _pop([[0, 0], [2, 0], [0, 0]], f, 0, 2)
        # i=0 pairs p=1 with q=2 (raw draw 1 skips over p), then i=1, i=2 pair 0 with 1
        rng = ScriptedRng(integers=[[1, 0, 0], [1, 0, 0]], random=[[0.9, 0.5, 0.5]])
        local_pollination(pop, f, rng)
        assert pop.X[0].tolist() == [2, 0]

    def test_identical_peers_give_identity(self):
        f = lambda x: float(x.sum())
        pop = _pop([[1, 1], [1, 1], [1, 1]], f, 0, 3)
        out = local_pollination(pop, f, np.random.default_rng(0))
        assert (pop.X == 1).all()
        assert not out.improved

    def test_single_individual_degenerate(self):
        f = lambda x: float(x.sum())
        pop = _pop([[1, 2]], f, 0, 3)
        out = local_pollination(pop, f, np.random.default_rng(0))
        assert out.degenerate
        assert pop.X.tolist() == [[1, 2]]

    def test_peers_distinct(self):
        rng = np.random.default_rng(5)
        for n in (2, 3, 7):
            p = rng.integers(n, size=5000)
            q = rng.integers(n - 1, size=5000)
            q += q >= p
            assert (p != q).all() and q.max() == n - 1


class TestGlobalPollination:
    def test_hand_example(self, monkeypatch):
        f = lambda x: float(x.sum())
        pop = _pop([[0, 0, 0]], f, 0, 2)
        monkeypatch.setattr(operators, "levy_steps", lambda params, rng, size: np.ones(size))
        rng = ScriptedRng(random=[[1.0]])
        global_pollination(pop, f, rng, best=np.array([2, 2, 2]), best_fitness=6.0)
        assert pop.X[0].tolist() == [2, 2, 2]

    def test_at_best_zero_step(self):
        f = lambda x: float(x.sum())
        pop = _pop([[2, 1, 0]] * 4, f, 0, 3)
        out = global_pollination(pop, f, np.random.default_rng(0))
        assert (pop.X == [2, 1, 0]).all()
        assert not out.improved


class TestJaya:
    def test_hand_example(self):
        f = lambda x: -float(abs(x[0] - 2))
        pop = _pop([[2], [0], [1]], f, 0, 3)
        rng = ScriptedRng(random=[[0.5, 0.0, 1.0], [0.5, 0.0, 0.0]])
        out = jaya(pop, f, rng)
        assert pop.X[:, 0].tolist() == [2, 0, 2]
        assert out.poor.tolist() == [0]
        assert out.best.tolist() == [2]

    def test_all_equal_identity(self):
        f = lambda x: float(x.sum())
        pop = _pop([[3, 3]] * 3, f, 0, 5)
        jaya(pop, f, np.random.default_rng(0))
        assert (pop.X == 3).all()

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_best_not_below_poor(self, seed):
        rng = np.random.default_rng(seed)
        f = lambda x: float((x * np.arange(1, 5)).sum())
        pop = _pop(rng.integers(0, 6, (8, 4)), f, 0, 5)
        out = jaya(pop, f, rng)
        assert out.best_fitness >= out.poor_fitness


class TestInvariants:
    @pytest.mark.parametrize("op", ALL_OPS, ids=lambda o: o.__name__)
    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), d=st.integers(1, 5))
    def test_bounds_elitism_greedy(self, op, seed, n, d):
        rng = np.random.default_rng(seed)
        lo = rng.integers(-3, 3, d)
        hi = lo + rng.integers(0, 6, d)
        w = rng.normal(size=d)
        f = lambda x: float(w @ x)
        X = rng.integers(lo, hi + 1, (n, d))
        pop = Population(X.copy(), np.array([f(x) for x in X]), lo, hi)
        pre_best = pop.fit.max()
        pre_fit = pop.fit.copy()
        out = op(pop, f, rng)
        assert ((pop.X >= lo) & (pop.X <= hi)).all()
        assert out.best_fitness >= pop.fit.max() - 1e-12
        assert out.best_fitness >= pre_best - 1e-12
        assert f(out.best) == pytest.approx(out.best_fitness)
        changed = (pop.X != X).any(axis=1)
        assert (pop.fit[changed] > pre_fit[changed]).all()
        assert np.array_equal(pop.fit[~changed], pre_fit[~changed])

    @pytest.mark.parametrize("op", ALL_OPS, ids=lambda o: o.__name__)
    def test_equal_fitness_rejected(self, op):
        f = lambda x: 0.0
        rng = np.random.default_rng(0)
        X = rng.integers(0, 5, (5, 3))
        pop = _pop(X, f, 0, 4)
        op(pop, f, rng)
        assert np.array_equal(pop.X, X)

    @pytest.mark.parametrize("op", ALL_OPS, ids=lambda o: o.__name__)
    def test_deterministic(self, op):
        f = lambda x: float(x.sum())
        X = np.random.default_rng(0).integers(0, 9, (6, 4))
        res = []
        for _ in range(2):
            pop = _pop(X, f, 0, 8)
            op(pop, f, np.random.default_rng(77))
            res.append(pop.X.copy())
        assert np.array_equal(*res)
