import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genthompson.core import RandomSource
from genthompson.errors import DivergenceError
from genthompson.games import (
    MATCHING_PENNIES,
    BetaPosterior,
    Bimatrix,
    H,
    T,
    beta_update,
    best_response_p1,
    best_response_p2,
    delta_kl,
    delta_kl_bound,
    mixture_delta_kl,
    play_matching_pennies,
    quantile_by_bisection,
    strict_nash_check,
)


class TestBestResponse:
    @pytest.mark.parametrize("theta, expect", [(0.49, 0.0), (0.5, 0.5), (0.51, 1.0), (0.0, 0.0), (1.0, 1.0)])
    def test_player_one(self, theta, expect):
        assert best_response_p1(theta) == expect

    @pytest.mark.parametrize("xi, expect", [(0.49, 1.0), (0.5, 0.5), (0.51, 0.0)])
    def test_player_two(self, xi, expect):
        assert best_response_p2(xi) == expect

    def test_unique_fixed_point_on_grid(self):
        grid = (0.0, 0.5, 1.0)
        fixed = [(x, y) for x in grid for y in grid if best_response_p1(y) == x and best_response_p2(x) == y]
        assert fixed == [(0.5, 0.5)]

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            best_response_p1(1.5)


class TestBetaPosterior:
    def test_updates(self):
        assert beta_update(BetaPosterior(), True) == BetaPosterior(2, 1)
        assert beta_update(BetaPosterior(), False) == BetaPosterior(1, 2)

    @given(st.lists(st.booleans(), max_size=100))
    def test_mean_after_observations(self, heads):
        p = BetaPosterior()
        for h in heads:
            p = beta_update(p, h)
        assert p.mean == (1 + sum(heads)) / (2 + len(heads))

    def test_prior_heads_probability(self):
        assert 1 - BetaPosterior(2, 1).cdf(0.5) == pytest.approx(0.75, abs=1e-15)

    def test_sampled_best_response_frequency(self):
        post, rng, n = BetaPosterior(2, 1), RandomSource(4), 10**5
        heads = sum(best_response_p1(post.sample(rng)) == 1.0 for _ in range(n))
        assert abs(heads / n - 0.75) <= 0.01

    @settings(max_examples=200)
    @given(st.integers(1, 300), st.integers(1, 300), st.floats(1e-6, 1 - 1e-6))
    def test_quantile_matches_bisection(self, a, b, u):
        p = BetaPosterior(a, b)
        assert abs(p.quantile(u) - quantile_by_bisection(p, u)) <= 1e-10

    @pytest.mark.parametrize("a, b, u", [(1, 1, 0.3), (2, 1, 0.5), (7, 3, 0.01), (40, 55, 0.9), (500, 480, 0.5)])
    def test_quantile_against_high_precision(self, a, b, u):
        mpmath.mp.dps = 40
        ref = mpmath.findroot(lambda x: mpmath.betainc(a, b, 0, x, regularized=True) - u, (0.0, 1.0), solver="bisect")
        assert abs(BetaPosterior(a, b).quantile(u) - float(ref)) <= 1e-12

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            BetaPosterior(0, 1)


class TestMatchingPennies:
    def test_payoffs(self):
        assert MATCHING_PENNIES(H, H) == (1.0, -1.0)
        assert MATCHING_PENNIES(H, T) == (-1.0, 1.0)

    def test_zero_sum_each_round(self):
        tr = play_matching_pennies(500, RandomSource(2))
        np.testing.assert_array_equal(tr.u + tr.v, 0)

    def test_reproducible(self):
        a = play_matching_pennies(300, RandomSource(77))
        b = play_matching_pennies(300, RandomSource(77))
        np.testing.assert_array_equal(a.moves, b.moves)
        np.testing.assert_array_equal(a.theta_mean, b.theta_mean)

    def test_first_round_heads_rate(self):
        n = 10**5
        heads = sum(play_matching_pennies(1, RandomSource(s)).moves[0, 0] == H for s in range(n))
        assert abs(heads / n - 0.5) <= 0.01

    def test_means_track_opponent_counts(self):
        tr = play_matching_pennies(200, RandomSource(9))
        heads2 = np.cumsum(tr.moves[:, 1] == H)
        np.testing.assert_allclose(tr.theta_mean, (1 + heads2) / (2 + tr.t), rtol=1e-15)

    def test_long_run_near_half(self):
        tr = play_matching_pennies(10**4, RandomSource(0))
        assert abs(tr.theta_mean[-1] - 0.5) <= 0.05 and abs(tr.xi_mean[-1] - 0.5) <= 0.05

    def test_bimatrix_validation(self):
        with pytest.raises(ValueError):
            Bimatrix(np.zeros((2, 2)))


class TestDeltaKL:
    def test_no_learning_no_change(self):
        assert delta_kl([0.5, 0.5], {0: [0.5, 0.5], 1: [0.5, 0.5]}, [0.3, 0.7], {0: 0.3, 1: 0.7}) == 0.0

    def test_generative_equal_predictive(self):
        assert delta_kl([0.3, 0.7], {0: [0.3, 0.7]}, [0.3, 0.7], {0: 1.0}) == 0.0

    def test_two_hypothesis_example(self):
        # hypotheses predict (0.8, 0.2) and (0.3, 0.7); the first generates the data
        L = np.array([[0.8, 0.2], [0.3, 0.7]])
        w = np.array([0.5, 0.5])
        q = L[0]
        # hand computation
        mix = w @ L
        before = sum(q * np.log(q / mix))
        after = 0.0
        for o in range(2):
            post = w * L[:, o] / (w * L[:, o]).sum()
            after += q[o] * sum(q * np.log(q / (post @ L)))
        value = mixture_delta_kl(w, L, q)
        assert value == pytest.approx(after - before, abs=1e-15)
        assert value < 0
        bound = delta_kl_bound(w, L, 0, q)
        assert value <= bound.total + 1e-12
        assert bound.prior_term == pytest.approx(math.log(2))

    @settings(max_examples=300)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(2, 4))
    def test_bound_holds(self, seed, n, m):
        gen = np.random.default_rng(seed)
        w = gen.dirichlet(np.ones(n))
        L = gen.dirichlet(np.ones(m), size=n)
        star = int(gen.integers(n))
        q = L[star]
        assert mixture_delta_kl(w, L, q) <= delta_kl_bound(w, L, star, q).total + 1e-12

    def test_support_violation(self):
        with pytest.raises(DivergenceError):
            delta_kl([1.0, 0.0], {0: [1.0, 0.0]}, [0.5, 0.5], {0: 1.0})


class TestStrictNash:
    GRID = [[i / 100, 1 - i / 100] for i in range(1, 100)]

    def test_mixed_equilibrium_is_locked_in(self):
        half = [0.5, 0.5]
        check = strict_nash_check(half, half, half, half, self.GRID)
        assert check.is_strict and check.skipped == 2 and check.warnings

    def test_wrong_prediction_fails(self):
        half = [0.5, 0.5]
        assert not strict_nash_check(half, [0.7, 0.3], half, half, self.GRID)

    def test_empty_grid_is_vacuous(self):
        check = strict_nash_check([0.5, 0.5], [0.5, 0.5], [0.5, 0.5], [0.5, 0.5], [])
        assert check.is_strict and check.vacuous and "vacuous" in check.warnings[0]
