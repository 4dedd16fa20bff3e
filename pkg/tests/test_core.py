import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genthompson.core import (
    EMPTY,
    Alphabet,
    ConditionalTable,
    ConstantAgent,
    ConstantEnvironment,
    History,
    RandomSource,
    Step,
    all_histories,
    interaction_probability,
    inverse_cdf,
    run_interaction,
)
from genthompson.errors import InvalidDistributionError, ProtocolViolationError, UncoveredHistoryError

from conftest import random_tables

HALF = ConditionalTable.stationary([0.5, 0.5], [None], [h.key() for t in range(3) for h in all_histories(2, 2, t)])
HALF_LAW = ConditionalTable.stationary([0.5, 0.5], [0, 1], [h.key() for t in range(3) for h in all_histories(2, 2, t)])


class TestInteractionProbability:
    def test_empty_history(self):
        assert interaction_probability(HALF, HALF_LAW, EMPTY) == 1.0

    def test_deterministic_step(self):
        policy = ConditionalTable({((), None): [1.0, 0.0]})
        law = ConditionalTable({((), 0): [0.0, 1.0]})
        assert interaction_probability(policy, law, History.from_pairs([(0, 1)])) == 1.0

    def test_two_steps_all_half(self):
        h = History.from_pairs([(0, 1), (1, 0)])
        assert interaction_probability(HALF, HALF_LAW, h) == 1 / 16
        total = sum(interaction_probability(HALF, HALF_LAW, g) for g in all_histories(2, 2, 2))
        assert total == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("t", [0, 1, 2, 3, 4])
    def test_sums_to_one_over_all_histories(self, gen, t):
        policy, law = random_tables(gen, 2, 2, t)
        total = sum(interaction_probability(policy, law, h) for h in all_histories(2, 2, t))
        assert abs(total - 1.0) <= 1e-12

    def test_uncovered_prefix(self):
        policy = ConditionalTable({((), None): [0.5, 0.5]})
        law = ConditionalTable({((), 0): [0.5, 0.5], ((), 1): [0.5, 0.5]})
        with pytest.raises(UncoveredHistoryError):
            interaction_probability(policy, law, History.from_pairs([(0, 0), (0, 0)]))

    def test_rejects_dangling(self):
        with pytest.raises(ValueError):
            interaction_probability(HALF, HALF_LAW, EMPTY.with_action(0))


class TestRunInteraction:
    def test_deterministic_coupling(self):
        h = run_interaction(ConstantAgent([1.0, 0.0]), ConstantEnvironment([0.0, 1.0]), 3, RandomSource(0))
        assert h.key() == ((0, 1), (0, 1), (0, 1))
        assert all(s.intervened for s in h)

    def test_same_seed_same_history(self):
        agent, env = ConstantAgent([0.3, 0.7]), ConstantEnvironment([0.6, 0.1, 0.3])
        h1 = run_interaction(agent, env, 50, RandomSource(99))
        h2 = run_interaction(agent, env, 50, RandomSource(99))
        assert h1 == h2
        assert h1 != run_interaction(agent, env, 50, RandomSource(100))

    def test_uniform_action_frequency_over_seeds(self):
        agent, env = ConstantAgent([0.5, 0.5]), ConstantEnvironment([0.5, 0.5])
        n = 10**5
        zeros = sum(run_interaction(agent, env, 1, RandomSource(s)).steps[0].action == 0 for s in range(n))
        assert abs(zeros / n - 0.5) <= 0.01

    @pytest.mark.parametrize(
        "agent, env, side",
        [
            (ConstantAgent([0.6, 0.6]), ConstantEnvironment([1.0]), "agent"),
            (ConstantAgent([1.0]), ConstantEnvironment([-0.5, 1.5]), "environment"),
        ],
    )
    def test_protocol_violation_names_side(self, agent, env, side):
        with pytest.raises(ProtocolViolationError) as info:
            run_interaction(agent, env, 2, RandomSource(0))
        assert info.value.side == side
        assert info.value.round_index == 1

    def test_violation_later_round(self):
        class Flaky:
            def action_distribution(self, h):
                return [1.0, 0.0] if h.rounds < 2 else [0.5, 0.4]

        with pytest.raises(ProtocolViolationError) as info:
            run_interaction(Flaky(), ConstantEnvironment([1.0]), 5, RandomSource(0))
        assert info.value.round_index == 3

    def test_rounds_positive(self):
        with pytest.raises(ValueError):
            run_interaction(ConstantAgent([1.0]), ConstantEnvironment([1.0]), 0, RandomSource(0))

    def test_reproducible_across_processes(self):
        code = (
            "from genthompson.core import *\n"
            "h = run_interaction(ConstantAgent([0.2, 0.5, 0.3]), ConstantEnvironment([0.5, 0.5]), 200, RandomSource(7))\n"
            "print(h.key())"
        )
        outs = [subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout for _ in range(2)]
        assert outs[0] == outs[1]
        local = run_interaction(ConstantAgent([0.2, 0.5, 0.3]), ConstantEnvironment([0.5, 0.5]), 200, RandomSource(7))
        assert outs[0].strip() == str(local.key())


class TestConditionalTable:
    @given(st.lists(st.floats(0, 2), min_size=1, max_size=5))
    def test_rejects_off_simplex(self, row):
        if abs(sum(row) - 1) <= 1e-12:
            ConditionalTable({((), None): row})
        else:
            with pytest.raises(InvalidDistributionError):
                ConditionalTable({((), None): row})

    def test_rejects_negative(self):
        with pytest.raises(InvalidDistributionError):
            ConditionalTable({((), 0): [1.5, -0.5]})

    def test_lookup_by_history_or_key(self):
        t = ConditionalTable({(((0, 1),), 1): [0.25, 0.75]})
        h = History.from_pairs([(0, 1)])
        np.testing.assert_array_equal(t(h, 1), t(((0, 1),), 1))
        with pytest.raises(UncoveredHistoryError):
            t(h, 0)

    def test_rows_read_only(self):
        t = ConditionalTable({((), None): [0.5, 0.5]})
        with pytest.raises(ValueError):
            t(EMPTY)[0] = 1.0


class TestHistory:
    def test_only_last_step_may_dangle(self):
        with pytest.raises(ValueError):
            History((Step(0), Step(1, True, 0)))

    def test_rounds_and_dangling(self):
        h = History.from_pairs([(0, 0), (1, 1)]).with_action(0)
        assert h.dangling and h.rounds == 2 and len(h) == 3
        assert h.with_observation(1).rounds == 3
        with pytest.raises(ValueError):
            h.with_action(1)
        with pytest.raises(ValueError):
            EMPTY.with_observation(0)

    def test_key_ignores_intervention_flag(self):
        a = History.from_pairs([(0, 1)], intervened=True)
        b = History.from_pairs([(0, 1)], intervened=False)
        assert a.key() == b.key() and a != b


class TestRandomSource:
    def test_identical_seeds(self):
        a, b = RandomSource(2**63 + 5), RandomSource(2**63 + 5)
        assert [a.uniform() for _ in range(20)] == [b.uniform() for _ in range(20)]

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_seed_range(self, seed):
        with pytest.raises(ValueError):
            RandomSource(seed)

    @given(st.floats(0, 1, exclude_max=True))
    def test_inverse_cdf_first_index_exceeding(self, u):
        probs = [0.25, 0.0, 0.5, 0.25]
        cum = np.cumsum(probs)
        assert inverse_cdf(probs, u) == int(np.argmax(cum > u))

    def test_rounding_gap_lands_on_last_supported(self):
        assert inverse_cdf([0.5, 0.5 - 1e-13, 0.0], 1 - 1e-14) == 1


def test_alphabet_labels():
    ab = Alphabet(("H", "T"))
    assert ab.size == 2 and ab.index("T") == 1 and ab.label(0) == "H"
    with pytest.raises(ValueError):
        ab.check(2)
    with pytest.raises(ValueError):
        Alphabet(("H", "H"))
