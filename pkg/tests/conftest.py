import numpy as np
import pytest
from hypothesis import strategies as st

from genthompson.core import ConditionalTable, all_histories


@st.composite
def simplex(draw, n, min_mass=0.0):
    """Probability vector of length n with every entry >= min_mass."""
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n))
    p = np.array(raw) / sum(raw)
    if min_mass:
        p = min_mass + (1 - n * min_mass) * p
    return p / p.sum()


def random_tables(gen, n_actions, n_obs, horizon):
    """Random full-coverage policy and observation tables up to ``horizon``."""
    policy, law = {}, {}
    for t in range(horizon):
        for h in all_histories(n_actions, n_obs, t):
            policy[(h.key(), None)] = gen.dirichlet(np.ones(n_actions))
            for a in range(n_actions):
                law[(h.key(), a)] = gen.dirichlet(np.ones(n_obs))
    return ConditionalTable(policy), ConditionalTable(law)


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)
