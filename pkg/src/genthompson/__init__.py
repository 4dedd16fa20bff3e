"""Generalized Thompson sampling: mixture agents, co-adapting players and causal induction."""

from .bayes import (
    BeliefState,
    Hypothesis,
    MixtureAgent,
    conditioned_posterior,
    intervened_posterior,
    replicator_step,
)
from .core import EMPTY, Alphabet, ConditionalTable, History, RandomSource, interaction_probability, run_interaction

__version__ = "0.1.0"

__all__ = [
    "EMPTY",
    "Alphabet",
    "BeliefState",
    "ConditionalTable",
    "History",
    "Hypothesis",
    "MixtureAgent",
    "RandomSource",
    "conditioned_posterior",
    "interaction_probability",
    "intervened_posterior",
    "replicator_step",
    "run_interaction",
]
