"""Bayesian mixture agent with intervened posteriors and Thompson action selection.

Each :class:`Hypothesis` pairs a predictor ``predictor(prefix, action)``
returning the observation law with a policy ``policy(prefix)`` returning the
action law. The agent's own actions are interventions: they enter the
posterior only through the observations that follow them, never through
their policy likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .core import EMPTY, SIMPLEX_TOL, History, RandomSource, Symbol, check_distribution, inverse_cdf
from .errors import DegenerateFitnessError, ImpossibleObservationError

Predictor = Callable[[History, Symbol], Sequence[float]]
Policy = Callable[[History], Sequence[float]]


@dataclass(frozen=True)
class Hypothesis:
    id: str
    predictor: Predictor
    policy: Policy


@dataclass(frozen=True)
class BeliefState:
    weights: np.ndarray

    def __post_init__(self):
        w = check_distribution(self.weights, tol=SIMPLEX_TOL)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n: int) -> "BeliefState":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def delta(cls, n: int, index: int) -> "BeliefState":
        w = np.zeros(n)
        w[index] = 1.0
        return cls(w)

    def __len__(self) -> int:
        return self.weights.size

    def __getitem__(self, i: int) -> float:
        return float(self.weights[i])


def _log(x) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(x, dtype=float))


def _log_update(logw: np.ndarray, loglik: np.ndarray) -> np.ndarray:
    new = logw + loglik
    top = new.max()
    if top == -np.inf:
        raise ImpossibleObservationError("every hypothesis assigns zero likelihood to the data")
    return new - top


def _normalize(logw: np.ndarray) -> BeliefState:
    w = np.exp(logw)
    return BeliefState(w / w.sum())


def _observation_loglik(hyps: Sequence[Hypothesis], prefix: History, a: Symbol, o: Symbol) -> np.ndarray:
    return _log([hyp.predictor(prefix, a)[o] for hyp in hyps])


def _action_loglik(hyps: Sequence[Hypothesis], prefix: History, a: Symbol) -> np.ndarray:
    return _log([hyp.policy(prefix)[a] for hyp in hyps])


def _posterior(prior: BeliefState, hyps: Sequence[Hypothesis], h: History, condition_all: bool) -> BeliefState:
    if len(prior) != len(hyps):
        raise ValueError(f"prior has {len(prior)} weights for {len(hyps)} hypotheses")
    logw = _log(prior.weights)
    complete = h.complete_part()
    for t, step in enumerate(complete.steps):
        prefix = complete.prefix(t)
        if condition_all or not step.intervened:
            logw = _log_update(logw, _action_loglik(hyps, prefix, step.action))
        logw = _log_update(logw, _observation_loglik(hyps, prefix, step.action, step.observation))
    return _normalize(logw)


def intervened_posterior(prior: BeliefState, hyps: Sequence[Hypothesis], h: History) -> BeliefState:
    """Posterior over hypotheses treating intervened actions as uninformative.

    Weights are proportional to the prior times the product of observation
    likelihoods. Steps whose action is *not* flagged as intervened are
    conditioned on as ordinary evidence. A dangling final action is ignored.
    """
    return _posterior(prior, hyps, h, condition_all=False)


def conditioned_posterior(prior: BeliefState, hyps: Sequence[Hypothesis], h: History) -> BeliefState:
    """Ordinary Bayes posterior that also conditions on the action likelihoods."""
    return _posterior(prior, hyps, h, condition_all=True)


def replicator_step(population, fitness) -> np.ndarray:
    """One discrete replicator update ``x_i f_i / sum_j x_j f_j``."""
    x = check_distribution(population, tol=SIMPLEX_TOL)
    f = np.asarray(fitness, dtype=float)
    if f.shape != x.shape:
        raise ValueError(f"fitness shape {f.shape} does not match population {x.shape}")
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise ValueError("fitness must be finite and nonnegative")
    weighted = x * f
    total = weighted.sum()
    if total == 0:
        raise DegenerateFitnessError("total fitness on the population support is zero")
    return weighted / total


class MixtureAgent:
    """Thompson sampling agent over a finite hypothesis set.

    The belief is kept as max-normalized log-weights so that long runs do not
    underflow. ``resample_period`` controls how many rounds a sampled
    hypothesis is kept before drawing a fresh one; a kept sample is dropped
    early if its posterior weight falls to zero. With ``debug=True`` every
    update is checked against a full batch replay from the prior.
    """

    def __init__(
        self,
        hypotheses: Sequence[Hypothesis],
        prior: Optional[BeliefState] = None,
        resample_period: int = 1,
        debug: bool = False,
    ):
        if not hypotheses:
            raise ValueError("need at least one hypothesis")
        if resample_period < 1:
            raise ValueError("resample_period must be >= 1")
        self.hypotheses: Tuple[Hypothesis, ...] = tuple(hypotheses)
        self.prior = prior if prior is not None else BeliefState.uniform(len(self.hypotheses))
        if len(self.prior) != len(self.hypotheses):
            raise ValueError("prior length does not match hypothesis count")
        self.resample_period = resample_period
        self.debug = debug
        self.history: History = EMPTY
        self.pending: Optional[int] = None
        self._age = 0
        self._logw = _log(self.prior.weights)

    def copy(self) -> "MixtureAgent":
        new = MixtureAgent.__new__(MixtureAgent)
        new.__dict__.update(self.__dict__)
        new._logw = self._logw.copy()
        return new

    @property
    def belief(self) -> BeliefState:
        return _normalize(self._logw)

    def predictive_action(self) -> np.ndarray:
        """Belief-weighted mixture of the hypothesis policies at the current history."""
        if self.history.dangling:
            raise ValueError("an action is already awaiting its observation")
        w = self.belief.weights
        rows = np.array([hyp.policy(self.history) for hyp in self.hypotheses], dtype=float)
        return w @ rows

    def predictive_observation(self) -> np.ndarray:
        """Belief-weighted mixture of the predictors for the dangling action."""
        if not self.history.dangling:
            raise ValueError("predictive_observation needs a dangling action")
        prefix = self.history.complete_part()
        a = self.history.last_action
        w = self.belief.weights
        rows = np.array([hyp.predictor(prefix, a) for hyp in self.hypotheses], dtype=float)
        return w @ rows

    def _needs_sample(self) -> bool:
        if self.pending is None or self._age >= self.resample_period:
            return True
        return self._logw[self.pending] == -np.inf

    def thompson_step(self, rng: RandomSource) -> Tuple[Symbol, int]:
        """Sample a hypothesis from the belief, then an action from its policy."""
        if self.history.dangling:
            raise ValueError("an action is already awaiting its observation")
        if self._needs_sample():
            self.pending = inverse_cdf(self.belief.weights, rng.uniform())
            self._age = 0
        probs = check_distribution(self.hypotheses[self.pending].policy(self.history), tol=1e-9)
        action = inverse_cdf(probs, rng.uniform())
        self.history = self.history.with_action(action, intervened=True)
        return action, self.pending

    def record_action(self, action: Symbol) -> None:
        """Register an externally drawn action as an intervention."""
        self.history = self.history.with_action(action, intervened=True)

    def observe(self, o: Symbol) -> "MixtureAgent":
        """Attach the observation to the dangling action and update the belief."""
        if not self.history.dangling:
            raise ValueError("observe needs a dangling action")
        prefix = self.history.complete_part()
        a = self.history.last_action
        self._logw = _log_update(self._logw, _observation_loglik(self.hypotheses, prefix, a, o))
        self.history = self.history.with_observation(o)
        self._age += 1
        if self.resample_period == 1:
            self.pending = None
        if self.debug:
            self.check_replay()
        return self

    def check_replay(self) -> None:
        replay = intervened_posterior(self.prior, self.hypotheses, self.history)
        if not np.array_equal(replay.weights, self.belief.weights):
            raise AssertionError(f"belief drifted from replay: {self.belief.weights} vs {replay.weights}")

    # run_interaction protocol; the marginal mixture policy is used, so a
    # persistent sample (resample_period > 1) needs an explicit thompson_step loop
    def action_distribution(self, history: History) -> np.ndarray:
        return self.predictive_action()

    def observation_update(self, history: History) -> None:
        last = history.steps[-1]
        self.record_action(last.action)
        self.observe(last.observation)


def thompson_step(agent: MixtureAgent, rng: RandomSource) -> Tuple[Symbol, int]:
    return agent.thompson_step(rng)


def observe(agent: MixtureAgent, o: Symbol) -> MixtureAgent:
    return agent.observe(o)


def predictive_action(agent: MixtureAgent) -> np.ndarray:
    return agent.predictive_action()


def predictive_observation(agent: MixtureAgent) -> np.ndarray:
    return agent.predictive_observation()


def mixture_behavior(hyps: Sequence[Hypothesis], prior: BeliefState, name: str = "mixture") -> Hypothesis:
    """The mixture agent's policy and predictor as pure functions of history."""
    hyps = tuple(hyps)

    def policy(prefix: History) -> np.ndarray:
        w = intervened_posterior(prior, hyps, prefix).weights
        return w @ np.array([hyp.policy(prefix) for hyp in hyps], dtype=float)

    def predictor(prefix: History, action: Symbol) -> np.ndarray:
        w = intervened_posterior(prior, hyps, prefix).weights
        return w @ np.array([hyp.predictor(prefix, action) for hyp in hyps], dtype=float)

    return Hypothesis(name, predictor, policy)


def constant_hypothesis(id: str, observation_law: Sequence[float], action_law: Sequence[float]) -> Hypothesis:
    """Hypothesis whose laws ignore the history (and the action, for the predictor)."""
    obs = check_distribution(observation_law)
    act = check_distribution(action_law)
    return Hypothesis(id, lambda prefix, a: obs, lambda prefix: act)


__all__ = [
    "BeliefState",
    "Hypothesis",
    "MixtureAgent",
    "conditioned_posterior",
    "constant_hypothesis",
    "intervened_posterior",
    "mixture_behavior",
    "observe",
    "predictive_action",
    "predictive_observation",
    "replicator_step",
    "thompson_step",
]
