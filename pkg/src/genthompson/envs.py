"""Environments: tabular laws, the two-bulb causal device and the k-state chain."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np

from .bayes import Hypothesis
from .core import ConditionalTable, History, RandomSource, Symbol
from . import planning

A, B = 0, 1
NO_REWARD, REWARD = 0, 1
CHAIN_ACTIONS = ("A", "B")


@dataclass(frozen=True)
class TabularEnv:
    """Environment given by an observation table keyed on (prefix, action)."""

    law: ConditionalTable

    def observation_distribution(self, history: History) -> np.ndarray:
        return self.law(history.complete_part(), history.last_action)


# ---------------------------------------------------------------------------
# chain MDP


@dataclass(frozen=True)
class ChainMDP:
    """Only ``k`` consecutive correct actions pay; any other action resets.

    The correct action is A, or B when ``swap`` is set.
    """

    k: int
    swap: bool = False
    state: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 <= self.state <= self.k:
            raise ValueError(f"state {self.state} outside [0, {self.k}]")

    @property
    def correct_action(self) -> Symbol:
        return B if self.swap else A


def chain_step(m: ChainMDP, action: Symbol) -> Tuple[int, ChainMDP]:
    if action not in (A, B):
        raise ValueError(f"chain action must be A (0) or B (1), got {action}")
    if action != m.correct_action:
        return NO_REWARD, replace(m, state=0)
    nxt = m.state + 1
    if nxt == m.k:
        return REWARD, replace(m, state=0)
    return NO_REWARD, replace(m, state=nxt)


def chain_state(k: int, swap: bool, prefix: History) -> int:
    """Chain position after ``prefix``, read off the trailing run of correct actions."""
    correct = B if swap else A
    run = 0
    for step in reversed(prefix.steps):
        if step.action != correct:
            break
        run += 1
    return run % k


def chain_predictor(k: int, swap: bool):
    """Deterministic reward law of ``ChainMDP(k, swap)`` as a history predictor."""
    win = np.array([0.0, 1.0])
    lose = np.array([1.0, 0.0])
    win.setflags(write=False)
    lose.setflags(write=False)
    correct = B if swap else A

    def predictor(prefix: History, action: Symbol) -> np.ndarray:
        if action == correct and chain_state(k, swap, prefix) + 1 == k:
            return win
        return lose

    return predictor


@dataclass(frozen=True)
class ChainEnv:
    """``run_interaction`` adapter for the chain."""

    k: int
    swap: bool = False

    def observation_distribution(self, history: History) -> np.ndarray:
        return chain_predictor(self.k, self.swap)(history.complete_part(), history.last_action)


def chain_reward_utility(history: History) -> float:
    return float(sum(s.observation for s in history.steps))


def _constant_policy(action: Symbol):
    row = np.zeros(2)
    row[action] = 1.0
    row.setflags(write=False)
    return lambda prefix: row


@lru_cache(maxsize=64)
def chain_hypotheses(k: int, horizon: int, verify: bool = True) -> Tuple[Hypothesis, Hypothesis]:
    """Hypotheses for the plain and the swapped chain, each with its optimal policy.

    Policies are always-A and always-B. With ``verify`` the constant action is
    checked to be among the backward-induction optimal actions at every
    decision history, over the longest planning horizon the enumeration
    guard allows (capped by ``horizon``). Results are cached per argument set.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    hyps = []
    for swap, action, name in ((False, A, "env1"), (True, B, "env2")):
        predictor = chain_predictor(k, swap)
        if verify:
            T = min(horizon, planning.max_horizon(2, 2))
            q = planning.action_values(predictor, chain_reward_utility, T, n_actions=2)
            for key, values in q.items():
                if values[action] < values.max() - planning.TIE_TOL:
                    raise AssertionError(f"{CHAIN_ACTIONS[action]} is not optimal in {name} at {key}")
        hyps.append(Hypothesis(name, predictor, _constant_policy(action)))
    return hyps[0], hyps[1]


# ---------------------------------------------------------------------------
# two-bulb device

THETA, NOT_THETA = "theta", "not_theta"
Intervention = Optional[Tuple[str, bool]]


@dataclass(frozen=True)
class LightBulbDevice:
    """Green bulb X and red bulb Y; under ``theta`` X drives Y, otherwise Y drives X."""

    truth: str = THETA
    cause_prior: Fraction = Fraction(1, 2)
    effect_given_cause: Fraction = Fraction(3, 4)
    effect_given_not_cause: Fraction = Fraction(1, 4)

    def __post_init__(self):
        if self.truth not in (THETA, NOT_THETA):
            raise ValueError(f"truth must be {THETA!r} or {NOT_THETA!r}")

    @property
    def order(self) -> Tuple[str, str]:
        return ("X", "Y") if self.truth == THETA else ("Y", "X")


def _check_intervention(intervention: Intervention) -> None:
    if intervention is not None and intervention[0] not in ("X", "Y"):
        raise ValueError(f"can only intervene X or Y, got {intervention[0]!r}")


def device_emit(d: LightBulbDevice, intervention: Intervention, rng: RandomSource) -> Tuple[bool, bool]:
    """Sample (X on, Y on); a clamped variable skips its mechanism and draw."""
    _check_intervention(intervention)
    cause, effect = d.order
    values: Dict[str, bool] = {}
    if intervention is not None and intervention[0] == cause:
        values[cause] = bool(intervention[1])
    else:
        values[cause] = rng.uniform() < d.cause_prior
    if intervention is not None and intervention[0] == effect:
        values[effect] = bool(intervention[1])
    else:
        p = d.effect_given_cause if values[cause] else d.effect_given_not_cause
        values[effect] = rng.uniform() < p
    return values["X"], values["Y"]


def device_joint(d: LightBulbDevice, intervention: Intervention = None) -> Dict[Tuple[bool, bool], Fraction]:
    """Exact joint law of (X on, Y on) for the device's true mechanism."""
    _check_intervention(intervention)
    cause, effect = d.order
    out = {}
    for c in (True, False):
        if intervention is not None and intervention[0] == cause:
            pc = Fraction(int(c == intervention[1]))
        else:
            pc = d.cause_prior if c else 1 - d.cause_prior
        for e in (True, False):
            if intervention is not None and intervention[0] == effect:
                pe = Fraction(int(e == intervention[1]))
            else:
                pe_on = d.effect_given_cause if c else d.effect_given_not_cause
                pe = pe_on if e else 1 - pe_on
            vals = {cause: c, effect: e}
            out[(vals["X"], vals["Y"])] = pc * pe
    return out


# one-round flattening: action = which switch to set, observation = both bulbs
LIGHTBULB_ACTIONS: Tuple[Intervention, ...] = (None, ("X", True), ("X", False), ("Y", True), ("Y", False))
LIGHTBULB_OBSERVATIONS: Tuple[Tuple[bool, bool], ...] = ((True, True), (True, False), (False, True), (False, False))


def lightbulb_observation(x: bool, y: bool) -> Symbol:
    return LIGHTBULB_OBSERVATIONS.index((bool(x), bool(y)))


def lightbulb_hypotheses() -> Tuple[Hypothesis, Hypothesis]:
    """The device as two mixture-agent hypotheses over a single round.

    Each hypothesis predicts the bulbs under any switch setting, and its
    policy switches on the bulb it believes to be the cause.
    """
    hyps = []
    for truth, act in ((THETA, ("X", True)), (NOT_THETA, ("Y", True))):
        dev = LightBulbDevice(truth)
        rows = []
        for iv in LIGHTBULB_ACTIONS:
            joint = device_joint(dev, iv)
            rows.append(np.array([float(joint[xy]) for xy in LIGHTBULB_OBSERVATIONS]))
        policy_row = np.zeros(len(LIGHTBULB_ACTIONS))
        policy_row[LIGHTBULB_ACTIONS.index(act)] = 1.0
        hyps.append(
            Hypothesis(
                truth,
                lambda prefix, a, rows=rows: rows[a],
                lambda prefix, row=policy_row: row,
            )
        )
    return hyps[0], hyps[1]


def default_chain_horizon(k: int) -> int:
    return min(50 * 2**k, 10**6)
