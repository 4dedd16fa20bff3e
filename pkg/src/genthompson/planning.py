"""Finite-horizon expected utility, backward induction and related diagnostics.

Policies are callables ``policy(prefix) -> action law`` and predictors are
callables ``predictor(prefix, action) -> observation law``;
:class:`~genthompson.core.ConditionalTable` satisfies both call shapes.
Utilities map a complete history of the planning horizon to a float.
Branches with zero probability are never expanded.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, Sequence, Tuple

import numpy as np

from .core import EMPTY, ConditionalTable, History, HistoryKey, kl_divergence
from .errors import ComplexityGuardError, UncoveredHistoryError

UtilityFn = Callable[[History], float]
CoverageError = UncoveredHistoryError

ENUMERATION_BUDGET = 10**7
TIE_TOL = 1e-12


class UtilityTable:
    """Utility given as an explicit table over complete histories."""

    def __init__(self, table: Dict[HistoryKey, float]):
        self._table = {tuple(k): float(v) for k, v in table.items()}

    def __call__(self, history: History) -> float:
        try:
            return self._table[history.key()]
        except KeyError:
            raise CoverageError(f"utility undefined on history {history.key()}") from None


def max_horizon(n_actions: int, n_observations: int, budget: int = ENUMERATION_BUDGET) -> int:
    """Largest T with ``(|A| |O|)^T <= budget``."""
    base = n_actions * n_observations
    if base <= 1:
        return budget
    T = 0
    while base ** (T + 1) <= budget:
        T += 1
    return T


def _guard(n_actions: int, n_observations: int, horizon: int) -> None:
    if (n_actions * n_observations) ** horizon > ENUMERATION_BUDGET:
        raise ComplexityGuardError(
            f"|A x O|^T = {n_actions * n_observations}^{horizon} exceeds the budget of {ENUMERATION_BUDGET}"
        )


def expected_utility(policy: Callable, predictor: Callable, u: UtilityFn, horizon: int) -> float:
    """Expectation of ``u`` under the policy-prediction product, by enumeration."""

    def value(h: History, t: int) -> float:
        if t == horizon:
            return float(u(h))
        total = 0.0
        for a, pa in enumerate(policy(h)):
            if pa == 0:
                continue
            for o, po in enumerate(predictor(h, a)):
                if po == 0:
                    continue
                total += pa * po * value(h.extend(a, o), t + 1)
        return total

    return value(EMPTY, 0)


def action_values(predictor: Callable, u: UtilityFn, horizon: int, n_actions: int) -> Dict[HistoryKey, np.ndarray]:
    """Optimal action values at every decision history reachable under the predictor."""
    n_obs = len(predictor(EMPTY, 0))
    _guard(n_actions, n_obs, horizon)
    q_table: Dict[HistoryKey, np.ndarray] = {}

    def value(h: History, t: int) -> float:
        if t == horizon:
            return float(u(h))
        q = np.zeros(n_actions)
        for a in range(n_actions):
            for o, po in enumerate(predictor(h, a)):
                if po > 0:
                    q[a] += po * value(h.extend(a, o), t + 1)
        q_table[h.key()] = q
        return float(q.max())

    value(EMPTY, 0)
    return q_table


def greedy_action(q: np.ndarray) -> int:
    """Lowest index within ``TIE_TOL`` of the best value."""
    best = q.max()
    return int(np.flatnonzero(q >= best - TIE_TOL * max(1.0, abs(best)))[0])


def backward_induction(predictor: Callable, u: UtilityFn, horizon: int, n_actions: int) -> ConditionalTable:
    """Deterministic optimal policy over every reachable decision history."""
    rows = {}
    for key, q in action_values(predictor, u, horizon, n_actions).items():
        row = np.zeros(n_actions)
        row[greedy_action(q)] = 1.0
        rows[(key, None)] = row
    return ConditionalTable(rows)


def seu_order_comparison(prior, per_theta_predictors, utility) -> Tuple[float, float]:
    """One-step values with expectation outside vs inside the maximisation.

    ``per_theta_predictors[i, a, o]`` is the outcome law under hypothesis ``i``
    after action ``a`` and ``utility[a, o]`` the payoff. Returns
    ``(max_a E_theta[...], E_theta[max_a ...])``; the second is never smaller.
    """
    w = np.asarray(getattr(prior, "weights", prior), dtype=float)
    pred = np.asarray(per_theta_predictors, dtype=float)
    U = np.asarray(utility, dtype=float)
    if pred.ndim != 3 or pred.shape[0] != w.size or pred.shape[1:] != U.shape:
        raise ValueError(f"shape mismatch: prior {w.shape}, predictors {pred.shape}, utility {U.shape}")
    per_theta = np.einsum("tao,ao->ta", pred, U)  # expected payoff of action a under theta
    # maximising over mixed P' is attained at a pure action because the objective is linear
    value_a = float((w @ per_theta).max())
    value_b = float(w @ per_theta.max(axis=1))
    return value_a, value_b


def adaptive_code_cost(candidate, hyps: Sequence, prior, horizon: int) -> float:
    """Prior-weighted sum of per-step action and observation KL costs.

    ``candidate`` and each hypothesis expose ``policy(prefix)`` and
    ``predictor(prefix, action)``. Histories are enumerated under each
    hypothesis's own interaction law up to ``horizon``. Returns ``inf`` when
    the candidate gives zero mass somewhere a weighted hypothesis does not.
    """
    w = np.asarray(getattr(prior, "weights", prior), dtype=float)
    total = 0.0
    for weight, hyp in zip(w, hyps):
        if weight == 0:
            continue
        cost = 0.0
        frontier = [(EMPTY, 1.0)]
        for _ in range(horizon):
            nxt = []
            for h, ph in frontier:
                pa = np.asarray(hyp.policy(h), dtype=float)
                cost += ph * kl_divergence(pa, candidate.policy(h))
                for a in np.flatnonzero(pa > 0):
                    po = np.asarray(hyp.predictor(h, int(a)), dtype=float)
                    cost += ph * pa[a] * kl_divergence(po, candidate.predictor(h, int(a)))
                    for o in np.flatnonzero(po > 0):
                        nxt.append((h.extend(int(a), int(o)), ph * pa[a] * po[o]))
            if math.isinf(cost):
                return math.inf
            frontier = nxt
        total += weight * cost
    return total
