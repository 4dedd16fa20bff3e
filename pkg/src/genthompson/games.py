"""Two Thompson samplers playing a repeated bimatrix game.

Player 1 holds a Beta belief over player 2's heads-rate ``theta``; player 2
holds one over player 1's heads-rate ``xi``. Each round both sample a rate,
best-respond to it, and update on the opponent's realised move. Moves are
encoded H = 0, T = 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.special import betainc, betaincinv

from .core import RandomSource, check_distribution, kl_divergence
from .errors import DivergenceError

log = logging.getLogger(__name__)

H, T = 0, 1


@dataclass(frozen=True)
class Bimatrix:
    """``payoffs[a, o] = (U, V)`` for row move ``a`` of player 1 and ``o`` of player 2."""

    payoffs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.payoffs, dtype=float)
        if p.ndim != 3 or p.shape[2] != 2:
            raise ValueError(f"payoffs must have shape (rows, cols, 2), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("payoffs must be finite")
        p.setflags(write=False)
        object.__setattr__(self, "payoffs", p)

    def __call__(self, a: int, o: int) -> Tuple[float, float]:
        u, v = self.payoffs[a, o]
        return float(u), float(v)


MATCHING_PENNIES = Bimatrix(np.array([[(1, -1), (-1, 1)], [(-1, 1), (1, -1)]]))


def best_response_p1(theta: float) -> float:
    """Player 1's probability of H against an opponent playing H at rate ``theta``."""
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if theta < 0.5:
        return 0.0
    if theta == 0.5:
        return 0.5
    return 1.0


def best_response_p2(xi: float) -> float:
    """Player 2's probability of H against an opponent playing H at rate ``xi``."""
    if not 0 <= xi <= 1:
        raise ValueError(f"xi must lie in [0, 1], got {xi}")
    if xi < 0.5:
        return 1.0
    if xi == 0.5:
        return 0.5
    return 0.0


@dataclass(frozen=True)
class BetaPosterior:
    """Beta belief over an opponent's heads-rate; counts include the uniform prior's 1."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"alpha and beta must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    def cdf(self, x: float) -> float:
        return float(betainc(self.alpha, self.beta, x))

    def quantile(self, u: float) -> float:
        return float(betaincinv(self.alpha, self.beta, u))

    def sample(self, rng: RandomSource) -> float:
        """Inverse-CDF draw, one uniform per sample."""
        return self.quantile(rng.uniform())


def beta_update(p: BetaPosterior, opponent_played_heads: bool) -> BetaPosterior:
    if opponent_played_heads:
        return BetaPosterior(p.alpha + 1, p.beta)
    return BetaPosterior(p.alpha, p.beta + 1)


def quantile_by_bisection(p: BetaPosterior, u: float, tol: float = 1e-12) -> float:
    """Bisection on the regularised incomplete beta; slow reference for :meth:`BetaPosterior.quantile`."""
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if p.cdf(mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class GameAgentState:
    posterior: BetaPosterior = field(default_factory=BetaPosterior)
    role: int = 1
    rewards: List[float] = field(default_factory=list)

    def best_response(self, rate: float) -> float:
        return best_response_p1(rate) if self.role == 1 else best_response_p2(rate)


TRAJECTORY_COLUMNS = ("t", "theta_mean", "xi_mean", "u", "v", "cumulative_mean_u", "cumulative_mean_v")


@dataclass
class PenniesTrajectory:
    t: np.ndarray
    theta_mean: np.ndarray
    xi_mean: np.ndarray
    u: np.ndarray
    v: np.ndarray
    cumulative_mean_u: np.ndarray
    cumulative_mean_v: np.ndarray
    moves: np.ndarray  # (rounds, 2): player 1 move, player 2 move

    def rows(self):
        for i in range(self.t.size):
            yield tuple(getattr(self, c)[i] for c in TRAJECTORY_COLUMNS)

    def __len__(self) -> int:
        return self.t.size


def play_matching_pennies(rounds: int, rng: RandomSource, game: Bimatrix = MATCHING_PENNIES) -> PenniesTrajectory:
    """Run the two-player Thompson loop; means are recorded after each round's update.

    Per round the uniforms are consumed in the fixed order: player 1's rate,
    player 2's rate, player 1's move, player 2's move.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    p1 = GameAgentState(role=1)
    p2 = GameAgentState(role=2)
    debug = log.isEnabledFor(logging.DEBUG)
    out = np.zeros((rounds, 4))
    moves = np.zeros((rounds, 2), dtype=int)
    for i in range(rounds):
        theta = p1.posterior.sample(rng)
        xi = p2.posterior.sample(rng)
        pa = best_response_p1(theta)
        po = best_response_p2(xi)
        a = rng.categorical((pa, 1.0 - pa))
        o = rng.categorical((po, 1.0 - po))
        u, v = game(a, o)
        if debug:
            log.debug("round %d: theta=%.6f xi=%.6f moves=(%d, %d)", i + 1, theta, xi, a, o)
        p1.rewards.append(u)
        p2.rewards.append(v)
        p1.posterior = beta_update(p1.posterior, o == H)
        p2.posterior = beta_update(p2.posterior, a == H)
        out[i] = (p1.posterior.mean, p2.posterior.mean, u, v)
        moves[i] = (a, o)
    steps = np.arange(1, rounds + 1)
    return PenniesTrajectory(
        t=steps,
        theta_mean=out[:, 0],
        xi_mean=out[:, 1],
        u=out[:, 2],
        v=out[:, 3],
        cumulative_mean_u=np.cumsum(out[:, 2]) / steps,
        cumulative_mean_v=np.cumsum(out[:, 3]) / steps,
        moves=moves,
    )


# ---------------------------------------------------------------------------
# relative-entropy diagnostics


def delta_kl(
    predict_prior: Sequence[float],
    predict_posterior_by_data: Mapping[Hashable, Sequence[float]],
    generative: Sequence[float],
    data_law: Mapping[Hashable, float],
) -> float:
    """Expected one-step change of ``KL(generative || predictive)``.

    Negative values mean the predictive moves towards the generative law.
    """
    q = check_distribution(generative)
    before = kl_divergence(q, predict_prior)
    if math.isinf(before):
        raise DivergenceError("prior predictive misses mass of the generative law")
    after = 0.0
    for d, pd in data_law.items():
        if pd == 0:
            continue
        kl = kl_divergence(q, predict_posterior_by_data[d])
        if math.isinf(kl):
            raise DivergenceError(f"posterior predictive after data {d!r} misses mass of the generative law")
        after += pd * kl
    return after - before


def _mixture_parts(weights, likelihoods):
    w = check_distribution(weights)
    L = np.asarray(likelihoods, dtype=float)
    if L.shape[0] != w.size:
        raise ValueError("one likelihood row per hypothesis required")
    return w, L


def mixture_delta_kl(weights, likelihoods, generative, data_law: Optional[Sequence[float]] = None) -> float:
    """:func:`delta_kl` for a finite mixture whose data is one observation.

    ``likelihoods[i, o]`` is hypothesis ``i``'s predictive; data is drawn from
    ``data_law`` (defaults to ``generative``).
    """
    w, L = _mixture_parts(weights, likelihoods)
    data = generative if data_law is None else data_law
    posteriors = {}
    for d in range(L.shape[1]):
        post = w * L[:, d]
        if post.sum() > 0:
            posteriors[d] = (post / post.sum()) @ L
    law = {d: float(p) for d, p in enumerate(data)}
    return delta_kl(w @ L, posteriors, generative, law)


@dataclass(frozen=True)
class DeltaKLBound:
    observation_term: float
    data_term: float
    prior_term: float

    @property
    def total(self) -> float:
        return self.observation_term + self.data_term + self.prior_term


def delta_kl_bound(weights, likelihoods, theta_star: int, generative, data_law=None) -> DeltaKLBound:
    """Upper bound on :func:`mixture_delta_kl` from keeping only hypothesis ``theta_star``.

    The three terms are the generative-weighted log ratio of mixture to
    ``theta_star`` predictive, the same ratio averaged under the data law,
    and ``-log P(theta_star)``.
    """
    w, L = _mixture_parts(weights, likelihoods)
    q = np.asarray(generative, dtype=float)
    data = q if data_law is None else np.asarray(data_law, dtype=float)
    mix = w @ L
    star = L[theta_star]
    if w[theta_star] == 0 or np.any(star[(q > 0) | (data > 0)] == 0):
        raise DivergenceError("theta_star gives zero mass where the generative or data law does not")
    m = q > 0
    obs_term = float(np.sum(q[m] * np.log(mix[m] / star[m])))
    m = data > 0
    data_term = float(np.sum(data[m] * np.log(mix[m] / star[m])))
    return DeltaKLBound(obs_term, data_term, -math.log(w[theta_star]))


@dataclass(frozen=True)
class NashCheck:
    is_strict: bool
    vacuous: bool = False
    skipped: int = 0
    warnings: Tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.is_strict


def strict_nash_check(
    p1_action: Sequence[float],
    p1_prediction: Sequence[float],
    p2_action: Sequence[float],
    p2_prediction: Sequence[float],
    alternatives: Sequence[Sequence[float]],
) -> NashCheck:
    """Strict KL lock-in test of a candidate pair against a finite grid.

    Player 1's prediction of player 2 must be strictly closer (in KL from
    player 2's actual law) than every alternative, and likewise for player
    2's prediction of player 1. Alternatives that coincide with the
    candidate's own prediction are skipped and counted.
    """
    q_o, p_o = check_distribution(p2_action), check_distribution(p1_prediction)
    p_a, q_a = check_distribution(p1_action), check_distribution(p2_prediction)
    left_1 = kl_divergence(q_o, p_o)
    left_2 = kl_divergence(p_a, q_a)
    if not alternatives:
        return NashCheck(True, vacuous=True, warnings=("empty alternative grid: condition holds vacuously",))
    strict = True
    skipped = 0
    for alt in alternatives:
        alt = np.asarray(alt, dtype=float)
        if np.array_equal(alt, p_o):
            skipped += 1
        elif not left_1 < kl_divergence(q_o, alt):
            strict = False
        if np.array_equal(alt, q_a):
            skipped += 1
        elif not left_2 < kl_divergence(p_a, alt):
            strict = False
    warnings = (f"skipped {skipped} alternative(s) equal to the candidate",) if skipped else ()
    return NashCheck(strict, skipped=skipped, warnings=warnings)
