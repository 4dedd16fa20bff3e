"""Interaction loop, history bookkeeping and finite-alphabet probability tables.

Symbols are plain integers indexing a finite alphabet. A :class:`History` is
the string ``a1 o1 ... at ot`` with a per-step flag marking actions that were
issued as interventions; its :meth:`History.key` (the exact symbol sequence)
is what conditional tables are indexed by.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Optional, Protocol, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidDistributionError, ProtocolViolationError, UncoveredHistoryError

Symbol = int
HistoryKey = Tuple[Tuple[int, int], ...]

SIMPLEX_TOL = 1e-12
PROTOCOL_TOL = 1e-9


@dataclass(frozen=True)
class Alphabet:
    """Finite alphabet with human-readable labels (reporting only)."""

    labels: Tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ValueError("alphabet must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels in {self.labels}")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> Symbol:
        return self.labels.index(label)

    def label(self, symbol: Symbol) -> str:
        self.check(symbol)
        return self.labels[symbol]

    def check(self, symbol: Symbol) -> Symbol:
        if not 0 <= symbol < self.size:
            raise ValueError(f"symbol {symbol} outside alphabet of size {self.size}")
        return symbol


def check_distribution(p, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Return ``p`` as a read-only float array, raising if it is off the simplex."""
    arr = np.array(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidDistributionError(f"expected a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidDistributionError(f"negative or non-finite mass in {arr.tolist()}")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise InvalidDistributionError(f"mass sums to {total!r}, not 1")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Step:
    action: Symbol
    intervened: bool = True
    observation: Optional[Symbol] = None


@dataclass(frozen=True)
class History:
    """Alternating action/observation record; only the last step may lack an observation."""

    steps: Tuple[Step, ...] = ()

    def __post_init__(self):
        for s in self.steps[:-1]:
            if s.observation is None:
                raise ValueError("only the final step may lack an observation")

    @classmethod
    def _derived(cls, steps: Tuple[Step, ...]) -> "History":
        # steps derived from a valid history; skips the O(n) re-validation
        h = object.__new__(cls)
        object.__setattr__(h, "steps", steps)
        return h

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[int, int]], intervened: bool = True) -> "History":
        return cls(tuple(Step(a, intervened, o) for a, o in pairs))

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[Step]:
        return iter(self.steps)

    @property
    def dangling(self) -> bool:
        return bool(self.steps) and self.steps[-1].observation is None

    @property
    def rounds(self) -> int:
        """Number of complete action/observation rounds."""
        return len(self.steps) - 1 if self.dangling else len(self.steps)

    @property
    def last_action(self) -> Symbol:
        return self.steps[-1].action

    def complete_part(self) -> "History":
        return History._derived(self.steps[:-1]) if self.dangling else self

    def prefix(self, t: int) -> "History":
        """The first ``t`` steps."""
        return History._derived(self.steps[:t])

    def with_action(self, action: Symbol, intervened: bool = True) -> "History":
        if self.dangling:
            raise ValueError("history already ends with an action awaiting its observation")
        return History._derived(self.steps + (Step(action, intervened),))

    def with_observation(self, observation: Symbol) -> "History":
        if not self.dangling:
            raise ValueError("no dangling action to attach an observation to")
        last = self.steps[-1]
        return History._derived(self.steps[:-1] + (Step(last.action, last.intervened, observation),))

    def extend(self, action: Symbol, observation: Symbol, intervened: bool = True) -> "History":
        if self.dangling:
            raise ValueError("history already ends with an action awaiting its observation")
        return History._derived(self.steps + (Step(action, intervened, observation),))

    def key(self) -> HistoryKey:
        """Exact symbol sequence of the complete steps."""
        return tuple((s.action, s.observation) for s in self.steps if s.observation is not None)


EMPTY = History()


def _as_key(h: Union[History, HistoryKey]) -> HistoryKey:
    if isinstance(h, History):
        if h.dangling:
            raise ValueError("table lookups take a complete prefix; pass the action as context")
        return h.key()
    return tuple((int(a), int(o)) for a, o in h)


class ConditionalTable:
    """Sparse table of probability vectors keyed by ``(history key, context)``.

    For a policy the context is ``None``; for an observation law it is the
    current action. Calling the table looks up a row and raises
    :class:`UncoveredHistoryError` when it is missing.
    """

    def __init__(self, entries: Mapping[Tuple[HistoryKey, Optional[int]], Sequence[float]]):
        rows = {}
        size = None
        for (hkey, ctx), p in entries.items():
            key = (_as_key(hkey), ctx)
            try:
                arr = check_distribution(p)
            except InvalidDistributionError as exc:
                raise InvalidDistributionError(f"row {key}: {exc}") from None
            if size is None:
                size = arr.size
            elif arr.size != size:
                raise InvalidDistributionError(f"row {key} has length {arr.size}, expected {size}")
            rows[key] = arr
        self._rows = rows
        self.size = size

    @classmethod
    def stationary(cls, p: Sequence[float], contexts: Sequence[Optional[int]], histories) -> "ConditionalTable":
        """Same row for every listed history and context."""
        return cls({(h, c): p for h in histories for c in contexts})

    def __call__(self, history: Union[History, HistoryKey], context: Optional[int] = None) -> np.ndarray:
        key = (_as_key(history), context)
        try:
            return self._rows[key]
        except KeyError:
            raise UncoveredHistoryError(f"no row for history {key[0]} with context {context}") from None

    def __contains__(self, key) -> bool:
        hkey, ctx = key
        return (_as_key(hkey), ctx) in self._rows

    def __len__(self) -> int:
        return len(self._rows)

    def items(self):
        return self._rows.items()


class RandomSource:
    """Seeded uniform stream with inverse-CDF categorical sampling."""

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def uniform(self) -> float:
        """One draw from [0, 1)."""
        return float(self._gen.random())

    def categorical(self, probs) -> int:
        """First index whose cumulative mass exceeds a uniform draw."""
        return inverse_cdf(probs, self.uniform())

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


def inverse_cdf(probs, u: float) -> int:
    cum = np.cumsum(probs)
    idx = int(np.searchsorted(cum, u, side="right"))
    if idx >= len(cum):
        # u landed in the rounding gap above cum[-1]; take the last index with mass
        idx = int(np.flatnonzero(np.asarray(probs) > 0)[-1])
    return idx


def interaction_probability(agent_policy: Callable, env_law: Callable, h: History) -> float:
    """Product of policy and environment conditionals along a complete history."""
    if h.dangling:
        raise ValueError("interaction_probability needs a complete history")
    p = 1.0
    for t, step in enumerate(h.steps):
        prefix = h.prefix(t)
        p *= float(agent_policy(prefix)[step.action])
        p *= float(env_law(prefix, step.action)[step.observation])
    return p


class Agent(Protocol):
    def action_distribution(self, history: History) -> Sequence[float]: ...


class Environment(Protocol):
    def observation_distribution(self, history: History) -> Sequence[float]: ...


@dataclass
class TablePolicy:
    """Agent driven by a policy table (context ``None``)."""

    table: Callable

    def action_distribution(self, history: History) -> np.ndarray:
        return self.table(history)


@dataclass
class ConstantAgent:
    """Agent emitting the same action distribution at every history."""

    probs: Sequence[float]

    def action_distribution(self, history: History) -> Sequence[float]:
        return self.probs


@dataclass
class ConstantEnvironment:
    probs: Sequence[float]

    def observation_distribution(self, history: History) -> Sequence[float]:
        return self.probs


def _validated(side: str, t: int, p) -> np.ndarray:
    try:
        return check_distribution(p, tol=PROTOCOL_TOL)
    except InvalidDistributionError as exc:
        raise ProtocolViolationError(side, t, str(exc)) from None


def run_interaction(agent: Agent, env: Environment, rounds: int, rng: RandomSource) -> History:
    """Couple agent and environment for ``rounds`` steps.

    Agent actions are recorded as interventions. After each draw the side
    that did not draw is notified through an optional ``observation_update``
    (agent) or ``action_update`` (environment) hook receiving the history.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    h = EMPTY
    agent_hook = getattr(agent, "observation_update", None)
    env_hook = getattr(env, "action_update", None)
    for t in range(1, rounds + 1):
        pa = _validated("agent", t, agent.action_distribution(h))
        h = h.with_action(inverse_cdf(pa, rng.uniform()))
        if env_hook is not None:
            env_hook(h)
        po = _validated("environment", t, env.observation_distribution(h))
        h = h.with_observation(inverse_cdf(po, rng.uniform()))
        if agent_hook is not None:
            agent_hook(h)
    return h


def all_histories(n_actions: int, n_observations: int, t: int) -> Iterator[History]:
    """Every complete history of length ``t`` (lexicographic)."""
    if t == 0:
        yield EMPTY
        return
    for h in all_histories(n_actions, n_observations, t - 1):
        for a in range(n_actions):
            for o in range(n_observations):
                yield h.extend(a, o)


def kl_divergence(p, q) -> float:
    """``sum p log(p/q)`` in nats; ``inf`` when ``q`` misses mass that ``p`` has."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return float("inf")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
