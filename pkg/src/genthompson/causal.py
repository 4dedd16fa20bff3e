"""Probability trees with interventions, and Thompson sampling over causal hypotheses.

Every internal node is a mechanism resolving one variable; branch
probabilities are exact :class:`~fractions.Fraction` values. Trees are
immutable: :func:`intervene` returns a new tree that reuses every subtree it
did not have to change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .core import RandomSource
from .errors import ImpossibleEvidenceError, RegistryError

Assignment = Dict[str, str]
InterventionSpec = Tuple[str, str]


@dataclass(frozen=True)
class Branch:
    value: str
    prob: Fraction
    child: "ProbTreeNode"


@dataclass(frozen=True)
class ProbTreeNode:
    variable: Optional[str] = None
    branches: Tuple[Branch, ...] = ()

    def __post_init__(self):
        if self.variable is None:
            if self.branches:
                raise ValueError("a leaf has no branches")
            return
        if not self.branches:
            raise ValueError(f"node resolving {self.variable!r} has no branches")
        values = [b.value for b in self.branches]
        if len(set(values)) != len(values):
            raise ValueError(f"duplicate outcomes {values} at {self.variable!r}")
        for b in self.branches:
            if not isinstance(b.prob, Fraction):
                raise TypeError(f"branch probabilities must be Fractions, got {type(b.prob).__name__}")
            if not 0 <= b.prob <= 1:
                raise ValueError(f"probability {b.prob} outside [0, 1]")
        total = sum(b.prob for b in self.branches)
        if total != 1:
            raise ValueError(f"branches of {self.variable!r} sum to {total}, not 1")

    @property
    def is_leaf(self) -> bool:
        return self.variable is None


LEAF = ProbTreeNode()


def node(variable: str, branches: Sequence[Tuple[str, object, ProbTreeNode]]) -> ProbTreeNode:
    """Build an internal node from ``(value, probability, child)`` triples."""
    return ProbTreeNode(variable, tuple(Branch(v, Fraction(p), c) for v, p, c in branches))


def _walk(n: ProbTreeNode, path: Tuple[Tuple[str, str], ...], prob: Fraction) -> Iterator[Tuple[Tuple[Tuple[str, str], ...], Fraction]]:
    if n.is_leaf:
        yield path, prob
        return
    for b in n.branches:
        yield from _walk(b.child, path + ((n.variable, b.value),), prob * b.prob)


@dataclass(frozen=True)
class ProbTree:
    root: ProbTreeNode
    variables: Mapping[str, Tuple[str, ...]] = field(default=None)  # filled from the tree when omitted

    def __post_init__(self):
        registry: Dict[str, List[str]] = {}
        self._check(self.root, frozenset(), registry)
        found = {k: tuple(v) for k, v in registry.items()}
        if self.variables is None:
            object.__setattr__(self, "variables", found)
        else:
            declared = {k: tuple(v) for k, v in self.variables.items()}
            for var, vals in found.items():
                if var not in declared or not set(vals) <= set(declared[var]):
                    raise RegistryError(f"tree uses {var}={vals} outside the declared registry")
            object.__setattr__(self, "variables", declared)

    @staticmethod
    def _check(n: ProbTreeNode, seen: frozenset, registry: Dict[str, List[str]]) -> None:
        if n.is_leaf:
            return
        if n.variable in seen:
            raise ValueError(f"variable {n.variable!r} resolved twice on one path")
        vals = registry.setdefault(n.variable, [])
        for b in n.branches:
            if b.value not in vals:
                vals.append(b.value)
            ProbTree._check(b.child, seen | {n.variable}, registry)

    def leaves(self) -> List[Tuple[Assignment, Fraction]]:
        """Root-to-leaf assignments with their probabilities, depth-first."""
        return [(dict(path), p) for path, p in _walk(self.root, (), Fraction(1))]

    def leaf_probabilities(self) -> List[Fraction]:
        return [p for _, p in self.leaves()]

    def check_value(self, variable: str, value: str) -> None:
        if variable not in self.variables:
            raise RegistryError(f"unknown variable {variable!r}")
        if value not in self.variables[variable]:
            raise RegistryError(f"{value!r} is not an outcome of {variable!r}")


def _intervene_node(n: ProbTreeNode, variable: str, value: str) -> ProbTreeNode:
    if n.is_leaf:
        return n
    children = [_intervene_node(b.child, variable, value) for b in n.branches]
    if n.variable == variable:
        if value not in [b.value for b in n.branches]:
            raise RegistryError(f"mechanism for {variable!r} has no branch {value!r}")
        probs = [Fraction(int(b.value == value)) for b in n.branches]
    else:
        probs = [b.prob for b in n.branches]
    if all(c is b.child and p == b.prob for c, p, b in zip(children, probs, n.branches)):
        return n
    return ProbTreeNode(n.variable, tuple(Branch(b.value, p, c) for b, p, c in zip(n.branches, probs, children)))


def intervene(tree: ProbTree, variable: str, value: str) -> ProbTree:
    """Replace every mechanism resolving ``variable`` by a point mass on ``value``."""
    tree.check_value(variable, value)
    root = _intervene_node(tree.root, variable, value)
    if root is tree.root:
        return tree
    return ProbTree(root, tree.variables)


def tree_posterior(
    tree: ProbTree,
    hypothesis_variable: str,
    evidence: Mapping[str, str],
    interventions: Iterable[InterventionSpec] = (),
) -> Dict[str, Fraction]:
    """Exact law of ``hypothesis_variable`` given evidence in the intervened tree.

    Interventions are applied in order before conditioning. Leaves whose path
    does not resolve an evidence variable do not match that evidence.
    """
    if hypothesis_variable not in tree.variables:
        raise RegistryError(f"unknown variable {hypothesis_variable!r}")
    for var, val in evidence.items():
        tree.check_value(var, val)
    for var, val in interventions:
        tree = intervene(tree, var, val)
    mass = {v: Fraction(0) for v in tree.variables[hypothesis_variable]}
    for assignment, p in tree.leaves():
        if p and all(assignment.get(var) == val for var, val in evidence.items()):
            mass[assignment[hypothesis_variable]] += p
    total = sum(mass.values())
    if total == 0:
        raise ImpossibleEvidenceError(f"evidence {dict(evidence)} has probability zero")
    return {v: m / total for v, m in mass.items()}


def with_root_prior(tree: ProbTree, prior: Mapping[str, Fraction]) -> ProbTree:
    """Same tree with the root mechanism's branch probabilities replaced."""
    root = tree.root
    if set(prior) != {b.value for b in root.branches}:
        raise RegistryError(f"prior outcomes {sorted(prior)} do not match root branches")
    branches = tuple(Branch(b.value, Fraction(prior[b.value]), b.child) for b in root.branches)
    return ProbTree(ProbTreeNode(root.variable, branches), tree.variables)


def root_distribution(tree: ProbTree) -> Dict[str, Fraction]:
    return {b.value: b.prob for b in tree.root.branches}


# ---------------------------------------------------------------------------
# serialization: {variable, branches: [{value, num, den, child}]}


def tree_to_json(n) -> dict:
    if isinstance(n, ProbTree):
        n = n.root
    return {
        "variable": n.variable,
        "branches": [
            {"value": b.value, "num": b.prob.numerator, "den": b.prob.denominator, "child": tree_to_json(b.child)}
            for b in n.branches
        ],
    }


def node_from_json(obj: Mapping) -> ProbTreeNode:
    branches = []
    for b in obj.get("branches", []):
        num, den = b["num"], b["den"]
        if not (isinstance(num, int) and isinstance(den, int)) or isinstance(num, bool) or isinstance(den, bool):
            raise ValueError("num and den must be integers")
        branches.append(Branch(b["value"], Fraction(num, den), node_from_json(b["child"])))
    return ProbTreeNode(obj.get("variable"), tuple(branches))


def tree_from_json(obj: Mapping) -> ProbTree:
    return ProbTree(node_from_json(obj))


# ---------------------------------------------------------------------------
# two-bulb example

HYPOTHESIS = "Theta"


def build_lightbulb_tree() -> ProbTree:
    """Hypothesis first, then green-causes-red or red-causes-green."""
    half, hi, lo = Fraction(1, 2), Fraction(3, 4), Fraction(1, 4)

    def effect(var, on, off, p_on):
        return node(var, [(on, p_on, LEAF), (off, 1 - p_on, LEAF)])

    x_causes_y = node("X", [
        ("x", half, effect("Y", "y", "not_y", hi)),
        ("not_x", half, effect("Y", "y", "not_y", lo)),
    ])
    y_causes_x = node("Y", [
        ("y", half, effect("X", "x", "not_x", hi)),
        ("not_y", half, effect("X", "x", "not_x", lo)),
    ])
    return ProbTree(node(HYPOTHESIS, [("theta", half, x_causes_y), ("not_theta", half, y_causes_x)]))


Policy = Callable[[int], InterventionSpec]


@dataclass(frozen=True)
class CausalHypothesisSet:
    """A tree whose root resolves the hypothesis, plus one experiment policy per hypothesis."""

    hypothesis_variable: str
    tree: ProbTree
    policies: Mapping[str, Policy]

    def __post_init__(self):
        if self.tree.root.variable != self.hypothesis_variable:
            raise ValueError("the root mechanism must resolve the hypothesis variable")
        missing = set(self.tree.variables[self.hypothesis_variable]) - set(self.policies)
        if missing:
            raise ValueError(f"no policy for hypotheses {sorted(missing)}")

    @property
    def prior(self) -> Dict[str, Fraction]:
        return root_distribution(self.tree)


def alternating(variable: str, on: str, off: str) -> Policy:
    """Intervene ``variable``: ``on`` in odd rounds, ``off`` in even rounds."""
    return lambda t: (variable, on if t % 2 == 1 else off)


def lightbulb_hypothesis_set(prior: Optional[Mapping[str, object]] = None) -> CausalHypothesisSet:
    """Each hypothesis switches the bulb it believes to be the cause."""
    tree = build_lightbulb_tree()
    if prior is not None:
        tree = with_root_prior(tree, {k: Fraction(v) for k, v in prior.items()})
    return CausalHypothesisSet(
        HYPOTHESIS,
        tree,
        {"theta": alternating("X", "x", "not_x"), "not_theta": alternating("Y", "y", "not_y")},
    )


def _pick(weights: Sequence[Fraction], u: float) -> int:
    cum = Fraction(0)
    last = 0
    for i, w in enumerate(weights):
        if w > 0:
            last = i
        cum += w
        if u < cum:
            return i
    return last


def sample_assignment(n: ProbTreeNode, rng: RandomSource) -> Assignment:
    """Walk one root-to-leaf path, one uniform per mechanism."""
    out: Assignment = {}
    while not n.is_leaf:
        b = n.branches[_pick([b.prob for b in n.branches], rng.uniform())]
        out[n.variable] = b.value
        n = b.child
    return out


@dataclass(frozen=True)
class CausalRecord:
    t: int
    sampled: str
    intervened_variable: str
    intervened_value: str
    observed: Assignment
    posterior: Dict[str, Fraction]


def causal_thompson_run(
    hypotheses: CausalHypothesisSet,
    truth: str,
    rounds: int,
    rng: RandomSource,
    environment: Optional[Callable[[InterventionSpec, RandomSource], Assignment]] = None,
) -> List[CausalRecord]:
    """Repeated intervene-observe-update loop with Thompson choice of experiment.

    Each round samples a hypothesis from the current posterior, runs that
    hypothesis's intervention on the true system, reveals every other
    variable and conditions on it. By default the true system is the
    ``truth`` subtree of the hypothesis tree itself; ``environment`` can
    replace it with an external sampler returning the revealed assignment.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    hyp_var = hypotheses.hypothesis_variable
    tree = hypotheses.tree
    tree.check_value(hyp_var, truth)
    outcomes = tree.variables[hyp_var]
    records = []
    for t in range(1, rounds + 1):
        belief = root_distribution(tree)
        sampled = outcomes[_pick([belief[v] for v in outcomes], rng.uniform())]
        var, val = hypotheses.policies[sampled](t)
        if environment is None:
            true_system = next(b.child for b in intervene(tree, var, val).root.branches if b.value == truth)
            revealed = sample_assignment(true_system, rng)
        else:
            revealed = dict(environment((var, val), rng))
        evidence = {k: v for k, v in revealed.items() if k not in (var, hyp_var)}
        posterior = tree_posterior(tree, hyp_var, evidence, [(var, val)])
        tree = with_root_prior(tree, posterior)
        records.append(CausalRecord(t, sampled, var, val, revealed, posterior))
    return records
