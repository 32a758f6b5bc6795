"""Backward-recursion evaluation, policies, and utility normalization."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

from .errors import DegenerateUtilityError, DomainError
from .lottery import AALottery, aa_expected_utility
from .tree import (
    CHANCE,
    DECISION,
    EVENT,
    TERMINAL,
    Belief,
    DecisionTree,
    Evaluation,
    Node,
    require_valid,
)


TIE_TOL = 1e-10


class BernoulliUtility(Mapping):
    """Utility over consequences with two anchor consequences ``low < high``."""

    __slots__ = ("_values", "low", "high")

    def __init__(self, values: Mapping[str, float], anchors=None):
        self._values = {str(y): float(v) for y, v in values.items()}
        if anchors is None:
            ordered = sorted(self._values, key=lambda y: (self._values[y], y))
            anchors = (ordered[0], ordered[-1])
        low, high = anchors
        for y in (low, high):
            if y not in self._values:
                raise DomainError(f"anchor {y!r} has no utility value")
        if self._values[high] == self._values[low]:
            raise DegenerateUtilityError(
                f"anchors {low!r} and {high!r} share the utility {self._values[low]}"
            )
        if self._values[high] < self._values[low]:
            raise DomainError(f"anchor {high!r} is worth less than anchor {low!r}")
        self.low, self.high = low, high

    def __getitem__(self, y):
        return self._values[y]

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def __eq__(self, other):
        if isinstance(other, BernoulliUtility):
            return (self._values, self.anchors) == (other._values, other.anchors)
        return NotImplemented

    def __hash__(self):
        return hash((frozenset(self._values.items()), self.anchors))

    def __repr__(self):
        return f"BernoulliUtility({self._values!r}, anchors={self.anchors!r})"

    @property
    def anchors(self) -> tuple:
        return (self.low, self.high)

    def affine(self, a: float, b: float) -> "BernoulliUtility":
        """The utility ``a + b * u`` for ``b > 0``."""
        if not b > 0:
            raise DomainError("affine rescaling needs a positive slope")
        return BernoulliUtility({y: a + b * v for y, v in self._values.items()}, self.anchors)

    def to_dict(self) -> dict:
        return dict(self._values)


def normalize(u: BernoulliUtility) -> BernoulliUtility:
    """Rescale ``u`` affinely so the low anchor maps to 0 and the high to 1."""
    lo, hi = u[u.low], u[u.high]
    if hi == lo:
        raise DegenerateUtilityError("normalization anchors have equal utility")
    rho = 1.0 / (hi - lo)
    alpha = 1.0 - rho * hi
    values = {y: alpha + rho * v for y, v in u.items()}
    # pin the anchors against rounding in alpha + rho * v
    values[u.low], values[u.high] = 0.0, 1.0
    return BernoulliUtility(values, u.anchors)


def cond_prob(beliefs: Mapping[str, float], child_event, parent_event) -> float:
    """Subjective probability of ``child_event`` given ``parent_event``."""
    child_event, parent_event = frozenset(child_event), frozenset(parent_event)
    if not parent_event:
        raise DomainError("conditioning event is empty")
    if not child_event <= parent_event:
        raise DomainError("child event is not contained in the parent event")
    if child_event == parent_event:
        return 1.0
    mass = beliefs.mass_of if isinstance(beliefs, Belief) else Belief(beliefs).mass_of
    return mass(child_event) / mass(parent_event)


@dataclass(frozen=True)
class EvaluationReport:
    value: dict
    policy: dict = field(default_factory=dict)
    root: str = ""

    @property
    def root_value(self) -> float:
        return self.value[self.root]

    def rows(self, tree: DecisionTree):
        """(node id, value, chosen child or '') rows in tree order."""
        return [(n, self.value[n], self.policy.get(n, "")) for n in tree.order if n in self.value]


def terminal_value(node: Node, beliefs, u) -> float:
    p = node.payload
    if isinstance(p, Evaluation):
        if not p.is_set:
            raise DomainError(f"truncation node {node.id!r} has no evaluation attached")
        return p.value
    if isinstance(p, AALottery):
        return aa_expected_utility(p, beliefs, u)
    raise DomainError(f"terminal {node.id!r} has no consequence")


def _check_beliefs(tree, beliefs):
    missing = [s for s in tree.states if s not in beliefs]
    if missing:
        raise DomainError(f"beliefs give no mass to states {sorted(missing)}")


def _combine(tree, node, beliefs, values):
    kids = node.children
    if node.kind == CHANCE:
        return math.fsum(p * values[c] for c, p in zip(kids, node.probs))
    if node.kind == EVENT:
        return math.fsum(
            cond_prob(beliefs, tree.nodes[c].event, node.event) * values[c] for c in kids
        )
    raise AssertionError(node.kind)


def tie_tolerance(u) -> float:
    """Width of the indifference class at decision nodes.

    Children within ``TIE_TOL`` of the anchor span below the best value count
    as equally good, so rounding noise cannot flip the first-in-order choice
    under an affine rescaling of ``u``.
    """
    if isinstance(u, BernoulliUtility):
        span = u[u.high] - u[u.low]
    else:
        vals = list(u.values())
        span = max(vals) - min(vals) if vals else 0.0
    return TIE_TOL * span


def evaluate(tree: DecisionTree, beliefs, u) -> EvaluationReport:
    """Value of every continuation subtree and the optimal policy.

    Each decision node picks the first child, in stored order, of its
    indifference class (see :func:`tie_tolerance`).
    """
    require_valid(tree)
    _check_beliefs(tree, beliefs)
    tol = tie_tolerance(u)
    value, policy = {}, {}
    for nid in reversed(tree.order):
        node = tree.nodes[nid]
        if node.kind == TERMINAL:
            value[nid] = terminal_value(node, beliefs, u)
        elif node.kind == DECISION:
            top = max(value[c] for c in node.children)
            best = next(c for c in node.children if value[c] >= top - tol)
            policy[nid] = best
            value[nid] = value[best]
        else:
            value[nid] = _combine(tree, node, beliefs, value)
    return EvaluationReport(value, policy, tree.root)


def reachable_under(tree: DecisionTree, policy: Mapping) -> list:
    """Nodes reachable when decision nodes follow ``policy``, parents first."""
    out, stack = [], [tree.root]
    while stack:
        nid = stack.pop()
        out.append(nid)
        node = tree.nodes[nid]
        if node.kind == DECISION:
            try:
                choice = policy[nid]
            except KeyError:
                raise DomainError(f"policy has no move at reachable decision node {nid!r}") from None
            if choice not in node.children:
                raise DomainError(f"policy move {nid!r} -> {choice!r} is not an edge")
            stack.append(choice)
        else:
            stack.extend(reversed(node.children))
    return out


def evaluate_policy(tree: DecisionTree, beliefs, u, policy: Mapping) -> float:
    """Exact expected utility at the root when decisions follow ``policy``."""
    require_valid(tree)
    _check_beliefs(tree, beliefs)
    order = reachable_under(tree, policy)
    value = {}
    for nid in reversed(order):
        node = tree.nodes[nid]
        if node.kind == TERMINAL:
            value[nid] = terminal_value(node, beliefs, u)
        elif node.kind == DECISION:
            value[nid] = value[policy[nid]]
        else:
            value[nid] = _combine(tree, node, beliefs, value)
    return value[tree.root]
