"""Seeded random decision problems for property tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .evaluate import BernoulliUtility
from .lottery import AALottery
from .tree import CHANCE, DECISION, EVENT, Belief, DecisionTree, Node, terminal


def random_beliefs(rng: np.random.Generator, states) -> Belief:
    w = rng.uniform(0.1, 1.0, size=len(states))
    w /= w.sum()
    return Belief(dict(zip(states, w.tolist())))


def random_utility(rng: np.random.Generator, consequences) -> BernoulliUtility:
    """Normalized utility: first consequence 0, second 1, the rest uniform."""
    values = {consequences[0]: 0.0, consequences[1]: 1.0}
    for y in consequences[2:]:
        values[y] = float(rng.uniform())
    return BernoulliUtility(values, (consequences[0], consequences[1]))


def _random_lottery(rng, consequences):
    k = int(rng.integers(1, 3))
    chosen = rng.choice(len(consequences), size=k, replace=False)
    w = rng.uniform(0.1, 1.0, size=k)
    w /= w.sum()
    return {consequences[i]: float(p) for i, p in zip(chosen, w)}


def random_tree(
    rng: np.random.Generator,
    states,
    consequences,
    max_nodes: int = 12,
    kinds=(DECISION, CHANCE, EVENT),
    max_children: int = 3,
    root_kind=None,
) -> DecisionTree:
    """A valid random tree with at most ``max_nodes`` nodes.

    ``kinds`` restricts the non-terminal kinds; ``root_kind`` forces the kind
    at the root when the budget allows.
    """
    states = list(states)
    nodes = {}
    count = 1
    frontier = [("n0", frozenset(states))]
    while frontier:
        idx = int(rng.integers(len(frontier)))
        nid, event = frontier.pop(idx)
        budget = max_nodes - count
        options = [k for k in kinds if k != EVENT or len(event) >= 2]
        if nid == "n0" and root_kind in options:
            options = [root_kind]
        expand = budget >= 2 and options and (nid == "n0" or rng.uniform() < 0.75)
        if not expand:
            lots = {s: _random_lottery(rng, consequences) for s in sorted(event)}
            nodes[nid] = terminal(nid, AALottery(lots), event)
            continue
        kind = options[int(rng.integers(len(options)))]
        cap = min(max_children, budget)
        if kind == EVENT:
            cap = min(cap, len(event))
        k = int(rng.integers(2, cap + 1))
        kids = [f"n{count + i}" for i in range(k)]
        count += k
        if kind == EVENT:
            ordered = list(rng.permutation(sorted(event)))
            cuts = sorted(rng.choice(np.arange(1, len(ordered)), size=k - 1, replace=False).tolist())
            cells = [frozenset(c) for c in np.split(np.array(ordered, dtype=object), cuts)]
            nodes[nid] = Node(nid, EVENT, tuple(kids), event)
            frontier.extend(zip(kids, cells))
            continue
        probs = None
        if kind == CHANCE:
            w = rng.uniform(0.1, 1.0, size=k)
            probs = tuple((w / w.sum()).tolist())
        nodes[nid] = Node(nid, kind, tuple(kids), event, probs=probs)
        frontier.extend((c, event) for c in kids)
    return DecisionTree(nodes, "n0")


def random_problem(rng: np.random.Generator, max_nodes: int = 12, n_states=None, n_consequences: int = 4,
                   kinds=(DECISION, CHANCE, EVENT), root_kind=None):
    """(tree, beliefs, utility) with at least two states."""
    if n_states is None:
        n_states = int(rng.integers(2, 5))
    states = [f"s{i}" for i in range(n_states)]
    consequences = [f"y{i}" for i in range(n_consequences)]
    tree = random_tree(rng, states, consequences, max_nodes=max_nodes, kinds=kinds, root_kind=root_kind)
    return tree, random_beliefs(rng, states), random_utility(rng, consequences)
