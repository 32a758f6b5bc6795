"""Truncation at cuts, subjective evaluations, and rollout estimates.

Rollout streams: a rollout estimate with seed ``s`` draws uniforms from a
Philox counter-based generator keyed by ``s``. Rollout ``i`` of a tree of
height ``H`` consumes stream positions ``[i*H, (i+1)*H)``, one uniform per
level, so any block of rollouts can be regenerated independently with
``Philox.advance`` and the estimate does not depend on chunking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .evaluate import cond_prob, terminal_value
from .tree import (
    CHANCE,
    DECISION,
    EVENT,
    TERMINAL,
    UNSET,
    DecisionTree,
    Evaluation,
    Node,
    continuation,
)

_CHUNK = 1 << 15


@dataclass(frozen=True)
class CutSet:
    cuts: frozenset

    def __init__(self, cuts=()):
        object.__setattr__(self, "cuts", frozenset(cuts))

    def __iter__(self):
        return iter(sorted(self.cuts))

    def __len__(self):
        return len(self.cuts)

    def check(self, tree: DecisionTree) -> None:
        for x in self.cuts:
            node = tree[x]
            if x == tree.root:
                raise DomainError("the root cannot be a cut")
            if node.kind == TERMINAL:
                raise DomainError(f"cut {x!r} is a terminal node")
        for x in self.cuts:
            nested = self.cuts.intersection(tree.ancestors(x))
            if nested:
                raise DomainError(f"cut {x!r} lies below cut {sorted(nested)[0]!r}")


@dataclass(frozen=True)
class RolloutConfig:
    rollouts: int
    seed: int

    def __post_init__(self):
        if int(self.rollouts) < 1:
            raise DomainError("at least one rollout is required")
        object.__setattr__(self, "rollouts", int(self.rollouts))
        object.__setattr__(self, "seed", int(self.seed) % (1 << 64))


def truncate(tree: DecisionTree, cuts) -> DecisionTree:
    """Remove everything strictly below each cut; cuts become unset terminals."""
    cuts = cuts if isinstance(cuts, CutSet) else CutSet(cuts)
    cuts.check(tree)
    removed, updates = [], {}
    for x in cuts:
        removed.extend(tree.descendants(x)[1:])
        updates[x] = Node(x, TERMINAL, (), tree[x].event, payload=UNSET)
    return tree.replace(updates, remove=removed)


def attach_evaluation(tree: DecisionTree, x: str, gamma_hat: float) -> DecisionTree:
    """Set the subjective evaluation of truncation node ``x``."""
    node = tree[x]
    if node.kind != TERMINAL or not isinstance(node.payload, Evaluation):
        raise DomainError(f"{x!r} is not a truncation node")
    gamma_hat = float(gamma_hat)
    if not np.isfinite(gamma_hat):
        raise DomainError("subjective evaluations must be finite")
    return tree.replace({x: Node(x, TERMINAL, (), node.event, payload=Evaluation(gamma_hat))})


def uniform_play_tree(tree: DecisionTree) -> DecisionTree:
    """Replace every decision node by a chance node with uniform edges."""
    updates = {}
    for nid in tree.order:
        node = tree.nodes[nid]
        if node.kind == DECISION:
            k = len(node.children)
            updates[nid] = Node(nid, CHANCE, node.children, node.event, probs=(1.0 / k,) * k)
    return tree.replace(updates)


def _compile(sub: DecisionTree, beliefs, u):
    ids = list(sub.order)
    index = {n: i for i, n in enumerate(ids)}
    width = max(1, max(len(sub.nodes[n].children) for n in ids))
    child = np.zeros((len(ids), width), dtype=np.intp)
    cum = np.full((len(ids), width), np.inf)
    is_term = np.zeros(len(ids), dtype=bool)
    value = np.zeros(len(ids))
    for i, nid in enumerate(ids):
        node = sub.nodes[nid]
        if node.kind == TERMINAL:
            if isinstance(node.payload, Evaluation) and not node.payload.is_set:
                raise DomainError(f"rollout reached unset evaluation at {nid!r}")
            is_term[i] = True
            value[i] = terminal_value(node, beliefs, u)
            continue
        k = len(node.children)
        if node.kind == CHANCE:
            probs = np.asarray(node.probs, dtype=float)
        elif node.kind == EVENT:
            probs = np.array([cond_prob(beliefs, sub.nodes[c].event, node.event) for c in node.children])
        else:
            probs = np.full(k, 1.0 / k)
        child[i, :k] = [index[c] for c in node.children]
        cum[i, : k - 1] = np.cumsum(probs)[: k - 1]
    return child, cum, is_term, value


def rollout_values(tree: DecisionTree, x: str, beliefs, u, cfg: RolloutConfig) -> np.ndarray:
    """Terminal values reached by ``cfg.rollouts`` random-play rollouts from ``x``.

    Decision nodes pick a child uniformly, chance nodes follow their edge
    probabilities, event nodes follow conditional subjective probabilities.
    """
    sub = continuation(tree, x)
    child, cum, is_term, value = _compile(sub, beliefs, u)
    height = max(1, sub.height())
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    out = np.empty(cfg.rollouts)
    for start in range(0, cfg.rollouts, _CHUNK):
        n = min(_CHUNK, cfg.rollouts - start)
        draws = rng.random((n, height))
        cur = np.zeros(n, dtype=np.intp)
        for level in range(height):
            live = ~is_term[cur]
            if not live.any():
                break
            c = cur[live]
            pos = (draws[live, level][:, None] >= cum[c]).sum(axis=1)
            cur[live] = child[c, pos]
        out[start : start + n] = value[cur]
    return out


def mcts_estimate(tree: DecisionTree, x: str, beliefs, u, cfg: RolloutConfig) -> float:
    """Sample mean of random-play rollouts from ``x``; deterministic in the seed."""
    return sample_mean(rollout_values(tree, x, beliefs, u, cfg))


def sample_mean(vals: np.ndarray) -> float:
    """Order-free mean; exact when every rollout scores the same."""
    base = float(vals[0])
    return base + math.fsum((vals - base).tolist()) / len(vals)
