"""Enlivenment: growing a tree and its consequence and state domains.

Two minimal transformations are supported. A terminal enlivenment replaces
a terminal node (optionally after cutting a non-terminal node down to a
truncation node) by the root of a new continuation subtree. An edge
enlivenment splices an event node ``e-`` into an edge ``n -> m``; nature
then either continues to ``m`` or, on the new deviation states, moves to the
root of a grafted subtree.

New states must be visible in the event of every ancestor of the place they
enter. At an event-node ancestor they join the cell on the path; at a
decision or chance ancestor every sibling branch must share the parent's
event, so the new states are spread into those branches too: into every
child of a decision or chance node, into the first child of an event node,
and at terminals as the uniform mixture of the existing per-state lotteries.
Old-state structure and values are untouched, so conditioning back on the
old states recovers the original tree exactly (see :func:`collapse`).
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import DomainError, TransformationError
from .evaluate import BernoulliUtility
from .lottery import AALottery, Lottery
from .tree import (
    CHANCE,
    DECISION,
    EVENT,
    TERMINAL,
    Belief,
    DecisionTree,
    Node,
    validate,
)

REVERSE_BAYES_TOL = 1e-9


@dataclass(frozen=True)
class DomainExtension:
    new_consequences: Mapping = field(default_factory=dict)
    new_state_mass: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "new_consequences", {str(k): float(v) for k, v in dict(self.new_consequences).items()})
        object.__setattr__(self, "new_state_mass", {str(k): float(v) for k, v in dict(self.new_state_mass).items()})
        for s, p in self.new_state_mass.items():
            if not p > 0.0:
                raise DomainError(f"new state {s!r} needs positive mass, got {p}")
        if self.epsilon >= 1.0:
            raise DomainError(f"new states carry total mass {self.epsilon} >= 1")

    @property
    def new_states(self) -> frozenset:
        return frozenset(self.new_state_mass)

    @property
    def epsilon(self) -> float:
        return math.fsum(self.new_state_mass.values())


@dataclass(frozen=True)
class TerminalEnlivenment:
    """Replace terminal ``at`` by the root of ``subtree``.

    With ``cut=True`` the target may be a non-terminal, non-root node; it is
    first cut down to a truncation node and that node is then replaced. The
    subtree root may reuse the replaced node's id.
    """

    at: str
    subtree: DecisionTree
    extension: DomainExtension = field(default_factory=DomainExtension)
    cut: bool = False


@dataclass(frozen=True)
class EdgeEnlivenment:
    """Splice an event node into ``edge`` with a deviation branch ``subtree``."""

    edge: tuple
    deviation_states: frozenset
    subtree: DecisionTree
    extension: DomainExtension = field(default_factory=DomainExtension)
    node_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "edge", tuple(self.edge))
        object.__setattr__(self, "deviation_states", frozenset(self.deviation_states))

    @property
    def enlivenment_node(self) -> str:
        return self.node_id if self.node_id is not None else f"e-{self.edge[1]}"


EnlivenmentStep = Union[TerminalEnlivenment, EdgeEnlivenment]


class ScriptError(DomainError):
    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"enlivenment step {index} failed: {cause}")


# -- domains ------------------------------------------------------------------


def extend_utility(u: BernoulliUtility, ext: DomainExtension) -> BernoulliUtility:
    clash = set(ext.new_consequences) & set(u)
    if clash:
        raise DomainError(f"consequences {sorted(clash)} already have utilities")
    return BernoulliUtility({**u.to_dict(), **ext.new_consequences}, u.anchors)


def extend_beliefs(p: Belief, ext: DomainExtension) -> Belief:
    """Scale old masses by ``1 - eps`` and give new states their masses."""
    eps = ext.epsilon
    if eps >= 1.0:
        raise DomainError(f"new states carry total mass {eps} >= 1")
    clash = ext.new_states & set(p)
    if clash:
        raise DomainError(f"states {sorted(clash)} already exist")
    if not ext.new_state_mass:
        return p
    mass = {s: (1.0 - eps) * m for s, m in p.items()}
    mass.update(ext.new_state_mass)
    return Belief(mass)


def check_reverse_bayes(p, p_plus, old_states) -> bool:
    """True iff ``p_plus`` conditioned on ``old_states`` gives back ``p``."""
    old_states = list(old_states)
    total = math.fsum(p_plus[s] for s in old_states)
    return all(abs(p_plus[s] / total - p[s]) <= REVERSE_BAYES_TOL for s in old_states)


# -- tree surgery -------------------------------------------------------------


def _mixture_over_states(aa: AALottery) -> Lottery:
    k = len(aa)
    weights = {}
    for lot in aa.values():
        for y, q in lot.items():
            weights[y] = weights.get(y, 0.0) + q / k
    total = math.fsum(weights.values())
    return Lottery({y: q / total for y, q in weights.items()})


def _with_event(node: Node, event) -> Node:
    payload = node.payload
    if isinstance(payload, AALottery):
        extra = frozenset(event) - payload.states
        if extra:
            lot = _mixture_over_states(payload)
            payload = AALottery({**payload.to_dict(), **{s: lot.to_dict() for s in sorted(extra)}})
    return Node(node.id, node.kind, node.children, frozenset(event), node.probs, payload)


def _spread(nodes: dict, start: str, extra: frozenset) -> None:
    stack = [start]
    while stack:
        nid = stack.pop()
        node = nodes[nid]
        nodes[nid] = _with_event(node, node.event | extra)
        if node.kind == EVENT:
            stack.append(node.children[0])
        else:
            stack.extend(node.children)


def _propagate(nodes: dict, parents: dict, start: str, via: str, extra: frozenset) -> None:
    """Add ``extra`` to ``start`` and its ancestors; ``via`` is the child on the path."""
    cur, on_path = start, via
    while cur is not None:
        node = nodes[cur]
        if node.kind in (DECISION, CHANCE):
            for c in node.children:
                if c != on_path:
                    _spread(nodes, c, extra)
        nodes[cur] = _with_event(node, node.event | extra)
        cur, on_path = parents.get(cur), cur


def _fill_events(subtree: DecisionTree, root_event: frozenset) -> dict:
    """Graft-ready copy of ``subtree``'s nodes with missing events filled in.

    Nodes without an event inherit their parent's (the root gets
    ``root_event``); children of event nodes must state theirs. State-free
    :class:`Lottery` payloads become constant AA lotteries over the event.
    """
    out = {}
    stack = [(subtree.root, frozenset(root_event), None)]
    while stack:
        nid, inherited, parent_kind = stack.pop()
        node = subtree[nid]
        event = node.event
        if not event:
            if parent_kind == EVENT:
                raise DomainError(f"child {nid!r} of an event node must declare its event")
            event = inherited
        payload = node.payload
        if isinstance(payload, Lottery):
            payload = AALottery.constant(sorted(event), payload)
        out[nid] = Node(nid, node.kind, node.children, event, node.probs, payload)
        for c in reversed(node.children):
            stack.append((c, event, node.kind))
    return out


def _check_fresh(tree_ids, graft_ids, what: str) -> None:
    clash = set(tree_ids) & set(graft_ids)
    if clash:
        raise DomainError(f"{what} reuses node ids {sorted(clash)}")


def _apply_terminal(tree: DecisionTree, step: TerminalEnlivenment) -> DecisionTree:
    target = tree[step.at]
    if step.cut:
        if step.at == tree.root:
            raise DomainError("cannot cut the root before enlivening it")
    elif target.kind != TERMINAL:
        raise DomainError(f"terminal enlivenment target {step.at!r} is not terminal")
    removed = tree.descendants(step.at)
    keep = set(tree.nodes) - set(removed)
    _check_fresh(keep, step.subtree.nodes, "grafted subtree")

    declared = step.subtree[step.subtree.root].event
    root_event = declared or target.event
    extra = root_event - target.event
    if not target.event <= root_event or not extra <= step.extension.new_states:
        raise DomainError("grafted subtree root must keep the target's event plus new states only")
    graft = _fill_events(step.subtree, root_event)

    nodes = {k: tree.nodes[k] for k in keep}
    nodes.update(graft)
    parents = {c: n.id for n in nodes.values() for c in n.children}
    parent = tree.parent(step.at)
    new_root = tree.root
    if parent is None:
        new_root = step.subtree.root
    else:
        p = nodes[parent]
        kids = tuple(step.subtree.root if c == step.at else c for c in p.children)
        nodes[parent] = Node(p.id, p.kind, kids, p.event, p.probs, p.payload)
        parents[step.subtree.root] = parent
        if extra:
            _propagate(nodes, parents, parent, step.subtree.root, extra)
    return DecisionTree(nodes, new_root)


def _apply_edge(tree: DecisionTree, step: EdgeEnlivenment) -> DecisionTree:
    n, m = step.edge
    parent = tree[n]
    if m not in parent.children:
        raise DomainError(f"{n!r} -> {m!r} is not an edge")
    dev = step.deviation_states
    if not dev:
        raise DomainError("edge enlivenment needs at least one deviation state")
    if not dev <= step.extension.new_states:
        raise DomainError("deviation states must be new states of the extension")
    if dev & tree.states:
        raise DomainError("deviation states already occur in the tree")
    e_id = step.enlivenment_node
    _check_fresh(tree.nodes, list(step.subtree.nodes) + [e_id], "edge enlivenment")
    if e_id in step.subtree.nodes:
        raise DomainError(f"enlivenment node id {e_id!r} reused inside the subtree")

    declared = step.subtree[step.subtree.root].event
    if declared and declared != dev:
        raise DomainError("post-enlivenment subtree root event must equal the deviation states")
    graft = _fill_events(step.subtree, dev)

    nodes = dict(tree.nodes)
    nodes.update(graft)
    nodes[e_id] = Node(e_id, EVENT, (m, step.subtree.root), tree[m].event | dev)
    kids = tuple(e_id if c == m else c for c in parent.children)
    nodes[n] = Node(n, parent.kind, kids, parent.event, parent.probs, parent.payload)
    parents = {c: k.id for k in nodes.values() for c in k.children}
    _propagate(nodes, parents, n, e_id, dev)
    return DecisionTree(nodes, tree.root)


def apply_step(tree: DecisionTree, step: EnlivenmentStep) -> DecisionTree:
    if isinstance(step, TerminalEnlivenment):
        out = _apply_terminal(tree, step)
    elif isinstance(step, EdgeEnlivenment):
        out = _apply_edge(tree, step)
    else:
        raise DomainError(f"unknown enlivenment step {step!r}")
    report = validate(out)
    if not report.ok:
        raise TransformationError(f"enlivenment produced an invalid tree: {report}")
    return out


def apply_script(tree: DecisionTree, beliefs: Belief, u: BernoulliUtility, steps):
    """Apply ``steps`` left to right, extending beliefs and utility as we go."""
    for i, step in enumerate(steps):
        try:
            tree = apply_step(tree, step)
            beliefs = extend_beliefs(beliefs, step.extension)
            u = extend_utility(u, step.extension)
        except (DomainError, KeyError) as exc:
            raise ScriptError(i, exc) from exc
    return tree, beliefs, u


def collapse(tree_plus: DecisionTree, beliefs_plus: Belief, old_states):
    """Condition an enlivened tree and its beliefs back on ``old_states``.

    Branches whose event misses ``old_states`` are removed, event nodes that
    lose all but one child are spliced out, events and AA lotteries are
    restricted, and beliefs are renormalized.
    """
    old = frozenset(old_states)
    if not tree_plus.states & old:
        raise DomainError("root event is disjoint from the old states")
    nodes = {}

    def build(nid):
        node = tree_plus.nodes[nid]
        event = node.event & old
        if not event:
            return None
        kids = [k for k in (build(c) for c in node.children) if k is not None]
        if node.kind == EVENT and len(kids) == 1 and len(node.children) > 1:
            return kids[0]
        payload = node.payload
        if isinstance(payload, AALottery):
            payload = AALottery({s: payload[s] for s in payload if s in old})
        # chance and decision children share the parent's event, so none drop out
        nodes[nid] = Node(nid, node.kind, tuple(kids), event, node.probs, payload)
        return nid

    root = build(tree_plus.root)
    return DecisionTree(nodes, root), beliefs_plus.conditional(old & set(beliefs_plus))
