"""Decision trees with decision, chance, event and terminal nodes.

Every node carries the event ``S>=n``: the set of states still possible in
its continuation subtree. Trees are immutable; transformations elsewhere in
the package build new trees from the node maps of old ones.
"""

from __future__ import annotations

import math
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Optional, Union

from .errors import DomainError, StructuralError, UnknownNodeError
from .lottery import SUM_TOL, AALottery, Lottery

DECISION = "decision"
CHANCE = "chance"
EVENT = "event"
TERMINAL = "terminal"
KINDS = (DECISION, CHANCE, EVENT, TERMINAL)


@dataclass(frozen=True)
class Evaluation:
    """Real-valued payload of a truncation node; ``value=None`` means unset."""

    value: Optional[float] = None

    @property
    def is_set(self) -> bool:
        return self.value is not None


UNSET = Evaluation(None)

Consequence = Union[AALottery, Evaluation]


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    children: tuple = ()
    event: frozenset = frozenset()
    # chance nodes only, aligned with ``children``
    probs: Optional[tuple] = None
    # terminal nodes only
    payload: Optional[Consequence] = None

    @property
    def edge_probs(self) -> dict:
        if self.probs is None:
            return {}
        return dict(zip(self.children, self.probs))

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL


def decision(id, children, event) -> Node:
    return Node(id, DECISION, tuple(children), frozenset(event))


def chance(id, children_probs, event) -> Node:
    """``children_probs`` is a sequence of (child id, probability) pairs."""
    pairs = list(children_probs.items() if isinstance(children_probs, Mapping) else children_probs)
    return Node(
        id,
        CHANCE,
        tuple(c for c, _ in pairs),
        frozenset(event),
        probs=tuple(float(p) for _, p in pairs),
    )


def event_node(id, children, event) -> Node:
    return Node(id, EVENT, tuple(children), frozenset(event))


def terminal(id, payload, event) -> Node:
    if isinstance(payload, (int, float)) and not isinstance(payload, bool):
        payload = Evaluation(float(payload))
    elif isinstance(payload, Mapping) and not isinstance(payload, (AALottery, Lottery)):
        payload = AALottery(payload)
    return Node(id, TERMINAL, (), frozenset(event), payload=payload)


def outcome(id, consequence, event) -> Node:
    """Terminal node yielding ``consequence`` for sure in every state."""
    event = frozenset(event)
    return terminal(id, AALottery.constant(sorted(event), {consequence: 1.0}), event)


@dataclass(frozen=True)
class DecisionTree:
    """Rooted tree given by a node map and a root id."""

    nodes: Mapping
    root: str

    def __post_init__(self):
        if not isinstance(self.nodes, MappingProxyType):
            object.__setattr__(self, "nodes", MappingProxyType(dict(self.nodes)))

    @classmethod
    def from_nodes(cls, nodes: Iterable[Node], root: Optional[str] = None) -> "DecisionTree":
        nodes = list(nodes)
        return cls({n.id: n for n in nodes}, root if root is not None else nodes[0].id)

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node_id):
        return node_id in self.nodes

    def __getitem__(self, node_id) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def __eq__(self, other):
        if not isinstance(other, DecisionTree):
            return NotImplemented
        return self.root == other.root and dict(self.nodes) == dict(other.nodes)

    def __hash__(self):
        return hash((self.root, frozenset(self.nodes.items())))

    @cached_property
    def parents(self) -> dict:
        out = {}
        for n in self.nodes.values():
            for c in n.children:
                out[c] = n.id
        return out

    @cached_property
    def order(self) -> tuple:
        """Node ids reachable from the root, parents before children."""
        return tuple(_walk(self.nodes, self.root))

    def parent(self, node_id) -> Optional[str]:
        self[node_id]
        return self.parents.get(node_id)

    def ancestors(self, node_id) -> list:
        """Strict ancestors of ``node_id``, nearest first."""
        out = []
        cur = self.parent(node_id)
        while cur is not None:
            out.append(cur)
            cur = self.parents.get(cur)
        return out

    def descendants(self, node_id) -> list:
        """``node_id`` followed by every node that succeeds it."""
        self[node_id]
        return list(_walk(self.nodes, node_id))

    def height(self, node_id=None) -> int:
        """Longest number of edges from ``node_id`` (default root) to a leaf."""
        start = self.root if node_id is None else node_id
        depth = {start: 0}
        best = 0
        for n in self.descendants(start):
            for c in self.nodes[n].children:
                depth[c] = depth[n] + 1
                best = max(best, depth[c])
        return best

    def terminals(self) -> list:
        return [n for n in self.order if self.nodes[n].kind == TERMINAL]

    def decision_nodes(self) -> list:
        return [n for n in self.order if self.nodes[n].kind == DECISION]

    @property
    def states(self) -> frozenset:
        return self.nodes[self.root].event

    def consequences(self) -> frozenset:
        out = set()
        for n in self.order:
            payload = self.nodes[n].payload
            if isinstance(payload, AALottery):
                out |= payload.consequences
        return frozenset(out)

    def replace(self, updates: Mapping = (), remove: Iterable = (), root=None) -> "DecisionTree":
        """A new tree with ``remove`` dropped and ``updates`` (id -> Node) set."""
        nodes = dict(self.nodes)
        for n in remove:
            nodes.pop(n, None)
        nodes.update(dict(updates))
        return DecisionTree(nodes, self.root if root is None else root)


def _walk(nodes, start):
    seen = set()
    queue = deque([start])
    while queue:
        n = queue.popleft()
        if n in seen or n not in nodes:
            continue
        seen.add(n)
        yield n
        queue.extend(nodes[n].children)


class Belief(Mapping):
    """Interior subjective probability mass function over states."""

    __slots__ = ("_mass",)

    def __init__(self, mass: Mapping[str, float]):
        cleaned = {}
        for s, p in mass.items():
            p = float(p)
            if not math.isfinite(p) or p <= 0.0:
                raise DomainError(f"belief mass of state {s!r} is {p}; must be > 0")
            cleaned[str(s)] = p
        total = math.fsum(cleaned.values())
        if abs(total - 1.0) > SUM_TOL:
            raise DomainError(f"belief masses sum to {total!r}, not 1")
        self._mass = cleaned

    @classmethod
    def uniform(cls, states) -> "Belief":
        states = list(states)
        return cls({s: 1.0 / len(states) for s in states})

    def __getitem__(self, s):
        return self._mass[s]

    def __iter__(self):
        return iter(self._mass)

    def __len__(self):
        return len(self._mass)

    def __eq__(self, other):
        if isinstance(other, Belief):
            return self._mass == other._mass
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._mass.items()))

    def __repr__(self):
        return f"Belief({self._mass!r})"

    def mass_of(self, states) -> float:
        try:
            return math.fsum(self._mass[s] for s in states)
        except KeyError as exc:
            raise DomainError(f"no belief mass for state {exc.args[0]!r}") from None

    def conditional(self, states) -> "Belief":
        """Beliefs conditioned on the event ``states``."""
        states = [s for s in self._mass if s in set(states)]
        total = self.mass_of(states)
        return Belief({s: self._mass[s] / total for s in states})

    def to_dict(self) -> dict:
        return dict(self._mass)


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    node: Optional[str]
    clause: str
    message: str

    def __str__(self):
        where = f"node {self.node!r}" if self.node is not None else "tree"
        return f"{where}: [{self.clause}] {self.message}"


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __iter__(self):
        return iter(self.errors)

    def __len__(self):
        return len(self.errors)

    def clauses(self) -> set:
        return {v.clause for v in self.errors}

    def __str__(self):
        if self.ok:
            return "valid"
        return "; ".join(str(v) for v in self.errors)


def validate(tree: DecisionTree) -> ValidationReport:
    """Check every structural clause; violations are collected, never raised."""
    report = ValidationReport()
    err = lambda n, clause, msg: report.errors.append(Violation(n, clause, msg))
    nodes = tree.nodes

    if tree.root not in nodes:
        err(None, "root", f"root {tree.root!r} is not a node")
        return report

    incoming = {}
    for n in nodes.values():
        if len(set(n.children)) != len(n.children):
            err(n.id, "edge", "repeated child")
        for c in n.children:
            if c not in nodes:
                err(n.id, "edge", f"child {c!r} is not a node")
            elif c == n.id:
                err(n.id, "edge", "self loop")
            else:
                incoming.setdefault(c, []).append(n.id)
    if tree.root in incoming:
        err(tree.root, "unique-path", "root has a parent")
    for c, ps in incoming.items():
        if len(ps) > 1:
            err(c, "unique-path", f"several parents {sorted(ps)}")
    reachable = set(tree.order)
    for n in nodes:
        if n not in reachable:
            err(n, "unique-path", "not reachable from the root")
    if report.errors:
        return report

    for nid in tree.order:
        n = nodes[nid]
        if n.kind not in KINDS:
            err(nid, "kind", f"unknown node kind {n.kind!r}")
            continue
        if not n.event:
            err(nid, "event", "empty event")
        if n.kind == TERMINAL:
            if n.children:
                err(nid, "terminal", "terminal node has children")
            _check_payload(n, err)
            continue
        if not n.children:
            err(nid, "terminal", f"{n.kind} node has no children")
            continue
        if n.payload is not None:
            err(nid, "payload", "non-terminal node carries a payload")
        kids = [nodes[c] for c in n.children]
        if n.kind == CHANCE:
            probs = n.probs or ()
            if len(probs) != len(n.children):
                err(nid, "positivity", "chance probabilities do not match children")
            elif any(not math.isfinite(p) or p <= 0.0 for p in probs):
                err(nid, "positivity", "chance probabilities must be strictly positive")
            elif abs(math.fsum(probs) - 1.0) > SUM_TOL:
                err(nid, "normalization", f"chance probabilities sum to {math.fsum(probs)!r}")
        elif n.probs is not None:
            err(nid, "payload", f"{n.kind} node carries edge probabilities")
        if n.kind in (DECISION, CHANCE):
            for k in kids:
                if k.event != n.event:
                    err(nid, "inheritance", f"child {k.id!r} event differs from parent event")
        else:
            seen = set()
            for k in kids:
                if not k.event:
                    continue
                if seen & k.event:
                    err(nid, "partition", f"child {k.id!r} overlaps a sibling event")
                seen |= k.event
            if seen != n.event:
                err(nid, "partition", "children's events do not cover the node's event exactly")
            if len(kids) == 1:
                report.warnings.append(Violation(nid, "partition", "event node with a single child"))
    return report


def _check_payload(n: Node, err):
    p = n.payload
    if isinstance(p, Evaluation):
        if p.is_set and not math.isfinite(p.value):
            err(n.id, "payload", "evaluation is not finite")
    elif isinstance(p, AALottery):
        if p.states != n.event:
            err(n.id, "lottery-states", "AA lottery states differ from the node's event")
    elif isinstance(p, Lottery):
        err(n.id, "payload", "state-free lottery left unexpanded; give one lottery per state")
    else:
        err(n.id, "payload", "terminal node has no consequence")


def require_valid(tree: DecisionTree) -> None:
    report = validate(tree)
    if not report.ok:
        raise StructuralError(report)


# -- navigation ---------------------------------------------------------------


def continuation(tree: DecisionTree, n: str) -> DecisionTree:
    """The continuation subtree rooted at ``n``."""
    keep = tree.descendants(n)
    return DecisionTree({k: tree.nodes[k] for k in keep}, n)


def immediate_successors(tree: DecisionTree, n: str) -> list:
    return list(tree[n].children)


def shape(tree: DecisionTree, node_id: Optional[str] = None, *, labels: bool = True,
          contract_forced: bool = False):
    """Canonical, order-free description of a subtree for isomorphism tests.

    With ``labels`` terminal consequences are part of the shape. With
    ``contract_forced`` a decision node with one child (a forced move) is
    identified with that child.
    """
    nid = tree.root if node_id is None else node_id
    n = tree[nid]
    if contract_forced and n.kind == DECISION and len(n.children) == 1:
        return shape(tree, n.children[0], labels=labels, contract_forced=True)
    if n.kind == TERMINAL:
        label = None
        if labels:
            if isinstance(n.payload, AALottery):
                label = tuple(sorted(n.payload.consequences))
            else:
                label = "eval"
        return (TERMINAL, label)
    kids = [shape(tree, c, labels=labels, contract_forced=contract_forced) for c in n.children]
    return (n.kind, tuple(sorted(kids, key=repr)))


def isomorphic(a: DecisionTree, b: DecisionTree, **kw) -> bool:
    return shape(a, **kw) == shape(b, **kw)
