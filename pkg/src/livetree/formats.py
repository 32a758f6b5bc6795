"""JSON interchange formats for trees, enlivenment scripts and portfolio problems.

Every document carries ``"format": 1``.

Tree document::

    {"format": 1,
     "states": ["s1", "s2"],            # optional, defaults to the root event
     "beliefs": {"s1": 0.3, "s2": 0.7},  # optional, defaults to uniform
     "utility": {"values": {"y": 0.0, "z": 1.0}, "anchors": ["y", "z"]},
     "root": "n0",
     "node_count": 3,                     # optional, checked when present
     "nodes": [{"id": "n0", "kind": "chance", "children": ["a", "b"], "probs": [0.5, 0.5]},
               {"id": "a", "kind": "terminal", "consequence": "y"},
               {"id": "b", "kind": "terminal", "lottery": {"y": 0.2, "z": 0.8}}]}

A node may give ``"event"`` (a list of states). Otherwise the root gets all
states and children of decision and chance nodes inherit their parent's
event; children of event nodes must declare theirs. Terminals carry exactly
one of ``consequence``, ``lottery`` (same in every state), ``aa`` (state to
lottery) or ``eval`` (a truncation node; ``null`` leaves it unset).

Script document: ``{"format": 1, "steps": [...]}`` where each step is either
``{"type": "terminal", "at", "subtree", "cut"?}`` or ``{"type": "edge",
"edge": [n, m], "deviation_states", "subtree", "node_id"?}``, plus optional
``new_consequences``, ``new_states`` (state to mass) and ``trigger`` (node id
used by ``simulate``). A subtree is ``{"root", "nodes"}`` in the node syntax
above; its events may be left out and are filled in when grafted.

Portfolio document: matrices as lists of rows, vectors as lists, plus
``"income": [{"p", "a2", "m2"}]`` and ``"returns": [{"p", "r"}]``.
"""

from __future__ import annotations

import json

from .enliven import DomainExtension, EdgeEnlivenment, TerminalEnlivenment
from .errors import DomainError
from .evaluate import BernoulliUtility
from .lottery import AALottery, Lottery
from .tree import (
    CHANCE,
    DECISION,
    EVENT,
    KINDS,
    TERMINAL,
    UNSET,
    Belief,
    DecisionTree,
    Evaluation,
    Node,
    require_valid,
)

FORMAT = 1
_PAYLOAD_KEYS = ("consequence", "lottery", "aa", "eval")


class FormatError(DomainError):
    """Malformed document; syntax errors carry ``line`` and ``column``."""

    def __init__(self, message, line=None, column=None):
        self.line, self.column = line, column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


def _load(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"syntax error: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise FormatError("document must be a JSON object")
    if doc.get("format", FORMAT) != FORMAT:
        raise FormatError(f"unsupported format {doc.get('format')!r}")
    return doc


def _need(obj, key, where):
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    return obj[key]


def _payload(raw, nid, event):
    """Terminal payload; ``event=None`` keeps state-free lotteries for grafting."""
    given = [k for k in _PAYLOAD_KEYS if k in raw]
    if len(given) != 1:
        raise FormatError(f"terminal {nid!r} needs exactly one of {', '.join(_PAYLOAD_KEYS)}")
    key = given[0]
    if key == "eval":
        return UNSET if raw["eval"] is None else Evaluation(float(raw["eval"]))
    if key == "aa":
        return AALottery(raw["aa"])
    lot = Lottery({raw["consequence"]: 1.0} if key == "consequence" else raw["lottery"])
    return lot if event is None else AALottery.constant(sorted(event), lot)


def _node(raw, event, fill_payload=True):
    nid = str(_need(raw, "id", "node"))
    kind = _need(raw, "kind", f"node {nid!r}")
    if kind not in KINDS:
        raise FormatError(f"node {nid!r}: unknown kind {kind!r}")
    children = tuple(str(c) for c in raw.get("children", ()))
    probs = None
    if kind == CHANCE:
        probs = tuple(float(p) for p in _need(raw, "probs", f"chance node {nid!r}"))
    payload = None
    if kind == TERMINAL:
        payload = _payload(raw, nid, event if fill_payload else None)
    return Node(nid, kind, children, frozenset(event), probs, payload)


def _nodes(doc, where):
    raw_nodes = _need(doc, "nodes", where)
    table = {}
    for raw in raw_nodes:
        nid = str(_need(raw, "id", "node"))
        if nid in table:
            raise FormatError(f"duplicate node id {nid!r}")
        table[nid] = raw
    root = str(_need(doc, "root", where))
    if root not in table:
        raise FormatError(f"root {root!r} is not among the nodes")
    return table, root


def _event_of(raw):
    return frozenset(str(s) for s in raw["event"]) if "event" in raw else None


def _build(table, root, root_event):
    """Nodes with events filled top-down; unreachable nodes keep a declared or empty event."""
    events = {}
    stack = [(root, root_event, None)]
    seen = set()
    while stack:
        nid, inherited, parent_kind = stack.pop()
        if nid in seen or nid not in table:
            continue
        seen.add(nid)
        raw = table[nid]
        event = _event_of(raw)
        if event is None:
            if parent_kind == EVENT:
                raise FormatError(f"child {nid!r} of an event node must declare its event")
            event = inherited
        events[nid] = event
        for c in raw.get("children", ()):
            stack.append((str(c), event, raw.get("kind")))
    return [_node(raw, events.get(nid, _event_of(raw) or frozenset())) for nid, raw in table.items()]


def parse_tree_doc(doc: dict):
    table, root = _nodes(doc, "tree document")
    util = _need(doc, "utility", "tree document")
    if "values" in util:
        anchors = util.get("anchors")
        u = BernoulliUtility(util["values"], tuple(anchors) if anchors else None)
    else:
        u = BernoulliUtility(util)
    states = doc.get("states")
    root_event = _event_of(table[root])
    if root_event is None:
        if states is None:
            raise FormatError("tree document needs 'states' or an event on the root")
        root_event = frozenset(str(s) for s in states)
    tree = DecisionTree.from_nodes(_build(table, root, root_event), root)
    declared = doc.get("node_count")
    if declared is not None and int(declared) != len(tree):
        raise FormatError(f"document declares {declared} nodes but lists {len(tree)}")
    require_valid(tree)
    beliefs = Belief(doc["beliefs"]) if "beliefs" in doc else Belief.uniform(sorted(root_event))
    return tree, beliefs, u


def parse_tree_file(text: str):
    """``(DecisionTree, Belief, BernoulliUtility)`` from a tree document."""
    return parse_tree_doc(_load(text))


def _node_dict(node: Node) -> dict:
    out = {"id": node.id, "kind": node.kind}
    if node.children:
        out["children"] = list(node.children)
    if node.probs is not None:
        out["probs"] = list(node.probs)
    out["event"] = sorted(node.event)
    p = node.payload
    if isinstance(p, Evaluation):
        out["eval"] = p.value
    elif isinstance(p, AALottery):
        lots = set(p.values())
        if len(lots) == 1 and set(p.states) == set(node.event):
            lot = next(iter(lots))
            if len(lot) == 1 and next(iter(lot.values())) == 1.0:
                out["consequence"] = next(iter(lot))
            else:
                out["lottery"] = lot.to_dict()
        else:
            out["aa"] = p.to_dict()
    elif isinstance(p, Lottery):
        out["lottery"] = p.to_dict()
    return out


def tree_doc(tree: DecisionTree, beliefs=None, u=None) -> dict:
    doc = {"format": FORMAT, "states": sorted(tree.states)}
    if beliefs is not None:
        doc["beliefs"] = {s: beliefs[s] for s in sorted(beliefs)}
    if u is not None:
        doc["utility"] = {"values": {y: u[y] for y in sorted(u)}, "anchors": list(u.anchors)}
    doc["root"] = tree.root
    doc["node_count"] = len(tree)
    doc["nodes"] = [_node_dict(tree.nodes[n]) for n in tree.order]
    extra = sorted(set(tree.nodes) - set(tree.order))
    doc["nodes"].extend(_node_dict(tree.nodes[n]) for n in extra)
    return doc


def serialize(tree: DecisionTree, beliefs=None, u=None) -> str:
    return json.dumps(tree_doc(tree, beliefs, u), indent=2) + "\n"


# -- scripts ------------------------------------------------------------------


def _subtree(doc) -> DecisionTree:
    table, root = _nodes(doc, "subtree")
    nodes = [_node(raw, _event_of(raw) or frozenset(), fill_payload=False) for raw in table.values()]
    for n, raw in zip(nodes, table.values()):
        if n.kind == TERMINAL and "aa" in raw and not n.event:
            raise FormatError(f"terminal {n.id!r} with a state-indexed lottery must declare its event")
    return DecisionTree.from_nodes(nodes, root)


def parse_step(raw: dict):
    """``(trigger or None, step)``."""
    ext = DomainExtension(raw.get("new_consequences", {}), raw.get("new_states", {}))
    sub = _subtree(_need(raw, "subtree", "script step"))
    kind = _need(raw, "type", "script step")
    if kind == "terminal":
        step = TerminalEnlivenment(str(_need(raw, "at", "terminal step")), sub, ext, bool(raw.get("cut", False)))
    elif kind == "edge":
        edge = tuple(str(e) for e in _need(raw, "edge", "edge step"))
        if len(edge) != 2:
            raise FormatError("edge step: 'edge' must be a pair of node ids")
        dev = frozenset(str(s) for s in _need(raw, "deviation_states", "edge step"))
        step = EdgeEnlivenment(edge, dev, sub, ext, raw.get("node_id"))
    else:
        raise FormatError(f"unknown step type {kind!r}")
    trigger = raw.get("trigger")
    return (None if trigger is None else str(trigger)), step


def _subtree_doc(sub: DecisionTree) -> dict:
    nodes = []
    for nid in sub.order:
        d = _node_dict(sub.nodes[nid])
        if not sub.nodes[nid].event:
            del d["event"]
        nodes.append(d)
    return {"root": sub.root, "nodes": nodes}


def step_doc(step, trigger=None) -> dict:
    out = {}
    if trigger is not None:
        out["trigger"] = trigger
    if isinstance(step, TerminalEnlivenment):
        out.update(type="terminal", at=step.at)
        if step.cut:
            out["cut"] = True
    else:
        out.update(type="edge", edge=list(step.edge), deviation_states=sorted(step.deviation_states))
        if step.node_id is not None:
            out["node_id"] = step.node_id
    if step.extension.new_consequences:
        out["new_consequences"] = dict(sorted(step.extension.new_consequences.items()))
    if step.extension.new_state_mass:
        out["new_states"] = dict(sorted(step.extension.new_state_mass.items()))
    out["subtree"] = _subtree_doc(step.subtree)
    return out


def serialize_script(steps, triggers=None) -> str:
    triggers = triggers or [None] * len(steps)
    doc = {"format": FORMAT, "steps": [step_doc(s, t) for s, t in zip(steps, triggers)]}
    return json.dumps(doc, indent=2) + "\n"


def parse_script_file(text: str) -> list:
    doc = _load(text)
    return [parse_step(raw) for raw in _need(doc, "steps", "script document")]


# -- portfolio ----------------------------------------------------------------


def parse_portfolio_file(text: str):
    from .portfolio import PortfolioProblem

    doc = _load(text)
    where = "portfolio document"
    fields = {k: _need(doc, k, where) for k in ("Q1", "Q2", "a1", "p1", "p2", "q", "m1")}
    income = [(_need(s, "p", "income"), _need(s, "a2", "income"), _need(s, "m2", "income"))
              for s in _need(doc, "income", where)]
    returns = [(_need(s, "p", "returns"), _need(s, "r", "returns")) for s in _need(doc, "returns", where)]
    return PortfolioProblem(income=income, returns=returns, **fields)


# -- DOT ----------------------------------------------------------------------

_SHAPES = {DECISION: "box", CHANCE: "circle", EVENT: "diamond", TERMINAL: "plaintext"}


def to_dot(tree: DecisionTree, report=None) -> str:
    """Graphviz source; chosen moves of ``report`` are drawn bold."""
    lines = ["digraph tree {"]
    for nid in tree.order:
        node = tree.nodes[nid]
        label = nid
        if report is not None and nid in report.value:
            label += f"\\n{report.value[nid]:.9f}"
        lines.append(f'  "{nid}" [shape={_SHAPES[node.kind]}, label="{label}"];')
    for nid in tree.order:
        node = tree.nodes[nid]
        probs = node.edge_probs
        for c in node.children:
            attrs = []
            if c in probs:
                attrs.append(f'label="{probs[c]:.9f}"')
            elif node.kind == EVENT:
                attrs.append(f'label="{{{",".join(sorted(tree.nodes[c].event))}}}"')
            if report is not None and report.policy.get(nid) == c:
                attrs.append("style=bold")
            suffix = f" [{', '.join(attrs)}]" if attrs else ""
            lines.append(f'  "{nid}" -> "{c}"{suffix};')
    lines.append("}")
    return "\n".join(lines) + "\n"
