"""Hand-built trees: the four Odysseus trees, their enlivenment script, and
the depth trap used to exercise bounded agents.

The Odysseus trees are deterministic (one state, ``"s"``); every non-terminal
node is a decision node named after the move leading to it.
"""

from __future__ import annotations

from .enliven import DomainExtension, TerminalEnlivenment
from .evaluate import BernoulliUtility
from .lottery import Lottery
from .tree import Belief, DecisionTree, Node, decision, outcome

STATE = "s"
EVENT = frozenset({STATE})

# fixture utilities; the naive sailor knows only late and early
UTILITY = {"die": 0.0, "late": 0.4, "early": 0.9, "hear": 1.0}


def _d(id, *children):
    return decision(id, children, EVENT)


def _t(id, consequence):
    return outcome(id, consequence, EVENT)


def _graft(nodes, root):
    """Event-free subtree for grafting; events are filled in on application."""
    out = []
    for n in nodes:
        payload = n.payload
        if payload is not None:
            payload = Lottery({next(iter(payload.consequences)): 1.0})
        out.append(Node(n.id, n.kind, n.children, frozenset(), n.probs, payload))
    return DecisionTree.from_nodes(out, root)


def _avoid_branch():
    return [_d("avoid", "late"), _t("late", "late")]


def _sirens_branch():
    return [_d("go_on", "early"), _t("early", "early"), _d("tarry", "die"), _t("die", "die")]


def naive_sailor() -> DecisionTree:
    nodes = [_d("start", "avoid", "go_near"), *_avoid_branch(), _d("go_near", "early"), _t("early", "early")]
    return DecisionTree.from_nodes(nodes, "start")


def sophisticated_sailor() -> DecisionTree:
    nodes = [_d("start", "avoid", "go_near"), *_avoid_branch(), _d("go_near", "go_on", "tarry"), *_sirens_branch()]
    return DecisionTree.from_nodes(nodes, "start")


def kirke_first() -> DecisionTree:
    nodes = [
        _d("start", "avoid", "go_near"),
        *_avoid_branch(),
        _d("go_near", "wax", "no_wax"),
        _d("wax", "early_wax"),
        _t("early_wax", "early"),
        _d("no_wax", "go_on", "tarry"),
        *_sirens_branch(),
    ]
    return DecisionTree.from_nodes(nodes, "start")


def _bind_branch():
    return [_d("bind", "hear"), _t("hear", "hear"), _d("free", "early_wax"), _t("early_wax", "early")]


def kirke_final() -> DecisionTree:
    nodes = [
        _d("start", "avoid", "go_near"),
        *_avoid_branch(),
        _d("go_near", "wax", "no_wax"),
        _d("wax", "bind", "free"),
        *_bind_branch(),
        _d("no_wax", "go_on", "tarry"),
        *_sirens_branch(),
    ]
    return DecisionTree.from_nodes(nodes, "start")


def odysseus_beliefs() -> Belief:
    return Belief({STATE: 1.0})


def naive_utility() -> BernoulliUtility:
    return BernoulliUtility({"late": UTILITY["late"], "early": UTILITY["early"]}, ("late", "early"))


def final_utility() -> BernoulliUtility:
    return BernoulliUtility(UTILITY, ("die", "hear"))


def odysseus_script() -> list:
    """Three enlivenments taking the naive sailor's tree to Kirke's final one.

    Each step cuts a node that the previous step created (``go_near`` is
    the graft root of step one, ``wax`` a node of step two) and replaces it.
    """
    step1 = TerminalEnlivenment(
        "go_near",
        _graft([_d("go_near", "go_on", "tarry"), *_sirens_branch()], "go_near"),
        DomainExtension(new_consequences={"die": UTILITY["die"]}),
        cut=True,
    )
    step2 = TerminalEnlivenment(
        "go_near",
        _graft(
            [_d("go_near", "wax", "no_wax"), _d("wax", "early_wax"), _t("early_wax", "early"),
             _d("no_wax", "go_on", "tarry"), *_sirens_branch()],
            "go_near",
        ),
        cut=True,
    )
    step3 = TerminalEnlivenment(
        "wax",
        _graft([_d("wax", "bind", "free"), *_bind_branch()], "wax"),
        DomainExtension(new_consequences={"hear": UTILITY["hear"]}),
        cut=True,
    )
    return [step1, step2, step3]


def earshot_graft() -> DecisionTree:
    """``{go on -> early, tarry -> die}`` under a fresh decision root."""
    return _graft([_d("earshot", "go_on", "tarry"), *_sirens_branch()], "earshot")


def mast_graft() -> DecisionTree:
    """``{bind -> hear, free -> early}`` under a fresh decision root."""
    return _graft(
        [_d("mast", "bind", "free"), _d("bind", "hear"), _t("hear", "hear"), _d("free", "early_free"),
         _t("early_free", "early")],
        "mast",
    )


def trap():
    """Root choice between a sure 0.6 and a branch holding a choice of 0.1 or 1.0.

    Random play values the deep branch at 0.55, below the sure thing, while
    its exact value is 1.0.
    """
    nodes = [
        _d("root", "A", "B"),
        _t("A", "safe"),
        _d("B", "lo", "hi"),
        _t("lo", "poor"),
        _t("hi", "prize"),
    ]
    u = BernoulliUtility({"poor": 0.1, "safe": 0.6, "prize": 1.0}, ("poor", "prize"))
    return DecisionTree.from_nodes(nodes, "root"), odysseus_beliefs(), u
