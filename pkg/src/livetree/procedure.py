"""A bounded agent acting in a hidden ground-truth tree.

At each node the agent takes the continuation of its current model, applies
any enlivenment triggered by arriving there, truncates the continuation a
fixed number of edges ahead, estimates every cut by random-play rollouts in
the true continuation, and then either moves to the best child of its
truncated model (decision nodes) or lets nature move (chance and event
nodes).

Besides the sampled episode, the agent's choice at every decision node
reachable under its own behaviour is worked out, so that its induced policy
can be scored exactly against the truth.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .enliven import apply_step, extend_beliefs, extend_utility
from .errors import DomainError
from .evaluate import cond_prob, evaluate, evaluate_policy, terminal_value
from .tree import CHANCE, DECISION, TERMINAL, DecisionTree, continuation, require_valid
from .truncate import RolloutConfig, attach_evaluation, mcts_estimate, truncate


@dataclass(frozen=True)
class AgentConfig:
    """How far the agent looks ahead and how it estimates what lies beyond.

    ``model`` is the agent's initial model (default: the truth itself), with
    ``model_beliefs`` / ``model_utility`` defaulting to the true ones.
    ``enliven_script`` holds ``(trigger node id, step)`` pairs; all steps of a
    trigger fire, in order, the first time the agent reaches that node.
    """

    depth: int
    rollout_cfg: RolloutConfig
    enliven_script: tuple = ()
    model: Optional[DecisionTree] = None
    model_beliefs: Optional[object] = None
    model_utility: Optional[object] = None

    def __post_init__(self):
        if self.depth < 1:
            raise DomainError("look-ahead depth must be at least 1")
        object.__setattr__(self, "enliven_script", tuple(self.enliven_script))


@dataclass(frozen=True)
class StepRecord:
    node: str
    kind: str
    model_size: int
    chosen: str
    gamma_hat: dict


@dataclass(frozen=True)
class EpisodeTrace:
    seed: int
    steps: list
    final_node: str
    realized_utility: float
    induced_policy: dict = field(default_factory=dict)


def _stream_seed(*parts) -> int:
    words = [p if isinstance(p, int) else zlib.crc32(str(p).encode()) for p in parts]
    return int(np.random.SeedSequence([w % (1 << 64) for w in words]).generate_state(1, np.uint64)[0])


def cut_nodes(model: DecisionTree, depth: int) -> list:
    """Non-terminal nodes exactly ``depth`` edges below the model's root."""
    level = [model.root]
    for _ in range(depth):
        level = [c for n in level for c in model.nodes[n].children]
    return [n for n in level if model.nodes[n].kind != TERMINAL]


class _Agent:
    def __init__(self, truth, beliefs, u, agent: AgentConfig, seed: int):
        self.truth, self.beliefs, self.u = truth, beliefs, u
        self.cfg, self.seed = agent, int(seed)
        self.policy = {}
        self.steps = []

    def _enliven(self, node, model, mb, mu, fired):
        steps = [s for trig, s in self.cfg.enliven_script if trig == node]
        if not steps or node in fired:
            return model, mb, mu, fired
        for step in steps:
            inside = set(model.descendants(node))
            target = step.at if hasattr(step, "at") else step.edge[0]
            if target not in inside:
                raise DomainError(f"enlivenment triggered at {node!r} targets {target!r} outside its continuation")
            model = apply_step(model, step)
            mb = extend_beliefs(mb, step.extension)
            mu = extend_utility(mu, step.extension)
        return model, mb, mu, fired | {node}

    def _truncated(self, node, model):
        cont = continuation(model, node)
        cuts = cut_nodes(cont, self.cfg.depth)
        small = truncate(cont, cuts)
        gammas = {}
        for x in cuts:
            if x not in self.truth:
                raise DomainError(f"agent's cut {x!r} does not exist in the true tree")
            rc = RolloutConfig(self.cfg.rollout_cfg.rollouts,
                               _stream_seed(self.seed, self.cfg.rollout_cfg.seed, node, x))
            gammas[x] = mcts_estimate(self.truth, x, self.beliefs, self.u, rc)
            small = attach_evaluation(small, x, gammas[x])
        return cont, small, gammas

    def visit(self, node, model, mb, mu, fired, rng):
        """Walk from ``node``; ``rng`` is set only on the sampled path."""
        if node not in model:
            raise DomainError(f"node {node!r} of the true tree is missing from the agent's model")
        model, mb, mu, fired = self._enliven(node, model, mb, mu, fired)
        truth_node = self.truth[node]
        if truth_node.kind == TERMINAL:
            return node
        if truth_node.kind == DECISION:
            cont, small, gammas = self._truncated(node, model)
            choice = evaluate(small, mb, mu).policy.get(node)
            if choice is None or choice not in truth_node.children:
                raise DomainError(f"agent's move at {node!r} is not a move of the true tree")
            self.policy[node] = choice
            if rng is not None:
                self.steps.append(StepRecord(node, truth_node.kind, len(cont), choice, gammas))
            return self.visit(choice, model, mb, mu, fired, rng)
        sampled = None
        if rng is not None:
            cont, _, gammas = self._truncated(node, model)
            sampled = _sample(self.truth, truth_node, self.beliefs, rng)
            self.steps.append(StepRecord(node, truth_node.kind, len(cont), sampled, gammas))
        end = None
        for c in truth_node.children:
            last = self.visit(c, model, mb, mu, fired, rng if c == sampled else None)
            if c == sampled:
                end = last
        return end


def _sample(truth, node, beliefs, rng):
    if node.kind == CHANCE:
        probs = np.asarray(node.probs)
    else:
        probs = np.array([cond_prob(beliefs, truth.nodes[c].event, node.event) for c in node.children])
    pos = int(np.searchsorted(np.cumsum(probs)[:-1], rng.random(), side="right"))
    return node.children[pos]


def run_procedure(truth: DecisionTree, beliefs, u, agent: AgentConfig, seed: int) -> EpisodeTrace:
    require_valid(truth)
    model = agent.model if agent.model is not None else truth
    mb = agent.model_beliefs if agent.model_beliefs is not None else beliefs
    mu = agent.model_utility if agent.model_utility is not None else u
    rng = np.random.Generator(np.random.Philox(key=_stream_seed(seed, "nature")))
    runner = _Agent(truth, beliefs, u, agent, seed)
    final = runner.visit(truth.root, model, mb, mu, frozenset(), rng)
    realized = terminal_value(truth[final], beliefs, u)
    return EpisodeTrace(int(seed), runner.steps, final, realized, runner.policy)


def regret(truth: DecisionTree, beliefs, u, trace: EpisodeTrace) -> float:
    """Optimal value minus the exact value of the agent's induced policy."""
    best = evaluate(truth, beliefs, u).root_value
    return best - evaluate_policy(truth, beliefs, u, trace.induced_policy)
