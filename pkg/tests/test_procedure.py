import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from livetree import fixtures as F
from livetree.errors import DomainError
from livetree.evaluate import evaluate
from livetree.procedure import AgentConfig, EpisodeTrace, cut_nodes, regret, run_procedure
from livetree.tree import Belief, DecisionTree, chance, outcome
from livetree.truncate import RolloutConfig

from helpers import problems

ROLL = RolloutConfig(10_000, 0)


@pytest.mark.parametrize("seed", range(20))
def test_trap_depths(seed):
    truth, beliefs, u = F.trap()
    shallow = run_procedure(truth, beliefs, u, AgentConfig(1, ROLL), seed)
    assert shallow.induced_policy == {"root": "A"}
    assert abs(shallow.steps[0].gamma_hat["B"] - 0.55) < 0.03
    assert regret(truth, beliefs, u, shallow) == pytest.approx(0.4, abs=1e-12)
    deep = run_procedure(truth, beliefs, u, AgentConfig(2, ROLL), seed)
    assert deep.induced_policy == {"root": "B", "B": "hi"}
    assert regret(truth, beliefs, u, deep) == 0.0
    assert deep.realized_utility == 1.0


def test_odysseus_with_script():
    script = [("go_near", s) for s in F.odysseus_script()]
    agent = AgentConfig(5, RolloutConfig(100, 0), script, F.naive_sailor(), F.odysseus_beliefs(), F.naive_utility())
    trace = run_procedure(F.kirke_final(), F.odysseus_beliefs(), F.final_utility(), agent, 1)
    assert trace.induced_policy == {"start": "go_near", "go_near": "wax", "wax": "bind", "bind": "hear"}
    assert [(s.node, s.model_size, s.chosen) for s in trace.steps] == [
        ("start", 5, "go_near"), ("go_near", 11, "wax"), ("wax", 5, "bind"), ("bind", 2, "hear")]
    assert trace.final_node == "hear" and trace.realized_utility == 1.0
    assert regret(F.kirke_final(), F.odysseus_beliefs(), F.final_utility(), trace) == 0.0


def test_odysseus_without_script():
    trace = run_procedure(F.naive_sailor(), F.odysseus_beliefs(), F.naive_utility(), AgentConfig(5, ROLL), 1)
    assert trace.induced_policy == {"start": "go_near", "go_near": "early"}
    assert [(s.node, s.chosen) for s in trace.steps] == [("start", "go_near"), ("go_near", "early")]
    assert trace.final_node == "early" and trace.realized_utility == 0.9


def test_naive_model_in_true_world_is_inconsistent():
    agent = AgentConfig(5, ROLL, model=F.naive_sailor(), model_beliefs=F.odysseus_beliefs(),
                        model_utility=F.naive_utility())
    with pytest.raises(DomainError):
        run_procedure(F.kirke_final(), F.odysseus_beliefs(), F.final_utility(), agent, 0)


def test_trigger_target_outside_continuation():
    from livetree.enliven import TerminalEnlivenment

    step = TerminalEnlivenment("late", F.earshot_graft())
    agent = AgentConfig(5, ROLL, [("go_near", step)])
    with pytest.raises(DomainError):
        run_procedure(F.naive_sailor(), F.odysseus_beliefs(), F.naive_utility(), agent, 0)


def test_config_validation():
    with pytest.raises(DomainError):
        AgentConfig(0, ROLL)


def test_incomplete_policy_regret():
    truth, beliefs, u = F.trap()
    trace = EpisodeTrace(0, [], "hi", 1.0, {"root": "B"})
    with pytest.raises(DomainError):
        regret(truth, beliefs, u, trace)


def test_cut_nodes():
    t = F.kirke_final()
    assert cut_nodes(t, 1) == ["avoid", "go_near"]
    assert cut_nodes(t, 2) == ["wax", "no_wax"]
    assert cut_nodes(t, 10) == []


def test_nature_follows_chance_probabilities():
    S = {"s"}
    truth = DecisionTree.from_nodes(
        [chance("c", [("a", 0.2), ("b", 0.8)], S), outcome("a", "lo", S), outcome("b", "hi", S)], "c")
    from livetree.evaluate import BernoulliUtility

    u = BernoulliUtility({"lo": 0.0, "hi": 1.0})
    ends = [run_procedure(truth, Belief({"s": 1.0}), u, AgentConfig(1, RolloutConfig(10, 0)), s).final_node
            for s in range(400)]
    share = ends.count("a") / len(ends)
    assert 0.12 < share < 0.28


def test_determinism():
    (truth, beliefs, u), = problems(5, 1)
    agent = AgentConfig(1, RolloutConfig(500, 3))
    assert run_procedure(truth, beliefs, u, agent, 11) == run_procedure(truth, beliefs, u, agent, 11)


def test_full_information_recovers_optimal_policy():
    for truth, beliefs, u in problems(77, 100):
        agent = AgentConfig(max(1, truth.height()), RolloutConfig(10, 0))
        trace = run_procedure(truth, beliefs, u, agent, 0)
        assert all(s.gamma_hat == {} for s in trace.steps)
        best = evaluate(truth, beliefs, u).policy
        assert all(best[n] == c for n, c in trace.induced_policy.items())
        assert abs(regret(truth, beliefs, u, trace)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 4), st.integers(0, 1000))
def test_regret_non_negative(tree_seed, depth, seed):
    (truth, beliefs, u), = problems(tree_seed, 1)
    trace = run_procedure(truth, beliefs, u, AgentConfig(depth, RolloutConfig(200, seed)), seed)
    assert regret(truth, beliefs, u, trace) >= -1e-12
    for s in trace.steps:
        assert s.chosen in truth[s.node].children
