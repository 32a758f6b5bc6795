"""Decision trees under risk and uncertainty, with truncation, rollout
estimates, enlivenment, and a two-period linear-quadratic portfolio solver."""

from .enliven import (
    DomainExtension,
    EdgeEnlivenment,
    TerminalEnlivenment,
    apply_script,
    apply_step,
    check_reverse_bayes,
    collapse,
    extend_beliefs,
    extend_utility,
)
from .errors import (
    DegenerateUtilityError,
    DomainError,
    SingularMatrixError,
    StructuralError,
    TransformationError,
    UnknownNodeError,
)
from .evaluate import BernoulliUtility, cond_prob, evaluate, evaluate_policy, normalize
from .lottery import AALottery, Lottery, aa_expected_utility, degenerate, expected_utility, mix
from .procedure import AgentConfig, EpisodeTrace, regret, run_procedure
from .tree import Belief, DecisionTree, Evaluation, Node, continuation, immediate_successors, validate
from .truncate import CutSet, RolloutConfig, attach_evaluation, mcts_estimate, truncate

__version__ = "0.1.0"
