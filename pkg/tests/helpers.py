import numpy as np

from livetree.generate import random_problem


def problems(seed, count, **kw):
    """``count`` seeded random (tree, beliefs, utility) triples."""
    rng = np.random.default_rng(seed)
    return [random_problem(rng, **kw) for _ in range(count)]


def random_edge_step(rng, tree, eps, new_state="fresh", with_consequence=True):
    """An edge enlivenment at a random edge with a one- or two-node deviation branch."""
    from livetree.enliven import DomainExtension, EdgeEnlivenment
    from livetree.lottery import Lottery
    from livetree.tree import DecisionTree, Node

    edges = sorted((n, c) for n, node in tree.nodes.items() for c in node.children)
    edge = edges[int(rng.integers(len(edges)))]
    new_cons = {"novel": float(rng.uniform())} if with_consequence else {}
    target = "novel" if with_consequence else sorted(tree.consequences())[0]
    if rng.uniform() < 0.5:
        sub = DecisionTree.from_nodes([Node("dev", "terminal", payload=Lottery({target: 1.0}))], "dev")
    else:
        sub = DecisionTree.from_nodes(
            [
                Node("dev", "decision", ("dev_a", "dev_b")),
                Node("dev_a", "terminal", payload=Lottery({target: 1.0})),
                Node("dev_b", "terminal", payload=Lottery({sorted(tree.consequences())[-1]: 1.0})),
            ],
            "dev",
        )
    ext = DomainExtension(new_cons, {new_state: eps})
    return EdgeEnlivenment(edge, {new_state}, sub, ext)
