"""``livetree`` command line.

Exit status: 0 on success, 1 on a domain or validation error (message on
stderr), 2 on a usage error. Randomized commands require ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys

import numpy as np

from . import formats
from .enliven import apply_script
from .errors import DomainError, TransformationError, UnknownNodeError
from .evaluate import evaluate
from .portfolio import first_period_oracle, solve_first_period
from .procedure import AgentConfig, regret, run_procedure
from .tree import validate
from .truncate import RolloutConfig, attach_evaluation, rollout_values, sample_mean, truncate, uniform_play_tree


class UsageError(Exception):
    pass


def fmt(x) -> str:
    return f"{float(x):.9f}"


def table(headers, rows) -> str:
    """Aligned text table."""
    rows = [[str(c) for c in r] for r in rows]
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(headers)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    return "\n".join([line(headers), line(["-" * w for w in widths])] + [line(r) for r in rows]) + "\n"


def csv_text(headers, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(headers)
    w.writerows(rows)
    return buf.getvalue()


def _read(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _load_tree(path):
    return formats.parse_tree_file(_read(path))


# -- commands -----------------------------------------------------------------


def cmd_validate(args, out):
    text = _read(args.file)
    tree, _, _ = formats.parse_tree_file(text)
    report = validate(tree)
    for w in report.warnings:
        out.write(f"warning: {w}\n")
    out.write(f"ok: {len(tree)} nodes, {len(tree.states)} states\n")
    if args.dot:
        _write(args.dot, formats.to_dot(tree))


def cmd_evaluate(args, out):
    tree, beliefs, u = _load_tree(args.file)
    rep = evaluate(tree, beliefs, u)
    rows = [(n, tree.nodes[n].kind, fmt(v), c) for n, v, c in rep.rows(tree)]
    headers = ["node", "kind", "value", "choice"]
    if args.csv:
        out.write(csv_text(headers, rows))
    else:
        out.write(f"root value: {fmt(rep.root_value)}\n")
        out.write("policy:\n")
        out.write(table(["node", "choice"], sorted(rep.policy.items(), key=lambda kv: tree.order.index(kv[0]))))
        out.write("values:\n")
        out.write(table(headers, rows))
    if args.dot:
        _write(args.dot, formats.to_dot(tree, rep))


def _assignments(pairs):
    out = {}
    for item in pairs or ():
        node, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"expected NODE=VALUE, got {item!r}")
        try:
            out[node] = float(value)
        except ValueError:
            raise UsageError(f"not a number: {value!r}") from None
    return out


def cmd_truncate(args, out):
    tree, beliefs, u = _load_tree(args.file)
    small = truncate(tree, args.cut)
    for node, value in _assignments(args.eval).items():
        small = attach_evaluation(small, node, value)
    _write(args.output, formats.serialize(small, beliefs, u))


def cmd_estimate(args, out):
    tree, beliefs, u = _load_tree(args.file)
    node = args.node or tree.root
    vals = rollout_values(tree, node, beliefs, u, RolloutConfig(args.rollouts, args.seed))
    se = float(np.std(vals, ddof=1)) / math.sqrt(len(vals)) if len(vals) > 1 else float("nan")
    exact = evaluate(uniform_play_tree(tree), beliefs, u).value[node]
    rows = [(node, args.rollouts, args.seed, fmt(sample_mean(vals)), fmt(se), fmt(exact))]
    headers = ["node", "rollouts", "seed", "estimate", "std_error", "uniform_play_value"]
    out.write(csv_text(headers, rows) if args.csv else table(headers, rows))


def cmd_enliven(args, out):
    tree, beliefs, u = _load_tree(args.file)
    steps = [s for _, s in formats.parse_script_file(_read(args.script))]
    tree, beliefs, u = apply_script(tree, beliefs, u, steps)
    _write(args.output, formats.serialize(tree, beliefs, u))


def cmd_simulate(args, out):
    truth, beliefs, u = _load_tree(args.truth)
    script = ()
    if args.script:
        script = formats.parse_script_file(_read(args.script))
        if any(t is None for t, _ in script):
            raise DomainError("every step of a simulation script needs a 'trigger' node")
    model = mb = mu = None
    if args.model:
        model, mb, mu = _load_tree(args.model)
    agent = AgentConfig(args.depth, RolloutConfig(args.rollouts, 0), script, model, mb, mu)
    summary = []
    for k in range(args.episodes):
        seed = args.seed + k
        trace = run_procedure(truth, beliefs, u, agent, seed)
        r = regret(truth, beliefs, u, trace)
        summary.append((seed, fmt(trace.realized_utility), fmt(r)))
        if not args.csv:
            out.write(f"episode {k} (seed {seed}): final node {trace.final_node}\n")
            rows = [
                (s.node, s.kind, s.model_size, s.chosen,
                 " ".join(f"{x}={fmt(g)}" for x, g in sorted(s.gamma_hat.items())))
                for s in trace.steps
            ]
            out.write(table(["node", "kind", "model_size", "chosen", "gamma_hat"], rows))
            policy = " ".join(f"{n}->{c}" for n, c in trace.induced_policy.items())
            out.write(f"induced policy: {policy}\n\n")
    out.write(csv_text(["seed", "realized_utility", "regret"], summary))


def cmd_portfolio(args, out):

    prob = formats.parse_portfolio_file(_read(args.file))
    sol = solve_first_period(prob)
    x_o, b_o, lam_o = first_period_oracle(prob)
    rows = []
    for i, (a, b) in enumerate(zip(sol.x1_star, x_o)):
        rows.append((f"x1[{i}]", a, b))
    for i, (a, b) in enumerate(zip(sol.b_star_choice, b_o)):
        rows.append((f"b[{i}]", a, b))
    rows.append(("lambda1", sol.lambda1, lam_o))
    for i, v in enumerate(sol.b_star):
        rows.append((f"b_star[{i}]", v, ""))
    dev = max(abs(a - b) for _, a, b in rows if b != "")
    body = [(name, fmt(a), "" if b == "" else fmt(b)) for name, a, b in rows]
    headers = ["quantity", "closed_form", "oracle"]
    if args.csv:
        out.write(csv_text(headers, body + [("max_deviation", f"{dev:.3e}", "")]))
        return
    out.write(table(headers, body))
    out.write(f"max deviation: {dev:.3e}\n")
    out.write(f"budget residual: {abs(prob.p1 @ sol.x1_star + prob.q @ sol.b_star_choice - prob.m1):.3e}\n")
    out.write(f"lambda1 >= 0: {'yes' if sol.lambda_nonnegative else 'no'}\n")
    out.write(f"separation gap: {fmt(sol.separation_gap)} ({'ok' if sol.separation_ok else 'violated'})\n")
    for note in sol.notes:
        out.write(f"note: {note}\n")


# -- parser -------------------------------------------------------------------


def _positive(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="livetree", description="Decision trees with truncation and enlivenment.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a tree file")
    s.add_argument("file")
    s.add_argument("--dot", metavar="PATH", help="also write a Graphviz dump")
    s.set_defaults(run=cmd_validate)

    s = sub.add_parser("evaluate", help="backward recursion: values and optimal policy")
    s.add_argument("file")
    s.add_argument("--csv", action="store_true")
    s.add_argument("--dot", metavar="PATH")
    s.set_defaults(run=cmd_evaluate)

    s = sub.add_parser("truncate", help="cut a tree and attach evaluations")
    s.add_argument("file")
    s.add_argument("--cut", action="append", required=True, metavar="NODE")
    s.add_argument("--eval", action="append", metavar="NODE=VALUE")
    s.add_argument("-o", "--output")
    s.set_defaults(run=cmd_truncate)

    s = sub.add_parser("estimate", help="random-play rollout estimate at a node")
    s.add_argument("file")
    s.add_argument("--node")
    s.add_argument("--rollouts", type=_positive, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--csv", action="store_true")
    s.set_defaults(run=cmd_estimate)

    s = sub.add_parser("enliven", help="apply an enlivenment script")
    s.add_argument("file")
    s.add_argument("--script", required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(run=cmd_enliven)

    s = sub.add_parser("simulate", help="run a bounded agent against a true tree")
    s.add_argument("--truth", required=True)
    s.add_argument("--model", help="agent's initial model (default: the truth)")
    s.add_argument("--depth", type=_positive, required=True)
    s.add_argument("--rollouts", type=_positive, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--script")
    s.add_argument("--episodes", type=_positive, default=1)
    s.add_argument("--csv", action="store_true", help="summary only")
    s.set_defaults(run=cmd_simulate)

    s = sub.add_parser("portfolio", help="two-period portfolio problem")
    psub = s.add_subparsers(dest="action", required=True)
    ps = psub.add_parser("solve")
    ps.add_argument("file")
    ps.add_argument("--csv", action="store_true")
    ps.set_defaults(run=cmd_portfolio)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.run(args, sys.stdout)
    except UsageError as exc:
        print(f"livetree: {exc}", file=sys.stderr)
        return 2
    except (DomainError, UnknownNodeError, TransformationError) as exc:
        print(f"livetree: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
