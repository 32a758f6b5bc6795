"""Two-period linear-quadratic consumption and portfolio problem.

Utility is ``-1/2 (x1-a1)'Q1(x1-a1) - 1/2 (x2-a2)'Q2(x2-a2)`` with budgets
``p1'x1 + q'b = m1`` and ``p2'x2 = m2 + r'b``. Second-period parameters
``(a2, m2)`` and returns ``r`` are independent finite scenario lists; their
product is the joint distribution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import linalg

from .errors import DomainError, SingularMatrixError
from .lottery import SUM_TOL

COND_WARN = 1e12


def _spd(M, name: str):
    """Cholesky factor of a symmetric positive-definite matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1] or not np.allclose(M, M.T, rtol=0.0, atol=1e-12):
        raise DomainError(f"{name} is not a symmetric square matrix")
    try:
        factor = linalg.cho_factor(M)
    except linalg.LinAlgError:
        raise SingularMatrixError(f"{name} is not positive definite") from None
    if np.linalg.cond(M) > COND_WARN:
        warnings.warn(f"{name} is ill-conditioned (condition number > {COND_WARN:g})", stacklevel=3)
    return factor


def _solve(M, rhs, name: str):
    """Cholesky solve with one step of iterative refinement."""
    factor = _spd(M, name)
    M, rhs = np.atleast_2d(np.asarray(M, dtype=float)), np.asarray(rhs, dtype=float)
    x = linalg.cho_solve(factor, rhs)
    return x + linalg.cho_solve(factor, rhs - M @ x)


def _probs(ps, what):
    ps = np.asarray(ps, dtype=float)
    if ps.size == 0 or np.any(ps <= 0.0) or abs(math.fsum(ps) - 1.0) > SUM_TOL:
        raise DomainError(f"{what} probabilities must be positive and sum to 1")
    return ps


class Scenario(NamedTuple):
    a2: np.ndarray
    m2: float
    r: np.ndarray


@dataclass(frozen=True)
class PortfolioProblem:
    Q1: np.ndarray
    Q2: np.ndarray
    a1: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    q: np.ndarray
    m1: float
    # [(prob, a2, m2)] and [(prob, r)]; independent by construction
    income: tuple
    returns: tuple

    def __post_init__(self):
        vec = lambda v: np.atleast_1d(np.asarray(v, dtype=float))
        mat = lambda m: np.atleast_2d(np.asarray(m, dtype=float))
        set_ = lambda k, v: object.__setattr__(self, k, v)
        for k in ("Q1", "Q2"):
            set_(k, mat(getattr(self, k)))
        for k in ("a1", "p1", "p2", "q"):
            set_(k, vec(getattr(self, k)))
        set_("m1", float(self.m1))
        set_("income", tuple((float(p), vec(a2), float(m2)) for p, a2, m2 in self.income))
        set_("returns", tuple((float(p), vec(r)) for p, r in self.returns))
        _spd(self.Q1, "Q1")
        _spd(self.Q2, "Q2")
        n1, n2, k = len(self.a1), self.Q2.shape[0], len(self.q)
        if self.Q1.shape != (n1, n1) or self.p1.shape != (n1,):
            raise DomainError("first-period dimensions disagree")
        if self.p2.shape != (n2,) or any(a2.shape != (n2,) for _, a2, _ in self.income):
            raise DomainError("second-period dimensions disagree")
        if any(r.shape != (k,) for _, r in self.returns):
            raise DomainError("return vectors must match the asset price vector")
        if np.any(self.p1 <= 0) or np.any(self.p2 <= 0):
            raise DomainError("commodity prices must be strictly positive")
        _probs([p for p, _, _ in self.income], "income scenario")
        _probs([p for p, _ in self.returns], "return scenario")

    def joint(self):
        """[(prob, Scenario)] over the product of the two scenario lists."""
        return [
            (pi * pr, Scenario(a2, m2, r))
            for pi, a2, m2 in self.income
            for pr, r in self.returns
        ]

    @property
    def price_scale(self) -> float:
        """``p2' Q2^{-1} p2``."""
        return float(self.p2 @ _solve(self.Q2, self.p2, "Q2"))


class SecondPeriod(NamedTuple):
    x2: np.ndarray
    lambda2: float
    u2: float


class Reduction(NamedTuple):
    b_star: np.ndarray
    S: np.ndarray
    c: float
    R: np.ndarray


@dataclass(frozen=True)
class FirstPeriodSolution:
    x1_star: np.ndarray
    b_star_choice: np.ndarray
    lambda1: float
    b_star: np.ndarray
    S_matrix: np.ndarray
    lambda_nonnegative: bool
    # min(p2'a2 - m2) - max(r'b) over the support; >= 0 iff some alpha separates
    separation_gap: float
    separation_ok: bool
    notes: list = field(default_factory=list)

    @property
    def sensible(self) -> bool:
        return self.lambda_nonnegative and self.separation_ok


def solve_second_period(prob: PortfolioProblem, scenario, b) -> SecondPeriod:
    a2, m2, r = (np.atleast_1d(np.asarray(scenario[0], float)), float(scenario[1]),
                 np.atleast_1d(np.asarray(scenario[2], float)))
    b = np.atleast_1d(np.asarray(b, float))
    Qinv_p = _solve(prob.Q2, prob.p2, "Q2")
    k = float(prob.p2 @ Qinv_p)
    shortfall = float(prob.p2 @ a2 - m2 - r @ b)
    lam = shortfall / k
    return SecondPeriod(a2 - lam * Qinv_p, lam, -shortfall**2 / (2.0 * k))


def reduce_first_period(prob: PortfolioProblem) -> Reduction:
    """Target portfolio ``b*``, curvature ``S`` and constant ``c`` of the reduced objective."""
    R = sum(p * np.outer(r, r) for p, r in prob.returns)
    r_bar = sum(p * r for p, r in prob.returns)
    wealth_gap = [(p, float(prob.p2 @ a2 - m2)) for p, a2, m2 in prob.income]
    mean_gap = math.fsum(p * g for p, g in wealth_gap)
    second = math.fsum(p * g * g for p, g in wealth_gap)
    try:
        b_star = _solve(R, r_bar, "the second-moment matrix of returns E[r r']") * mean_gap
    except SingularMatrixError:
        raise SingularMatrixError(
            "the second-moment matrix of returns E[r r'] is singular"
        ) from None
    c = second - float(b_star @ R @ b_star)
    return Reduction(b_star, R / prob.price_scale, c, R)


def reduced_objective(prob: PortfolioProblem, x1, b, red: Reduction = None) -> float:
    """Reduced first-period maximand in ``(x1, b)``; the additive constant is dropped."""
    red = red or reduce_first_period(prob)
    dx, db = np.asarray(x1, float) - prob.a1, red.b_star - np.asarray(b, float)
    return float(-0.5 * dx @ prob.Q1 @ dx - 0.5 * db @ red.S @ db)


def expected_objective(prob: PortfolioProblem, x1, b) -> float:
    """First-period utility plus the scenario expectation of optimal second-period utility."""
    dx = np.asarray(x1, float) - prob.a1
    k = prob.price_scale
    tail = math.fsum(
        p * float(prob.p2 @ s.a2 - s.m2 - s.r @ np.asarray(b, float)) ** 2 for p, s in prob.joint()
    )
    return float(-0.5 * dx @ prob.Q1 @ dx - tail / (2.0 * k))


def solve_first_period(prob: PortfolioProblem) -> FirstPeriodSolution:
    red = reduce_first_period(prob)
    Q1inv_p = _solve(prob.Q1, prob.p1, "Q1")
    Sinv_q = _solve(red.S, prob.q, "S")
    lam = (float(prob.p1 @ prob.a1 + prob.q @ red.b_star) - prob.m1) / (
        float(prob.p1 @ Q1inv_p) + float(prob.q @ Sinv_q)
    )
    x1 = prob.a1 - lam * Q1inv_p
    b = red.b_star - lam * Sinv_q
    needs = min(float(prob.p2 @ a2 - m2) for _, a2, m2 in prob.income)
    payout = max(float(r @ b) for _, r in prob.returns)
    gap = needs - payout
    notes = []
    if lam < 0:
        notes.append("lambda1 < 0: first-period bliss point is affordable")
    if gap < 0:
        notes.append("no alpha separates p2'a2 - m2 from r'b on the scenario support")
    return FirstPeriodSolution(x1, b, lam, red.b_star, red.S, lam >= 0, gap, gap >= 0, notes)


def enlivened_objective(scenarios):
    """Certainty-equivalent ``(b_hat*, S_hat)`` for uncertain ``(b~*, S~)``.

    ``scenarios`` is a sequence of ``(prob, b_tilde_star, S_tilde)``.
    """
    ps = _probs([s[0] for s in scenarios], "enlivenment scenario")
    bs = [np.atleast_1d(np.asarray(s[1], float)) for s in scenarios]
    Ss = [np.atleast_2d(np.asarray(s[2], float)) for s in scenarios]
    for i, S in enumerate(Ss):
        _spd(S, f"scenario matrix {i}")
    S_hat = sum(p * S for p, S in zip(ps, Ss))
    moment = sum(p * S @ b for p, S, b in zip(ps, Ss, bs))
    return _solve(S_hat, moment, "S_hat"), S_hat


# -- independent verifier -----------------------------------------------------


def qp_oracle(H, f, A, rhs):
    """Maximize ``-1/2 (z-f)'H(z-f)`` subject to ``A z = rhs`` via the KKT system.

    Returns ``(z, mu)`` where ``mu`` multiplies ``(A z - rhs)`` in the
    Lagrangian ``-1/2 (z-f)'H(z-f) - mu'(A z - rhs)``.
    """
    H = np.atleast_2d(np.asarray(H, float))
    A = np.atleast_2d(np.asarray(A, float))
    f = np.atleast_1d(np.asarray(f, float))
    rhs = np.atleast_1d(np.asarray(rhs, float))
    n, m = H.shape[0], A.shape[0]
    if np.linalg.matrix_rank(A) < m:
        raise SingularMatrixError("constraint matrix is rank deficient")
    K = np.block([[H, A.T], [A, np.zeros((m, m))]])
    sol = np.linalg.solve(K, np.concatenate([H @ f, rhs]))
    return sol[:n], sol[n:]


def second_period_oracle(prob: PortfolioProblem, scenario, b):
    a2, m2, r = scenario
    rhs = float(m2) + float(np.dot(np.atleast_1d(r), np.atleast_1d(b)))
    z, mu = qp_oracle(prob.Q2, a2, prob.p2[None, :], [rhs])
    return z, float(mu[0])


def first_period_oracle(prob: PortfolioProblem):
    """Optimal ``(x1, b)`` and multiplier built from the joint scenario table.

    The quadratic in ``b`` is assembled by summing over every joint scenario,
    without using independence or the closed-form target portfolio.
    """
    k = prob.price_scale
    joint = prob.joint()
    Hb = sum(p * np.outer(s.r, s.r) for p, s in joint) / k
    gb = sum(p * float(prob.p2 @ s.a2 - s.m2) * s.r for p, s in joint) / k
    n1, nb = len(prob.a1), len(prob.q)
    H = np.zeros((n1 + nb, n1 + nb))
    H[:n1, :n1], H[n1:, n1:] = prob.Q1, Hb
    f = np.concatenate([prob.a1, np.linalg.solve(Hb, gb)])
    z, mu = qp_oracle(H, f, np.concatenate([prob.p1, prob.q])[None, :], [prob.m1])
    return z[:n1], z[n1:], float(mu[0])
