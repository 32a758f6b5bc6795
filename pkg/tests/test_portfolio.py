import numpy as np
import pytest

from livetree.errors import DomainError, SingularMatrixError
from livetree.portfolio import (
    PortfolioProblem,
    enlivened_objective,
    expected_objective,
    first_period_oracle,
    qp_oracle,
    reduce_first_period,
    reduced_objective,
    second_period_oracle,
    solve_first_period,
    solve_second_period,
)


def scalar(returns=((1.0, 1.0),), m1=5.0):
    return PortfolioProblem(1, 1, 10, 1, 1, 1, m1, [(1.0, 10.0, 0.0)], list(returns))


SPREAD = ((0.5, 0.5), (0.5, 1.5))


def spd(rng, n):
    M = rng.normal(size=(n, n))
    return M.T @ M + np.eye(n)


def probs(rng, k):
    w = rng.uniform(0.2, 1.0, size=k)
    return w / w.sum()


def random_problem(rng):
    n1, n2, k = int(rng.integers(1, 5)), int(rng.integers(1, 5)), int(rng.integers(1, 4))
    income = [(p, rng.uniform(5, 15, size=n2), rng.uniform(0, 10)) for p in probs(rng, int(rng.integers(1, 4)))]
    returns = [(p, rng.uniform(0.5, 1.5, size=k)) for p in probs(rng, k + int(rng.integers(1, 3)))]
    return PortfolioProblem(
        spd(rng, n1), spd(rng, n2), rng.uniform(5, 15, size=n1), rng.uniform(0.5, 2, size=n1),
        rng.uniform(0.5, 2, size=n2), rng.uniform(0.5, 2, size=k), rng.uniform(5, 30), income, returns,
    )


def instances(seed, count):
    rng = np.random.default_rng(seed)
    return [random_problem(rng) for _ in range(count)]


def test_second_period_scalar():
    x2, lam, u2 = solve_second_period(scalar(), (10.0, 0.0, 1.0), 2.5)
    assert (x2[0], lam, u2) == (2.5, 7.5, -28.125)
    z, mu = second_period_oracle(scalar(), (np.array([10.0]), 0.0, np.array([1.0])), [2.5])
    assert z[0] == pytest.approx(2.5, abs=1e-12) and mu == pytest.approx(7.5, abs=1e-12)


def test_second_period_bliss_point():
    x2, lam, u2 = solve_second_period(scalar(), (10.0, 4.0, 2.0), 3.0)
    assert lam == 0.0 and x2[0] == 10.0 and u2 == 0.0


def test_reduction_examples():
    red = reduce_first_period(scalar())
    assert red.b_star[0] == 10.0 and red.S[0, 0] == 1.0
    red = reduce_first_period(scalar(SPREAD))
    assert red.R[0, 0] == 1.25 and red.b_star[0] == pytest.approx(8.0, abs=1e-12)
    assert red.S[0, 0] == 1.25
    assert reduce_first_period(scalar(((0.5, -1.0), (0.5, 1.0)))).b_star[0] == 0.0


def test_singular_second_moment():
    prob = PortfolioProblem(1, 1, 10, 1, 1, [1, 1], 5, [(1.0, 10.0, 0.0)], [(1.0, [1.0, 1.0])])
    with pytest.raises(SingularMatrixError, match="second-moment"):
        reduce_first_period(prob)


def test_first_period_scalar():
    sol = solve_first_period(scalar())
    assert abs(sol.lambda1 - 7.5) <= 1e-12
    assert abs(sol.x1_star[0] - 2.5) <= 1e-12
    assert abs(sol.b_star_choice[0] - 2.5) <= 1e-12
    assert sol.sensible
    x, b, lam = first_period_oracle(scalar())
    assert (x[0], b[0], lam) == pytest.approx((2.5, 2.5, 7.5), abs=1e-12)


def test_first_period_uncertain_returns():
    sol = solve_first_period(scalar(SPREAD))
    assert sol.lambda1 == pytest.approx(13 / 1.8, abs=1e-12)
    assert sol.x1_star[0] == pytest.approx(10 - 13 / 1.8, abs=1e-12)
    assert sol.b_star_choice[0] == pytest.approx(8 - (13 / 1.8) / 1.25, abs=1e-12)
    assert sol.x1_star[0] + sol.b_star_choice[0] == pytest.approx(5.0, abs=1e-9)


def test_affordable_bliss_point():
    sol = solve_first_period(scalar(m1=20.0))
    assert sol.lambda1 == 0.0
    assert sol.x1_star[0] == 10.0 and sol.b_star_choice[0] == 10.0


def test_insensible_cases_are_flagged_not_raised():
    rich = solve_first_period(scalar(m1=40.0))
    assert rich.lambda1 < 0 and not rich.lambda_nonnegative and not rich.sensible
    assert rich.notes
    # the asset payout exceeds second-period needs in some scenario
    wide = solve_first_period(scalar(((0.5, 0.1), (0.5, 3.0)), m1=20.0))
    assert wide.separation_gap < 0 and not wide.separation_ok


def test_enlivened_examples():
    S = np.array([[2.0, 0.3], [0.3, 1.0]])
    b, S_hat = enlivened_objective([(1.0, [1.0, 2.0], S)])
    assert np.allclose(b, [1.0, 2.0], atol=1e-12) and np.array_equal(S_hat, S)
    b, _ = enlivened_objective([(0.5, [1.0, 0.0], S), (0.5, [3.0, 2.0], S)])
    assert np.allclose(b, [2.0, 1.0], atol=1e-12)
    b, S_hat = enlivened_objective([(0.5, 0.0, 1.0), (0.5, 4.0, 3.0)])
    assert b[0] == 3.0 and S_hat[0, 0] == 2.0
    with pytest.raises(DomainError):
        enlivened_objective([(1.0, 0.0, -1.0)])


def test_enlivened_objective_matches_expectation(rng):
    for _ in range(20):
        k = int(rng.integers(1, 4))
        scen = [(p, rng.normal(size=k), spd(rng, k)) for p in probs(rng, int(rng.integers(1, 5)))]
        b_hat, S_hat = enlivened_objective(scen)
        assert np.all(np.linalg.eigvalsh(S_hat) > 0)
        gaps = []
        for _ in range(20):
            b = rng.normal(size=k) * 3
            exact = sum(-0.5 * p * (b - bt) @ St @ (b - bt) for p, bt, St in scen)
            gaps.append(exact - (-0.5 * (b - b_hat) @ S_hat @ (b - b_hat)))
        assert np.ptp(gaps) <= 1e-9


def test_qp_oracle_examples():
    H = np.diag([2.0, 3.0])
    z, mu = qp_oracle(H, [1.0, 2.0], [[1.0, 1.0]], [3.0])
    assert np.allclose(z, [1.0, 2.0], atol=1e-12) and abs(mu[0]) <= 1e-12
    with pytest.raises(SingularMatrixError):
        qp_oracle(H, [1.0, 2.0], [[1.0, 1.0], [2.0, 2.0]], [3.0, 6.0])


def test_problem_validation():
    with pytest.raises(DomainError):
        PortfolioProblem(-1, 1, 10, 1, 1, 1, 5, [(1.0, 10.0, 0.0)], [(1.0, 1.0)])
    with pytest.raises(DomainError):
        PortfolioProblem([[1, 0.5], [0, 1]], 1, [1, 1], [1, 1], 1, 1, 5, [(1.0, 10.0, 0.0)], [(1.0, 1.0)])
    with pytest.raises(DomainError):
        PortfolioProblem(1, 1, 10, 1, 1, 1, 5, [(0.5, 10.0, 0.0)], [(1.0, 1.0)])
    with pytest.raises(DomainError):
        PortfolioProblem(1, 1, 10, 0, 1, 1, 5, [(1.0, 10.0, 0.0)], [(1.0, 1.0)])


def test_ill_conditioned_warning():
    with pytest.warns(UserWarning, match="ill-conditioned"):
        PortfolioProblem(np.diag([1.0, 1e-14]), 1, [1, 1], [1, 1], 1, 1, 5, [(1.0, 10.0, 0.0)], [(1.0, 1.0)])


def test_oracle_agreement_both_periods():
    for prob in instances(7, 50):
        sol = solve_first_period(prob)
        x, b, lam = first_period_oracle(prob)
        assert np.max(np.abs(sol.x1_star - x)) <= 1e-8
        assert np.max(np.abs(sol.b_star_choice - b)) <= 1e-8
        assert abs(sol.lambda1 - lam) <= 1e-8
        assert abs(prob.p1 @ sol.x1_star + prob.q @ sol.b_star_choice - prob.m1) <= 1e-9
        for _, scen in prob.joint():
            x2, lam2, _ = solve_second_period(prob, scen, sol.b_star_choice)
            z, mu = second_period_oracle(prob, scen, sol.b_star_choice)
            assert np.max(np.abs(x2 - z)) <= 1e-8 and abs(lam2 - mu) <= 1e-8
            assert abs(prob.p2 @ x2 - scen.m2 - scen.r @ sol.b_star_choice) <= 1e-9


def test_reduction_exactness_and_time_consistency(rng):
    for prob in instances(8, 20):
        red = reduce_first_period(prob)
        shift = red.c / (2 * prob.price_scale)
        for _ in range(100):
            x1 = prob.a1 + rng.normal(size=len(prob.a1)) * 3
            b = red.b_star + rng.normal(size=len(prob.q)) * 3
            assert expected_objective(prob, x1, b) == pytest.approx(reduced_objective(prob, x1, b, red) - shift, abs=1e-9)
        b = solve_first_period(prob).b_star_choice
        avg_u2 = sum(p * solve_second_period(prob, s, b).u2 for p, s in prob.joint())
        db = b - red.b_star
        assert avg_u2 == pytest.approx(-0.5 * db @ red.S @ db - shift, abs=1e-8)
