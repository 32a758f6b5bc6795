import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from livetree.errors import DomainError
from livetree.lottery import AALottery, Lottery, aa_expected_utility, degenerate, expected_utility, mix
from livetree.tree import Belief

OUTCOMES = ["a", "b", "c", "d"]


@st.composite
def lotteries(draw):
    keys = draw(st.lists(st.sampled_from(OUTCOMES), min_size=1, max_size=4, unique=True))
    w = [draw(st.floats(0.05, 1.0)) for _ in keys]
    total = sum(w)
    return Lottery({k: x / total for k, x in zip(keys, w)})


utilities = st.fixed_dictionaries({k: st.floats(-5, 5) for k in OUTCOMES})


def test_degenerate():
    lot = degenerate("a")
    assert lot.to_dict() == {"a": 1.0}
    assert lot.support == {"a"}
    assert expected_utility(lot, {"a": 0.7}) == 0.7


def test_zero_weights_dropped():
    lot = Lottery({"a": 1.0, "b": 0.0})
    assert lot.support == {"a"}
    assert "b" not in lot


@pytest.mark.parametrize("weights", [{"a": 0.5}, {"a": 0.7, "b": 0.7}, {"a": -0.1, "b": 1.1}, {}])
def test_invalid_lotteries(weights):
    with pytest.raises(DomainError):
        Lottery(weights)


def test_mix_examples():
    assert mix(Lottery({"a": 1}), Lottery({"b": 1}), 0.5).to_dict() == {"a": 0.5, "b": 0.5}
    m = mix(Lottery({"a": 0.2, "b": 0.8}), Lottery({"b": 0.5, "c": 0.5}), 0.25)
    assert m["a"] == pytest.approx(0.05, abs=1e-15)
    assert m["b"] == pytest.approx(0.575, abs=1e-15)
    assert m["c"] == pytest.approx(0.375, abs=1e-15)


def test_mix_endpoint_drops_support():
    m = mix(Lottery({"a": 1}), Lottery({"b": 1}), 1.0)
    assert m.support == {"a"}


@pytest.mark.parametrize("alpha", [-0.1, 1.5, math.nan])
def test_mix_rejects_bad_alpha(alpha):
    with pytest.raises(DomainError):
        mix(degenerate("a"), degenerate("b"), alpha)


def test_expected_utility_examples():
    assert expected_utility(Lottery({"y1": 0.5, "y2": 0.5}), {"y1": 0, "y2": 1}) == 0.5
    assert expected_utility(Lottery({"a": 0.2, "b": 0.8}), {"a": 0, "b": 1}) == 0.8


def test_expected_utility_missing_value():
    with pytest.raises(DomainError):
        expected_utility(Lottery({"a": 1.0}), {"b": 1.0})


def test_aa_expected_utility_examples():
    one = AALottery({"s": {"y": 1.0}})
    assert aa_expected_utility(one, Belief({"s": 1.0}), {"y": 0.3}) == 0.3
    two = AALottery({"s1": {"lo": 1.0}, "s2": {"hi": 1.0}})
    assert aa_expected_utility(two, Belief({"s1": 0.5, "s2": 0.5}), {"lo": 0, "hi": 1}) == 0.5
    p = Belief({"s1": 0.1, "s2": 0.2, "s3": 0.7})
    carrier = AALottery({"s1": {"hi": 1.0}, "s2": {"lo": 1.0}})
    assert aa_expected_utility(carrier, p, {"lo": 0, "hi": 1}) == pytest.approx(1 / 3, abs=1e-15)


def test_aa_missing_state():
    with pytest.raises(DomainError):
        aa_expected_utility(AALottery({"s9": {"y": 1.0}}), Belief({"s": 1.0}), {"y": 0.0})


def test_aa_constant_and_domains():
    aa = AALottery.constant(["s1", "s2"], {"a": 0.5, "b": 0.5})
    assert aa.states == {"s1", "s2"}
    assert aa.consequences == {"a", "b"}
    assert aa["s1"] == aa["s2"]


def test_immutability_and_hash():
    lot = Lottery({"a": 0.5, "b": 0.5})
    assert hash(lot) == hash(Lottery({"b": 0.5, "a": 0.5}))
    with pytest.raises(TypeError):
        lot["a"] = 1.0


@given(lotteries(), lotteries(), st.floats(0, 1))
def test_mix_commutes(lhs, rhs, alpha):
    a, b = mix(lhs, rhs, alpha), mix(rhs, lhs, 1 - alpha)
    # 1 - alpha may round to 1 for subnormal alpha, so compare weights, not supports
    for z in a.support | b.support:
        assert a.prob(z) == pytest.approx(b.prob(z), abs=1e-12)


@given(lotteries(), lotteries(), st.floats(0, 1), utilities)
def test_expected_utility_is_linear(lhs, rhs, alpha, u):
    lhs_eu, rhs_eu = expected_utility(lhs, u), expected_utility(rhs, u)
    assert expected_utility(mix(lhs, rhs, alpha), u) == pytest.approx(
        alpha * lhs_eu + (1 - alpha) * rhs_eu, abs=1e-12
    )


@given(lotteries(), lotteries(), st.floats(0, 1))
def test_mixtures_are_lotteries(lhs, rhs, alpha):
    m = mix(lhs, rhs, alpha)
    assert all(p > 0 for p in m.values())
    assert math.fsum(m.values()) == pytest.approx(1.0, abs=1e-9)
    Lottery(m.to_dict())


@given(lotteries())
def test_mix_idempotent(lot):
    m = mix(lot, lot, 0.3)
    assert m.support == lot.support
    for z in lot:
        assert m[z] == pytest.approx(lot[z], abs=1e-15)
