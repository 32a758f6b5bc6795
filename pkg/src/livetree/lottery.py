"""Finitely supported lotteries and expected-utility functionals.

A :class:`Lottery` is a roulette lottery over opaque outcome ids. An
:class:`AALottery` (Anscombe-Aumann) assigns one roulette lottery to each
state of an event.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from typing import Iterator

from .errors import DomainError

SUM_TOL = 1e-9


class Lottery(Mapping):
    """Immutable map outcome -> probability with strictly positive support.

    Zero weights are dropped on construction, so ``set(lot)`` is the support.

    >>> lot = Lottery({"a": 0.25, "b": 0.75, "c": 0.0})
    >>> sorted(lot.support)
    ['a', 'b']
    """

    __slots__ = ("_weights",)

    def __init__(self, weights: Mapping[str, float]):
        cleaned = {}
        for outcome, p in weights.items():
            p = float(p)
            if not math.isfinite(p) or p < 0.0:
                raise DomainError(f"probability of {outcome!r} is {p}")
            if p > 0.0:
                cleaned[str(outcome)] = p
        total = math.fsum(cleaned.values())
        if abs(total - 1.0) > SUM_TOL:
            raise DomainError(f"lottery weights sum to {total!r}, not 1")
        self._weights = cleaned

    def __getitem__(self, outcome):
        return self._weights[outcome]

    def __iter__(self) -> Iterator[str]:
        return iter(self._weights)

    def __len__(self):
        return len(self._weights)

    def __hash__(self):
        return hash(frozenset(self._weights.items()))

    def __eq__(self, other):
        if isinstance(other, Lottery):
            return self._weights == other._weights
        return NotImplemented

    def __repr__(self):
        return f"Lottery({self._weights!r})"

    @property
    def support(self) -> frozenset:
        return frozenset(self._weights)

    def prob(self, outcome: str) -> float:
        """Probability of ``outcome``; 0.0 off the support."""
        return self._weights.get(outcome, 0.0)

    def to_dict(self) -> dict:
        return dict(self._weights)


class AALottery(Mapping):
    """Immutable map state -> :class:`Lottery` over consequences."""

    __slots__ = ("_per_state",)

    def __init__(self, per_state: Mapping[str, Mapping[str, float]]):
        if not per_state:
            raise DomainError("an AA lottery needs at least one state")
        self._per_state = {
            str(s): lot if isinstance(lot, Lottery) else Lottery(lot)
            for s, lot in per_state.items()
        }

    @classmethod
    def constant(cls, states, lot) -> "AALottery":
        """The state-independent AA lottery giving ``lot`` in every state."""
        lot = lot if isinstance(lot, Lottery) else Lottery(lot)
        return cls({s: lot for s in states})

    def __getitem__(self, state):
        return self._per_state[state]

    def __iter__(self):
        return iter(self._per_state)

    def __len__(self):
        return len(self._per_state)

    def __hash__(self):
        return hash(frozenset(self._per_state.items()))

    def __eq__(self, other):
        if isinstance(other, AALottery):
            return self._per_state == other._per_state
        return NotImplemented

    def __repr__(self):
        return f"AALottery({self._per_state!r})"

    @property
    def states(self) -> frozenset:
        return frozenset(self._per_state)

    @property
    def consequences(self) -> frozenset:
        out = set()
        for lot in self._per_state.values():
            out |= lot.support
        return frozenset(out)

    def to_dict(self) -> dict:
        return {s: lot.to_dict() for s, lot in self._per_state.items()}


def degenerate(outcome: str) -> Lottery:
    """The lottery putting all mass on ``outcome``."""
    return Lottery({outcome: 1.0})


def mix(lhs: Lottery, rhs: Lottery, alpha: float) -> Lottery:
    """Return ``alpha * lhs + (1 - alpha) * rhs``."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"mixture weight {alpha} outside [0, 1]")
    outcomes = list(lhs) + [z for z in rhs if z not in lhs]
    return Lottery(
        {z: alpha * lhs.prob(z) + (1.0 - alpha) * rhs.prob(z) for z in outcomes}
    )


def expected_utility(lot: Lottery, u: Mapping[str, float]) -> float:
    """Objective expected utility ``sum_y lot(y) u(y)``."""
    terms = []
    for y, p in lot.items():
        try:
            terms.append(p * u[y])
        except KeyError:
            raise DomainError(f"no utility value for consequence {y!r}") from None
    return math.fsum(terms)


def aa_expected_utility(
    aa: AALottery, beliefs: Mapping[str, float], u: Mapping[str, float]
) -> float:
    """Belief-conditional subjective expected utility over the states of ``aa``.

    Returns ``sum_s P(s) EU(aa[s]) / sum_s P(s)`` with ``s`` ranging over the
    states of ``aa``. Over the whole state space this is the usual double sum.
    """
    num, den = [], []
    for s, lot in aa.items():
        try:
            p = beliefs[s]
        except KeyError:
            raise DomainError(f"no belief mass for state {s!r}") from None
        if p <= 0.0:
            raise DomainError(f"state {s!r} has non-positive belief mass {p}")
        num.append(p * expected_utility(lot, u))
        den.append(p)
    return math.fsum(num) / math.fsum(den)
