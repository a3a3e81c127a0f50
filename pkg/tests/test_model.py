from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from resilience.chain import absorption, stationary
from resilience.errors import StrategyIncompatible
from resilience.model import (BOTTOM, Action, ActionKind, BreakingPoint, Game, Player, Strategy,
                              compare_breaking_points, induced_mc, validate)


def messages(model):
    return [d.message for d in validate(model)]


def test_fixture_is_valid(fx):
    assert validate(fx["FIG4"].model) == []


def _tiny(dist, owner=1, kind=ActionKind.NORMAL):
    acts = ((Action("a", ActionKind.NORMAL, {1: Fraction(1)}),) +
            ((Action("x", kind, dist),) if kind is ActionKind.DISTURBANCE else ()),
            (Action("loop", ActionKind.NORMAL, {1: Fraction(1)}),))
    if kind is ActionKind.NORMAL:
        acts = ((Action("a", ActionKind.NORMAL, dist),), acts[1])
    return Game(("s", "t"), (owner, 1), acts, {0: Fraction(1)}, {})


def test_unnormalized_distribution():
    bad = _tiny({0: Fraction(4, 10), 1: Fraction(5, 10)})
    assert messages(bad) == ["distribution not normalized"]


def test_disturbance_on_player2_state():
    bad = _tiny({1: Fraction(1)}, owner=2, kind=ActionKind.DISTURBANCE)
    assert messages(bad) == ["disturbance on Player-2 state"]


class TestInducedChain:
    def test_no_disturbance_reaches_goal(self, fx):
        b = fx["FIG4"]
        mc = induced_mc(b.model, b.strategy, None, None)
        reach = absorption(mc.rows, {i: 1 for i in mc.label("G")})
        assert sum(p * reach[s] for s, p in mc.initial.items()) == 1
        assert mc.n == 2  # B is never reached

    def test_always_disturbing(self, fx):
        b = fx["FIG4"]
        m = b.model
        delta = Strategy.pure(Player.DISTURBER, {m.index("s0"): "d", m.index("s1"): "d",
                                                 m.index("G"): BOTTOM, m.index("B"): BOTTOM})
        mc = induced_mc(m, b.strategy, None, delta)
        reach = absorption(mc.rows, {i: 1 for i in mc.label("G")})
        assert sum(p * reach[s] for s, p in mc.initial.items()) == Fraction(1, 4)
        assert mc.costs[next(iter(mc.initial))] == 1

    def test_frequency_chain_stationary_mass(self, fx):
        m = fx["FREQ19"].model
        delta = Strategy.pure(Player.DISTURBER, {m.index("s1"): "d", m.index("s2"): BOTTOM,
                                                 m.index("G"): BOTTOM})
        mc = induced_mc(m, fx["FREQ19"].strategy, None, delta)
        s1, s2 = (mc.origin.index((m.index(n), 0)) for n in ("s1", "s2"))
        assert stationary(mc.rows, [s1, s2])[s1] == Fraction(10, 19)

    def test_budget_exhausted_disturber_rejected(self, fx):
        m = fx["FIG4"].model
        rule = {(s, c): {BOTTOM: Fraction(1)} for s in m.states() for c in (0, 1)}
        rule[(m.index("s0"), 0)] = {"d": Fraction(1)}
        delta = Strategy(Player.DISTURBER, rule, 1)
        with pytest.raises(StrategyIncompatible):
            delta.check(m)


class TestOrder:
    def test_finite(self):
        assert compare_breaking_points(BreakingPoint.finite(2), BreakingPoint.finite(3)) == -1

    def test_omega_beats_finite(self):
        assert compare_breaking_points(BreakingPoint.omega(Fraction(3, 10)), BreakingPoint.finite(100)) == 1

    def test_unbreakable_is_top(self):
        assert compare_breaking_points(BreakingPoint.unbreakable(), BreakingPoint.omega(Fraction(1))) == 1

    def test_finite_needs_zero_frequency(self):
        with pytest.raises(ValueError):
            BreakingPoint(BreakingPoint.finite(1).transient, Fraction(1, 2))


points = st.one_of(
    st.fractions(min_value=0, max_value=10).map(BreakingPoint.finite),
    st.fractions(min_value=0, max_value=1).map(BreakingPoint.omega),
    st.just(BreakingPoint.unbreakable()),
)


@given(points, points)
def test_order_is_antisymmetric(a, b):
    assert compare_breaking_points(a, b) == -compare_breaking_points(b, a)


@given(points, points, points)
def test_order_is_transitive(a, b, c):
    if compare_breaking_points(a, b) <= 0 and compare_breaking_points(b, c) <= 0:
        assert compare_breaking_points(a, c) <= 0
