import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from resilience.errors import BudgetExceeded
from resilience.evaluate import expected_breaking_point, worst_case_breaking_point
from resilience.io import parse_objective
from resilience.model import BreakingPoint, Player, Strategy
from resilience.solvers import max_reach_sg
from resilience.synthesis import (Method, mec_removal, oracle_enumerate, pure_memoryless_strategies,
                                  synthesize_expected, synthesize_worst_transient)
from resilience.transforms import expected_gadget_game, unfold
from resilience.verification import RandomModelSpec, generate

from conftest import build, loops


class TestWorstTransient:
    def test_fig6l_needs_memory(self, fx):
        b = fx["FIG6L"]
        r = synthesize_worst_transient(b.model, b.objective, k=4)
        assert r.breaking_point == BreakingPoint.finite(2)
        assert r.strategy.bound == 1
        s1 = b.model.index("s1")
        assert r.strategy.choice(s1, 0) == {"a2": 1}
        assert r.strategy.choice(s1, 1) == {"a1": 1}
        assert worst_case_breaking_point(b.model, b.objective, r.strategy).breaking_point == r.breaking_point

    def test_fig6l_memoryless_strategies_break_at_one(self, fx):
        b = fx["FIG6L"]
        points = {worst_case_breaking_point(b.model, b.objective, pi).breaking_point
                  for pi in pure_memoryless_strategies(b.model)}
        assert points == {BreakingPoint.finite(1)}

    def test_fig6l_randomized_memoryless_grid(self, fx):
        b = fx["FIG6L"]
        m = b.model
        s1 = m.index("s1")
        for i in range(1, 10):
            p = Fraction(i, 10)
            rule = {(s, None): {m.normal(s)[0].name: Fraction(1)} for s in m.states()}
            rule[(s1, None)] = {"a1": p, "a2": 1 - p}
            bp = worst_case_breaking_point(m, b.objective, Strategy(Player.ONE, rule)).breaking_point
            assert bp == BreakingPoint.finite(1)

    def test_fig4_and_fig6r(self, fx):
        assert synthesize_worst_transient(fx["FIG4"].model, fx["FIG4"].objective).breaking_point == BreakingPoint.finite(2)
        assert synthesize_worst_transient(fx["FIG6R"].model, fx["FIG6R"].objective).breaking_point == BreakingPoint.finite(3)

    def test_level_zero_is_plain_game(self, fx):
        b = fx["FIG6L"]
        r = synthesize_worst_transient(b.model, b.objective, k=4)
        u = unfold(b.model, 0, reachable_only=False)
        assert r.values["level_values"][0] == max_reach_sg(u, u.label("B")).at(u.initial)

    def test_budget_too_small(self, fx):
        b = fx["FIG6R"]
        with pytest.raises(BudgetExceeded):
            synthesize_worst_transient(b.model, b.objective, k=2)

    def test_nodist(self, fx):
        b = fx["NODIST"]
        assert synthesize_worst_transient(b.model, b.objective).breaking_point.is_unbreakable

    def test_safety(self, fx):
        m = fx["NODIST"].model
        assert synthesize_worst_transient(m, parse_objective("safety:G:>0"), k=2).breaking_point == BreakingPoint.finite(0)
        m = fx["FIG4"].model
        assert synthesize_worst_transient(m, parse_objective("safety:B:>1/5")).breaking_point.is_unbreakable
        assert synthesize_worst_transient(m, parse_objective("safety:B:>1/2")).breaking_point == BreakingPoint.finite(1)

    def test_qp_log(self, fx):
        b = fx["FIG6L"]
        log = []
        synthesize_worst_transient(b.model, b.objective, k=4, qp_log=log)
        assert [c.level for c in log] == [0, 1, 2]
        assert all(c.ok for c in log)


class TestWorstFrequency:
    def test_freq19(self, fx):
        b = fx["FREQ19"]
        r = synthesize_worst_transient(b.model, b.objective)
        assert r.breaking_point == BreakingPoint.omega(Fraction(10, 19))
        assert r.method is Method.MEC_REMOVAL
        assert not r.diagnostics[1:]

    def test_two_cycles(self, two_mec):
        r = synthesize_worst_transient(two_mec, parse_objective("reach:G:>1/4"))
        assert r.breaking_point == BreakingPoint.omega(Fraction(3, 5))

    def test_free_components_only(self):
        m = build([("s", 2), ("G", 1, "G")],
                  [("s", "go", "normal", [("G", 1)]), ("s", "stay", "normal", [("s", 1)])] + loops("G"),
                  [("s", 1)])
        g = expected_gadget_game(m)
        bp, _ = mec_removal(g, parse_objective("reach:G:>1/2"))
        assert bp == BreakingPoint.omega(Fraction(0))

    def test_unreachable_region(self, fx):
        g = expected_gadget_game(fx["NODIST"].model)
        bp, _ = mec_removal(g, fx["NODIST"].objective)
        assert bp.is_unbreakable


class TestExpected:
    def test_fig4_single_strategy(self, fx):
        b = fx["FIG4"]
        r = synthesize_expected(b.model, b.objective)
        assert r.breaking_point == expected_breaking_point(b.model, b.objective, b.strategy).breaking_point
        assert r.breaking_point == BreakingPoint.finite(Fraction(6, 5))
        assert r.values["gadget"]["breaking_point"].transient.value == pytest.approx(1.2, abs=1e-6)
        assert r.diagnostics == []

    def test_fig6l(self, fx):
        b = fx["FIG6L"]
        r = synthesize_expected(b.model, b.objective)
        assert r.breaking_point == BreakingPoint.finite(Fraction(1, 4))

    def test_freq19(self, fx):
        b = fx["FREQ19"]
        r = synthesize_expected(b.model, b.objective)
        assert r.breaking_point == BreakingPoint.omega(Fraction(5, 19))
        assert r.diagnostics == []

    def test_nodist(self, fx):
        b = fx["NODIST"]
        assert synthesize_expected(b.model, b.objective).breaking_point.is_unbreakable


class TestOracleEnumerate:
    def test_fig4(self, fx):
        b = fx["FIG4"]
        assert oracle_enumerate(b.model, b.objective, 3).breaking_point == BreakingPoint.finite(2)

    def test_fig6r_given_strategy(self, fx):
        b = fx["FIG6R"]
        assert oracle_enumerate(b.model, b.objective, 4, pi=b.strategy).breaking_point == BreakingPoint.finite(3)

    def test_nodist_undecided(self, fx):
        b = fx["NODIST"]
        assert oracle_enumerate(b.model, b.objective, 2).breaking_point is None


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(min_value=0, max_value=10**6))
def test_synthesis_matches_enumeration(seed):
    rng = random.Random(seed)
    model = generate(RandomModelSpec(seed=seed, states=(3, 4), disturbance_prob=0.8))
    obj = parse_objective(rng.choice(["reach:G:>1/2", "reach:G:>=1/3", "safety:B:>1/2", "reach:G:>1/5"]))
    try:
        r = synthesize_worst_transient(model, obj, k=3)
        level = r.breaking_point.transient.value if r.breaking_point.transient.variant == "finite" else None
    except BudgetExceeded:
        level = None
    ref = oracle_enumerate(model, obj, 3)
    assert level == (None if ref.breaking_point is None else ref.breaking_point.transient.value)
