from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resilience.graph import MEC
from resilience.model import BOTTOM, ActionKind
from resilience.solvers import max_reach_mdp, max_reach_sg
from resilience.transforms import (NEXT, STAY, binarize_actions, expected_gadget_game, induced_mdp,
                                   make_stopping, product_with_counter, unfold,
                                   weighted_mec_quotient)
from resilience.verification import RandomModelSpec, generate

from conftest import build, loops


class TestInducedMdp:
    def test_keeps_disturbances(self, fx):
        mdp = induced_mdp(fx["FIG4"].model, fx["FIG4"].strategy)
        for s in ("s0", "s1"):
            assert [a.name for a in mdp.actions[mdp.index(s)]] == ["a", "d"]

    def test_no_disturbance_gives_chain(self, fx):
        mdp = induced_mdp(fx["NODIST"].model, fx["NODIST"].strategy)
        assert all(len(acts) == 1 for acts in mdp.actions)

    def test_step_counting_product(self, fx):
        b = fx["FIG6L"]
        mdp = induced_mdp(b.model, b.strategy)
        assert mdp.n == b.model.n * (b.strategy.bound + 1)


class TestCounterProduct:
    def test_counter_never_increases(self, fx):
        prod = product_with_counter(fx["FIG6L"].model, 2)
        for j, acts in enumerate(prod.actions):
            for a in acts:
                assert all(prod.origin[t][2] <= prod.origin[j][2] for t in a.dist)

    def test_no_disturbance_at_zero(self, fx):
        prod = product_with_counter(fx["FIG6L"].model, 2)
        for j, o in enumerate(prod.origin):
            if o[2] == 0:
                assert not prod.disturbances(j)

    def test_size(self, fx):
        m = fx["FIG6L"].model
        assert product_with_counter(m, 2).n <= 3 * m.n


class TestUnfold:
    def test_state_count(self, fx):
        m = fx["FIG4"].model
        k = 2
        p1 = [s for s in m.states() if m.owner[s] == 1]
        expected = sum(k + 1 + (k + 1) * len(m.normal(s)) for s in p1)
        expected += (k + 1) * (m.n - len(p1))
        assert unfold(m, k, reachable_only=False).n == expected

    def test_level_zero_gadgets_only_follow(self, fx):
        u = unfold(fx["FIG6R"].model, 0, reachable_only=False)
        for j, key in enumerate(u.origin):
            if key[0] == "gadget":
                assert [a.name for a in u.actions[j]] == [BOTTOM]

    def test_reachable_subset(self, fx):
        m = fx["FIG6L"].model
        assert unfold(m, 3).n <= unfold(m, 3, reachable_only=False).n


class TestGadget:
    def test_two_gadgets(self, fx):
        g = expected_gadget_game(fx["FIG4"].model)
        gadgets = sorted(g.names[j] for j, o in enumerate(g.origin) if o[0] == "gadget")
        assert gadgets == ["(B,loop)", "(G,loop)", "(s0,a)", "(s1,a)"]

    def test_costs(self, fx):
        g = expected_gadget_game(fx["FIG6R"].model)
        for acts in g.actions:
            for a in acts:
                if a.kind is ActionKind.DISTURBANCE:
                    assert a.cost == 1
                elif a.name == BOTTOM:
                    assert a.cost == 0


class TestQuotient:
    def test_stay_costs(self):
        m = build([("a", 1), ("b", 1), ("c", 1), ("G", 1, "G")],
                  [("a", "x", "normal", [("b", 1)]), ("a", "l", "normal", [("a", 1)]),
                   ("b", "x", "normal", [("c", 1)]), ("b", "l", "normal", [("b", 1)]),
                   ("c", "x", "normal", [("G", 1)]), ("c", "l", "normal", [("c", 1)])] + loops("G"),
                  [("a", 1)])
        comps = [MEC(frozenset({i}), {i: frozenset({"l"})}) for i in range(3)]
        f = dict(zip(comps, (Fraction(4, 10), Fraction(5, 10), Fraction(10, 10))))
        wq = weighted_mec_quotient(m, comps, f)
        stays = {wq.quotient.names[q]: wq.quotient.action(q, STAY).cost for q in wq.collapsed_of}
        assert stays == {"{a}": Fraction(2, 5), "{b}": Fraction(1, 2), "{c}": Fraction(1)}
        assert [a.name for a in wq.quotient.actions[wq.state_map[0]]] == ["a:x", STAY]

    def test_no_components(self, fx):
        m = fx["NODIST"].model
        wq = weighted_mec_quotient(m, [], {})
        assert wq.quotient.n == m.n + 1
        assert [wq.quotient.names[i] for i in range(m.n)] == list(m.names)


class TestStopping:
    def test_epsilon_checked(self, fx):
        with pytest.raises(ValueError):
            make_stopping(fx["FIG4"].model, 0)

    def test_leak(self, fx):
        m = fx["FIG4"].model
        eps = Fraction(1, 100)
        s = make_stopping(m, eps)
        b = m.index("B")
        d = s.action(m.index("s0"), "a").dist
        assert d[b] == eps and d[m.index("G")] == 1 - eps

    def test_converges(self, fx):
        # Full disturbance on FIG4 reaches G with probability 1/4.
        m = fx["FIG4"].model
        values = []
        for eps in (Fraction(1, 1000), Fraction(1, 10000), Fraction(1, 100000)):
            g = make_stopping(m, eps)
            g = induced_mdp(g, fx["FIG4"].strategy)
            only_d = g.__class__(g.names, g.owner,
                                 tuple(tuple(a for a in acts if a.name == "d") or acts for acts in g.actions),
                                 g.initial, g.labels, g.origin)
            values.append(max_reach_mdp(only_d, only_d.label("G")).at(only_d.initial))
        assert values[0] < values[1] < values[2] < Fraction(1, 4)
        assert Fraction(1, 4) - values[2] < Fraction(1, 10000)


class TestBinarize:
    def test_two_actions_unchanged(self, fx):
        m = fx["FIG6L"].model
        assert binarize_actions(m).actions == m.actions

    def test_four_actions(self):
        m = build([("s", 1), ("G", 1, "G"), ("B", 1, "B")],
                  [("s", f"a{i}", "normal", [("G", Fraction(i, 5)), ("B", 1 - Fraction(i, 5))])
                   for i in range(1, 5)] + loops("G", "B"), [("s", 1)])
        b = binarize_actions(m)
        assert b.n == m.n + 2
        assert all(len(b.normal(s)) <= 2 for s in b.states())
        assert [a.name for a in b.actions[0]] == ["a1", NEXT]


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_binarize_keeps_values(seed):
    m = generate(RandomModelSpec(seed=seed, actions=(1, 4), player2_prob=0))
    b = binarize_actions(m)
    goal = m.label("G")
    assert max_reach_sg(m, goal).at(m.initial) == max_reach_sg(b, b.label("G")).at(b.initial)
