from hypothesis import given, settings
from hypothesis import strategies as st

from resilience.graph import (certify_mec, compute_B, compute_R, is_end_component, mec_decomposition,
                              player2_avoid_set)
from resilience.transforms import induced_mdp
from resilience.verification import RandomModelSpec, generate

from conftest import build, loops


def names(game, comps):
    return sorted(sorted(game.names[s] for s in c.states) for c in comps)


def induced(bundle):
    return induced_mdp(bundle.model, bundle.strategy)


class TestMecs:
    def test_chain_only_sink(self, fx):
        assert names(fx["NODIST"].model, mec_decomposition(fx["NODIST"].model)) == [["G"]]

    def test_frequency_cycle(self, fx):
        mdp = induced(fx["FREQ19"])
        assert names(mdp, mec_decomposition(mdp)) == [["G"], ["s1", "s2"]]

    def test_sinks_only(self, fx):
        mdp = induced(fx["FIG4"])
        assert names(mdp, mec_decomposition(mdp)) == [["B"], ["G"]]

    def test_kept_actions(self, fx):
        mdp = induced(fx["FREQ19"])
        comp = [c for c in mec_decomposition(mdp) if len(c.states) == 2][0]
        s1, s2 = mdp.index("s1"), mdp.index("s2")
        assert comp.actions[s1] == {"d"} and comp.actions[s2] == {"a"}


class TestBadAndRecurrent:
    def test_b_components(self, fx):
        mdp = induced(fx["FIG4"])
        assert names(mdp, compute_B(mdp, mdp.label("G"))) == [["B"]]

    def test_b_empty_when_strategy_exits(self, fx):
        mdp = induced(fx["FREQ19"])
        assert compute_B(mdp, mdp.label("G")) == []

    def test_b_contains_closed_loop(self):
        m = build([("s", 1), ("t", 1), ("G", 1, "G")],
                  [("s", "a", "normal", [("t", 1)]), ("t", "a", "normal", [("s", 1)]),
                   ("t", "b", "normal", [("G", 1)])] + loops("G"), [("s", 1)])
        from resilience.model import Player, Strategy
        pi = Strategy.pure(Player.ONE, {0: "a", 1: "a", 2: "loop"})
        mdp = induced_mdp(m, pi)
        assert names(mdp, compute_B(mdp, mdp.label("G"))) == [["s", "t"]]

    def test_r_needs_disturbance(self, fx):
        mdp = induced(fx["FREQ19"])
        assert names(mdp, compute_R(mdp, mdp.label("G"))) == [["s1", "s2"]]

    def test_r_empty(self, fx):
        mdp = induced(fx["FIG4"])
        assert compute_R(mdp, mdp.label("G")) == []

    def test_r_excludes_undisturbable_exit(self):
        # s exits under the strategy and has no disturbance, so the cycle
        # cannot be enforced.
        m = build([("s", 1), ("t", 1), ("G", 1, "G")],
                  [("s", "a", "normal", [("G", 1)]), ("s", "b", "normal", [("t", 1)]),
                   ("t", "a", "normal", [("s", 1)])] + loops("G"), [("s", 1)])
        from resilience.model import Player, Strategy
        pi = Strategy.pure(Player.ONE, {0: "a", 1: "a", 2: "loop"})
        mdp = induced_mdp(m, pi)
        assert compute_R(mdp, mdp.label("G")) == []


class TestAvoidSet:
    def test_goal_unavoidable(self, fx):
        m = fx["NODIST"].model
        assert player2_avoid_set(m, m.label("G")) == set()

    def test_absorbing_sink_avoids(self, fx):
        m = fx["FIG4"].model
        assert m.index("B") in player2_avoid_set(m, m.label("G"))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_mecs_are_certified_and_disjoint(seed):
    m = generate(RandomModelSpec(seed=seed))
    comps = mec_decomposition(m)
    seen = set()
    for c in comps:
        assert is_end_component(m, set(c.states), c.actions)
        assert certify_mec(m, c)
        assert not (seen & c.states)
        seen |= c.states
