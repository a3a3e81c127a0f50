"""Optimally resilient Player-1 strategies.

Exact answers come from enumerating pure Player-1 choices and solving each
resulting one-player problem exactly; the gadget-game computations (value
iteration on the expected-case game, MEC removal for frequencies) run
alongside and are reported for comparison.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import BudgetExceeded, PreconditionViolated
from .evaluate import EvalReport, expected_breaking_point, worst_case_breaking_point
from .graph import MEC, mec_decomposition, player2_avoid_set, union
from .model import BreakingPoint, Game, Objective, Player, Strategy, compare_breaking_points
from .numeric import Number, breaks, budget_from_env
from .oracle import WorstOracle, expected_oracle, worst_case_oracle
from .solvers import (fix_player1, max_reach_mdp, max_reach_sg, min_mean_payoff_mec,
                      ssp_sg_vi)
from .transforms import expected_gadget_game, gadget_step_weight, unfold, weighted_mec_quotient

__all__ = [
    "Method", "SynthesisReport", "synthesize_expected", "synthesize_worst_transient",
    "synthesize_worst_frequency", "oracle_enumerate", "pure_memoryless_strategies",
    "gadget_expected", "OracleResult",
]


class Method(enum.Enum):
    GADGET_SSP = "GadgetSSP"
    ITERATIVE_QP = "IterativeQP"
    EXACT_ENUMERATION = "ExactEnumeration"
    MEC_REMOVAL = "MecRemoval"


@dataclass
class SynthesisReport:
    breaking_point: BreakingPoint
    strategy: Optional[Strategy]
    method: Method
    case: str = ""
    attained: bool = True
    values: Dict[str, object] = field(default_factory=dict)
    diagnostics: List[str] = field(default_factory=list)


def _p1_options(model: Game):
    return [(s, [a.name for a in model.normal(s)]) for s in model.states() if model.owner[s] == 1]


def pure_memoryless_strategies(model: Game, budget: Optional[int] = None):
    """Every pure memoryless Player-1 strategy, in a fixed order."""
    opts = _p1_options(model)
    total = 1
    for _, names in opts:
        total *= len(names)
    budget = budget_from_env() if budget is None else budget
    if total > budget:
        raise BudgetExceeded(f"{total} Player-1 strategies exceed the budget {budget}")
    for combo in itertools.product(*[names for _, names in opts]):
        yield Strategy.pure(Player.ONE, {s: a for (s, _), a in zip(opts, combo)})


def _best(candidates):
    """Arg-max by breaking point; the first one wins ties."""
    best = None
    for strategy, report in candidates:
        if best is None or compare_breaking_points(report.breaking_point, best[1].breaking_point) > 0:
            best = (strategy, report)
    return best


# ---------------------------------------------------------------------------
# Expected semantics


def gadget_expected(model: Game, objective: Objective, precision: float = 1e-8,
                    budget: Optional[int] = None):
    """Expected breaking point via the gadget game: returns
    ``(breaking point, Player-1 choice on model states, case)`` with float
    values wherever value iteration is involved."""
    g = expected_gadget_game(model)
    thr, strict = objective.violation, objective.strict

    def p1_choice(choice):
        return {model.names[s]: a for s, a in choice.items() if s < model.n}

    if objective.kind == "safety":
        bad = set(objective.targets(g))
        v = max_reach_sg(g, bad, budget).at(g.initial)
        if not breaks(v, thr, strict):
            return BreakingPoint.unbreakable(), {}, "safety: unbreakable"
        value, choice = ssp_sg_vi(g, bad, thr, precision)
        return BreakingPoint.finite(value), p1_choice(choice), "safety: breakable"
    goal = set(objective.targets(g))
    avoid = player2_avoid_set(g, goal)
    comps = mec_decomposition(g, avoid)
    pay = {c: min_mean_payoff_mec(g, c, opponent_only=False, budget=budget,
                                  weight=gadget_step_weight(g)) for c in comps}
    free = [c for c in comps if pay[c] == 0]
    bad = union(free)
    v = max_reach_sg(g, bad, budget).at(g.initial) if bad else 0
    if breaks(v, thr, strict):
        value, choice = ssp_sg_vi(g, bad, thr, precision)
        return BreakingPoint.finite(value), p1_choice(choice), "Case 1"
    region = union(comps)
    v = max_reach_sg(g, region, budget).at(g.initial) if region else 0
    if not breaks(v, thr, strict):
        return BreakingPoint.unbreakable(), {}, "Case 2"
    costly = [c for c in comps if pay[c] > 0]
    wq = weighted_mec_quotient(g, costly, pay)
    target = {wq.state_map[s] for s in bad} | {wq.s_plus}
    value, choice = ssp_sg_vi(wq.quotient, target, thr, precision)
    back = {}
    for q, a in choice.items():
        origin = wq.quotient.origin[q]
        if origin[0] == "state" and origin[1] < model.n:
            back[model.names[origin[1]]] = a
    return BreakingPoint.omega(value), back, "Case 3"


def synthesize_expected(model: Game, objective: Objective, budget: Optional[int] = None,
                        cross_check: bool = True, precision: float = 1e-8) -> SynthesisReport:
    """Best pure memoryless strategy for the expected breaking point.

    Every pure memoryless strategy is evaluated exactly; the gadget-game
    value iteration runs as a cross-check and its value is reported. A
    randomized strategy could in principle do better than the best pure one;
    the reported gadget value is the place to look if the two disagree.
    """
    candidates = ((pi, expected_breaking_point(model, objective, pi))
                  for pi in pure_memoryless_strategies(model, budget))
    pi, report = _best(candidates)
    out = SynthesisReport(report.breaking_point, pi, Method.EXACT_ENUMERATION, report.case,
                          report.attained)
    if cross_check:
        try:
            bp, choice, case = gadget_expected(model, objective, precision, budget)
            out.values["gadget"] = {"breaking_point": bp, "case": case, "strategy": choice}
            if not _close(bp, report.breaking_point, 1e-6):
                out.diagnostics.append(f"gadget game value {bp} differs from the enumerated optimum")
        except Exception as exc:  # the exact answer stands on its own
            out.diagnostics.append(f"gadget cross-check skipped: {exc}")
    return out


def _close(a: BreakingPoint, b: BreakingPoint, tol: float) -> bool:
    if a.transient.variant != b.transient.variant:
        return False
    if a.transient.variant == "finite":
        return abs(float(a.transient.value) - float(b.transient.value)) <= tol
    if a.transient.variant == "omega":
        return abs(float(a.frequency) - float(b.frequency)) <= tol
    return True


# ---------------------------------------------------------------------------
# Worst-case transient


def _violation_values(game: Game, objective: Objective, choice: Mapping[int, str]) -> List[Number]:
    """Adversary's maximal violation probability per state once Player 1's
    choices are fixed."""
    mdp = fix_player1(game, choice)
    if objective.kind == "safety":
        target = set(objective.targets(mdp))
    else:
        goal = set(objective.targets(mdp))
        rest = [s for s in mdp.states() if s not in goal]
        target = union(mec_decomposition(mdp, rest))
    if not target:
        return [Fraction(0) if mdp.exact() else 0.0] * mdp.n
    return max_reach_mdp(mdp, target).values


def _level_states(u: Game, i: int):
    return [j for j, o in enumerate(u.origin) if o[0] == "state" and o[2] == i
            and u.owner[j] == 1 and len(u.normal(j)) > 1]


def _solve_level(model: Game, objective: Objective, i: int, fixed: Dict[Tuple[int, int], str],
                 budget: int):
    """Optimal Player-1 choices at level i of the i-unfolded game, with lower
    levels fixed. Returns (choices at level i, values, unfolded game)."""
    u = unfold(model, i, reachable_only=False)
    index = {o: j for j, o in enumerate(u.origin)}
    base = {}
    for (s, lvl), a in fixed.items():
        base[index[("state", s, lvl)]] = a
    free = _level_states(u, i)
    options = [[a.name for a in u.normal(j)] for j in free]
    total = 1
    for o in options:
        total *= len(o)
    if total > budget:
        raise BudgetExceeded(f"{total} Player-1 choices at level {i} exceed the budget {budget}")
    best = None
    level_nodes = [j for j, o in enumerate(u.origin) if o[0] == "state" and o[2] == i]
    for combo in itertools.product(*options):
        choice = dict(base)
        choice.update(zip(free, combo))
        values = _violation_values(u, objective, choice)
        score = sum(values[j] for j in level_nodes)
        if best is None or score < best[0]:
            best = (score, dict(zip(free, combo)), values)
    _, chosen, values = best
    level_choice = {(u.origin[j][1], i): a for j, a in chosen.items()}
    return level_choice, values, u


def _step_counting(model: Game, choices: Dict[Tuple[int, int], str], bound: int) -> Strategy:
    rule = {}
    for s in model.states():
        if model.owner[s] != 1:
            continue
        for c in range(bound + 1):
            name = choices.get((s, c), model.normal(s)[0].name)
            rule[(s, c)] = {name: Fraction(1)}
    if bound == 0:
        rule = {(s, None): d for (s, _), d in rule.items()}
        return Strategy(Player.ONE, rule)
    return Strategy(Player.ONE, rule, bound)


def _unlimited_value(model: Game, objective: Objective, budget: int):
    """min over Player 1 of the adversary's best violation probability when
    disturbances are unlimited but must stop eventually (the target is the
    set of disturbance-free end components). Returns (value, choice)."""
    g = expected_gadget_game(model)
    goal = set(objective.targets(g)) if objective.kind == "reach" else None
    best = None
    opts = [(s, [a.name for a in g.normal(s)]) for s in g.states()
            if g.owner[s] == 1 and len(g.normal(s)) > 1]
    total = 1
    for _, o in opts:
        total *= len(o)
    if total > budget:
        raise BudgetExceeded(f"{total} Player-1 strategies exceed the budget {budget}")
    for combo in itertools.product(*[o for _, o in opts]):
        choice = {s: a for (s, _), a in zip(opts, combo)}
        mdp = fix_player1(g, choice)
        if objective.kind == "safety":
            target = set(objective.targets(mdp))
        else:
            rest = [s for s in mdp.states() if s not in goal]
            target = union(mec_decomposition(mdp, rest, allowed=lambda s, a: not a.is_disturbance))
        v = max_reach_mdp(mdp, target).at(mdp.initial) if target else 0
        if best is None or v < best[0]:
            best = (v, choice)
    return best


def synthesize_worst_transient(model: Game, objective: Objective, k: Optional[int] = None,
                               budget: Optional[int] = None, level_cap: int = 64,
                               qp_log: Optional[list] = None) -> SynthesisReport:
    """Largest worst-case transient breaking point over Player-1 strategies.

    Level i of the unfolded game is solved exactly with lower levels fixed
    (values only flow downwards through disturbances), by enumerating
    Player-1 choices at that level. The first level at which the adversary
    breaks every strategy is the answer; the strategy that survived the
    previous level is returned as a step-counting strategy.

    Without ``k`` the search runs until the unlimited-disturbance value
    decides: it stops at |T^D| levels when that value sits exactly at the
    threshold, and hands over to the frequency analysis when no finite number
    of disturbances can break every strategy. With ``qp_log`` the level
    quadratic programs of the stopping, binarized game are built, checked
    against its exact values and collected.
    """
    budget = budget_from_env() if budget is None else budget
    thr, strict = objective.violation, objective.strict
    v_inf, inf_choice = _unlimited_value(model, objective, budget)
    diagnostics = [f"unlimited-disturbance violation value {v_inf}"]
    if objective.kind == "safety" and not breaks(v_inf, thr, strict):
        # No disturbance sequence reaches B often enough, whatever Player 1 does.
        pi = Strategy.pure(Player.ONE, _full_choice(model, inf_choice))
        return SynthesisReport(BreakingPoint.unbreakable(), pi, Method.EXACT_ENUMERATION,
                               "unbreakable", True, {}, diagnostics)
    if k is None:
        if not breaks(v_inf, thr, strict):
            report = synthesize_worst_frequency(model, objective, budget)
            report.diagnostics = diagnostics + report.diagnostics
            return report
        limit = len(model.disturbance_edges()) if v_inf == thr else level_cap
    else:
        limit = k
    choices: Dict[Tuple[int, int], str] = {}
    values_at = []
    for i in range(limit + 1):
        level_choice, values, u = _solve_level(model, objective, i, choices, budget)
        v = sum(p * values[j] for j, p in u.initial.items())
        values_at.append(v)
        if breaks(v, thr, strict):
            if qp_log is not None:
                qp_log.extend(_qp_checks(model, objective, i, budget))
            strategy = _step_counting(model, choices, max(i - 1, 0))
            report = SynthesisReport(BreakingPoint.finite(i), strategy, Method.EXACT_ENUMERATION,
                                     "finite", True, {"level_values": values_at}, diagnostics)
            return report
        choices.update(level_choice)
    if k is not None and breaks(v_inf, thr, strict) and v_inf != thr:
        raise BudgetExceeded(f"no level up to {k} breaks every strategy")
    if breaks(v_inf, thr, strict):
        # Only an infinite sequence of disturbances reaches the threshold.
        pi = Strategy.pure(Player.ONE, _full_choice(model, inf_choice))
        return SynthesisReport(BreakingPoint.omega(Fraction(0) if model.exact() else 0.0), pi,
                               Method.EXACT_ENUMERATION, "omega", True,
                               {"level_values": values_at}, diagnostics)
    report = synthesize_worst_frequency(model, objective, budget)
    report.values["level_values"] = values_at
    report.diagnostics = diagnostics + report.diagnostics
    return report


def _qp_checks(model: Game, objective: Objective, k: int, budget: int):
    """Level programs of the stopping, binarized version of ``model`` with
    the exact level values injected."""
    from .qp import check_iterative_qps
    from .transforms import binarize_actions, make_stopping

    return check_iterative_qps(make_stopping(binarize_actions(model)), objective, k, budget)


def _full_choice(model: Game, choice: Mapping[int, str]) -> Dict[int, str]:
    out = {}
    for s in model.states():
        if model.owner[s] == 1:
            out[s] = choice.get(s, model.normal(s)[0].name)
    return out


# ---------------------------------------------------------------------------
# Worst-case frequency


def mec_removal(game: Game, objective: Objective, budget: Optional[int] = None):
    """Frequency breaking point on the gadget game by removing the costliest
    end components one at a time. Returns (breaking point, trace)."""
    thr, strict = objective.violation, objective.strict
    goal = set(objective.targets(game))
    avoid = player2_avoid_set(game, goal)
    comps = mec_decomposition(game, avoid)
    pay = {c: min_mean_payoff_mec(game, c, opponent_only=False, budget=budget,
                                  weight=gadget_step_weight(game)) for c in comps}
    trace = [{"component": [game.names[s] for s in sorted(c.states)], "payoff": pay[c]} for c in comps]
    remaining = list(comps)

    def value(cs):
        region = union(cs)
        if not region:
            return 0
        return max_reach_sg(game, region, budget).at(game.initial)

    if not breaks(value(remaining), thr, strict):
        return BreakingPoint.unbreakable(), trace
    zero = Fraction(0) if game.exact() else 0.0
    last = zero
    while remaining:
        top = max(pay[c] for c in remaining)
        if top == 0:
            break
        pick = min((c for c in remaining if pay[c] == top), key=MEC.key)
        remaining.remove(pick)
        last = top
        if not breaks(value(remaining), thr, strict):
            return BreakingPoint.omega(last), trace
    return BreakingPoint.omega(zero), trace


def synthesize_worst_frequency(model: Game, objective: Objective,
                               budget: Optional[int] = None) -> SynthesisReport:
    """Frequency breaking point when finitely many disturbances never break
    every strategy. The value comes from MEC removal on the gadget game; the
    memoryless strategy realizing it is found by evaluating every pure
    memoryless strategy."""
    budget = budget_from_env() if budget is None else budget
    if objective.kind == "safety":
        raise PreconditionViolated("frequency breaking points only arise for reachability")
    v_inf, _ = _unlimited_value(model, objective, budget)
    if breaks(v_inf, objective.violation, objective.strict) and v_inf != objective.violation:
        raise PreconditionViolated("finitely many disturbances already break every strategy")
    g = expected_gadget_game(model)
    bp, trace = mec_removal(g, objective, budget)
    candidates = ((pi, worst_case_breaking_point(model, objective, pi))
                  for pi in pure_memoryless_strategies(model, budget))
    pi, report = _best(candidates)
    out = SynthesisReport(bp, pi, Method.MEC_REMOVAL, report.case, True,
                          {"components": trace, "strategy_breaking_point": report.breaking_point})
    if compare_breaking_points(bp, report.breaking_point) != 0:
        out.diagnostics.append(
            f"best memoryless strategy evaluates to {report.breaking_point}, removal gives {bp}")
    return out


# ---------------------------------------------------------------------------
# Brute-force oracle


@dataclass
class OracleResult:
    breaking_point: Optional[BreakingPoint]  # None: not decided within k_max
    strategy: Optional[Strategy]
    detail: object = None


def _step_counting_strategies(model: Game, bound: int, budget: int):
    if bound == 0:
        yield from pure_memoryless_strategies(model, budget)
        return
    opts = [((s, c), [a.name for a in model.normal(s)])
            for s in model.states() if model.owner[s] == 1 for c in range(bound + 1)]
    total = 1
    for _, names in opts:
        total *= len(names)
    if total > budget:
        raise BudgetExceeded(f"{total} step-counting strategies exceed the budget {budget}")
    for combo in itertools.product(*[names for _, names in opts]):
        yield Strategy.pure(Player.ONE, {key: a for (key, _), a in zip(opts, combo)}, bound)


def oracle_enumerate(model: Game, objective: Objective, k_max: int, semantics: str = "worst",
                     pi: Optional[Strategy] = None, budget: Optional[int] = None,
                     memory: Optional[int] = None) -> OracleResult:
    """Exhaustive reference answer.

    With ``pi`` the given strategy is evaluated; otherwise every pure
    step-counting strategy with counter bound ``memory`` (default
    ``k_max - 1``) is tried and the best one returned. Worst case: pure
    step-counting adversaries with budget ``k_max``; a strategy that no
    such adversary breaks is reported as None (undecided). Expected case:
    pure memoryless adversaries and their two-point mixtures.
    """
    budget = budget_from_env() if budget is None else budget

    def score(strategy):
        if semantics == "worst":
            res = worst_case_oracle(model, objective, strategy, k_max, budget)
            bp = None if res.level is None else BreakingPoint.finite(res.level)
            return bp, res
        res = expected_oracle(model, objective, strategy, budget)
        return (None if res.value is None else BreakingPoint.finite(res.value)), res

    if pi is not None:
        bp, detail = score(pi)
        return OracleResult(bp, pi, detail)
    bound = max(k_max - 1, 0) if memory is None else memory
    best = None
    for strategy in _step_counting_strategies(model, bound, budget):
        bp, detail = score(strategy)
        if bp is None:
            return OracleResult(None, strategy, detail)
        if best is None or compare_breaking_points(bp, best[0]) > 0:
            best = (bp, strategy, detail)
    return OracleResult(*best)
